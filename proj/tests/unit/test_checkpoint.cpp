#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "crisisdqn/checkpoint.hpp"
#include "fixtures.hpp"

using namespace crisisdqn;

namespace {

Checkpoint sample() {
  Checkpoint c;
  c.network = QNetwork(NetworkShape{770, 16, 8, 2}, 5);
  c.optimizer = AdamOptimizer(c.network, AdamConfig{2e-3, 1e-4, 0.9, 0.999, 1e-8, false});
  c.optimizer.set_step_count(17);
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n;
  for (auto& l : c.optimizer.first_moment()) l.weight = l.weight.unaryExpr([&](float) { return n(rng); });
  c.training_step = 12345;
  c.config_hash = 0xdeadbeefcafef00dULL;
  c.config_json = R"({"seed": 3})";
  return c;
}

}  // namespace

TEST(Checkpoint, EncodeDecodeIsBitExact) {
  const auto c = sample();
  const auto bytes = encode_checkpoint(c);
  const auto back = decode_checkpoint(bytes);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, SaveLoadPreservesForward) {
  fx::TempDir dir;
  const auto c = sample();
  save_checkpoint(c, dir / "ck.bin");
  const auto back = load_checkpoint(dir / "ck.bin");
  std::mt19937_64 rng(2);
  const auto x = fx::random_unit(rng);
  std::vector<float> obs(x.begin(), x.end());
  obs.push_back(0.5f);
  obs.push_back(0.1f);
  EXPECT_EQ(back.network.forward(obs), c.network.forward(obs));
  EXPECT_FALSE(std::filesystem::exists(dir / "ck.bin.tmp"));
}

TEST(Checkpoint, RejectsCorruptInput) {
  auto bytes = encode_checkpoint(sample());
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), CheckpointError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), CheckpointError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), CheckpointError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ck.bin"), CheckpointError);
}
