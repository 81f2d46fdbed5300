#pragma once

// Binary checkpoint container, little-endian:
//
//   magic      8 bytes  "CDQNCKPT"
//   version    u32      (currently 1)
//   cfg_hash   u64      fingerprint of the training config
//   step       i64      environment steps taken
//   shape      4 x u32  input, hidden1, hidden2, output
//   adam       f64 lr, f64 weight_decay, f64 beta1, f64 beta2, f64 epsilon,
//              u8 decoupled, i64 optimizer step
//   cfg_json   u32 length + bytes (the training config as written)
//   params     f32 blocks W1 b1 W2 b2 W3 b3, column-major
//   moments    f32 blocks m(W1..b3) then v(W1..b3)

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "crisisdqn/qnetwork.hpp"

namespace crisisdqn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  QNetwork network;
  AdamOptimizer optimizer;
  std::int64_t training_step = 0;
  std::uint64_t config_hash = 0;
  std::string config_json;

  bool operator==(const Checkpoint&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace crisisdqn
