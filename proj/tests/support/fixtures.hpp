#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "crisisdqn/corpus.hpp"

namespace crisisdqn::fx {

inline Embedding basis(std::size_t i, float scale = 1.0f) {
  Embedding e(kEmbeddingDim, 0.0f);
  e[i] = scale;
  return e;
}

inline Embedding random_unit(std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  Embedding e(kEmbeddingDim);
  double norm = 0.0;
  for (auto& x : e) {
    x = n(rng);
    norm += static_cast<double>(x) * x;
  }
  for (auto& x : e) x = static_cast<float>(x / std::sqrt(norm));
  return e;
}

// 2018-11-08T00:00:00Z
inline constexpr std::int64_t kDay0 = 1541635200;

inline StreamText make_text(std::string id, std::int64_t offset, Embedding e, int sc = 0,
                            Stream stream = Stream::Twitter, std::string event = "E1") {
  StreamText t;
  t.text_id = std::move(id);
  t.event_id = std::move(event);
  t.stream = stream;
  t.unix_ts = kDay0 + offset;
  t.day = utc_day(t.unix_ts);
  t.text = "text " + t.text_id;
  t.embedding = std::move(e);
  t.sc = sc;
  return t;
}

inline DayStream make_stream(std::vector<StreamText> items, std::string event = "E1") {
  DayStream d;
  d.event_id = std::move(event);
  d.day = utc_day(kDay0);
  d.items = std::move(items);
  return d;
}

// Stream of n texts with random unit embeddings and the given scores cycled.
inline DayStream random_stream(std::size_t n, std::uint64_t seed, std::vector<int> scores = {0}) {
  std::mt19937_64 rng(seed);
  std::vector<StreamText> items;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "t%05zu", i);
    items.push_back(make_text(id, static_cast<std::int64_t>(i), random_unit(rng), scores[i % scores.size()]));
  }
  return make_stream(std::move(items));
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("crisisdqn-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace crisisdqn::fx
