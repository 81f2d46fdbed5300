#pragma once

// Deterministic synthetic corpora with planted ground truth.
//
// Embedding model (all vectors in R^768):
//   - chatter texts sit around one of `n_topic_centers` corpus-wide centers
//     (x = normalise(center + noise_scale * g / sqrt(d)), g ~ N(0, I));
//   - informative texts sit around per-day fact centers with spread `center_spread`;
//     each fact has about `texts_per_fact` informative texts;
//   - duplicates copy an earlier text of the same day (sc and confidences included),
//     perturbed by a vector of norm `duplicate_noise`, and may land on another stream.
//
// Each event draws from its own RNG stream derived from (seed, event index), so a
// corpus with more events extends a smaller one with the same seed. The per-day
// informative share varies uniformly within +-informative_jitter (relative) so that
// daily fact counts differ across days.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crisisdqn/annotation.hpp"
#include "crisisdqn/corpus.hpp"
#include "crisisdqn/environment.hpp"

namespace crisisdqn {

struct SynthConfig {
  std::uint64_t seed = 7;
  int n_events = 4;
  int days_per_event = 4;
  int texts_per_day = 500;
  int query_count = 52;
  double informative_fraction = 0.2;
  double duplicate_fraction = 0.15;
  int embedding_dim = static_cast<int>(kEmbeddingDim);
  int n_topic_centers = 8;
  double center_spread = 1.0;
  double noise_scale = 0.5;
  int texts_per_fact = 4;
  double informative_jitter = 0.5;
  double duplicate_noise = 0.01;
  int max_sc = 5;

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

std::string to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);

struct PlantedText {
  bool informative = false;
  int topic = -1;  // chatter center index, -1 for informative texts
  int fact = -1;   // fact index within the day, -1 for chatter
  std::optional<std::string> duplicate_of;
};

struct SynthCorpus {
  Corpus corpus;
  std::vector<ConfidencePair> confidences;
  std::map<std::string, PlantedText> truth;  // by text_id
  // Planted facts per (event, day): also the reference max_facts_k.
  std::map<std::pair<std::string, std::string>, int> facts_per_day;
  std::map<std::pair<std::string, std::string>, int> informative_per_day;  // originals only
};

SynthCorpus generate(const SynthConfig& config);

// Writes the corpus files plus confidences.jsonl and ground_truth.jsonl.
void write_synth(const SynthCorpus& synth, const std::filesystem::path& dir);

struct OracleResult {
  std::vector<Action> actions;  // one per policy decision
  double episode_return = 0.0;  // forced discards included
};

// Greedy immediate-reward reference policy. Keep iff r(Keep) - r(Discard) > tie_tolerance,
// so near-indifferent choices (a kept text's duplicate) resolve to Discard.
OracleResult oracle_policy(const DayStream& day, int q_count, const EnvConfig& env = {},
                           double tie_tolerance = 1e-3);

}  // namespace crisisdqn
