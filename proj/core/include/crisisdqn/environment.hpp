#pragma once

// Online keep/discard environment over one event-day stream.
//
// Observation layout (770 floats):
//   [0, 768)  the current text's embedding, as stored
//   768       remaining budget fraction (budget_max - |kept|) / budget_max
//   769       max cosine similarity between the current text and the kept set (0 when empty)

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "crisisdqn/corpus.hpp"

namespace crisisdqn {

enum class Action : std::uint8_t { Keep = 0, Discard = 1 };

inline constexpr std::size_t kObservationDim = kEmbeddingDim + 2;
inline constexpr std::size_t kBudgetFeature = kEmbeddingDim;
inline constexpr std::size_t kSimilarityFeature = kEmbeddingDim + 1;
inline constexpr int kDefaultBudget = 300;
inline constexpr double kDefaultKeepPenalty = 5.0;

using Observation = std::vector<float>;

// Keep-or-discard reward.
//   sc == 0: Keep -> -keep_penalty, Discard -> +1
//   sc  > 0: Keep -> n(1 - si_m), Discard -> -n(1 - si_m), with n = sc / q_count
double reward(int sc, Action action, double si_m, int q_count, double keep_penalty = kDefaultKeepPenalty);

// Max cosine between `current` and each kept vector; 0 for an empty kept set.
// Zero-norm vectors on either side contribute 0 and bump *zero_norm_count when given.
double max_similarity(std::span<const float> current, std::span<const Embedding> kept,
                      std::size_t* zero_norm_count = nullptr);

// Kept embeddings stored pre-normalised in one contiguous block.
class KeptSet {
 public:
  explicit KeptSet(std::size_t dim = kEmbeddingDim) : dim_(dim) {}

  void clear();
  void add(std::span<const float> embedding);
  double max_similarity(std::span<const float> current) const;
  std::size_t size() const { return count_; }
  std::size_t zero_norm_count() const { return zero_norm_; }

 private:
  std::size_t dim_;
  std::size_t count_ = 0;
  mutable std::size_t zero_norm_ = 0;
  std::vector<double> rows_;  // unit rows only; zero-norm kept vectors are not stored
};

struct EnvConfig {
  int budget_max = kDefaultBudget;
  double keep_penalty = kDefaultKeepPenalty;
};

struct StepInfo {
  std::size_t index = 0;  // position of the decided text in the day stream
  Action action = Action::Discard;
  int sc = 0;
  double n_sc = 0.0;
  double si_m = 0.0;
  bool forced = false;
};

struct StepOutcome {
  double reward = 0.0;
  bool terminal = false;
  Observation next_observation;  // empty when terminal
  StepInfo info;
  // Outcomes of the texts auto-discarded after this step exhausted the budget.
  std::vector<StepOutcome> forced_tail;
};

class EnvironmentError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Environment {
 public:
  explicit Environment(EnvConfig config = {});

  // Starts an episode. Returns nullopt for an empty stream (terminal immediately).
  // The stream must outlive the episode.
  std::optional<Observation> reset(const DayStream& stream, int q_count);

  StepOutcome step(Action action);

  bool terminal() const { return terminal_; }
  std::span<const float> observation() const { return observation_; }
  const StreamText& current() const;
  std::size_t cursor() const { return cursor_; }
  double current_similarity() const { return current_si_m_; }
  int kept_count() const { return static_cast<int>(kept_.size()); }
  int remaining_budget() const { return config_.budget_max - kept_count(); }
  double remaining_fraction() const;
  const std::vector<std::size_t>& kept_indices() const { return kept_indices_; }
  std::size_t zero_norm_warnings() const { return kept_.zero_norm_count(); }
  const EnvConfig& config() const { return config_; }
  int q_count() const { return q_count_; }

 private:
  void load_current();

  EnvConfig config_;
  const DayStream* stream_ = nullptr;
  int q_count_ = 1;
  std::size_t cursor_ = 0;
  bool terminal_ = true;
  double current_si_m_ = 0.0;
  KeptSet kept_;
  std::vector<std::size_t> kept_indices_;
  Observation observation_;
};

}  // namespace crisisdqn
