#pragma once

// DQN training: epsilon-greedy exploration, uniform replay, periodic target sync.
// Episodes are event-days; training days are visited in a seeded shuffled order
// per epoch.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crisisdqn/checkpoint.hpp"
#include "crisisdqn/corpus.hpp"
#include "crisisdqn/environment.hpp"
#include "crisisdqn/qnetwork.hpp"
#include "crisisdqn/timeline.hpp"

namespace crisisdqn {

// Linear decay from start to end over decay_steps, constant afterwards.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::int64_t decay_steps = 500000;

  double at(std::int64_t step) const;
  bool operator==(const EpsilonSchedule&) const = default;
};

struct TrainConfig {
  std::int64_t total_steps = 750000;
  EpsilonSchedule epsilon;
  double gamma = 0.99;
  int batch_size = 64;
  std::int64_t target_sync_interval = 1000;
  std::size_t replay_capacity = 100000;
  std::int64_t learning_starts = 1000;
  std::int64_t train_interval = 1;  // gradient updates every N environment steps
  int budget_max = kDefaultBudget;
  double keep_penalty = kDefaultKeepPenalty;
  bool include_forced_rewards = true;
  AdamConfig adam;
  NetworkShape network;
  LossKind loss = LossKind::Huber;
  double huber_delta = 1.0;
  std::uint64_t seed = 42;
  std::vector<std::string> train_events;  // empty: every event in the corpus

  // Throws std::invalid_argument describing the first broken constraint.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Observation stored by reference to the corpus text plus the two scalar features.
struct CompactObservation {
  const StreamText* text = nullptr;
  float budget_fraction = 0.0f;
  float max_similarity = 0.0f;

  void write_to(std::span<float> out) const;
  Observation materialize() const;
};

struct Transition {
  CompactObservation observation;
  Action action = Action::Discard;
  float reward = 0.0f;
  CompactObservation next_observation;  // ignored when terminal
  bool terminal = false;
};

// Fixed-capacity FIFO ring. Batches are drawn uniformly without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  // i = 0 is the oldest retained transition.
  const Transition& at(std::size_t i) const;
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::uint64_t inserted_ = 0;
  std::vector<Transition> items_;
};

struct Decision {
  std::size_t index = 0;
  Action action = Action::Discard;
  bool forced = false;
  double reward = 0.0;
  double si_m = 0.0;
  int sc = 0;
};

struct EpisodeLog {
  std::int64_t episode = 0;
  std::int64_t end_step = 0;
  const DayStream* stream = nullptr;
  double epsilon = 0.0;
  std::vector<Decision> decisions;
};

// Keep count over non-forced decisions. nullopt when there are none.
std::optional<double> take_rate(std::span<const Decision> decisions);

struct EpisodeStats {
  std::int64_t episode = 0;
  std::int64_t step = 0;  // global step at episode end
  std::string event_id;
  std::string day;
  double episode_return = 0.0;
  std::optional<double> take_rate;
  std::optional<double> take_rate_uninformative;  // over sc = 0 texts
  std::optional<double> take_rate_informative;    // over sc > 0 texts
  std::optional<double> mean_loss;
  double epsilon = 0.0;
  std::size_t kept = 0;
};

struct TrainReport {
  std::vector<EpisodeStats> episodes;
  std::int64_t steps = 0;
  std::int64_t updates = 0;
  double wall_clock_seconds = 0.0;
  std::set<std::string> replay_events;  // every event that ever contributed a transition
  std::string checkpoint_path;

  // step,episode,event_id,day,return,take_rate,take_rate_sc0,take_rate_sc_pos,loss,epsilon,kept
  std::string to_csv() const;
};

struct TrainResult {
  TrainReport report;
  Checkpoint checkpoint;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EpisodeObserver = std::function<void(const EpisodeLog&)>;

// Epsilon-greedy: a uniform draw below epsilon picks a uniformly random action,
// otherwise the greedy action (ties to Keep).
Action select_action(const QNetwork& net, std::span<const float> observation, double epsilon, std::mt19937_64& rng);

// Serialises the config deterministically (used for hashing and checkpoints).
std::string to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);
std::uint64_t config_hash(const TrainConfig& config);

// Deterministic given (corpus, config). The observer sees every completed episode;
// an episode cut short by total_steps is not reported.
TrainResult train(const Corpus& corpus, const TrainConfig& config, const EpisodeObserver& observer = {});

struct CrossvalOptions {
  ClusterConfig clustering;
  FactTextMode fact_text = FactTextMode::Concatenated;
  std::size_t take_rate_window = 50;
};

struct FoldReport {
  std::string held_out_event;
  std::vector<std::string> train_events;
  TrainReport train;
  std::optional<double> final_take_rate;  // mean over the last take_rate_window episodes
  double mean_kept_per_day = 0.0;
  std::optional<double> mean_rouge2;
  std::optional<double> mean_semantic;
};

struct CrossvalReport {
  std::vector<FoldReport> folds;
  double mean_kept_per_day = 0.0;
  std::optional<double> mean_rouge2;
  std::optional<double> mean_semantic;
  std::optional<double> mean_final_take_rate;

  std::string to_json() const;
};

// Leave-one-event-out: one fold per event. Requires >= 2 events.
CrossvalReport crossval(const Corpus& corpus, const TrainConfig& config, const CrossvalOptions& options = {});

}  // namespace crisisdqn
