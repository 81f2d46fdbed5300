#include "crisisdqn/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "crisisdqn/vecmath.hpp"

namespace crisisdqn {

using json = nlohmann::json;

double EpsilonSchedule::at(std::int64_t step) const {
  if (step <= 0) return start;
  if (step >= decay_steps) return end;
  return start + (end - start) * (static_cast<double>(step) / static_cast<double>(decay_steps));
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(total_steps >= 1, "total_steps must be >= 1");
  require(epsilon.decay_steps > 0, "epsilon.decay_steps must be > 0");
  require(0.0 <= epsilon.end && epsilon.end <= epsilon.start && epsilon.start <= 1.0,
          "epsilon must satisfy 0 <= end <= start <= 1");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(replay_capacity >= static_cast<std::size_t>(batch_size), "replay_capacity must be >= batch_size");
  require(target_sync_interval >= 1, "target_sync_interval must be >= 1");
  require(train_interval >= 1, "train_interval must be >= 1");
  require(learning_starts >= 0, "learning_starts must be >= 0");
  require(budget_max >= 1, "budget_max must be >= 1");
  require(keep_penalty >= 0.0, "keep_penalty must be >= 0");
  require(huber_delta > 0.0, "huber_delta must be > 0");
  require(adam.lr > 0.0 && adam.weight_decay >= 0.0, "adam.lr must be > 0 and weight_decay >= 0");
  require(network.input == static_cast<int>(kObservationDim), "network.input must equal the observation size");
  require(network.hidden1 >= 1 && network.hidden2 >= 1 && network.output == 2, "invalid network shape");
}

void CompactObservation::write_to(std::span<float> out) const {
  std::copy(text->embedding.begin(), text->embedding.end(), out.begin());
  out[kBudgetFeature] = budget_fraction;
  out[kSimilarityFeature] = max_similarity;
}

Observation CompactObservation::materialize() const {
  Observation obs(kObservationDim);
  write_to(obs);
  return obs;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 20));
}

void ReplayBuffer::push(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[head_] = t;
    head_ = (head_ + 1) % capacity_;
  }
  ++inserted_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("replay index");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
  const std::size_t size = items_.size();
  if (n > size) throw std::invalid_argument("cannot sample more transitions than stored");
  // Floyd's algorithm: n distinct indices in O(n).
  std::vector<std::size_t> out;
  out.reserve(n);
  std::unordered_set<std::size_t> chosen;
  for (std::size_t j = size - n; j < size; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    if (chosen.insert(t).second) {
      out.push_back(t);
    } else {
      chosen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

std::optional<double> take_rate(std::span<const Decision> decisions) {
  std::size_t steps = 0, kept = 0;
  for (const auto& d : decisions) {
    if (d.forced) continue;
    ++steps;
    if (d.action == Action::Keep) ++kept;
  }
  if (steps == 0) return std::nullopt;
  return static_cast<double>(kept) / static_cast<double>(steps);
}

namespace {

std::optional<double> take_rate_where(std::span<const Decision> decisions, bool informative) {
  std::size_t steps = 0, kept = 0;
  for (const auto& d : decisions) {
    if (d.forced || (d.sc > 0) != informative) continue;
    ++steps;
    if (d.action == Action::Keep) ++kept;
  }
  if (steps == 0) return std::nullopt;
  return static_cast<double>(kept) / static_cast<double>(steps);
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(17);
  s << *v;
  return s.str();
}

const char* loss_name(LossKind k) { return k == LossKind::Huber ? "huber" : "squared"; }

}  // namespace

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,episode,event_id,day,return,take_rate,take_rate_sc0,take_rate_sc_pos,loss,epsilon,kept\n";
  for (const auto& e : episodes) {
    out << e.step << ',' << e.episode << ',' << e.event_id << ',' << e.day << ',' << e.episode_return << ','
        << fmt_opt(e.take_rate) << ',' << fmt_opt(e.take_rate_uninformative) << ','
        << fmt_opt(e.take_rate_informative) << ',' << fmt_opt(e.mean_loss) << ',' << e.epsilon << ',' << e.kept
        << '\n';
  }
  return out.str();
}

Action select_action(const QNetwork& net, std::span<const float> observation, double epsilon,
                     std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, 1);
    return pick(rng) == 0 ? Action::Keep : Action::Discard;
  }
  return greedy_action(net.forward(observation));
}

std::string to_json(const TrainConfig& c) {
  json j;
  j["total_steps"] = c.total_steps;
  j["epsilon"] = {{"start", c.epsilon.start}, {"end", c.epsilon.end}, {"decay_steps", c.epsilon.decay_steps}};
  j["gamma"] = c.gamma;
  j["batch_size"] = c.batch_size;
  j["target_sync_interval"] = c.target_sync_interval;
  j["replay_capacity"] = c.replay_capacity;
  j["learning_starts"] = c.learning_starts;
  j["train_interval"] = c.train_interval;
  j["budget_max"] = c.budget_max;
  j["keep_penalty"] = c.keep_penalty;
  j["include_forced_rewards"] = c.include_forced_rewards;
  j["adam"] = {{"lr", c.adam.lr},
               {"weight_decay", c.adam.weight_decay},
               {"beta1", c.adam.beta1},
               {"beta2", c.adam.beta2},
               {"epsilon", c.adam.epsilon},
               {"decoupled_weight_decay", c.adam.decoupled_weight_decay}};
  j["network"] = {{"input", c.network.input},
                  {"hidden1", c.network.hidden1},
                  {"hidden2", c.network.hidden2},
                  {"output", c.network.output}};
  j["loss"] = loss_name(c.loss);
  j["huber_delta"] = c.huber_delta;
  j["seed"] = c.seed;
  j["train_events"] = c.train_events;
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
  static const std::set<std::string> known = {
      "total_steps", "epsilon",      "gamma",      "batch_size",  "target_sync_interval", "replay_capacity",
      "learning_starts", "train_interval", "budget_max", "keep_penalty", "include_forced_rewards", "adam",
      "network",     "loss",         "huber_delta", "seed",       "train_events"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw std::invalid_argument("train config: unknown key \"" + key + "\"");
  try {
    auto get = [&j](const char* key, auto& dst) {
      if (auto it = j.find(key); it != j.end()) it->get_to(dst);
    };
    get("total_steps", c.total_steps);
    if (auto e = j.find("epsilon"); e != j.end()) {
      c.epsilon.start = e->value("start", c.epsilon.start);
      c.epsilon.end = e->value("end", c.epsilon.end);
      c.epsilon.decay_steps = e->value("decay_steps", c.epsilon.decay_steps);
    }
    get("gamma", c.gamma);
    get("batch_size", c.batch_size);
    get("target_sync_interval", c.target_sync_interval);
    get("replay_capacity", c.replay_capacity);
    get("learning_starts", c.learning_starts);
    get("train_interval", c.train_interval);
    get("budget_max", c.budget_max);
    get("keep_penalty", c.keep_penalty);
    get("include_forced_rewards", c.include_forced_rewards);
    if (auto a = j.find("adam"); a != j.end()) {
      c.adam.lr = a->value("lr", c.adam.lr);
      c.adam.weight_decay = a->value("weight_decay", c.adam.weight_decay);
      c.adam.beta1 = a->value("beta1", c.adam.beta1);
      c.adam.beta2 = a->value("beta2", c.adam.beta2);
      c.adam.epsilon = a->value("epsilon", c.adam.epsilon);
      c.adam.decoupled_weight_decay = a->value("decoupled_weight_decay", c.adam.decoupled_weight_decay);
    }
    if (auto n = j.find("network"); n != j.end()) {
      c.network.input = n->value("input", c.network.input);
      c.network.hidden1 = n->value("hidden1", c.network.hidden1);
      c.network.hidden2 = n->value("hidden2", c.network.hidden2);
      c.network.output = n->value("output", c.network.output);
    }
    if (auto l = j.find("loss"); l != j.end()) {
      const auto name = l->get<std::string>();
      if (name == "huber")
        c.loss = LossKind::Huber;
      else if (name == "squared")
        c.loss = LossKind::Squared;
      else
        throw std::invalid_argument("train config: loss must be \"huber\" or \"squared\"");
    }
    get("huber_delta", c.huber_delta);
    get("seed", c.seed);
    get("train_events", c.train_events);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t config_hash(const TrainConfig& config) { return fnv1a64(to_json(config)); }

namespace {

class Trainer {
 public:
  Trainer(const Corpus& corpus, const TrainConfig& config, const EpisodeObserver& observer)
      : corpus_(corpus),
        config_(config),
        observer_(observer),
        rng_(config.seed),
        net_(config.network, config.seed ^ 0x9e3779b97f4a7c15ULL),
        target_(net_),
        adam_(net_, config.adam),
        env_(EnvConfig{config.budget_max, config.keep_penalty}),
        replay_(config.replay_capacity) {
    batch_.observations.resize(config.network.input, config.batch_size);
    batch_.actions.resize(static_cast<std::size_t>(config.batch_size));
    batch_.targets.resize(static_cast<std::size_t>(config.batch_size));
    next_obs_.resize(config.network.input, config.batch_size);
  }

  TrainResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto days = training_days();

    std::vector<std::size_t> order(days.size());
    while (step_ < config_.total_steps) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t idx : order) {
        if (step_ >= config_.total_steps) break;
        run_episode(*days[idx]);
      }
    }

    report_.steps = step_;
    report_.updates = updates_;
    report_.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    TrainResult result;
    result.report = std::move(report_);
    result.checkpoint.network = net_;
    result.checkpoint.optimizer = adam_;
    result.checkpoint.training_step = step_;
    result.checkpoint.config_hash = config_hash(config_);
    result.checkpoint.config_json = to_json(config_);
    return result;
  }

 private:
  std::vector<const DayStream*> training_days() {
    std::vector<std::string> events = config_.train_events;
    if (events.empty())
      for (const auto& e : corpus_.events) events.push_back(e.event_id);
    std::vector<const DayStream*> days;
    for (const auto& id : events) {
      if (!corpus_.find_event(id)) throw TrainingError("training event " + id + " is not in the corpus");
      for (const auto* d : corpus_.days_of(id))
        if (!d->items.empty()) days.push_back(d);
    }
    if (days.empty()) throw TrainingError("empty training fold: no non-empty day streams");
    return days;
  }

  CompactObservation compact() const {
    return CompactObservation{&env_.current(), static_cast<float>(env_.remaining_fraction()),
                              static_cast<float>(env_.current_similarity())};
  }

  void run_episode(const DayStream& day) {
    const Event* event = corpus_.find_event(day.event_id);
    env_.reset(day, event->query_count());

    EpisodeLog log;
    log.episode = episode_;
    log.stream = &day;
    double ret = 0.0;
    double loss_sum = 0.0;
    std::int64_t loss_count = 0;

    while (!env_.terminal() && step_ < config_.total_steps) {
      const CompactObservation obs = compact();
      const double eps = config_.epsilon.at(step_);
      const Action action = select_action(net_, env_.observation(), eps, rng_);
      StepOutcome out = env_.step(action);
      ++step_;

      ret += out.reward;
      log.decisions.push_back(Decision{out.info.index, action, false, out.reward, out.info.si_m, out.info.sc});
      for (const auto& f : out.forced_tail) {
        if (config_.include_forced_rewards) ret += f.reward;
        log.decisions.push_back(Decision{f.info.index, Action::Discard, true, f.reward, f.info.si_m, f.info.sc});
      }

      Transition t;
      t.observation = obs;
      t.action = action;
      t.reward = static_cast<float>(out.reward);
      t.terminal = out.terminal;
      if (!out.terminal) t.next_observation = compact();
      replay_.push(t);
      report_.replay_events.insert(day.event_id);

      if (step_ >= config_.learning_starts && replay_.size() >= static_cast<std::size_t>(config_.batch_size) &&
          step_ % config_.train_interval == 0) {
        loss_sum += learn();
        ++loss_count;
      }
      if (step_ % config_.target_sync_interval == 0) target_ = net_;
    }

    if (!env_.terminal()) return;  // cut short by total_steps

    log.end_step = step_;
    log.epsilon = config_.epsilon.at(step_);
    EpisodeStats stats;
    stats.episode = episode_;
    stats.step = step_;
    stats.event_id = day.event_id;
    stats.day = day.day;
    stats.episode_return = ret;
    stats.take_rate = take_rate(log.decisions);
    stats.take_rate_uninformative = take_rate_where(log.decisions, false);
    stats.take_rate_informative = take_rate_where(log.decisions, true);
    if (loss_count > 0) stats.mean_loss = loss_sum / static_cast<double>(loss_count);
    stats.epsilon = log.epsilon;
    stats.kept = static_cast<std::size_t>(env_.kept_count());
    if (!stats.take_rate) spdlog::warn("episode {} ({}/{}) has no policy decisions", episode_, day.event_id, day.day);
    report_.episodes.push_back(std::move(stats));
    if (observer_) observer_(log);
    ++episode_;
  }

  double learn() {
    const auto n = static_cast<std::size_t>(config_.batch_size);
    const auto idx = replay_.sample_indices(n, rng_);
    std::vector<const Transition*> picked(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Transition& t = replay_.at(idx[i]);
      picked[i] = &t;
      const auto col = static_cast<Eigen::Index>(i);
      t.observation.write_to(std::span<float>(batch_.observations.col(col).data(), kObservationDim));
      if (!t.terminal)
        t.next_observation.write_to(std::span<float>(next_obs_.col(col).data(), kObservationDim));
      else
        next_obs_.col(col).setZero();
      batch_.actions[i] = t.action;
    }
    const auto q_next = target_.forward_batch(next_obs_);
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      double y = picked[i]->reward;
      if (!picked[i]->terminal) y += config_.gamma * static_cast<double>(q_next.col(col).maxCoeff());
      batch_.targets[i] = static_cast<float>(y);
    }

    auto grads = backward(net_, batch_, config_.loss, static_cast<float>(config_.huber_delta));
    if (!std::isfinite(grads.loss)) {
      double rmin = 1e300, rmax = -1e300;
      for (const auto* t : picked) {
        rmin = std::min(rmin, static_cast<double>(t->reward));
        rmax = std::max(rmax, static_cast<double>(t->reward));
      }
      std::ostringstream dump;
      dump << "non-finite loss at step " << step_ << " (episode " << episode_ << ", update " << updates_
           << "): batch rewards in [" << rmin << ", " << rmax << "], network finite=" << net_.all_finite()
           << ", target finite=" << target_.all_finite();
      throw TrainingError(dump.str());
    }
    adam_.step(net_, grads);
    ++updates_;
    return grads.loss;
  }

  const Corpus& corpus_;
  const TrainConfig& config_;
  const EpisodeObserver& observer_;
  std::mt19937_64 rng_;
  QNetwork net_;
  QNetwork target_;
  AdamOptimizer adam_;
  Environment env_;
  ReplayBuffer replay_;
  TdBatch<float> batch_;
  QNetwork::Matrix next_obs_;
  TrainReport report_;
  std::int64_t step_ = 0;
  std::int64_t episode_ = 0;
  std::int64_t updates_ = 0;
};

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& config, const EpisodeObserver& observer) {
  config.validate();
  Trainer trainer(corpus, config, observer);
  return trainer.run();
}

}  // namespace crisisdqn
