#include "crisisdqn/environment.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "crisisdqn/vecmath.hpp"

namespace crisisdqn {

double reward(int sc, Action action, double si_m, int q_count, double keep_penalty) {
  if (sc == 0) return action == Action::Keep ? -keep_penalty : 1.0;
  const double n_sc = static_cast<double>(sc) / static_cast<double>(q_count);
  const double gain = n_sc - n_sc * si_m;
  return action == Action::Keep ? gain : -gain;
}

double max_similarity(std::span<const float> current, std::span<const Embedding> kept,
                      std::size_t* zero_norm_count) {
  if (kept.empty()) return 0.0;
  const bool current_zero = l2_norm(current) == 0.0;
  double best = -1.0;
  for (const auto& k : kept) {
    double s = 0.0;
    if (current_zero || l2_norm(k) == 0.0) {
      if (zero_norm_count) ++*zero_norm_count;
    } else {
      s = cosine(current, k);
    }
    best = std::max(best, s);
  }
  return best;
}

void KeptSet::clear() {
  count_ = 0;
  zero_norm_ = 0;
  rows_.clear();
}

void KeptSet::add(std::span<const float> embedding) {
  ++count_;
  const double n = l2_norm(embedding);
  if (n == 0.0) {
    ++zero_norm_;
    return;
  }
  const auto inv = 1.0 / n;
  for (float x : embedding) rows_.push_back(x * inv);
}

double KeptSet::max_similarity(std::span<const float> current) const {
  if (count_ == 0) return 0.0;
  const double n = l2_norm(current);
  const std::size_t stored = rows_.size() / dim_;
  if (n == 0.0) {
    zero_norm_ += count_;
    return 0.0;
  }
  // Zero-norm kept vectors contribute exactly 0.
  double best = stored < count_ ? 0.0 : -1.0;
  if (stored > 0) {
    const Eigen::VectorXd cur = Eigen::Map<const Eigen::VectorXf>(current.data(), static_cast<Eigen::Index>(dim_))
                                    .cast<double>();
    const Eigen::Map<const Eigen::MatrixXd> rows(rows_.data(), static_cast<Eigen::Index>(dim_),
                                                 static_cast<Eigen::Index>(stored));
    best = std::max(best, (rows.transpose() * cur).maxCoeff() / n);
  }
  return std::clamp(best, -1.0, 1.0);
}

Environment::Environment(EnvConfig config) : config_(config) {
  if (config_.budget_max < 1) throw EnvironmentError("budget_max must be >= 1");
  observation_.resize(kObservationDim, 0.0f);
}

std::optional<Observation> Environment::reset(const DayStream& stream, int q_count) {
  if (q_count < 1) throw EnvironmentError("q_count must be >= 1");
  stream_ = &stream;
  q_count_ = q_count;
  cursor_ = 0;
  kept_.clear();
  kept_indices_.clear();
  terminal_ = stream.items.empty();
  if (terminal_) return std::nullopt;
  load_current();
  return observation_;
}

const StreamText& Environment::current() const {
  if (terminal_) throw EnvironmentError("no current text: episode is terminal");
  return stream_->items[cursor_];
}

double Environment::remaining_fraction() const {
  return static_cast<double>(remaining_budget()) / static_cast<double>(config_.budget_max);
}

void Environment::load_current() {
  const auto& text = stream_->items[cursor_];
  if (text.embedding.size() != kEmbeddingDim)
    throw EnvironmentError("text " + text.text_id + " has a malformed embedding");
  current_si_m_ = kept_.max_similarity(text.embedding);
  std::copy(text.embedding.begin(), text.embedding.end(), observation_.begin());
  observation_[kBudgetFeature] = static_cast<float>(remaining_fraction());
  observation_[kSimilarityFeature] = static_cast<float>(current_si_m_);
}

StepOutcome Environment::step(Action action) {
  if (terminal_) throw EnvironmentError("step() called on a terminal episode");

  const auto& text = stream_->items[cursor_];
  StepOutcome out;
  out.info.index = cursor_;
  out.info.action = action;
  out.info.sc = text.sc;
  out.info.n_sc = static_cast<double>(text.sc) / q_count_;
  out.info.si_m = current_si_m_;
  out.reward = reward(text.sc, action, current_si_m_, q_count_, config_.keep_penalty);

  if (action == Action::Keep) {
    kept_.add(text.embedding);
    kept_indices_.push_back(cursor_);
  }
  ++cursor_;

  if (remaining_budget() == 0) {
    // Budget exhausted: every remaining text is discarded without a decision.
    for (; cursor_ < stream_->items.size(); ++cursor_) {
      const auto& rest = stream_->items[cursor_];
      StepOutcome forced;
      forced.terminal = true;
      forced.info.index = cursor_;
      forced.info.action = Action::Discard;
      forced.info.sc = rest.sc;
      forced.info.n_sc = static_cast<double>(rest.sc) / q_count_;
      forced.info.si_m = kept_.max_similarity(rest.embedding);
      forced.info.forced = true;
      forced.reward = reward(rest.sc, Action::Discard, forced.info.si_m, q_count_, config_.keep_penalty);
      out.forced_tail.push_back(std::move(forced));
    }
  }

  if (cursor_ >= stream_->items.size()) {
    terminal_ = true;
    out.terminal = true;
    return out;
  }
  load_current();
  out.next_observation = observation_;
  return out;
}

}  // namespace crisisdqn
