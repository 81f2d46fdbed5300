#pragma once

// Three-layer fully connected Q-network: observation -> h1 -> h2 -> {Q_keep, Q_discard}.
// Rectifier on the hidden layers, identity on the output. Index 0 of the output is
// Q for Keep (A = 0), index 1 is Q for Discard (A = 1).

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "crisisdqn/environment.hpp"

namespace crisisdqn {

struct NetworkShape {
  int input = static_cast<int>(kObservationDim);
  int hidden1 = 256;
  int hidden2 = 256;
  int output = 2;

  bool operator==(const NetworkShape&) const = default;
};

enum class LossKind : std::uint8_t { Huber = 0, Squared = 1 };

class NetworkError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct DenseLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weight;  // out x in
  Vector bias;    // out

  std::size_t size() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
  bool operator==(const DenseLayer& o) const { return weight == o.weight && bias == o.bias; }
};

template <typename Scalar>
class BasicQNetwork {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Layers = std::array<DenseLayer<Scalar>, 3>;

  BasicQNetwork() : BasicQNetwork(NetworkShape{}, 0) {}

  // Uniform fan-in initialisation: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  BasicQNetwork(NetworkShape shape, std::uint64_t seed);

  static BasicQNetwork zeros(NetworkShape shape);

  // Throws NetworkError on a wrong-length or non-finite observation.
  std::array<Scalar, 2> forward(std::span<const Scalar> observation) const;

  // Columns are observations; returns output x batch. No input validation.
  Matrix forward_batch(const Matrix& observations) const;

  const NetworkShape& shape() const { return shape_; }
  const Layers& layers() const { return layers_; }
  Layers& layers() { return layers_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  template <typename Other>
  BasicQNetwork<Other> cast() const {
    BasicQNetwork<Other> out = BasicQNetwork<Other>::zeros(shape_);
    for (std::size_t i = 0; i < 3; ++i) {
      out.layers()[i].weight = layers_[i].weight.template cast<Other>();
      out.layers()[i].bias = layers_[i].bias.template cast<Other>();
    }
    return out;
  }

  bool operator==(const BasicQNetwork& o) const { return shape_ == o.shape_ && layers_ == o.layers_; }

 private:
  NetworkShape shape_;
  Layers layers_;
};

template <typename Scalar>
struct BasicGradients {
  std::array<DenseLayer<Scalar>, 3> layers;
  Scalar loss = 0;  // mean loss over the batch

  static BasicGradients zeros_like(const BasicQNetwork<Scalar>& net);
};

// Mean temporal-difference loss over the batch on the taken action's Q-value.
// Huber uses transition point `huber_delta`; Squared is 0.5 * residual^2.
template <typename Scalar>
struct TdBatch {
  typename BasicQNetwork<Scalar>::Matrix observations;  // input x batch
  std::vector<Action> actions;
  std::vector<Scalar> targets;

  std::size_t size() const { return actions.size(); }
};

template <typename Scalar>
Scalar td_loss(const BasicQNetwork<Scalar>& net, const TdBatch<Scalar>& batch, LossKind loss,
               Scalar huber_delta = 1);

template <typename Scalar>
BasicGradients<Scalar> backward(const BasicQNetwork<Scalar>& net, const TdBatch<Scalar>& batch, LossKind loss,
                                Scalar huber_delta = 1);

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool decoupled_weight_decay = true;

  bool operator==(const AdamConfig&) const = default;
};

// Adam with bias correction. Decoupled mode shrinks every parameter by (1 - lr * wd)
// before the moment update; coupled mode adds wd * p to the gradient instead.
template <typename Scalar>
class BasicAdam {
 public:
  BasicAdam() = default;
  BasicAdam(const BasicQNetwork<Scalar>& net, AdamConfig config);

  void step(BasicQNetwork<Scalar>& net, const BasicGradients<Scalar>& grads);

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_count_; }
  const std::array<DenseLayer<Scalar>, 3>& first_moment() const { return m_; }
  const std::array<DenseLayer<Scalar>, 3>& second_moment() const { return v_; }
  std::array<DenseLayer<Scalar>, 3>& first_moment() { return m_; }
  std::array<DenseLayer<Scalar>, 3>& second_moment() { return v_; }
  void set_step_count(std::int64_t n) { step_count_ = n; }

  bool operator==(const BasicAdam& o) const {
    return config_ == o.config_ && step_count_ == o.step_count_ && m_ == o.m_ && v_ == o.v_;
  }

 private:
  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::array<DenseLayer<Scalar>, 3> m_;
  std::array<DenseLayer<Scalar>, 3> v_;
};

using QNetwork = BasicQNetwork<float>;
using Gradients = BasicGradients<float>;
using AdamOptimizer = BasicAdam<float>;

// Index of the larger Q-value; ties go to Keep.
template <typename Scalar>
Action greedy_action(const std::array<Scalar, 2>& q) {
  return q[0] >= q[1] ? Action::Keep : Action::Discard;
}

extern template class BasicQNetwork<float>;
extern template class BasicQNetwork<double>;
extern template class BasicAdam<float>;
extern template class BasicAdam<double>;

}  // namespace crisisdqn
