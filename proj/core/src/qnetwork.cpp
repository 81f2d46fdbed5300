#include "crisisdqn/qnetwork.hpp"

#include <cmath>
#include <random>
#include <string>

namespace crisisdqn {

namespace {

template <typename Scalar>
void init_layer(DenseLayer<Scalar>& layer, int in, int out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  layer.weight.resize(out, in);
  layer.bias.resize(out);
  // Column-major fill order keeps the draw sequence fixed for a given shape.
  for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = static_cast<Scalar>(dist(rng));
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
void zero_layer(DenseLayer<Scalar>& layer, int in, int out) {
  layer.weight.setZero(out, in);
  layer.bias.setZero(out);
}

void check_shape(const NetworkShape& s) {
  if (s.input < 1 || s.hidden1 < 1 || s.hidden2 < 1) throw NetworkError("layer sizes must be positive");
  if (s.output != 2) throw NetworkError("the Q-network has exactly two outputs");
}

template <typename Scalar>
struct ForwardCache {
  using Matrix = typename BasicQNetwork<Scalar>::Matrix;
  Matrix z1, h1, z2, h2, q;
};

template <typename Scalar>
ForwardCache<Scalar> forward_cached(const BasicQNetwork<Scalar>& net,
                                    const typename BasicQNetwork<Scalar>::Matrix& x) {
  const auto& L = net.layers();
  ForwardCache<Scalar> c;
  c.z1.noalias() = L[0].weight * x;
  c.z1.colwise() += L[0].bias;
  c.h1 = c.z1.cwiseMax(Scalar(0));
  c.z2.noalias() = L[1].weight * c.h1;
  c.z2.colwise() += L[1].bias;
  c.h2 = c.z2.cwiseMax(Scalar(0));
  c.q.noalias() = L[2].weight * c.h2;
  c.q.colwise() += L[2].bias;
  return c;
}

template <typename Scalar>
void check_batch(const BasicQNetwork<Scalar>& net, const TdBatch<Scalar>& batch) {
  if (batch.size() == 0) throw NetworkError("empty batch");
  if (batch.targets.size() != batch.size() || static_cast<std::size_t>(batch.observations.cols()) != batch.size())
    throw NetworkError("batch columns, actions and targets disagree in length");
  if (batch.observations.rows() != net.shape().input) throw NetworkError("observation length mismatch");
}

// Loss value and derivative w.r.t. the residual.
template <typename Scalar>
std::pair<Scalar, Scalar> loss_and_slope(Scalar residual, LossKind kind, Scalar delta) {
  if (kind == LossKind::Squared) return {Scalar(0.5) * residual * residual, residual};
  const Scalar a = std::abs(residual);
  if (a <= delta) return {Scalar(0.5) * residual * residual, residual};
  return {delta * (a - Scalar(0.5) * delta), residual > 0 ? delta : -delta};
}

}  // namespace

template <typename Scalar>
BasicQNetwork<Scalar>::BasicQNetwork(NetworkShape shape, std::uint64_t seed) : shape_(shape) {
  check_shape(shape);
  std::mt19937_64 rng(seed);
  init_layer(layers_[0], shape.input, shape.hidden1, rng);
  init_layer(layers_[1], shape.hidden1, shape.hidden2, rng);
  init_layer(layers_[2], shape.hidden2, shape.output, rng);
}

template <typename Scalar>
BasicQNetwork<Scalar> BasicQNetwork<Scalar>::zeros(NetworkShape shape) {
  check_shape(shape);
  BasicQNetwork net(shape, 0);
  zero_layer(net.layers_[0], shape.input, shape.hidden1);
  zero_layer(net.layers_[1], shape.hidden1, shape.hidden2);
  zero_layer(net.layers_[2], shape.hidden2, shape.output);
  return net;
}

template <typename Scalar>
std::array<Scalar, 2> BasicQNetwork<Scalar>::forward(std::span<const Scalar> observation) const {
  if (observation.size() != static_cast<std::size_t>(shape_.input))
    throw NetworkError("observation has length " + std::to_string(observation.size()) + ", expected " +
                       std::to_string(shape_.input));
  for (Scalar v : observation)
    if (!std::isfinite(v)) throw NetworkError("non-finite observation");

  const Eigen::Map<const Vector> x(observation.data(), shape_.input);
  Vector h1 = (layers_[0].weight * x + layers_[0].bias).cwiseMax(Scalar(0));
  Vector h2 = (layers_[1].weight * h1 + layers_[1].bias).cwiseMax(Scalar(0));
  Vector q = layers_[2].weight * h2 + layers_[2].bias;
  return {q(0), q(1)};
}

template <typename Scalar>
typename BasicQNetwork<Scalar>::Matrix BasicQNetwork<Scalar>::forward_batch(const Matrix& observations) const {
  return forward_cached(*this, observations).q;
}

template <typename Scalar>
std::size_t BasicQNetwork<Scalar>::parameter_count() const {
  return layers_[0].size() + layers_[1].size() + layers_[2].size();
}

template <typename Scalar>
bool BasicQNetwork<Scalar>::all_finite() const {
  for (const auto& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

template <typename Scalar>
BasicGradients<Scalar> BasicGradients<Scalar>::zeros_like(const BasicQNetwork<Scalar>& net) {
  BasicGradients g;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& l = net.layers()[i];
    g.layers[i].weight.setZero(l.weight.rows(), l.weight.cols());
    g.layers[i].bias.setZero(l.bias.size());
  }
  return g;
}

template <typename Scalar>
Scalar td_loss(const BasicQNetwork<Scalar>& net, const TdBatch<Scalar>& batch, LossKind loss, Scalar huber_delta) {
  check_batch(net, batch);
  const auto q = net.forward_batch(batch.observations);
  Scalar total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto a = static_cast<Eigen::Index>(batch.actions[i]);
    total += loss_and_slope(q(a, static_cast<Eigen::Index>(i)) - batch.targets[i], loss, huber_delta).first;
  }
  return total / static_cast<Scalar>(batch.size());
}

template <typename Scalar>
BasicGradients<Scalar> backward(const BasicQNetwork<Scalar>& net, const TdBatch<Scalar>& batch, LossKind loss,
                                Scalar huber_delta) {
  using Matrix = typename BasicQNetwork<Scalar>::Matrix;
  check_batch(net, batch);
  const auto& L = net.layers();
  const auto& x = batch.observations;
  const auto c = forward_cached(net, x);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);

  Matrix dq = Matrix::Zero(c.q.rows(), n);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<Eigen::Index>(batch.actions[static_cast<std::size_t>(i)]);
    const auto [value, slope] =
        loss_and_slope(c.q(a, i) - batch.targets[static_cast<std::size_t>(i)], loss, huber_delta);
    total += value;
    dq(a, i) = slope * inv_n;
  }

  BasicGradients<Scalar> g;
  g.loss = total * inv_n;

  g.layers[2].weight.noalias() = dq * c.h2.transpose();
  g.layers[2].bias = dq.rowwise().sum();
  Matrix dz2 = L[2].weight.transpose() * dq;
  dz2.array() *= (c.z2.array() > Scalar(0)).template cast<Scalar>();

  g.layers[1].weight.noalias() = dz2 * c.h1.transpose();
  g.layers[1].bias = dz2.rowwise().sum();
  Matrix dz1 = L[1].weight.transpose() * dz2;
  dz1.array() *= (c.z1.array() > Scalar(0)).template cast<Scalar>();

  g.layers[0].weight.noalias() = dz1 * x.transpose();
  g.layers[0].bias = dz1.rowwise().sum();
  return g;
}

template <typename Scalar>
BasicAdam<Scalar>::BasicAdam(const BasicQNetwork<Scalar>& net, AdamConfig config) : config_(config) {
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& l = net.layers()[i];
    m_[i].weight.setZero(l.weight.rows(), l.weight.cols());
    m_[i].bias.setZero(l.bias.size());
    v_[i] = m_[i];
  }
}

template <typename Scalar>
void BasicAdam<Scalar>::step(BasicQNetwork<Scalar>& net, const BasicGradients<Scalar>& grads) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (grads.layers[i].weight.rows() != net.layers()[i].weight.rows() ||
        grads.layers[i].weight.cols() != net.layers()[i].weight.cols() ||
        grads.layers[i].bias.size() != net.layers()[i].bias.size() ||
        m_[i].weight.rows() != net.layers()[i].weight.rows() || m_[i].weight.cols() != net.layers()[i].weight.cols())
      throw NetworkError("gradient/optimizer shape does not match the network");
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const auto lr = static_cast<Scalar>(config_.lr);
  const auto wd = static_cast<Scalar>(config_.weight_decay);
  const auto b1 = static_cast<Scalar>(config_.beta1);
  const auto b2 = static_cast<Scalar>(config_.beta2);
  const auto eps = static_cast<Scalar>(config_.epsilon);
  const auto bc1 = static_cast<Scalar>(1.0 - std::pow(config_.beta1, t));
  const auto bc2 = static_cast<Scalar>(1.0 - std::pow(config_.beta2, t));

  auto update = [&](auto& p, const auto& g_in, auto& m, auto& v) {
    auto pa = p.array();
    auto ga = g_in.array().eval();
    if (config_.decoupled_weight_decay) {
      if (wd != Scalar(0)) pa *= (Scalar(1) - lr * wd);
    } else {
      ga += wd * pa;
    }
    m.array() = b1 * m.array() + (Scalar(1) - b1) * ga;
    v.array() = b2 * v.array() + (Scalar(1) - b2) * ga.square();
    pa -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };

  for (std::size_t i = 0; i < 3; ++i) {
    auto& layer = net.layers()[i];
    update(layer.weight, grads.layers[i].weight, m_[i].weight, v_[i].weight);
    update(layer.bias, grads.layers[i].bias, m_[i].bias, v_[i].bias);
  }
}

template class BasicQNetwork<float>;
template class BasicQNetwork<double>;
template struct BasicGradients<float>;
template struct BasicGradients<double>;
template class BasicAdam<float>;
template class BasicAdam<double>;
template float td_loss(const BasicQNetwork<float>&, const TdBatch<float>&, LossKind, float);
template double td_loss(const BasicQNetwork<double>&, const TdBatch<double>&, LossKind, double);
template BasicGradients<float> backward(const BasicQNetwork<float>&, const TdBatch<float>&, LossKind, float);
template BasicGradients<double> backward(const BasicQNetwork<double>&, const TdBatch<double>&, LossKind, double);

}  // namespace crisisdqn
