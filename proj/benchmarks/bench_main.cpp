#include <benchmark/benchmark.h>

#include <random>

#include "crisisdqn/agent.hpp"
#include "crisisdqn/environment.hpp"
#include "crisisdqn/qnetwork.hpp"
#include "crisisdqn/selector.hpp"
#include "crisisdqn/synthgen.hpp"

using namespace crisisdqn;

namespace {

Observation random_observation(std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 0.036f);
  Observation x(kObservationDim);
  for (auto& v : x) v = n(rng);
  x[kBudgetFeature] = 0.5f;
  x[kSimilarityFeature] = 0.3f;
  return x;
}

const SynthCorpus& corpus() {
  static const SynthCorpus c = [] {
    SynthConfig cfg;
    cfg.n_events = 1;
    cfg.days_per_event = 1;
    return generate(cfg);
  }();
  return c;
}

void BM_Forward(benchmark::State& state) {
  const QNetwork net(NetworkShape{}, 1);
  std::mt19937_64 rng(2);
  const auto x = random_observation(rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_Forward);

void BM_ForwardBatch(benchmark::State& state) {
  const QNetwork net(NetworkShape{}, 1);
  std::mt19937_64 rng(2);
  Eigen::MatrixXf batch(static_cast<Eigen::Index>(kObservationDim), state.range(0));
  for (Eigen::Index b = 0; b < batch.cols(); ++b) {
    const auto x = random_observation(rng);
    for (Eigen::Index i = 0; i < batch.rows(); ++i) batch(i, b) = x[static_cast<std::size_t>(i)];
  }
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_batch(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
  QNetwork net(NetworkShape{}, 1);
  AdamOptimizer adam(net, AdamConfig{});
  std::mt19937_64 rng(3);
  TdBatch<float> batch;
  batch.observations.resize(static_cast<Eigen::Index>(kObservationDim), state.range(0));
  for (Eigen::Index b = 0; b < batch.observations.cols(); ++b) {
    const auto x = random_observation(rng);
    for (Eigen::Index i = 0; i < batch.observations.rows(); ++i) batch.observations(i, b) = x[static_cast<std::size_t>(i)];
    batch.actions.push_back(b % 2 ? Action::Keep : Action::Discard);
    batch.targets.push_back(0.5f);
  }
  for (auto _ : state) {
    const auto g = backward(net, batch, LossKind::Huber);
    adam.step(net, g);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainStep)->Arg(64);

void BM_KeptSetSimilarity(benchmark::State& state) {
  std::mt19937_64 rng(4);
  KeptSet kept;
  for (int i = 0; i < state.range(0); ++i) {
    const auto x = random_observation(rng);
    kept.add(std::span<const float>(x.data(), kEmbeddingDim));
  }
  const auto probe = random_observation(rng);
  for (auto _ : state) benchmark::DoNotOptimize(kept.max_similarity(std::span<const float>(probe.data(), kEmbeddingDim)));
}
BENCHMARK(BM_KeptSetSimilarity)->Arg(10)->Arg(100)->Arg(300);

void BM_SelectDay(benchmark::State& state) {
  const QNetwork net(NetworkShape{}, 1);
  const auto& day = corpus().corpus.days.front();
  for (auto _ : state) benchmark::DoNotOptimize(select_day(net, day, kDefaultBudget, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(day.items.size()));
}
BENCHMARK(BM_SelectDay)->Arg(1)->Arg(52)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
