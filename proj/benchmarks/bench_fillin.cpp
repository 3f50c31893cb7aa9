#include <benchmark/benchmark.h>

#include <random>

#include "fillin/evaluator.hpp"
#include "fillin/mcts.hpp"
#include "fillin/network.hpp"
#include "fillin/orderings.hpp"
#include "fillin/partition.hpp"
#include "fillin/symbolic_lu.hpp"
#include "fillin/training.hpp"

using namespace fillin;

namespace {

PatternMatrix sample(Index n, double sparsity, std::uint64_t seed = 17) {
  std::mt19937_64 rng(seed);
  return generate_random_matrix(n, sparsity, rng);
}

// Keeps roughly 4 entries per row at every size.
double row_sparsity(Index n) { return 1.0 - 4.0 / static_cast<double>(n); }

}  // namespace

static void BM_SymbolicLU(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const PatternMatrix a = sample(n, row_sparsity(n));
  for (auto _ : state) benchmark::DoNotOptimize(symbolic_lu_diagonal(a).report.total);
  state.SetComplexityN(n);
}
BENCHMARK(BM_SymbolicLU)->RangeMultiplier(2)->Range(16, 1024)->Complexity();

static void BM_MinDegree(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const PatternMatrix a = sample(n, row_sparsity(n));
  for (auto _ : state) benchmark::DoNotOptimize(min_degree_order(a));
  state.SetComplexityN(n);
}
BENCHMARK(BM_MinDegree)->RangeMultiplier(2)->Range(16, 1024)->Complexity();

static void BM_RCM(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const PatternMatrix a = sample(n, row_sparsity(n));
  for (auto _ : state) benchmark::DoNotOptimize(rcm_order(a));
  state.SetComplexityN(n);
}
BENCHMARK(BM_RCM)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

static void BM_Partition(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const PatternMatrix a = sample(n, row_sparsity(n));
  for (auto _ : state) benchmark::DoNotOptimize(partition(a, 64).blocks.size());
}
BENCHMARK(BM_Partition)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_BruteForce(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const PatternMatrix a = sample(n, 0.6);
  for (auto _ : state) benchmark::DoNotOptimize(optimal_fill_bruteforce(a).report.total);
}
BENCHMARK(BM_BruteForce)->DenseRange(4, 8)->Unit(benchmark::kMillisecond);

static void BM_CnnForward(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const CnnParameters p = CnnParameters::initialize({N, 8, 16}, 3);
  const EliminationState s = EliminationState::new_episode(sample(N, 0.9), RewardMode::PerStep);
  const Tensor3 x = encode_input(s, N);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, x).value);
}
BENCHMARK(BM_CnnForward)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

static void BM_TrainStep(benchmark::State& state) {
  constexpr int N = 16;
  CnnParameters p = CnnParameters::initialize({N, 8, 16}, 3);
  const EliminationState s = EliminationState::new_episode(sample(N, 0.9), RewardMode::PerStep);
  TrainBatch batch;
  for (int k = 0; k < state.range(0); ++k) {
    batch.inputs.push_back(encode_input(s, N));
    batch.policy_targets.emplace_back(N, 1.0 / N);
    batch.value_targets.push_back(-1.0);
    batch.sample_weights.push_back(1.0);
    batch.slots.push_back(static_cast<std::size_t>(k));
  }
  AdamState adam;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(p, batch, adam, 1e-4, 1e-4).loss.total);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainStep)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_MctsSearch(benchmark::State& state) {
  constexpr Index N = 16;
  const EliminationState s = EliminationState::new_episode(sample(N, 0.9), RewardMode::PerStep);
  SearchConfig cfg;
  cfg.num_simulations = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  if (state.range(1) == 0) {
    const UniformEvaluator ev;
    for (auto _ : state) benchmark::DoNotOptimize(run_search(s, ev, cfg, rng).root_value);
  } else {
    const CnnEvaluator ev(CnnParameters::initialize({N, 8, 16}, 3));
    for (auto _ : state) benchmark::DoNotOptimize(run_search(s, ev, cfg, rng).root_value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MctsSearch)->ArgsProduct({{64, 512}, {0, 1}})->ArgNames({"sims", "cnn"})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
