// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>

#include <benchmark/benchmark.h>

#include <relann/metrics.hpp>

using namespace relann;

namespace {

metrics::CalibrationInput calibration_input(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  metrics::CalibrationInput in;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = unit(rng);
    in.confidences.push_back(c);
    in.correct.push_back(unit(rng) < c);
  }
  return in;
}

metrics::RunAndGold run_and_gold(std::size_t queries, std::size_t docs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  metrics::RunAndGold run;
  for (std::size_t q = 0; q < queries; ++q) {
    auto& r = run["q" + std::to_string(q)];
    for (std::size_t d = 0; d < docs; ++d) {
      const auto id = "d" + std::to_string(d);
      r.scores[id] = unit(rng);
      r.gains[id] = unit(rng) < 0.2 ? 1.0 : 0.0;
    }
    r.gains["d0"] = 1.0;
  }
  return run;
}

void BM_Ece(benchmark::State& state) {
  const auto in = calibration_input(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ece(in));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ece)->Arg(1 << 10)->Arg(1 << 16);

void BM_Auroc(benchmark::State& state) {
  const auto in = calibration_input(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auroc(in));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1 << 10)->Arg(1 << 16);

void BM_Ndcg(benchmark::State& state) {
  const auto run = run_and_gold(50, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ndcg(run));
}
BENCHMARK(BM_Ndcg)->Arg(60)->Arg(1000);

void BM_KendallTauB(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = calibration_input(n).confidences;
  auto b = a;
  std::shuffle(b.begin(), b.end(), std::mt19937_64(3));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::kendall_tau_b(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KendallTauB)->Arg(1 << 10)->Arg(1 << 16);

}  // namespace
