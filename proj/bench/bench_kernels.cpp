// Parallel kernels against their serial twins and the row-by-row reference.

#include <benchmark/benchmark.h>

#include "cheaptalk/equilibrium.hpp"
#include "cheaptalk/montecarlo.hpp"

namespace ct = cheaptalk;

namespace {

struct Setup {
  ct::SourceModel source = ct::SourceModel::iid_gaussian(2, 0.0, 1.0);
  ct::ActionSet actions{std::vector<ct::Point>{{-1.0, 0.2}, {0.0, 0.0}, {1.2, -0.4}, {0.3, 1.5}}};
  ct::BiasVector b{std::vector<double>{0.3, -0.2}};
  std::vector<double> shift{actions.flat().begin(), actions.flat().end()};

  auto encoder() const {
    return [this](std::span<const double> m) { return ct::assign_action(m, actions, b); };
  }
  ct::Budget budget(std::int64_t samples) const {
    ct::Budget out;
    out.samples = static_cast<std::size_t>(samples);
    return out;
  }
};

void BM_MonteCarlo(benchmark::State& state, ct::Execution execution) {
  const Setup s;
  const auto budget = s.budget(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ct::mc_bin_stats(s.source, budget, 4, s.shift, s.encoder(), execution));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MonteCarloReference(benchmark::State& state) {
  const Setup s;
  const auto budget = s.budget(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ct::reference_bin_stats(s.source, budget, 4, s.shift, s.encoder()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Quadrature(benchmark::State& state, ct::Execution execution) {
  const Setup s;
  const auto cells = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ct::quadrature_bin_stats(s.source, 4, s.shift, cells, 3, s.encoder(), execution));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_Certificate(benchmark::State& state) {
  const Setup s;
  const ct::BiasVector b{std::vector<double>{1.0, 1.0}};
  const auto policy = ct::construct_reveal_plus_quantize(s.source, b, 3);
  ct::VerifyOptions options;
  options.budget.samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ct::verify_equilibrium(policy, s.source, b, options));
}

}  // namespace

BENCHMARK_CAPTURE(BM_MonteCarlo, parallel, ct::Execution::parallel)->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_MonteCarlo, serial, ct::Execution::serial)->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonteCarloReference)->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_Quadrature, parallel, ct::Execution::parallel)->Arg(512)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_Quadrature, serial, ct::Execution::serial)->Arg(512)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Certificate)->Arg(1'000'000)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
