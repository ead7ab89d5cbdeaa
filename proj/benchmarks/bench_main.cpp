#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "probitgp/dense.hpp"
#include "probitgp/harness.hpp"
#include "probitgp/kernel.hpp"
#include "probitgp/mvn.hpp"
#include "probitgp/probit_model.hpp"
#include "probitgp/tlr.hpp"
#include "probitgp/vb.hpp"

namespace {

using namespace probitgp;

constexpr double kAlpha = 30.0;

Locations grid(std::size_t g) {
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) pts.push_back({double(i + 1) / double(g), double(j + 1) / double(g)});
  }
  return Locations(pts);
}

KernelSpec se() { return KernelSpec{KernelFamily::kSquaredExponential, kAlpha}; }

McConfig config(std::size_t samples) {
  McConfig c;
  c.samples = samples;
  c.seed = 1;
  return c;
}

// Evidence problem of a simulated dataset on a g x g grid.
ProbitGpModel simulated_model(std::size_t g) {
  const Dataset d = simulate_dataset(g, kAlpha, 1, HoldoutScheme::kRandom, 1);
  return ProbitGpModel(d.locs, d.y, se());
}

std::size_t block_size(std::size_t n) { return static_cast<std::size_t>(std::ceil(std::sqrt(double(n)))); }

void BM_TlrCompress(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  const DenseSpd omega = build_covariance(se(), grid(g));
  for (auto _ : state) benchmark::DoNotOptimize(tlr_compress(omega, block_size(g * g), 1e-4));
  state.SetLabel("n=" + std::to_string(g * g));
}
BENCHMARK(BM_TlrCompress)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_DenseCholesky(benchmark::State& state) {
  const auto g = static_cast<std::size_t>(state.range(0));
  const DenseSpd omega = build_covariance(se(), grid(g));
  for (auto _ : state) benchmark::DoNotOptimize(dense_cholesky(omega));
}
BENCHMARK(BM_DenseCholesky)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_DenseSov(benchmark::State& state) {
  const ProbitGpModel model = simulated_model(static_cast<std::size_t>(state.range(0)));
  const ReorderResult r = univariate_reorder(evidence_problem(model));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_reordered(r, config(2000)));
}
BENCHMARK(BM_DenseSov)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_TlrSov(benchmark::State& state) {
  const ProbitGpModel model = simulated_model(static_cast<std::size_t>(state.range(0)));
  const MvnProblem p = evidence_problem(model);
  const ReorderResult r = block_reorder(p, block_size(p.size()), 1e-4, config(2000));
  for (auto _ : state) benchmark::DoNotOptimize(tlr_sov_estimate(p, r, config(2000)));
}
BENCHMARK(BM_TlrSov)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_PredictRatio(benchmark::State& state) {
  const ProbitGpModel model = simulated_model(static_cast<std::size_t>(state.range(0)));
  const RatioPredictor predictor(model, config(2000));
  const std::vector<double> x_new = {0.37, 0.61};
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict(x_new));
}
BENCHMARK(BM_PredictRatio)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_CaviFit(benchmark::State& state) {
  const ProbitGpModel model = simulated_model(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cavi_fit(model));
}
BENCHMARK(BM_CaviFit)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_PredictVb(benchmark::State& state) {
  const ProbitGpModel model = simulated_model(static_cast<std::size_t>(state.range(0)));
  const VbPredictor predictor(model, cavi_fit(model), config(2000));
  const std::vector<double> x_new = {0.37, 0.61};
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict(x_new));
}
BENCHMARK(BM_PredictVb)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
