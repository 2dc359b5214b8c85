#include <benchmark/benchmark.h>

#include "shrinkglht/composite.hpp"
#include "shrinkglht/glht.hpp"
#include "shrinkglht/selector.hpp"
#include "shrinkglht/simlab.hpp"

using namespace shrinkglht;

namespace {

GlhtProblem null_problem(int p) {
  Rng rng = substream(1, 1);
  const SigmaFactor sigma = make_sigma({CovKind::Identity}, p, rng);
  const Design d = make_design(3, {75, 90, 135});
  return {generate_Y(Matrix::Zero(p, 3), d.X, sigma, rng), d.X, d.C};
}

const FitArtifacts& cached_fit() {
  static const FitArtifacts f = fit(null_problem(150));
  return f;
}

}  // namespace

static void BM_Fit(benchmark::State& state) {
  const GlhtProblem pr = null_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit(pr));
}
BENCHMARK(BM_Fit)->Arg(50)->Arg(150)->Arg(450)->Unit(benchmark::kMillisecond);

static void BM_DeltaRidgeClosedForm(benchmark::State& state) {
  const auto& s = cached_fit().spec;
  for (auto _ : state) benchmark::DoNotOptimize(delta_hat_ridge(s, -0.7, -1.3));
}
BENCHMARK(BM_DeltaRidgeClosedForm);

static void BM_DeltaQuadrature(benchmark::State& state) {
  const auto& s = cached_fit().spec;
  const auto f = ShrinkageSpec::ridge(-1.0);
  const Contour c = default_contour(s, f, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(delta_hat_numeric(s, f, f, c));
}
BENCHMARK(BM_DeltaQuadrature)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);

static void BM_SelectRidge(benchmark::State& state) {
  const auto& s = cached_fit().spec;
  const RidgeBounds b = default_ridge_bounds(s);
  for (auto _ : state) benchmark::DoNotOptimize(select_ridge(s, {1, 0, 0}, b));
}
BENCHMARK(BM_SelectRidge)->Unit(benchmark::kMicrosecond);

static void BM_SelectHigherOrder(benchmark::State& state) {
  const auto& s = cached_fit().spec;
  const RidgeBounds b = default_ridge_bounds(s);
  for (auto _ : state) benchmark::DoNotOptimize(select_higher_order(s, {0, 1, 0}, b));
}
BENCHMARK(BM_SelectHigherOrder)->Unit(benchmark::kMillisecond);

static void BM_Composite(benchmark::State& state) {
  CompositeConfig cfg;
  cfg.bootstrap_G = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_composite(cached_fit(), cfg));
}
BENCHMARK(BM_Composite)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
