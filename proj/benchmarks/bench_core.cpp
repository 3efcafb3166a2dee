#include <benchmark/benchmark.h>

#include "patchepi/dynamics.hpp"
#include "patchepi/equilibria.hpp"
#include "patchepi/invasion.hpp"
#include "patchepi/model.hpp"
#include "patchepi/scenario.hpp"
#include "patchepi/spectral.hpp"

using namespace patchepi;

namespace {

// Ring of k patches with unit edges and a smooth beta profile.
ModelSpec ring(int k) {
  ModelSpec spec;
  spec.graph.rates = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    const int j = (i + 1) % k;
    spec.graph.rates(i, j) = spec.graph.rates(j, i) = 1.0;
  }
  spec.dS = 1.0;
  for (int l = 0; l < 2; ++l) {
    StrainParams& p = spec.strains[l];
    p.beta = Vector::LinSpaced(k, 1.0 + l, 3.0);
    p.gamma = Vector::Constant(k, 1.5);
    p.dispersal = 1.0;
  }
  return spec;
}

}  // namespace

static void BM_RhsFlat(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const ModelSpec spec = ring(k);
  const Matrix lap = build_laplacian(spec.graph).matrix();
  const Vector x = Vector::Constant(3 * k, 0.5);
  Vector dx(3 * k);
  for (auto _ : state) {
    rhs_flat(spec, lap, x, dx);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_RhsFlat)->Arg(2)->Arg(8)->Arg(32);

static void BM_R0(benchmark::State& state) {
  const ModelSpec spec = ring(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(r0(spec, 2.0 * spec.patches()));
}
BENCHMARK(BM_R0)->Arg(2)->Arg(8)->Arg(32);

static void BM_IntegrateScenario(benchmark::State& state) {
  const ScenarioConfig c = builtin_scenario("sim5a");
  for (auto _ : state) {
    const Trajectory t = integrate(c.model, c.initial, c.integration);
    benchmark::DoNotOptimize(t.states.back().S.data());
  }
}
BENCHMARK(BM_IntegrateScenario)->Unit(benchmark::kMillisecond);

static void BM_SingleStrainEE(benchmark::State& state) {
  const ModelSpec spec = ring(static_cast<int>(state.range(0)));
  const double mass = 2.0 * spec.patches();
  for (auto _ : state) benchmark::DoNotOptimize(single_strain_ee(spec, mass, Strain::One).residual);
}
BENCHMARK(BM_SingleStrainEE)->Arg(2)->Arg(8)->Unit(benchmark::kMicrosecond);

static void BM_InvasionUniform(benchmark::State& state) {
  const ScenarioConfig c = builtin_scenario("sim5a");
  for (auto _ : state) benchmark::DoNotOptimize(invasion_number_uniform(c.model, c.mass(), Strain::One));
}
BENCHMARK(BM_InvasionUniform);

BENCHMARK_MAIN();
