// Serial reference vs OpenMP kernels, and surrogate prediction vs exact
// forward solves, on the 32 x 32 Fresnel-style geometry.

#include <benchmark/benchmark.h>

#include "scatlab/kernels.hpp"
#include "scatlab/subspace.hpp"
#include "scatlab/surrogate.hpp"

using namespace scatlab;

namespace {

struct Fixture {
  ImagingGrid grid = ImagingGrid::square(32, 0.16);
  FrequencySet freqs{{2e9, 3e9}};
  GreensOperators greens = build_greens(grid, fresnel_geometry(), freqs);
  FieldSet inc = incident_field(greens.sensors, grid, freqs);
  ContrastMap chi = rasterize(foam_diel_ext(), grid);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void BM_DomainOperator(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::domain_operator(f.grid, f.freqs.omega(1), mode(state)));
}

void BM_ReceiverOperator(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::receiver_operator(f.grid, f.greens.sensors.rx, f.freqs.omega(1), mode(state)));
}

void BM_SolveAll(benchmark::State& state) {
  const Fixture& f = fixture();
  const KPArray<cplx> lambda(f.greens.frequencies(), f.greens.transmitters(), cplx(1.0));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::solve_all(f.chi, lambda, f.greens, f.inc.inc_domain, {}, mode(state)));
}

void BM_Decompose(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(decompose(f.greens, {}, mode(state)));
}

// A small untrained network of the default width has the same cost per call
// as a trained one.
void BM_SurrogatePredict(benchmark::State& state) {
  const Fixture& f = fixture();
  const TrainingSet set = generate_training_set({foam_diel_ext(), foam_diel_int()}, 25, 1, f.greens);
  TrainingOptions o;
  o.epochs = 1;
  const Surrogate model = train(set, o);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(f.chi));
}

void BM_ExactForward(benchmark::State& state) {
  const Fixture& f = fixture();
  const KPArray<cplx> lambda(f.greens.frequencies(), f.greens.transmitters(), cplx(1.0));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::solve_all(f.chi, lambda, f.greens, f.inc.inc_domain, {}, Execution::parallel));
}

}  // namespace

BENCHMARK(BM_DomainOperator)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReceiverOperator)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveAll)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Decompose)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SurrogatePredict)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExactForward)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
