// Parallel kernels against the serial reference implementations.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "nsgrf/assembly.hpp"
#include "nsgrf/gmrf.hpp"

using namespace nsgrf;

namespace {

AnisotropySpec bench_spec() {
  return AnisotropySpec(1.0, FourierVectorField(20, 20, {2, 3}, FrequencySet({{0, 1}, {1, 0}, {1, 1}}),
                                                {{0, 0, 0, 2}, {1, 0, 0, 0}, {0, 0, 0, 1}}));
}

GridSpec grid_of(const benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  return GridSpec(20, 20, m, m);
}

void BM_stencil_parallel(benchmark::State& state) {
  const GridSpec g = grid_of(state);
  const AnisotropySpec spec = bench_spec();
  for (auto _ : state) benchmark::DoNotOptimize(assemble_AH(g, sample_H_on_faces(g, spec)));
}

void BM_stencil_serial(benchmark::State& state) {
  const GridSpec g = grid_of(state);
  const AnisotropySpec spec = bench_spec();
  for (auto _ : state) benchmark::DoNotOptimize(reference::assemble_AH_serial(g, spec));
}

void BM_precision_parallel(benchmark::State& state) {
  const GridSpec g = grid_of(state);
  const AnisotropySpec spec = bench_spec();
  PrecisionAssembler assembler(g, KappaSpec(1.0));
  for (auto _ : state) benchmark::DoNotOptimize(assembler.assemble(spec).valuePtr());
}

void BM_precision_serial(benchmark::State& state) {
  const GridSpec g = grid_of(state);
  const AnisotropySpec spec = bench_spec();
  for (auto _ : state) benchmark::DoNotOptimize(reference::precision_serial(g, 1.0, spec));
}

void BM_variances_selected_inverse(benchmark::State& state) {
  const GridSpec g = grid_of(state);
  const PrecisionFactor f(assemble_precision(g, KappaSpec(1.0), bench_spec()).precision());
  for (auto _ : state) benchmark::DoNotOptimize(marginal_variances(f));
}

void BM_variances_column_solves(benchmark::State& state) {
  const GridSpec g = grid_of(state);
  const PrecisionFactor f(assemble_precision(g, KappaSpec(1.0), bench_spec()).precision());
  for (auto _ : state) benchmark::DoNotOptimize(reference::inverse_diagonal_by_columns(f.cholesky()));
}

}  // namespace

BENCHMARK(BM_stencil_parallel)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stencil_serial)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_precision_parallel)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_precision_serial)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_variances_selected_inverse)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_variances_column_solves)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
