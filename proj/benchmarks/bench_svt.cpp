// Subspace proximal step vs full-SVD SVT on d=64 matrices, sweeping n.

#include <benchmark/benchmark.h>

#include "hsrecon/hsrecon.hpp"

namespace {

using namespace hsrecon;

Matrix input(benchmark::State& state) {
    return synth_low_rank(64, state.range(0), 8, 40.0, static_cast<std::uint64_t>(state.range(0)));
}

void BM_LrspApply(benchmark::State& state) {
    const Matrix u = input(state);
    LrspConfig c;
    c.rank = 8;
    c.kappa = 64;
    c.inner_steps = 3;
    c.theta = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lrsp_apply(u, c, LrspState::initial(c)).output.data());
    }
    state.SetComplexityN(state.range(0));
}

void BM_SvtFull(benchmark::State& state) {
    const Matrix u = input(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(svt_full(u, ShrinkageThreshold(0.5)).data());
    }
    state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_LrspApply)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMicrosecond)->Complexity();
BENCHMARK(BM_SvtFull)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMicrosecond)->Complexity();
BENCHMARK_MAIN();
