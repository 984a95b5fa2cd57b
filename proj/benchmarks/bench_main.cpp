#include "svph/spectrum.hpp"
#include "svph/transfer.hpp"
#include "svph/sampling.hpp"

#include <benchmark/benchmark.h>

using namespace svph;

namespace {

MapSpec doubling_skew() { return make_map(MapKind::skew_linear, 2, {}, FourierSeries::cosine(0.1, {1, 0})); }
Observable cos_x() { return make_observable(FourierSeries::cosine(1.0, {1, 0})); }

int quadrature_for(int K) {
    int Q = 1;
    while (Q < 2 * (2 * K + 1)) Q *= 2;
    return Q;
}

void BM_Assemble(benchmark::State& state) {
    const int K = static_cast<int>(state.range(0));
    const double nu = state.range(1) ? 0.7 : 0.0;
    MapSpec m = doubling_skew();
    Observable o = cos_x();
    for (auto _ : state) benchmark::DoNotOptimize(assemble(m, o, nu, K, quadrature_for(K)));
    state.counters["dim"] = static_cast<double>((2 * K + 1) * (2 * K + 1));
}
BENCHMARK(BM_Assemble)->Args({8, 0})->Args({16, 0})->Args({16, 1})->Args({24, 0})->Unit(benchmark::kMillisecond);

void BM_Spectrum(benchmark::State& state) {
    const int K = static_cast<int>(state.range(0));
    OperatorMatrix M = assemble(doubling_skew(), cos_x(), 0.0, K, quadrature_for(K));
    SpectrumOptions o;
    o.method = state.range(1) ? EigenMethod::krylov : EigenMethod::dense;
    for (auto _ : state) benchmark::DoNotOptimize(spectrum(M, 8, o));
}
BENCHMARK(BM_Spectrum)->Args({8, 0})->Args({8, 1})->Args({16, 0})->Args({16, 1})->Unit(benchmark::kMillisecond);

void BM_Stepper(benchmark::State& state) {
    OrbitStepper st(doubling_skew());
    Rng rng(1);
    DigitStream digits(st.ell(), rng);
    FixedPoint p = st.init({0.3, 0.6}, rng);
    for (auto _ : state) {
        for (int i = 0; i < 4096; ++i) st.step(p, digits);
        benchmark::DoNotOptimize(p);
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_Stepper);

} // namespace

BENCHMARK_MAIN();
