#include <benchmark/benchmark.h>

#include <cmath>

#include "mcf/arrival.hpp"
#include "mcf/domain.hpp"
#include "mcf/regularize.hpp"
#include "mcf/translator.hpp"

using namespace mcf;

namespace {

Exec policy(const benchmark::State& state) { return state.range(1) == 0 ? Exec::serial : Exec::parallel; }

ScalarField disk_field(int n) {
    const Grid g = Grid::cartesian(n, n, -1.1, 1.1, -1.1, 1.1);
    const ScalarField mask = build_mask(DomainSpec::disk(1.0), g);
    return ScalarField::from_function(g, mask.mask(), [](const Vec2& x) { return 0.5 * (1.0 - x.squaredNorm()); });
}

void residual_kernel(benchmark::State& state) {
    const ScalarField f = disk_field(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(translator_graph_residual(f, 16.0, policy(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(f.grid().size()));
}

void curvature_kernel(benchmark::State& state) {
    const ScalarField u = disk_field(static_cast<int>(state.range(0)));
    const double eps = regularity_threshold(u.grid());
    for (auto _ : state) benchmark::DoNotOptimize(diagnose_field(u, eps, policy(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(u.grid().size()));
}

void translator_kernel(benchmark::State& state) {
    const GraphSurface s{disk_field(static_cast<int>(state.range(0)))};
    for (auto _ : state) benchmark::DoNotOptimize(translator_residual(s, Velocity::vertical(1.0), policy(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(s.base.grid().size()));
}

void stationarity_kernel(benchmark::State& state) {
    const GraphSurface s = sample_graph(grim_reaper(1.0), Grid::line(static_cast<int>(state.range(0)), -1.2, 1.2));
    for (auto _ : state) benchmark::DoNotOptimize(stationarity_check(s, Velocity::vertical(1.0), 16, 20240601, policy(state)));
}

// second argument: 0 = serial reference, 1 = OpenMP
BENCHMARK(residual_kernel)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(curvature_kernel)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(translator_kernel)->ArgsProduct({{128, 512}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(stationarity_kernel)->ArgsProduct({{1024, 8192}, {0, 1}})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
