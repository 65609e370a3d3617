#include <benchmark/benchmark.h>

#include "msdg/dg.hpp"
#include "msdg/driver.hpp"
#include "msdg/offline.hpp"

using namespace msdg;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};

CoefficientField make_field(const FineGrid& g) {
    return generate_channels_inclusions(g, 3, 6, 1e4, 7);
}

void BM_Assemble(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    const FineGrid g = build_grids(kUnit, N, N, 10, 10);
    const CoefficientField f = make_field(g);
    for (auto _ : state) {
        DGOperator op = assemble(g, f, 2.0, [](double, double) { return 1.0; });
        benchmark::DoNotOptimize(op.A);
    }
    state.SetItemsProcessed(state.iterations() * g.num_dofs());
}
BENCHMARK(BM_Assemble)->Arg(5)->Arg(10);

void BM_FineSolve(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    const FineGrid g = build_grids(kUnit, N, N, 10, 10);
    const CoefficientField f = make_field(g);
    const DGOperator op = assemble(g, f, 2.0, [](double, double) { return 1.0; });
    for (auto _ : state) {
        Vector u = solve_fine(op);
        benchmark::DoNotOptimize(u);
    }
    state.SetItemsProcessed(state.iterations() * g.num_dofs());
}
BENCHMARK(BM_FineSolve)->Arg(5)->Arg(10);

void BM_SpectralNode(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const FineGrid g = build_grids(kUnit, 4, 4, n, n);
    const CoefficientField f = make_field(g);
    const auto pou = build_pou(g, f, PouKind::bilinear);
    const auto map =
        make_neighborhood_map(g, g.coarse().neighborhood(g.coarse().node_index(2, 2)));
    const Matrix a = Matrix(assemble_a_omega(g, f, map, 2.0));
    const Matrix s = Matrix(assemble_s_omega(g, f, map, pou, 2.0));
    const Matrix reg = Matrix(assemble_kappa_mass_omega(g, f, map));
    for (auto _ : state) {
        SpectralResult r = solve_spectral(a, s, reg, 5);
        benchmark::DoNotOptimize(r.eigenvalues);
    }
}
BENCHMARK(BM_SpectralNode)->Arg(5)->Arg(10);

void BM_AdaptiveIteration(benchmark::State& state) {
    RunConfig cfg;
    cfg.Nx = cfg.Ny = 5;
    cfg.nx = cfg.ny = 5;
    cfg.use_generator = true;
    cfg.contrast = 1e4;
    cfg.seed = 7;
    cfg.initial_basis = 2;
    cfg.max_iterations = 1;
    for (auto _ : state) {
        // re-run one enrichment iteration from a fresh offline space
        state.PauseTiming();
        auto s = prepare(cfg);
        state.ResumeTiming();
        ConvergenceHistory h = run_adaptive(*s, cfg);
        benchmark::DoNotOptimize(h.rows);
    }
}
BENCHMARK(BM_AdaptiveIteration)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
