#include <benchmark/benchmark.h>

#include "sdpot/catalog.hpp"
#include "sdpot/optics.hpp"
#include "sdpot/rng.hpp"
#include "sdpot/solver.hpp"

using namespace sdpot;

namespace {

struct Fixture {
    std::unique_ptr<ConstraintFamily> fam;
    SourceGrid grid;
    AtomicMeasure atoms;
    std::vector<double> s;

    Fixture(int res, int atom_count) {
        fam = make_family(default_entry("reflector-nf-parallel"));
        grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), res, uniform_density());
        Rng rng(5);
        std::vector<Vec> ys;
        std::vector<double> g;
        // Convex position (one circle) so every atom owns a cell with mass.
        for (int j = 0; j < atom_count; ++j) {
            const double ang = 2.0 * 3.14159265358979324 * (j + 0.3 * rng.uniform()) / atom_count;
            ys.push_back(vec2(0.5 + 0.3 * std::cos(ang), 0.5 + 0.3 * std::sin(ang)));
            g.push_back(1.0);
        }
        AtomicMeasure probe = make_atomic(ys, g, 2);
        const Vec c = grid.centroid();
        const double s0 = solve_s(*fam, c, probe.y[0], fam->reference_height());
        s.assign(atom_count, 0.0);
        for (int j = 0; j < atom_count; ++j) s[j] = s0 + 0.005 * (rng.uniform() - 0.5);
        CellDecomposition dec = decompose(*fam, grid, probe, s);
        atoms = make_atomic(ys, dec.mass, 2);
    }
};

void bm_root_solve(benchmark::State& state) {
    auto fam = make_family(default_entry("reflector-nf-parallel"));
    Rng rng(3);
    Vec x = vec2(0.3, 0.4), y = vec2(0.6, 0.55);
    for (auto _ : state) {
        const double t = 0.6 + 0.3 * rng.uniform();
        benchmark::DoNotOptimize(solve_s(*fam, x, y, t));
    }
}
BENCHMARK(bm_root_solve);

void bm_envelope_decompose(benchmark::State& state) {
    Fixture fx(static_cast<int>(state.range(0)), 8);
    for (auto _ : state) {
        CellDecomposition dec = decompose(*fx.fam, fx.grid, fx.atoms, fx.s);
        benchmark::DoNotOptimize(dec.mass.data());
    }
    state.SetItemsProcessed(state.iterations() * fx.grid.size());
}
BENCHMARK(bm_envelope_decompose)->Arg(50)->Arg(100)->Arg(200);

void bm_solve(benchmark::State& state) {
    Fixture fx(100, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        SolveResult r = solve_semidiscrete(*fx.fam, fx.grid, fx.atoms);
        benchmark::DoNotOptimize(r.report.sweeps);
    }
}
BENCHMARK(bm_solve)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

void bm_raytrace(benchmark::State& state) {
    Fixture fx(static_cast<int>(state.range(0)), 8);
    DualPotential pot(*fx.fam, fx.atoms, fx.s);
    for (auto _ : state) {
        TraceReport tr = trace_parallel_reflector(fx.grid, pot, GradientMode::FdEnvelope);
        benchmark::DoNotOptimize(tr.hist_l1);
    }
    state.SetItemsProcessed(state.iterations() * fx.grid.size());
}
BENCHMARK(bm_raytrace)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void bm_tighten(benchmark::State& state) {
    Fixture fx(static_cast<int>(state.range(0)), 8);
    std::vector<double> u = u_transform(*fx.fam, fx.grid, fx.atoms, fx.s);
    for (auto& ui : u) ui -= 0.01;
    for (auto _ : state) {
        TightenResult t = tighten(*fx.fam, fx.grid, fx.atoms, u);
        benchmark::DoNotOptimize(t.dual_residual);
    }
    state.SetItemsProcessed(state.iterations() * fx.grid.size());
}
BENCHMARK(bm_tighten)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
