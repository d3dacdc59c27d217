#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sdpot/catalog.hpp"
#include "sdpot/rng.hpp"
#include "sdpot/transforms.hpp"

using namespace sdpot;

namespace {

// Random feasible start for tighten tests: weights near the reference
// height, envelope, then a strict downward perturbation.
std::vector<double> feasible_start(const ConstraintFamily& fam, const SourceGrid& grid,
                                   const AtomicMeasure& atoms, Rng& rng) {
    std::vector<double> s(atoms.size());
    const Vec c = grid.centroid();
    for (int j = 0; j < atoms.size(); ++j)
        s[j] = solve_s(fam, c, atoms.y[j], fam.reference_height() * (1.0 + 0.05 * rng.uniform()));
    std::vector<double> u = u_transform(fam, grid, atoms, s);
    for (auto& ui : u) ui -= 0.1 * rng.uniform();
    return u;
}

AtomicMeasure family_atoms(const ConstraintFamily& fam, int count, Rng& rng) {
    const SampleBox box = fam.sample_box();
    std::vector<Vec> ys;
    std::vector<double> g;
    for (int j = 0; j < count; ++j) {
        Vec yc{};
        for (int d = 0; d < fam.target_dim(); ++d)
            yc[d] = box.y_lo[d] + (box.y_hi[d] - box.y_lo[d]) * (0.25 + 0.5 * rng.uniform());
        ys.push_back(fam.lift_target(yc));
        g.push_back(1.0);
    }
    return make_atomic(ys, g, fam.dim());
}

}  // namespace

TEST_CASE("envelope potential is the minimum over branches") {
    auto fam = make_family(default_entry("ot-cost"));
    AtomicMeasure atoms = make_atomic({vec2(0.2, 0.2), vec2(0.8, 0.8)}, {1.0, 1.0}, 2);
    DualPotential pot(*fam, atoms, {0.1, -0.3});
    Vec x = vec2(0.25, 0.4);
    // -phi = c(x,y) - s for the quadratic transport cost
    const double b0 = 0.5 * norm2_n(x - atoms.y[0], 2) - 0.1;
    const double b1 = 0.5 * norm2_n(x - atoms.y[1], 2) + 0.3;
    CHECK(pot.branch(x, 0) == doctest::Approx(b0).epsilon(1e-14));
    CHECK(pot.branch(x, 1) == doctest::Approx(b1).epsilon(1e-14));
    CHECK(pot.u(x) == doctest::Approx(std::min(b0, b1)).epsilon(1e-14));
    CHECK(pot.active(x) == (b0 <= b1 ? 0 : 1));
}

TEST_CASE("transforms conjugate each other on the transport cost") {
    auto fam = make_family(default_entry("ot-cost"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 20, uniform_density());
    AtomicMeasure atoms = make_atomic({vec2(0.3, 0.3), vec2(0.7, 0.6)}, {1.0, 1.0}, 2);
    std::vector<double> s = {0.05, -0.1};
    std::vector<double> u = u_transform(*fam, grid, atoms, s);
    // v_transform recovers the weights that already support the envelope
    std::vector<double> s2 = v_transform(*fam, grid, atoms, u);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(s2[j] - s[j]) < 1e-10);
    CHECK(dual_pair_residual(*fam, grid, atoms, u, s) < 1e-10);
}

TEST_CASE("tighten yields an idempotent dual pair above the start") {
    Rng rng(42);
    for (const auto& id : {"ot-cost", "reflector-ff", "reflector-nf-parallel", "refractor-nf-point"}) {
        CAPTURE(id);
        auto fam = make_family(default_entry(id));
        const SampleBox box = fam->sample_box();
        SourceGrid grid = build_grid(box_chart(box.x_lo, box.x_hi, fam->dim()), 16, uniform_density());
        AtomicMeasure atoms = family_atoms(*fam, 4, rng);
        std::vector<double> u0 = feasible_start(*fam, grid, atoms, rng);

        TightenResult t1 = tighten(*fam, grid, atoms, u0);
        TightenResult t2 = tighten(*fam, grid, atoms, t1.u);
        CHECK(t1.dual_residual < 1e-9);
        double idem = 0.0, below = 0.0;
        for (size_t i = 0; i < t1.u.size(); ++i) {
            idem = std::max(idem, std::abs(t1.u[i] - t2.u[i]));
            below = std::max(below, u0[i] - t1.u[i]);
        }
        CHECK(idem < 1e-10);
        CHECK(below < 1e-12);
    }
}

TEST_CASE("conjugation does not decrease the separable objective") {
    Rng rng(17);
    auto fam = make_family(default_entry("reflector-nf-parallel"));
    const SampleBox box = fam->sample_box();
    SourceGrid grid = build_grid(box_chart(box.x_lo, box.x_hi, 2), 16, uniform_density());
    AtomicMeasure atoms = family_atoms(*fam, 5, rng);
    std::vector<double> u0 = feasible_start(*fam, grid, atoms, rng);
    std::vector<double> s0 = v_transform(*fam, grid, atoms, u0);

    const double obj0 = separable_objective(*fam, grid, atoms, u0, s0);
    TightenResult t = tighten(*fam, grid, atoms, u0);
    const double obj1 = separable_objective(*fam, grid, atoms, t.u, t.s);
    CHECK(obj1 >= obj0 - 1e-12);
}

TEST_CASE("a mirror-symmetric pair splits the box mass evenly") {
    auto fam = make_family(default_entry("ot-cost"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 40, uniform_density());
    AtomicMeasure atoms = make_atomic({vec2(0.3, 0.5), vec2(0.7, 0.5)}, {1.0, 1.0}, 2);
    CellDecomposition dec = decompose(*fam, grid, atoms, {0.0, 0.0});
    CHECK(dec.mass[0] == doctest::Approx(dec.mass[1]).epsilon(1e-12));
    CHECK(dec.mass[0] + dec.mass[1] == doctest::Approx(grid.mass()).epsilon(1e-12));
    CHECK(dec.interface_mass > 0.0);
    ResidualReport res = generalized_residual(grid, atoms, dec);
    // telescoping: residuals sum to mass(f) - mass(g)
    CHECK(res.sum == doctest::Approx(grid.mass() - atoms.total()).epsilon(1e-12));
}

TEST_CASE("huge tie tolerance marks every node as tied") {
    auto fam = make_family(default_entry("ot-cost"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 10, uniform_density());
    AtomicMeasure atoms = make_atomic({vec2(0.4, 0.5), vec2(0.6, 0.5)}, {1.0, 1.0}, 2);
    CellDecomposition dec = decompose(*fam, grid, atoms, {0.0, 0.0}, /*tie_eps=*/10.0);
    CHECK(dec.tie_count == grid.size());
    for (int a : dec.active) CHECK(a == 0);  // lowest branch wins ties
}

TEST_CASE("envelope gradient solves the first-order identity inside cells") {
    auto fam = make_family(default_entry("ot-cost"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 30, uniform_density());
    AtomicMeasure atoms = make_atomic({vec2(0.25, 0.5), vec2(0.75, 0.5)}, {1.0, 1.0}, 2);
    std::vector<double> s = {0.0, 0.0};
    CellDecomposition dec = decompose(*fam, grid, atoms, s);

    int interior = 0, interface = 0;
    for (int i = 0; i < grid.size(); ++i) {
        if (dec.interface[i]) {
            ++interface;
            CHECK_THROWS_AS(envelope_gradient(*fam, grid, atoms, s, dec, i), std::invalid_argument);
            continue;
        }
        bool inner = true;
        for (int axis = 0; axis < 2 && inner; ++axis)
            for (int step : {-1, 1}) {
                int nb = grid.neighbor(i, axis, step);
                if (nb < 0 || dec.active[nb] != dec.active[i]) inner = false;
            }
        if (!inner) continue;
        GradientResult gr = envelope_gradient(*fam, grid, atoms, s, dec, i);
        CHECK(gr.atom == dec.active[i]);
        // transport branches are quadratic, so central differences are exact
        CHECK(gr.residual < 1e-11);
        ++interior;
    }
    CHECK(interior > 0);
    CHECK(interface > 0);
}

TEST_CASE("single supporting branch makes the objective vanish") {
    // With one atom, u = -phi(., y0, s0) exactly, so I = sum w f (u + phi) = 0.
    auto fam = make_family(default_entry("reflector-nf-point"));
    const SampleBox box = fam->sample_box();
    SourceGrid grid = build_grid(cap_chart(0.3, 2), 15, uniform_density());
    AtomicMeasure atoms = make_atomic({fam->lift_target(vec2(1.4, 0.0))}, {grid.mass()}, 3);
    std::vector<double> s = {0.0};
    std::vector<double> u = u_transform(*fam, grid, atoms, s);
    CHECK(std::abs(separable_objective(*fam, grid, atoms, u, s)) < 1e-12);
}

TEST_CASE("lipschitz estimate stays under the sampled gradient bound") {
    auto fam = make_family(default_entry("ot-cost"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 25, uniform_density());
    AtomicMeasure atoms = make_atomic({vec2(0.3, 0.4), vec2(0.6, 0.7)}, {1.0, 1.0}, 2);
    std::vector<double> u = u_transform(*fam, grid, atoms, {0.0, 0.1});
    LipschitzReport rep = lipschitz_check(*fam, grid, u, 1000, 3);
    CHECK(rep.ok);
    CHECK(rep.max_slope <= rep.bound + 1e-8);
}

TEST_CASE("pushforward moments agree for an exactly balanced split") {
    auto fam = make_family(default_entry("ot-cost"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 40, uniform_density());
    std::vector<Vec> ys = {vec2(0.3, 0.5), vec2(0.7, 0.5)};
    AtomicMeasure probe = make_atomic(ys, {1.0, 1.0}, 2);
    CellDecomposition dec = decompose(*fam, grid, probe, {0.0, 0.0});
    AtomicMeasure atoms = make_atomic(ys, dec.mass, 2);
    for (const PushforwardRow& row : measure_preservation(grid, atoms, dec)) {
        CAPTURE(row.name);
        CHECK(std::abs(row.gap) < 1e-12 * (1.0 + row.sup_h));
    }
}
