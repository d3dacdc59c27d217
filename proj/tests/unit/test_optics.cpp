#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sdpot/catalog.hpp"
#include "sdpot/optics.hpp"
#include "sdpot/solver.hpp"

using namespace sdpot;

namespace {

double focus_error(const TraceReport& rep, const Vec& ychart, int n) {
    double worst = 0.0;
    for (size_t i = 0; i < rep.hit.size(); ++i) {
        if (!rep.traced[i]) return 1e99;
        worst = std::max(worst, std::sqrt(norm2_n(rep.hit[i] - ychart, n)));
    }
    return worst;
}

}  // namespace

TEST_CASE("mirror law reflects against oriented and flipped normals") {
    Vec d = vec3(0, 0, 1);
    Vec n45{1.0 / std::sqrt(2.0), 0.0, -1.0 / std::sqrt(2.0)};
    Vec r = reflect_direction(d, n45, 3);
    CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(r[1]) < 1e-15);
    CHECK(std::abs(r[2]) < 1e-15);
    // reflection is insensitive to the normal's sign
    Vec r2 = reflect_direction(d, -1.0 * n45, 3);
    for (int k = 0; k < 3; ++k) CHECK(r[k] == doctest::Approx(r2[k]).epsilon(1e-14));
    CHECK(norm2_n(r, 3) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("vector refraction reproduces the scalar sine law") {
    const double theta_i = M_PI / 6.0;
    Vec d = vec2(std::sin(theta_i), -std::cos(theta_i));
    Vec n = vec2(0.0, 1.0);
    auto t = snell_refract(d, n, 1.0 / 1.5, 2);
    REQUIRE(t.has_value());
    CHECK(std::asin(std::abs((*t)[0])) ==
          doctest::Approx(std::asin(std::sin(theta_i) / 1.5)).epsilon(1e-12));
    CHECK((*t)[1] < 0.0);  // keeps crossing the interface
    CHECK(norm2_n(*t, 2) == doctest::Approx(1.0).epsilon(1e-14));

    SUBCASE("grazing the critical angle produces total internal reflection") {
        const double crit = std::asin(1.0 / 1.5);
        Vec dg = vec2(std::sin(crit + 0.05), -std::cos(crit + 0.05));
        CHECK_FALSE(snell_refract(dg, n, 1.5, 2).has_value());
        Vec dok = vec2(std::sin(crit - 0.05), -std::cos(crit - 0.05));
        CHECK(snell_refract(dok, n, 1.5, 2).has_value());
    }
    SUBCASE("normal incidence passes straight through") {
        auto s = snell_refract(vec2(0, -1), n, 1.0 / 1.5, 2);
        REQUIRE(s.has_value());
        CHECK(std::abs((*s)[0]) < 1e-15);
    }
}

TEST_CASE("one supporting paraboloid focuses a parallel beam exactly") {
    auto fam = make_family(default_entry("reflector-nf-parallel"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 24, uniform_density());
    Vec y = vec2(0.6, 0.45);
    AtomicMeasure atoms = make_atomic({y}, {grid.mass()}, 2);
    DualPotential pot(*fam, atoms, {0.7});

    TraceReport cf = trace_parallel_reflector(grid, pot, GradientMode::ClosedFormBranch);
    CHECK(focus_error(cf, y, 2) < 1e-9);
    CHECK(cf.hist_l1_rel < 1e-12);
    CHECK(cf.hit_mass + cf.miss_mass == doctest::Approx(cf.traced_mass).epsilon(1e-12));

    TraceReport fd = trace_parallel_reflector(grid, pot, GradientMode::FdEnvelope);
    CHECK(focus_error(fd, y, 2) < 10.0 * grid.h[0] * grid.h[0]);
}

TEST_CASE("one supporting ellipsoid focuses a point source") {
    auto fam = make_family(default_entry("reflector-nf-point"));
    SourceGrid grid = build_grid(cap_chart(0.3, 2), 24, uniform_density());
    Vec ych = vec2(1.4, 0.0);
    AtomicMeasure atoms = make_atomic({fam->lift_target(ych)}, {grid.mass()}, 3);
    DualPotential pot(*fam, atoms, {0.0});
    TraceReport cf = trace_point_reflector(grid, pot, GradientMode::ClosedFormBranch);
    CHECK(focus_error(cf, ych, 2) < 1e-6);
    CHECK(cf.miss_count == 0);
    TraceReport fd = trace_point_reflector(grid, pot, GradientMode::FdEnvelope);
    CHECK(focus_error(fd, ych, 2) < 10.0 * grid.h[0] * grid.h[0]);
}

TEST_CASE("one Cartesian oval focuses a refracted point source") {
    for (double kappa : {2.0 / 3.0, 1.5}) {
        CAPTURE(kappa);
        CatalogEntry e = default_entry("refractor-nf-point");
        e.kappa = kappa;
        auto fam = make_family(e);
        SourceGrid grid = build_grid(cap_chart(0.3, 2), 24, uniform_density());
        Vec ych = kappa < 1.0 ? vec2(0.2, 0.0) : vec2(0.1, 0.0);
        AtomicMeasure atoms = make_atomic({fam->lift_target(ych)}, {grid.mass()}, 3);
        DualPotential pot(*fam, atoms, {kappa < 1.0 ? -0.5 : 0.95});
        TraceReport cf = trace_refractor(grid, pot, GradientMode::ClosedFormBranch);
        CHECK(focus_error(cf, ych, 2) < 1e-6);
        CHECK(cf.tir_count == 0);
    }
}

TEST_CASE("one inverse ellipsoid focuses a parallel beam through a lens") {
    auto fam = make_family(default_entry("refractor-nf-parallel"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 24, uniform_density());
    Vec y = vec2(0.5, 0.5);
    AtomicMeasure atoms = make_atomic({y}, {grid.mass()}, 2);
    DualPotential pot(*fam, atoms, {2.0});
    TraceReport cf = trace_refractor(grid, pot, GradientMode::ClosedFormBranch);
    CHECK(focus_error(cf, y, 2) < 1e-6);
    TraceReport fd = trace_refractor(grid, pot, GradientMode::FdEnvelope);
    CHECK(focus_error(fd, y, 2) < 10.0 * grid.h[0] * grid.h[0]);
}

TEST_CASE("parallel reflector tracing rejects non-reflecting weights") {
    auto fam = make_family(default_entry("reflector-nf-parallel"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 10, uniform_density());
    AtomicMeasure atoms = make_atomic({vec2(0.5, 0.5)}, {grid.mass()}, 2);
    // |Du| = s |x - y| reaches s/sqrt(2) at the corners; s = 2 crosses 1
    DualPotential pot(*fam, atoms, {2.0});
    CHECK_THROWS_AS(trace_parallel_reflector(grid, pot, GradientMode::ClosedFormBranch),
                    NumericError);
}

TEST_CASE("map agreement needs an optical family") {
    auto fam = make_family(default_entry("ot-cost"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 8, uniform_density());
    AtomicMeasure atoms = make_atomic({vec2(0.5, 0.5)}, {grid.mass()}, 2);
    DualPotential pot(*fam, atoms, {0.0});
    TraceReport fake;
    fake.hit.assign(grid.x.begin(), grid.x.end());
    fake.hit_atom.assign(grid.size(), 0);
    fake.traced.assign(grid.size(), 1);
    CHECK_THROWS_AS(map_agreement(grid, pot, fake), std::invalid_argument);
}

TEST_CASE("raytraced cells agree with the envelope decomposition") {
    auto fam = make_family(default_entry("reflector-nf-parallel"));
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 60, uniform_density());
    std::vector<Vec> ys = {vec2(0.35, 0.4), vec2(0.65, 0.4), vec2(0.5, 0.68)};
    AtomicMeasure probe = make_atomic(ys, {1, 1, 1}, 2);
    CellDecomposition dec = decompose(*fam, grid, probe, {0.62, 0.60, 0.64});
    AtomicMeasure atoms = make_atomic(ys, dec.mass, 2);
    SolveResult r = solve_semidiscrete(*fam, grid, atoms);
    REQUIRE(r.report.converged);

    TraceReport tr = trace_parallel_reflector(grid, r.potential, GradientMode::FdEnvelope);
    MapAgreement ma = map_agreement(grid, r.potential, tr);
    CHECK(ma.match_fraction > 0.99);
    CHECK(ma.mismatch_mass <= ma.boundary_band_mass);
    CHECK(ma.max_distance < 0.05);  // off the interface band, hits identify the atom
    CHECK(tr.hist_l1_rel < 0.01);
}

TEST_CASE("finite-difference residual of the reflector equation shrinks at second order") {
    // Forward-constructed instance: pick a non-polynomial u, define f so the
    // equation holds exactly, then measure the lattice residual.
    // The wiggle is kept small so D2u + aI stays positive definite on the
    // box; otherwise the map reverses orientation somewhere and the Jacobian
    // identity cannot hold.
    auto uval = [](const Vec& x) {
        return 0.8 - 0.1 * norm2_n(x, 2) + 0.02 * std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
    };
    auto f_of = [&](const Vec& x) {
        const double u = uval(x);
        Vec du = vec2(-0.2 * x[0] + 0.06 * std::cos(3.0 * x[0]) * std::cos(2.0 * x[1]),
                      -0.2 * x[1] - 0.04 * std::sin(3.0 * x[0]) * std::sin(2.0 * x[1]));
        Mat hess{};
        hess(0, 0) = -0.2 - 0.18 * std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
        hess(1, 1) = -0.2 - 0.08 * std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
        hess(0, 1) = hess(1, 0) = -0.12 * std::cos(3.0 * x[0]) * std::sin(2.0 * x[1]);
        const double g2 = norm2_n(du, 2);
        const double A = (1.0 - g2) / (2.0 * u);
        hess(0, 0) += A;
        hess(1, 1) += A;
        const double lhs = det(hess, 2);
        const double factor = std::pow(1.0 - g2, 3) / (std::pow(2.0 * u, 2) * (1.0 + g2));
        return lhs / factor;
    };
    auto gfun = [](const Vec&) { return 1.0; };

    double prev = -1.0, prev_jac = -1.0;
    for (int res : {25, 50, 100}) {
        SourceGrid grid = build_grid(box_chart(vec2(-0.5, -0.5), vec2(0.5, 0.5), 2), res,
                                     uniform_density());
        std::vector<double> u(grid.size());
        for (int i = 0; i < grid.size(); ++i) u[i] = uval(grid.x[i]);
        MaResidualReport rep = ma_residual_parallel(grid, u, f_of, gfun);
        CHECK(rep.interior_nodes > 0);
        if (prev > 0.0) {
            CHECK(prev / rep.max_residual >= 3.0);
            CHECK(prev_jac / rep.max_jac_residual >= 3.0);
        }
        prev = rep.max_residual;
        prev_jac = rep.max_jac_residual;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("quadratic potentials zero the lattice residual") {
    // Central differences are exact on quadratics, so the forward residual
    // collapses to rounding noise.
    auto f_of = [](const Vec& x) {
        const double u = 0.8 - 0.2 * norm2_n(x, 2);
        Vec du = -0.4 * x;
        const double g2 = norm2_n(du, 2);
        Mat m = identity(2, -0.4 + (1.0 - g2) / (2.0 * u));
        const double lhs = det(m, 2);
        const double factor = std::pow(1.0 - g2, 3) / (std::pow(2.0 * u, 2) * (1.0 + g2));
        return lhs / factor;
    };
    auto gfun = [](const Vec&) { return 1.0; };
    SourceGrid grid = build_grid(box_chart(vec2(-0.5, -0.5), vec2(0.5, 0.5), 2), 30,
                                 uniform_density());
    std::vector<double> u(grid.size());
    for (int i = 0; i < grid.size(); ++i) u[i] = 0.8 - 0.2 * norm2_n(grid.x[i], 2);
    MaResidualReport rep = ma_residual_parallel(grid, u, f_of, gfun);
    CHECK(rep.max_residual < 1e-10);
}

TEST_CASE("identity map satisfies the jacobian identity for equal densities") {
    SourceGrid grid = build_grid(box_chart(vec2(-0.5, -0.5), vec2(0.5, 0.5), 2), 20,
                                 uniform_density());
    auto one = [](const Vec&) { return 1.0; };
    auto field = jacobian_identity_field(grid, [](const Vec& x) { return x; }, one, one);
    for (double v : field)
        if (!std::isnan(v)) CHECK(std::abs(v) < 1e-11);
}
