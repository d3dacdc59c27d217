#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sdpot/catalog.hpp"
#include "sdpot/rng.hpp"

using namespace sdpot;

TEST_CASE("catalog lists seven families and rejects unknown ids") {
    CHECK(catalog_ids().size() == 7);
    for (const auto& id : catalog_ids()) {
        auto fam = make_family(default_entry(id));
        CHECK(fam->id() == id);
        CHECK(fam->theta0() > 0.0);
    }
    CHECK_THROWS_AS(default_entry("no-such-family"), std::invalid_argument);
}

TEST_CASE("refraction ratio validation names the parameter") {
    auto reject = [](const char* id, double kappa) {
        CatalogEntry e = default_entry(id);
        e.kappa = kappa;
        CHECK_THROWS_WITH_AS(make_family(e), doctest::Contains("kappa"), std::invalid_argument);
    };
    reject("refractor-nf-parallel", 1.2);
    reject("refractor-nf-parallel", 0.0);
    reject("refractor-nf-point", 1.0);
    CatalogEntry e = default_entry("refractor-nf-point");
    e.kappa = 1.5;  // reversed-index variant is legal
    // The tracer refracts rays leaving the lens, so the reported ratio is the
    // reciprocal of the interior index.
    CHECK(make_family(e)->snell_ratio() == doctest::Approx(1.0 / 1.5));
}

TEST_CASE("analytic derivatives match finite differences of phi") {
    for (const auto& id : catalog_ids()) {
        CAPTURE(id);
        auto fam = make_family(default_entry(id));
        DerivativeReport rep = check_derivatives(*fam, 200, 31);
        CHECK(rep.samples == 200);
        CHECK(rep.err_phi_s < 1e-7);
        CHECK(rep.err_phi_x < 1e-7);
        CHECK(rep.err_phi_y < 1e-7);
        const double second_gate = fam->closed_form_second_derivatives() ? 1e-7 : 5e-3;
        CHECK(rep.err_phi_xx < second_gate);
        CHECK(rep.err_phi_xy < second_gate);
        CHECK(rep.err_phi_xs < second_gate);
    }
}

TEST_CASE("the broken-derivative fixture is caught") {
    auto fam = make_family(default_entry("test-broken-derivative"));
    DerivativeReport rep = check_derivatives(*fam, 100, 31);
    CHECK(rep.err_phi_x > 1e-4);
    CHECK(rep.err_phi_s < 1e-8);  // only the gradient is wrong
}

TEST_CASE("phi is uniformly increasing in s with the advertised margin") {
    for (const auto& id : catalog_ids()) {
        CAPTURE(id);
        auto fam = make_family(default_entry(id));
        MonotonicityReport rep = check_monotonicity(*fam, 300, 7);
        CHECK(rep.ok);
        CHECK(rep.min_phi_s >= fam->theta0() - 1e-12);
    }
}

TEST_CASE("the injectivity determinant keeps one sign per family") {
    for (const auto& id : catalog_ids()) {
        CAPTURE(id);
        auto fam = make_family(default_entry(id));
        H2Report rep = check_h2(*fam, 300, 11);
        CHECK(rep.sign_constant);
        CHECK(rep.min_abs_det > 0.0);
    }
}

TEST_CASE("solve_s inverts phi in its monotone argument") {
    Rng rng(91);
    for (const auto& id : catalog_ids()) {
        CAPTURE(id);
        auto fam = make_family(default_entry(id));
        for (int k = 0; k < 25; ++k) {
            SamplePoint p = sample_valid_point(*fam, rng);
            const double t = -fam->phi(p.x, p.y, p.s);
            const double s = solve_s(*fam, p.x, p.y, t);
            CHECK(std::abs(s - p.s) < 1e-8 * (1.0 + std::abs(p.s)));
            CHECK(std::abs(t + fam->phi(p.x, p.y, s)) < 1e-11 * (1.0 + std::abs(t)));
        }
    }
}

TEST_CASE("solve_s reports heights outside the dual domain") {
    // The point-source reflector clamps weights to a hard interval, so the
    // branch value -phi is bounded there; heights beyond the bound have no
    // supporting weight and the bracket search must fail loudly.
    auto fam = make_family(default_entry("reflector-nf-point"));
    Vec x = vec2(0.1, 0.1);
    Vec y = fam->lift_target(vec2(0.3, 0.2));
    CHECK_THROWS_AS(solve_s(*fam, x, y, -1e6), NumericError);
    CHECK_THROWS_WITH_AS(solve_s(*fam, x, y, -1e6), doctest::Contains("dual domain"),
                         NumericError);
}

TEST_CASE("evaluate bundles the pointwise evaluators") {
    auto fam = make_family(default_entry("ot-cost"));
    Vec x = vec2(0.3, 0.7), y = vec2(0.8, 0.2);
    Derivs d = evaluate(*fam, x, y, 0.4);
    CHECK(d.phi == doctest::Approx(fam->phi(x, y, 0.4)).epsilon(1e-15));
    CHECK(d.phi_s == doctest::Approx(fam->phi_s(x, y, 0.4)).epsilon(1e-15));
    CHECK(d.phi_x[0] == doctest::Approx(fam->phi_x(x, y, 0.4)[0]).epsilon(1e-15));
}

TEST_CASE("quadratic transport cost has its textbook derivatives") {
    auto fam = make_family(default_entry("ot-cost"));
    Vec x = vec2(0.25, 0.5), y = vec2(1.0, -0.5);
    const double d2 = norm2_n(x - y, 2);
    CHECK(fam->phi(x, y, 0.3) == doctest::Approx(0.3 - 0.5 * d2).epsilon(1e-15));
    CHECK(fam->phi_s(x, y, 0.3) == 1.0);
    CHECK(fam->phi_x(x, y, 0.3)[0] == doctest::Approx(-(x[0] - y[0])).epsilon(1e-15));
    CHECK(fam->phi_y(x, y, 0.3)[1] == doctest::Approx(x[1] - y[1]).epsilon(1e-15));
}

TEST_CASE("point-source targets lift onto their plane or sphere") {
    auto point = make_family(default_entry("reflector-nf-point"));
    Vec lifted = point->lift_target(vec2(1.4, 0.2));
    CHECK(lifted[2] == doctest::Approx(point->target_plane_height()).epsilon(1e-14));

    auto ff = make_family(default_entry("reflector-ff"));
    Vec dir = ff->lift_target(vec2(0.3, -0.4));
    CHECK(norm2_n(dir, 3) == doctest::Approx(1.0).epsilon(1e-12));

    auto flat = make_family(default_entry("ot-cost"));
    Vec same = flat->lift_target(vec2(0.3, -0.4));
    CHECK(same[0] == 0.3);
    CHECK(same[1] == -0.4);
    CHECK(same[2] == 0.0);
}

TEST_CASE("valid points can be rejection sampled for every family") {
    Rng rng(5);
    for (const auto& id : catalog_ids()) {
        CAPTURE(id);
        auto fam = make_family(default_entry(id));
        for (int k = 0; k < 10; ++k) {
            SamplePoint p = sample_valid_point(*fam, rng);
            CHECK(fam->valid(p.x, p.y, p.s));
            CHECK(fam->phi_s(p.x, p.y, p.s) > 0.0);
        }
    }
}
