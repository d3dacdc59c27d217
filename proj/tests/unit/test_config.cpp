#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sdpot/config.hpp"

using namespace sdpot;

namespace {

ProblemConfig sample_problem() {
    ProblemConfig cfg;
    cfg.family = default_entry("ot-cost");
    cfg.source.chart = "box";
    cfg.source.resolution = 20;
    cfg.source.lo = {0.0, 0.0};
    cfg.source.hi = {1.0, 1.0};
    cfg.targets.mode = "explicit";
    cfg.targets.atoms = {{0.3, 0.5}, {0.7, 0.5}};
    cfg.targets.weights = {1.0, 1.0};
    return cfg;
}

}  // namespace

TEST_CASE("serialization round-trips byte for byte") {
    ProblemConfig cfg = sample_problem();
    const std::string text = serialize(cfg);
    ProblemConfig back = parse_problem_config(text);
    CHECK(serialize(back) == text);
    CHECK(text.back() == '\n');
}

TEST_CASE("instance hash is stable and ignores the output section") {
    ProblemConfig a = sample_problem();
    ProblemConfig b = sample_problem();
    b.output.dir = "elsewhere";
    b.output.cell_map_csv = false;
    CHECK(instance_hash(a) == instance_hash(b));
    b.targets.weights = {1.0, 2.0};
    CHECK(instance_hash(a) != instance_hash(b));
    CHECK(instance_hash(a).size() == 16);  // 64-bit hex
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK_THROWS_WITH_AS(parse_problem_config(R"({"schema_version": 1, "bogus": 2})"),
                         doctest::Contains("bogus"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_problem_config(R"({"schema_version": 1, "solver": {"tol_mass": 1e-6, "huh": 0}})"),
        doctest::Contains("huh"), std::invalid_argument);
}

TEST_CASE("validation names the offending parameter") {
    ProblemConfig cfg = sample_problem();
    cfg.family.id = "refractor-nf-parallel";
    cfg.family.kappa = 1.2;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("kappa"), std::invalid_argument);

    cfg = sample_problem();
    cfg.source.resolution = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    cfg = sample_problem();
    cfg.targets.weights = {1.0};  // two atoms, one weight
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    cfg = sample_problem();
    cfg.solver.anchor = 5;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    cfg = sample_problem();
    cfg.schema_version = 2;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    cfg = sample_problem();
    cfg.verify.gradient = "magic";
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("source builder honors chart and density") {
    ProblemConfig cfg = sample_problem();
    SourceGrid grid = build_source(cfg.source);
    CHECK(grid.size() == 400);
    CHECK(grid.mass() == doctest::Approx(1.0).epsilon(1e-12));

    cfg.source.chart = "disk";
    cfg.source.center = {0.0, 0.0};
    cfg.source.radius = 1.0;
    cfg.source.density = "gaussian";
    cfg.source.density_center = {0.0, 0.0};
    cfg.source.density_sigma = 0.5;
    validate(cfg);
    SourceGrid disk = build_source(cfg.source);
    CHECK(disk.mass() < M_PI);  // gaussian thins the edge
}

TEST_CASE("target builder renormalizes weights to the source mass") {
    ProblemConfig cfg = sample_problem();
    cfg.targets.weights = {2.0, 6.0};  // proportions 1:3
    auto fam = make_family(cfg.family);
    SourceGrid grid = build_source(cfg.source);
    AtomicMeasure atoms = build_targets(cfg.targets, *fam, grid.mass());
    CHECK(atoms.total() == doctest::Approx(grid.mass()).epsilon(1e-12));
    CHECK(atoms.g[1] == doctest::Approx(3.0 * atoms.g[0]).epsilon(1e-12));
}

TEST_CASE("generated target layouts are deterministic in the seed") {
    ProblemConfig cfg = sample_problem();
    cfg.targets.mode = "random";
    cfg.targets.count = 6;
    cfg.targets.extent = 0.4;
    cfg.targets.center = {0.5, 0.5};
    cfg.targets.seed = 42;
    cfg.targets.atoms.clear();
    cfg.targets.weights.clear();
    validate(cfg);
    auto fam = make_family(cfg.family);
    AtomicMeasure a = build_targets(cfg.targets, *fam, 1.0);
    AtomicMeasure b = build_targets(cfg.targets, *fam, 1.0);
    CHECK(a.size() == 6);
    for (int j = 0; j < a.size(); ++j) {
        CHECK(a.y[j][0] == b.y[j][0]);
        CHECK(a.y[j][1] == b.y[j][1]);
    }

    SUBCASE("circle layout spaces atoms evenly") {
        cfg.targets.mode = "circle";
        cfg.targets.count = 8;
        cfg.targets.radius = 0.25;
        validate(cfg);
        AtomicMeasure c = build_targets(cfg.targets, *fam, 1.0);
        REQUIRE(c.size() == 8);
        for (int j = 0; j < 8; ++j) {
            const double r = std::hypot(c.y[j][0] - 0.5, c.y[j][1] - 0.5);
            CHECK(r == doctest::Approx(0.25).epsilon(1e-12));
        }
    }
    SUBCASE("grid layout is a tensor lattice") {
        cfg.targets.mode = "grid";
        cfg.targets.count = 3;
        validate(cfg);
        AtomicMeasure g = build_targets(cfg.targets, *fam, 1.0);
        CHECK(g.size() == 9);
    }
}

TEST_CASE("point-source targets are lifted onto their plane") {
    ProblemConfig cfg;
    cfg.family = default_entry("reflector-nf-point");
    cfg.source.chart = "sphere-cap";
    cfg.source.cap_radius = 0.3;
    cfg.source.resolution = 10;
    cfg.targets.mode = "explicit";
    cfg.targets.atoms = {{1.4, 0.0}, {1.5, 0.1}};
    validate(cfg);
    auto fam = make_family(cfg.family);
    AtomicMeasure atoms = build_targets(cfg.targets, *fam, 1.0);
    CHECK(atoms.dim == 3);
    for (int j = 0; j < atoms.size(); ++j)
        CHECK(atoms.y[j][2] == doctest::Approx(fam->target_plane_height()).epsilon(1e-14));
}

TEST_CASE("duality configs round-trip, hash, and build") {
    DualityConfig cfg;
    cfg.objective = "quadratic-concave";
    cfg.a = 0.4;
    cfg.b = 0.4;
    cfg.c = 0.1;
    cfg.nu = 2;
    cfg.nv = 2;
    cfg.seed = 7;
    validate(cfg);
    const std::string text = serialize(cfg);
    DualityConfig back = parse_duality_config(text);
    CHECK(serialize(back) == text);
    CHECK(instance_hash(cfg) == instance_hash(back));

    LabInstance lab = build_lab(cfg);
    CHECK(lab.inst.nu() == 2);
    CHECK(lab.inst.F.strictly_concave());
    double omega_total = 0.0;
    for (const auto& row : lab.inst.omega)
        for (double w : row) omega_total += w;
    CHECK(omega_total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("duality validation pins the generator to the transport family") {
    DualityConfig cfg;
    cfg.family = default_entry("reflector-ff");
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    DualityConfig lin;
    lin.objective = "nonsense";
    CHECK_THROWS_AS(validate(lin), std::invalid_argument);
    lin.objective = "linear-separable";
    lin.mu_samples = {0.5};
    CHECK_THROWS_AS(validate(lin), std::invalid_argument);
}

TEST_CASE("explicit duality nodes bypass the generator") {
    DualityConfig cfg;
    cfg.x = {{0.0, 0.0}, {1.0, 0.0}};
    cfg.y = {{0.5, 0.5}};
    cfg.f = {1.0, 1.0};
    cfg.g = {1.0};
    cfg.w = {1.0, 3.0};
    cfg.ghat = {2.0};
    validate(cfg);
    LabInstance lab = build_lab(cfg);
    CHECK(lab.inst.nu() == 2);
    CHECK(lab.inst.nv() == 1);
    CHECK(lab.inst.omega[1][0] == doctest::Approx(0.75).epsilon(1e-12));
}
