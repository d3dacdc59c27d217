#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sdpot/geometry.hpp"

using namespace sdpot;

TEST_CASE("box chart measure is exact under the midpoint rule") {
    SourceChart chart = box_chart(vec2(-0.5, 0.0), vec2(1.5, 1.0), 2);
    CHECK(chart.analytic_measure() == doctest::Approx(2.0).epsilon(1e-14));
    for (int res : {10, 37}) {
        SourceGrid grid = build_grid(chart, res, uniform_density());
        CHECK(grid.size() == res * res);
        CHECK(grid.mass() == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("disk and cap masses converge to the analytic measure") {
    SourceChart disk = disk_chart(vec2(0.2, -0.1), 0.7);
    SourceChart cap = cap_chart(0.4, 2);
    // cap surface area: 2 pi (1 - sqrt(1 - r^2))
    const double cap_area = 2.0 * M_PI * (1.0 - std::sqrt(1.0 - 0.16));
    CHECK(cap.analytic_measure() == doctest::Approx(cap_area).epsilon(1e-12));

    double prev_disk = 1e9, prev_cap = 1e9;
    for (int res : {40, 80, 160}) {
        const double ed = std::abs(build_grid(disk, res).mass() - disk.analytic_measure());
        const double ec = std::abs(build_grid(cap, res).mass() - cap.analytic_measure());
        CHECK(ed < prev_disk * 1.05);  // O(h) boundary fluctuation, allow plateaus
        CHECK(ec < prev_cap * 1.05);
        prev_disk = ed;
        prev_cap = ec;
    }
    CHECK(prev_disk < 0.01 * disk.analytic_measure());
    CHECK(prev_cap < 0.01 * cap.analytic_measure());
}

TEST_CASE("cap chart carries the spherical surface weight") {
    SourceChart cap = cap_chart(0.5, 2);
    Vec x = vec2(0.3, -0.2);
    CHECK(cap.surface_weight(x) ==
          doctest::Approx(1.0 / std::sqrt(1.0 - norm2_n(x, 2))).epsilon(1e-14));
    CHECK(cap.contains(vec2(0.49, 0.0)));
    CHECK_FALSE(cap.contains(vec2(0.51, 0.0)));
}

TEST_CASE("density catalog evaluates its closed forms") {
    CHECK(uniform_density()(vec2(3, -4)) == 1.0);
    Density g = gaussian_density(vec2(0.5, 0.5), 0.25);
    CHECK(g(vec2(0.5, 0.5)) == doctest::Approx(1.0));
    CHECK(g(vec2(0.75, 0.5)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    Density c = coordinate_density(1, 0.25);
    CHECK(c(vec2(0.1, 0.4)) == doctest::Approx(0.65).epsilon(1e-14));
    Density r = radial_exp_density(vec2(0, 0));
    CHECK(r(vec2(0.3, 0.4)) == doctest::Approx(std::exp(-0.25)).epsilon(1e-14));
}

TEST_CASE("grid lattice indexing and neighbors are consistent") {
    SourceGrid grid = build_grid(disk_chart(vec2(0, 0), 1.0), 21, uniform_density());
    int boundary_gaps = 0;
    for (int i = 0; i < grid.size(); ++i) {
        for (int axis = 0; axis < 2; ++axis) {
            for (int step : {-1, 1}) {
                int nb = grid.neighbor(i, axis, step);
                if (nb < 0) {
                    ++boundary_gaps;
                    continue;
                }
                CHECK(grid.lat_ix[nb][axis] == grid.lat_ix[i][axis] + step);
                CHECK(grid.lat_ix[nb][1 - axis] == grid.lat_ix[i][1 - axis]);
                CHECK(std::abs(grid.x[nb][axis] - grid.x[i][axis] - step * grid.h[axis]) < 1e-12);
            }
        }
    }
    CHECK(boundary_gaps > 0);  // disk has a boundary
    Vec c = grid.centroid();
    CHECK(std::abs(c[0]) < 1e-12);
    CHECK(std::abs(c[1]) < 1e-12);
}

TEST_CASE("one-dimensional charts build line grids") {
    SourceGrid grid = build_grid(box_chart(vec1(0.0), vec1(2.0), 1), 50, uniform_density());
    CHECK(grid.size() == 50);
    CHECK(grid.mass() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(grid.neighbor(0, 1, 1) == -1);  // no second axis
}

TEST_CASE("atomic measures reject malformed data") {
    CHECK_THROWS_AS(make_atomic({vec2(0, 0), vec2(0, 0)}, {1.0, 1.0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_atomic({vec2(0, 0)}, {0.0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_atomic({vec2(0, 0)}, {1.0, 2.0}, 2), std::invalid_argument);
    AtomicMeasure m = make_atomic({vec2(0, 0), vec2(1, 1)}, {1.0, 2.5}, 2);
    CHECK(m.total() == doctest::Approx(3.5));
}

TEST_CASE("balance check compares source and target masses") {
    SourceGrid grid = build_grid(box_chart(vec2(0, 0), vec2(1, 1), 2), 20, uniform_density());
    AtomicMeasure good = make_atomic({vec2(0.5, 0.5)}, {grid.mass()}, 2);
    AtomicMeasure bad = make_atomic({vec2(0.5, 0.5)}, {2.0 * grid.mass()}, 2);
    CHECK(balance_check(grid, good).balanced);
    CHECK_FALSE(balance_check(grid, bad).balanced);
    CHECK(balance_check(grid, bad).rel_gap == doctest::Approx(1.0).epsilon(1e-12));
}
