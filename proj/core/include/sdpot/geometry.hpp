#pragma once

#include <array>
#include <string>
#include <vector>

#include "sdpot/vec.hpp"

namespace sdpot {

// Source domains live in chart coordinates x in R^n, n in {1,2}.  Box and
// disk charts are flat (the surface measure is dx); the sphere-cap chart
// parameterizes X = (x, omega(x)) on the upper unit sphere with
// omega(x) = sqrt(1 - |x|^2) and carries surface measure dS = dx / omega(x).
enum class ChartKind { Box, Disk, SphereCap };

struct SourceChart {
    ChartKind kind = ChartKind::Box;
    int dim = 2;  // n

    Vec lo{}, hi{};        // Box bounds
    Vec center{};          // Disk center
    double radius = 1.0;   // Disk radius
    double cap_radius = 0.5;  // SphereCap chart radius, must be < 1

    bool contains(const Vec& x) const;
    // Density of the surface measure with respect to dx at x.
    double surface_weight(const Vec& x) const;
    // Exact measure of the chart region under its surface measure.
    double analytic_measure() const;
    // Axis-aligned chart bounding box for lattice construction.
    Vec bound_lo() const;
    Vec bound_hi() const;
};

SourceChart box_chart(const Vec& lo, const Vec& hi, int dim = 2);
SourceChart disk_chart(const Vec& center, double radius);
SourceChart cap_chart(double cap_radius, int dim = 2);

// Closed-form density catalog.  "uniform" is f = 1; the named expressions
// are documented in the README and addressable from JSON configs.
struct Density {
    enum class Kind { Uniform, Gaussian, Coordinate, RadialExp };
    Kind kind = Kind::Uniform;
    Vec center{};         // gaussian, radial-exp
    double sigma = 1.0;   // gaussian
    int axis = 0;         // coordinate: f = x[axis] + offset
    double offset = 0.0;

    double operator()(const Vec& x) const;
    std::string name() const;
};

Density uniform_density();
Density gaussian_density(const Vec& center, double sigma);
Density coordinate_density(int axis, double offset = 0.0);
Density radial_exp_density(const Vec& center);

// Midpoint-rule discretization of a chart: a uniform lattice over the chart
// bounding box, keeping the cells whose center passes the inclusion test.
// Cell weights are the full lattice-cell measure times the surface weight;
// there is no partial-cell clipping, so disk/cap masses carry an O(h)
// boundary fluctuation absorbed by the stated tolerances.
struct SourceGrid {
    SourceChart chart;
    int res = 0;                  // lattice points per axis
    Vec h{};                      // lattice spacing per axis
    std::array<int, 2> lat{1, 1};  // lattice extents (dim 1 -> {res, 1})

    std::vector<Vec> x;        // node chart coordinates
    std::vector<double> w;     // quadrature weights (> 0)
    std::vector<double> f;     // density values (>= 0)
    std::vector<double> wf;    // w * f, cached
    std::vector<std::array<int, 2>> lat_ix;  // node -> lattice index
    std::vector<int> lat_node;               // lattice index -> node, -1 if absent

    int size() const { return static_cast<int>(x.size()); }
    int node(int i, int j) const;
    // Lattice neighbor of a node along an axis (+1/-1 steps); -1 if absent.
    int neighbor(int nid, int axis, int step) const;
    double mass() const;      // sum of w*f
    Vec centroid() const;     // w*f-weighted chart centroid
};

SourceGrid build_grid(const SourceChart& chart, int resolution, const Density& density = {});

double total_mass(const SourceGrid& grid);

// Discrete target measure: distinct atoms with positive weights.  Atom
// coordinates are stored in the ambient target dimension m (m = n for
// plane targets, m = n + 1 for point-source and far-field targets).
struct AtomicMeasure {
    int dim = 2;  // m
    std::vector<Vec> y;
    std::vector<double> g;

    int size() const { return static_cast<int>(y.size()); }
    double total() const;
};

AtomicMeasure make_atomic(std::vector<Vec> atoms, std::vector<double> weights, int dim);

struct BalanceReport {
    double source_mass = 0.0;
    double target_mass = 0.0;
    double rel_gap = 0.0;
    bool balanced = false;
};

// Mass-balance condition between the continuous source and the atomic
// target, |int f - sum g| relative to the source mass.
BalanceReport balance_check(const SourceGrid& grid, const AtomicMeasure& target, double tol = 1e-3);

}  // namespace sdpot
