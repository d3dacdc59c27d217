#include "sdpot/geometry.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sdpot {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool SourceChart::contains(const Vec& x) const {
    switch (kind) {
        case ChartKind::Box:
            for (int i = 0; i < dim; ++i)
                if (x[i] < lo[i] || x[i] > hi[i]) return false;
            return true;
        case ChartKind::Disk:
            return norm2_n(x - center, dim) <= radius * radius;
        case ChartKind::SphereCap:
            return norm2_n(x, dim) <= cap_radius * cap_radius;
    }
    return false;
}

double SourceChart::surface_weight(const Vec& x) const {
    if (kind != ChartKind::SphereCap) return 1.0;
    const double r2 = norm2_n(x, dim);
    return 1.0 / std::sqrt(1.0 - r2);
}

double SourceChart::analytic_measure() const {
    switch (kind) {
        case ChartKind::Box: {
            double m = 1.0;
            for (int i = 0; i < dim; ++i) m *= hi[i] - lo[i];
            return m;
        }
        case ChartKind::Disk:
            return kPi * radius * radius;
        case ChartKind::SphereCap:
            // n=2: cap area 2*pi*(1 - sqrt(1-r^2)); n=1: arc length 2*asin(r).
            if (dim == 2) return 2.0 * kPi * (1.0 - std::sqrt(1.0 - cap_radius * cap_radius));
            return 2.0 * std::asin(cap_radius);
    }
    return 0.0;
}

Vec SourceChart::bound_lo() const {
    switch (kind) {
        case ChartKind::Box:
            return lo;
        case ChartKind::Disk: {
            Vec b;
            for (int i = 0; i < dim; ++i) b[i] = center[i] - radius;
            return b;
        }
        case ChartKind::SphereCap: {
            Vec b;
            for (int i = 0; i < dim; ++i) b[i] = -cap_radius;
            return b;
        }
    }
    return {};
}

Vec SourceChart::bound_hi() const {
    switch (kind) {
        case ChartKind::Box:
            return hi;
        case ChartKind::Disk: {
            Vec b;
            for (int i = 0; i < dim; ++i) b[i] = center[i] + radius;
            return b;
        }
        case ChartKind::SphereCap: {
            Vec b;
            for (int i = 0; i < dim; ++i) b[i] = cap_radius;
            return b;
        }
    }
    return {};
}

SourceChart box_chart(const Vec& lo, const Vec& hi, int dim) {
    if (dim < 1 || dim > 2) throw std::invalid_argument("box_chart: dim must be 1 or 2");
    for (int i = 0; i < dim; ++i)
        if (!(hi[i] > lo[i])) throw std::invalid_argument("box_chart: empty box");
    SourceChart c;
    c.kind = ChartKind::Box;
    c.dim = dim;
    c.lo = lo;
    c.hi = hi;
    return c;
}

SourceChart disk_chart(const Vec& center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("disk_chart: radius must be positive");
    SourceChart c;
    c.kind = ChartKind::Disk;
    c.dim = 2;
    c.center = center;
    c.radius = radius;
    return c;
}

SourceChart cap_chart(double cap_radius, int dim) {
    if (dim < 1 || dim > 2) throw std::invalid_argument("cap_chart: dim must be 1 or 2");
    if (!(cap_radius > 0.0 && cap_radius < 1.0))
        throw std::invalid_argument("cap_chart: chart radius must lie in (0,1)");
    SourceChart c;
    c.kind = ChartKind::SphereCap;
    c.dim = dim;
    c.cap_radius = cap_radius;
    return c;
}

double Density::operator()(const Vec& x) const {
    switch (kind) {
        case Kind::Uniform:
            return 1.0;
        case Kind::Gaussian:
            return std::exp(-norm2(x - center) / (2.0 * sigma * sigma));
        case Kind::Coordinate:
            return x[axis] + offset;
        case Kind::RadialExp:
            return std::exp(-norm2(x - center));
    }
    return 1.0;
}

std::string Density::name() const {
    switch (kind) {
        case Kind::Uniform:
            return "uniform";
        case Kind::Gaussian:
            return "gaussian";
        case Kind::Coordinate:
            return "coordinate";
        case Kind::RadialExp:
            return "radial-exp";
    }
    return "uniform";
}

Density uniform_density() { return {}; }

Density gaussian_density(const Vec& center, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_density: sigma must be positive");
    Density d;
    d.kind = Density::Kind::Gaussian;
    d.center = center;
    d.sigma = sigma;
    return d;
}

Density coordinate_density(int axis, double offset) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("coordinate_density: bad axis");
    Density d;
    d.kind = Density::Kind::Coordinate;
    d.axis = axis;
    d.offset = offset;
    return d;
}

Density radial_exp_density(const Vec& center) {
    Density d;
    d.kind = Density::Kind::RadialExp;
    d.center = center;
    return d;
}

int SourceGrid::node(int i, int j) const {
    if (i < 0 || i >= lat[0] || j < 0 || j >= lat[1]) return -1;
    return lat_node[static_cast<std::size_t>(i) * static_cast<std::size_t>(lat[1]) + static_cast<std::size_t>(j)];
}

int SourceGrid::neighbor(int nid, int axis, int step) const {
    const auto& ix = lat_ix[static_cast<std::size_t>(nid)];
    int i = ix[0], j = ix[1];
    if (axis == 0)
        i += step;
    else
        j += step;
    return node(i, j);
}

double SourceGrid::mass() const { return std::accumulate(wf.begin(), wf.end(), 0.0); }

Vec SourceGrid::centroid() const {
    Vec c;
    double m = 0.0;
    for (int i = 0; i < size(); ++i) {
        c += wf[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        m += wf[static_cast<std::size_t>(i)];
    }
    if (m > 0.0) c *= 1.0 / m;
    return c;
}

SourceGrid build_grid(const SourceChart& chart, int resolution, const Density& density) {
    if (resolution < 2) throw std::invalid_argument("build_grid: resolution must be >= 2");

    SourceGrid grid;
    grid.chart = chart;
    grid.res = resolution;

    const Vec blo = chart.bound_lo();
    const Vec bhi = chart.bound_hi();
    const int n = chart.dim;

    grid.lat = {resolution, n == 2 ? resolution : 1};
    double cell = 1.0;
    for (int a = 0; a < n; ++a) {
        grid.h[a] = (bhi[a] - blo[a]) / resolution;
        cell *= grid.h[a];
    }

    grid.lat_node.assign(static_cast<std::size_t>(grid.lat[0]) * static_cast<std::size_t>(grid.lat[1]), -1);
    for (int i = 0; i < grid.lat[0]; ++i) {
        for (int j = 0; j < grid.lat[1]; ++j) {
            Vec p;
            p[0] = blo[0] + (i + 0.5) * grid.h[0];
            if (n == 2) p[1] = blo[1] + (j + 0.5) * grid.h[1];
            if (!chart.contains(p)) continue;
            const double fx = density(p);
            if (fx < 0.0) throw std::invalid_argument("build_grid: density is negative at a node");
            const int id = grid.size();
            grid.lat_node[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.lat[1]) + static_cast<std::size_t>(j)] = id;
            grid.x.push_back(p);
            grid.w.push_back(cell * chart.surface_weight(p));
            grid.f.push_back(fx);
            grid.wf.push_back(grid.w.back() * fx);
            grid.lat_ix.push_back({i, j});
        }
    }

    if (grid.mass() <= 0.0) throw std::invalid_argument("build_grid: grid carries no mass");
    return grid;
}

double total_mass(const SourceGrid& grid) { return grid.mass(); }

double AtomicMeasure::total() const { return std::accumulate(g.begin(), g.end(), 0.0); }

AtomicMeasure make_atomic(std::vector<Vec> atoms, std::vector<double> weights, int dim) {
    if (atoms.empty() || atoms.size() != weights.size())
        throw std::invalid_argument("make_atomic: atoms and weights must be non-empty and equal length");
    if (dim < 1 || dim > 3) throw std::invalid_argument("make_atomic: dim must be in [1,3]");
    for (double gj : weights)
        if (!(gj > 0.0)) throw std::invalid_argument("make_atomic: weights must be positive");
    for (std::size_t a = 0; a < atoms.size(); ++a)
        for (std::size_t b = a + 1; b < atoms.size(); ++b)
            if (dist(atoms[a], atoms[b]) == 0.0)
                throw std::invalid_argument("make_atomic: atoms must be pairwise distinct");
    AtomicMeasure m;
    m.dim = dim;
    m.y = std::move(atoms);
    m.g = std::move(weights);
    return m;
}

BalanceReport balance_check(const SourceGrid& grid, const AtomicMeasure& target, double tol) {
    BalanceReport r;
    r.source_mass = grid.mass();
    r.target_mass = target.total();
    r.rel_gap = std::abs(r.source_mass - r.target_mass) / r.source_mass;
    r.balanced = r.rel_gap <= tol;
    return r;
}

}  // namespace sdpot
