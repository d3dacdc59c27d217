#include "sdpot/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sdpot/rng.hpp"

namespace sdpot {

DualPotential::DualPotential(const ConstraintFamily& fam, const AtomicMeasure& target,
                             std::vector<double> weights)
    : family(&fam), atoms(&target), s(std::move(weights)) {
    if (static_cast<int>(s.size()) != target.size())
        throw std::invalid_argument("DualPotential: one weight per atom required");
}

double DualPotential::branch(const Vec& x, int j) const { return -family->phi(x, atoms->y[j], s[j]); }

double DualPotential::u(const Vec& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < size(); ++j) best = std::min(best, branch(x, j));
    return best;
}

int DualPotential::active(const Vec& x, double tie_eps) const {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < size(); ++j) best = std::min(best, branch(x, j));
    for (int j = 0; j < size(); ++j)
        if (branch(x, j) <= best + tie_eps) return j;
    return -1;
}

std::vector<double> v_transform(const ConstraintFamily& fam, const SourceGrid& grid,
                                const AtomicMeasure& atoms, const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != grid.size())
        throw std::invalid_argument("v_transform: one u value per grid node required");
    std::vector<double> s(static_cast<std::size_t>(atoms.size()));
    for (int j = 0; j < atoms.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid.size(); ++i) {
            double root;
            try {
                root = solve_s(fam, grid.x[static_cast<std::size_t>(i)], atoms.y[static_cast<std::size_t>(j)],
                               u[static_cast<std::size_t>(i)]);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " [v_transform at node " + std::to_string(i) +
                                   ", atom " + std::to_string(j) + "]");
            }
            best = std::min(best, root);
        }
        s[static_cast<std::size_t>(j)] = best;
    }
    return s;
}

std::vector<double> u_transform(const ConstraintFamily& fam, const SourceGrid& grid,
                                const AtomicMeasure& atoms, const std::vector<double>& s) {
    if (static_cast<int>(s.size()) != atoms.size())
        throw std::invalid_argument("u_transform: one weight per atom required");
    std::vector<double> u(static_cast<std::size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < atoms.size(); ++j)
            best = std::min(best, -fam.phi(grid.x[static_cast<std::size_t>(i)],
                                           atoms.y[static_cast<std::size_t>(j)],
                                           s[static_cast<std::size_t>(j)]));
        if (!std::isfinite(best))
            throw NumericError("u_transform: envelope not finite at node " + std::to_string(i));
        u[static_cast<std::size_t>(i)] = best;
    }
    return u;
}

double dual_pair_residual(const ConstraintFamily& fam, const SourceGrid& grid,
                          const AtomicMeasure& atoms, const std::vector<double>& u,
                          const std::vector<double>& s) {
    const std::vector<double> ustar = u_transform(fam, grid, atoms, s);
    const std::vector<double> sstar = v_transform(fam, grid, atoms, u);
    double r = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) r = std::max(r, std::abs(u[i] - ustar[i]));
    for (std::size_t j = 0; j < s.size(); ++j) r = std::max(r, std::abs(s[j] - sstar[j]));
    return r;
}

TightenResult tighten(const ConstraintFamily& fam, const SourceGrid& grid, const AtomicMeasure& atoms,
                      const std::vector<double>& u0) {
    TightenResult out;
    out.s = v_transform(fam, grid, atoms, u0);
    out.u = u_transform(fam, grid, atoms, out.s);
    out.dual_residual = dual_pair_residual(fam, grid, atoms, out.u, out.s);
    return out;
}

CellDecomposition decompose(const ConstraintFamily& fam, const SourceGrid& grid,
                            const AtomicMeasure& atoms, const std::vector<double>& s, double tie_eps) {
    if (static_cast<int>(s.size()) != atoms.size())
        throw std::invalid_argument("decompose: one weight per atom required");
    const int n = grid.size();
    const int m = atoms.size();

    CellDecomposition out;
    out.active.assign(static_cast<std::size_t>(n), -1);
    out.cells.assign(static_cast<std::size_t>(m), {});
    out.mass.assign(static_cast<std::size_t>(m), 0.0);
    out.tie.assign(static_cast<std::size_t>(n), 0);
    out.interface.assign(static_cast<std::size_t>(n), 0);

    for (int i = 0; i < n; ++i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        double best = std::numeric_limits<double>::infinity();
        double second = best;
        int arg = -1;
        for (int j = 0; j < m; ++j) {
            const double b = -fam.phi(x, atoms.y[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j)]);
            if (b < best) {
                second = best;
                best = b;
                arg = j;
            } else if (b < second) {
                second = b;
            }
        }
        // Lowest index within the tie band wins, matching the convention
        // that exact ties carry no mass.
        for (int j = 0; j < arg; ++j) {
            const double b = -fam.phi(x, atoms.y[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j)]);
            if (b <= best + tie_eps) {
                arg = j;
                break;
            }
        }
        out.active[static_cast<std::size_t>(i)] = arg;
        if (m > 1 && second - best <= tie_eps) {
            out.tie[static_cast<std::size_t>(i)] = 1;
            ++out.tie_count;
        }
        out.cells[static_cast<std::size_t>(arg)].push_back(i);
        out.mass[static_cast<std::size_t>(arg)] += grid.wf[static_cast<std::size_t>(i)];
        out.total_mass += grid.wf[static_cast<std::size_t>(i)];
    }

    for (int i = 0; i < n; ++i) {
        bool iface = false;
        for (int axis = 0; axis < grid.chart.dim && !iface; ++axis)
            for (int step = -1; step <= 1 && !iface; step += 2) {
                const int k = grid.neighbor(i, axis, step);
                if (k >= 0 && out.active[static_cast<std::size_t>(k)] != out.active[static_cast<std::size_t>(i)])
                    iface = true;
            }
        if (iface) {
            out.interface[static_cast<std::size_t>(i)] = 1;
            out.interface_mass += grid.wf[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

GradientResult envelope_gradient(const ConstraintFamily& fam, const SourceGrid& grid,
                                 const AtomicMeasure& atoms, const std::vector<double>& s,
                                 const CellDecomposition& cells, int node) {
    if (node < 0 || node >= grid.size()) throw std::invalid_argument("envelope_gradient: node out of range");
    const int j = cells.active[static_cast<std::size_t>(node)];
    const auto branch_ok = [&](int i) {
        return i >= 0 && !cells.tie[static_cast<std::size_t>(i)] &&
               cells.active[static_cast<std::size_t>(i)] == j;
    };
    if (!branch_ok(node)) throw std::invalid_argument("envelope_gradient: nondifferentiable point");

    const auto envelope = [&](int i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < atoms.size(); ++k)
            best = std::min(best, -fam.phi(x, atoms.y[static_cast<std::size_t>(k)], s[static_cast<std::size_t>(k)]));
        return best;
    };

    GradientResult out;
    out.atom = j;
    for (int axis = 0; axis < grid.chart.dim; ++axis) {
        const int ip = grid.neighbor(node, axis, +1);
        const int im = grid.neighbor(node, axis, -1);
        if (!branch_ok(ip) || !branch_ok(im))
            throw std::invalid_argument("envelope_gradient: nondifferentiable point");
        out.du[axis] = (envelope(ip) - envelope(im)) / (2.0 * grid.h[axis]);
    }

    const Vec px = fam.phi_x(grid.x[static_cast<std::size_t>(node)], atoms.y[static_cast<std::size_t>(j)],
                             s[static_cast<std::size_t>(j)]);
    double r2 = 0.0;
    for (int axis = 0; axis < grid.chart.dim; ++axis) {
        const double d = px[axis] + out.du[axis];
        r2 += d * d;
    }
    out.residual = std::sqrt(r2);
    return out;
}

ResidualReport generalized_residual(const SourceGrid& grid, const AtomicMeasure& atoms,
                                    const CellDecomposition& cells) {
    ResidualReport rep;
    rep.r.resize(static_cast<std::size_t>(atoms.size()));
    const double scale = grid.mass();
    for (int j = 0; j < atoms.size(); ++j) {
        const double r = cells.mass[static_cast<std::size_t>(j)] - atoms.g[static_cast<std::size_t>(j)];
        rep.r[static_cast<std::size_t>(j)] = r;
        rep.max_abs = std::max(rep.max_abs, std::abs(r));
        rep.sum += r;
    }
    rep.max_rel = scale > 0.0 ? rep.max_abs / scale : rep.max_abs;
    return rep;
}

double separable_objective(const ConstraintFamily& fam, const SourceGrid& grid,
                           const AtomicMeasure& atoms, const std::vector<double>& u,
                           const std::vector<double>& s) {
    const double gtot = atoms.total();
    double obj = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        obj += grid.wf[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
    for (int i = 0; i < grid.size(); ++i) {
        const double wi = grid.w[static_cast<std::size_t>(i)];
        for (int j = 0; j < atoms.size(); ++j)
            obj += wi * (atoms.g[static_cast<std::size_t>(j)] / gtot) *
                   fam.phi(grid.x[static_cast<std::size_t>(i)], atoms.y[static_cast<std::size_t>(j)],
                           s[static_cast<std::size_t>(j)]);
    }
    return obj;
}

LipschitzReport lipschitz_check(const ConstraintFamily& fam, const SourceGrid& grid,
                                const std::vector<double>& u, int samples, std::uint64_t seed) {
    LipschitzReport rep;
    for (int i = 0; i < grid.size(); ++i)
        for (int axis = 0; axis < grid.chart.dim; ++axis) {
            const int k = grid.neighbor(i, axis, +1);
            if (k < 0) continue;
            const double slope = std::abs(u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(k)]) /
                                 grid.h[axis];
            rep.max_slope = std::max(rep.max_slope, slope);
        }

    Rng rng(seed);
    for (int k = 0; k < samples; ++k) {
        const SamplePoint p = sample_valid_point(fam, rng);
        const Vec gx = fam.phi_x(p.x, p.y, p.s);
        const Vec gy = fam.phi_y(p.x, p.y, p.s);
        double nx = 0.0, ny = 0.0;
        for (int a = 0; a < fam.dim(); ++a) {
            nx += gx[a] * gx[a];
            ny += gy[a] * gy[a];
        }
        rep.bound = std::max(rep.bound, std::sqrt(nx) + std::sqrt(ny));
    }
    rep.ok = rep.max_slope <= rep.bound + 1e-8;
    return rep;
}

std::vector<PushforwardRow> measure_preservation(const SourceGrid& grid, const AtomicMeasure& atoms,
                                                 const CellDecomposition& cells) {
    struct H {
        const char* name;
        double (*f)(const Vec&);
    };
    static const H tests[] = {
        {"1", [](const Vec&) { return 1.0; }},
        {"y1", [](const Vec& y) { return y[0]; }},
        {"y2", [](const Vec& y) { return y[1]; }},
        {"y1*y2", [](const Vec& y) { return y[0] * y[1]; }},
        {"|y|^2", [](const Vec& y) { return norm2(y); }},
    };

    std::vector<PushforwardRow> rows;
    for (const H& h : tests) {
        PushforwardRow row;
        row.name = h.name;
        for (int i = 0; i < grid.size(); ++i) {
            const int j = cells.active[static_cast<std::size_t>(i)];
            row.lhs += grid.wf[static_cast<std::size_t>(i)] * h.f(atoms.y[static_cast<std::size_t>(j)]);
        }
        for (int j = 0; j < atoms.size(); ++j) {
            const double hy = h.f(atoms.y[static_cast<std::size_t>(j)]);
            row.rhs += atoms.g[static_cast<std::size_t>(j)] * hy;
            row.sup_h = std::max(row.sup_h, std::abs(hy));
        }
        row.gap = std::abs(row.lhs - row.rhs);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace sdpot
