#include "sdpot/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sdpot/constraint.hpp"

namespace sdpot {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_unit(const Vec& v, int dim, const char* what) {
    if (std::abs(std::sqrt(norm2_n(v, dim)) - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(what) + ": expected a unit vector");
}

// Envelope gradient in chart coordinates, central differences of the
// assembled potential; the envelope is evaluable off-lattice, so no
// one-sided fallback is needed at chart boundaries.
Vec fd_envelope_gradient(const DualPotential& pot, const Vec& x, int n, const Vec& h, double fd_step) {
    Vec du{};
    for (int a = 0; a < n; ++a) {
        const double step = fd_step > 0.0 ? fd_step : h[a];
        Vec xp = x, xm = x;
        xp[a] += step;
        xm[a] -= step;
        du[a] = (pot.u(xp) - pot.u(xm)) / (2.0 * step);
    }
    return du;
}

Vec branch_gradient(const DualPotential& pot, const Vec& x) {
    const int j = pot.active(x);
    Vec g = pot.family->phi_x(x, pot.atoms->y[static_cast<std::size_t>(j)], pot.s[static_cast<std::size_t>(j)]);
    for (int a = 0; a < pot.family->dim(); ++a) g[a] = -g[a];
    return g;
}

Vec surface_gradient(const DualPotential& pot, const SourceGrid& grid, const Vec& x, GradientMode mode,
                     double fd_step) {
    return mode == GradientMode::FdEnvelope
               ? fd_envelope_gradient(pot, x, pot.family->dim(), grid.h, fd_step)
               : branch_gradient(pot, x);
}

// Accumulates hits/misses and finishes the histogram bookkeeping.
struct Binning {
    const SourceGrid& grid;
    const AtomicMeasure& atoms;
    int n;
    TraceReport rep;

    Binning(const SourceGrid& g, const AtomicMeasure& a, int dim) : grid(g), atoms(a), n(dim) {
        const auto sz = static_cast<std::size_t>(g.size());
        rep.hit.assign(sz, Vec{});
        rep.hit_atom.assign(sz, -1);
        rep.traced.assign(sz, 0);
        rep.atom_mass.assign(static_cast<std::size_t>(a.size()), 0.0);
    }

    void hit(int node, const Vec& target_chart) {
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int j = 0; j < atoms.size(); ++j) {
            const double d = norm2_n(target_chart - atoms.y[static_cast<std::size_t>(j)], n);
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        rep.hit[static_cast<std::size_t>(node)] = target_chart;
        rep.hit_atom[static_cast<std::size_t>(node)] = best;
        rep.traced[static_cast<std::size_t>(node)] = 1;
        const double w = grid.wf[static_cast<std::size_t>(node)];
        rep.atom_mass[static_cast<std::size_t>(best)] += w;
        rep.hit_mass += w;
    }

    void miss(int node, bool tir = false) {
        rep.hit[static_cast<std::size_t>(node)] = Vec{kNan, kNan, kNan};
        rep.miss_mass += grid.wf[static_cast<std::size_t>(node)];
        rep.miss_count += 1;
        if (tir) rep.tir_count += 1;
    }

    TraceReport finish() {
        rep.traced_mass = grid.mass();
        const double scale = rep.traced_mass / atoms.total();
        rep.hist_l1 = 0.0;
        for (int j = 0; j < atoms.size(); ++j)
            rep.hist_l1 += std::abs(rep.atom_mass[static_cast<std::size_t>(j)] -
                                    scale * atoms.g[static_cast<std::size_t>(j)]);
        rep.hist_l1_rel = rep.hist_l1 / rep.traced_mass;
        return std::move(rep);
    }
};

double reflector_plane_height(const DualPotential& pot) {
    const double h = pot.family->target_plane_height();
    if (!std::isfinite(h)) throw std::invalid_argument("family does not define a target plane");
    const int n = pot.family->dim();
    for (const Vec& y : pot.atoms->y)
        if (pot.atoms->dim > n && std::abs(y[n] - h) > 1e-9)
            throw std::invalid_argument("target atoms must lie on the family's target plane");
    return h;
}

// Unit normal of the radial graph {X e^{u}} over the sphere cap, oriented
// toward the origin.
Vec radial_surface_normal(const Vec& x, const Vec& du, int n) {
    const double om = std::sqrt(std::max(0.0, 1.0 - norm2_n(x, n)));
    const double c = 1.0 + dot(du, x);
    Vec normal{};
    for (int a = 0; a < n; ++a) normal[a] = du[a] - c * x[a];
    normal[n] = -c * om;
    const double len = std::sqrt(norm2_n(normal, n + 1));
    return (1.0 / len) * normal;
}

Vec sphere_point(const Vec& x, int n) {
    Vec X = x;
    X[n] = std::sqrt(std::max(0.0, 1.0 - norm2_n(x, n)));
    return X;
}

}  // namespace

Vec reflect_direction(const Vec& d, const Vec& normal, int dim) {
    require_unit(normal, dim, "reflect_direction");
    const double dn = dot(d, normal);
    Vec out = d - (2.0 * dn) * normal;
    return out;
}

std::optional<Vec> snell_refract(const Vec& d, const Vec& normal, double ratio, int dim) {
    require_unit(normal, dim, "snell_refract");
    require_unit(d, dim, "snell_refract");
    if (!(ratio > 0.0)) throw std::invalid_argument("snell_refract: index ratio must be positive");
    Vec nrm = normal;
    double ci = -dot(d, nrm);
    if (ci < 0.0) {  // normal faced the exit side
        nrm = -1.0 * nrm;
        ci = -ci;
    }
    const double disc = 1.0 - ratio * ratio * (1.0 - ci * ci);
    if (disc < 0.0) return std::nullopt;
    Vec out = ratio * d + (ratio * ci - std::sqrt(disc)) * nrm;
    const double len = std::sqrt(norm2_n(out, dim));
    return (1.0 / len) * out;
}

TraceReport trace_parallel_reflector(const SourceGrid& grid, const DualPotential& pot,
                                     GradientMode mode, double fd_step) {
    if (pot.family->id() != "reflector-nf-parallel")
        throw std::invalid_argument("trace_parallel_reflector: wrong constraint family");
    const int n = pot.family->dim();
    Binning bin(grid, *pot.atoms, n);

    Vec e{};
    e[n] = 1.0;
    for (int i = 0; i < grid.size(); ++i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        const double u = pot.u(x);
        if (!(u > 0.0)) throw NumericError("trace_parallel_reflector: nonpositive height at a node");
        const Vec du = surface_gradient(pot, grid, x, mode, fd_step);
        const double g2 = norm2_n(du, n);
        if (!(g2 < 1.0)) throw NumericError("trace_parallel_reflector: unit slope reached at a node");

        Vec normal = du;
        normal[n] = -1.0;
        normal = (1.0 / std::sqrt(1.0 + g2)) * normal;
        const Vec r = reflect_direction(e, normal, n + 1);
        // r_z = (g2 - 1)/(g2 + 1) < 0, so the reflected ray always returns
        // to the source plane.
        const double t = -u / r[n];
        Vec p = x;
        p[n] = u;
        Vec hitp = p + t * r;
        hitp[n] = 0.0;
        bin.hit(i, hitp);
    }
    return bin.finish();
}

TraceReport trace_point_reflector(const SourceGrid& grid, const DualPotential& pot,
                                  GradientMode mode, double fd_step) {
    if (pot.family->id() != "reflector-nf-point")
        throw std::invalid_argument("trace_point_reflector: wrong constraint family");
    if (grid.chart.kind != ChartKind::SphereCap)
        throw std::invalid_argument("trace_point_reflector: source must be a sphere-cap chart");
    const int n = pot.family->dim();
    const double h = reflector_plane_height(pot);
    Binning bin(grid, *pot.atoms, n);

    for (int i = 0; i < grid.size(); ++i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        const Vec X = sphere_point(x, n);
        const double u = pot.u(x);
        const Vec du = surface_gradient(pot, grid, x, mode, fd_step);
        const Vec gamma = radial_surface_normal(x, du, n);
        const Vec r = reflect_direction(X, gamma, n + 1);
        const Vec p = std::exp(u) * X;
        if (std::abs(r[n]) < 1e-14) {
            bin.miss(i);
            continue;
        }
        const double t = (h - p[n]) / r[n];
        if (t <= 1e-12) {
            bin.miss(i);
            continue;
        }
        bin.hit(i, p + t * r);
    }
    return bin.finish();
}

TraceReport trace_refractor(const SourceGrid& grid, const DualPotential& pot,
                            GradientMode mode, double fd_step) {
    const std::string& id = pot.family->id();
    const bool point = id == "refractor-nf-point";
    if (!point && id != "refractor-nf-parallel")
        throw std::invalid_argument("trace_refractor: wrong constraint family");
    if (point && grid.chart.kind != ChartKind::SphereCap)
        throw std::invalid_argument("trace_refractor: point source must be a sphere-cap chart");
    const int n = pot.family->dim();
    const double ratio = pot.family->snell_ratio();
    const double h = reflector_plane_height(pot);
    Binning bin(grid, *pot.atoms, n);

    Vec e{};
    e[n] = 1.0;
    for (int i = 0; i < grid.size(); ++i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        const double u = pot.u(x);
        const Vec du = surface_gradient(pot, grid, x, mode, fd_step);

        Vec d, gamma, p;
        if (point) {
            d = sphere_point(x, n);
            gamma = radial_surface_normal(x, du, n);
            p = std::exp(u) * d;
        } else {
            d = e;
            gamma = du;
            gamma[n] = -1.0;
            gamma = (1.0 / std::sqrt(1.0 + norm2_n(du, n))) * gamma;
            p = x;
            p[n] = u;
        }
        const std::optional<Vec> t = snell_refract(d, gamma, ratio, n + 1);
        if (!t) {
            bin.miss(i, /*tir=*/true);
            continue;
        }
        if (std::abs((*t)[n]) < 1e-14) {
            bin.miss(i);
            continue;
        }
        const double step = (h - p[n]) / (*t)[n];
        if (step <= 1e-12) {
            bin.miss(i);
            continue;
        }
        bin.hit(i, p + step * (*t));
    }
    return bin.finish();
}

MapAgreement map_agreement(const SourceGrid& grid, const DualPotential& pot, const TraceReport& trace) {
    const std::string& id = pot.family->id();
    if (id != "reflector-nf-parallel" && id != "reflector-nf-point" && id != "refractor-nf-point" &&
        id != "refractor-nf-parallel")
        throw std::invalid_argument("map_agreement: family has no optical surface");
    if (static_cast<int>(trace.hit.size()) != grid.size())
        throw std::invalid_argument("map_agreement: trace does not match the grid");

    const CellDecomposition cells = decompose(*pot.family, grid, *pot.atoms, pot.s);
    const int n = pot.family->dim();

    MapAgreement out;
    out.boundary_band_mass = cells.interface_mass;
    for (int i = 0; i < grid.size(); ++i) {
        const double w = grid.wf[static_cast<std::size_t>(i)];
        const int cell = cells.active[static_cast<std::size_t>(i)];
        const bool traced = trace.traced[static_cast<std::size_t>(i)] != 0;
        if (traced && trace.hit_atom[static_cast<std::size_t>(i)] == cell)
            out.match_mass += w;
        else
            out.mismatch_mass += w;
        if (traced && !cells.interface[static_cast<std::size_t>(i)] && !cells.tie[static_cast<std::size_t>(i)]) {
            const Vec d = trace.hit[static_cast<std::size_t>(i)] - pot.atoms->y[static_cast<std::size_t>(cell)];
            out.max_distance = std::max(out.max_distance, std::sqrt(norm2_n(d, n)));
            out.interior_nodes += 1;
        }
    }
    out.match_fraction = out.match_mass / grid.mass();
    return out;
}

MaResidualReport ma_residual_parallel(const SourceGrid& grid, const std::vector<double>& u,
                                      const std::function<double(const Vec&)>& f_density,
                                      const std::function<double(const Vec&)>& g_density) {
    if (static_cast<int>(u.size()) != grid.size())
        throw std::invalid_argument("ma_residual_parallel: potential does not match the grid");
    const int n = grid.chart.dim;
    const int sz = grid.size();

    // First pass: central gradients and the reflector map where the one-ring
    // stencil fits.
    std::vector<char> ring1(static_cast<std::size_t>(sz), 0);
    std::vector<Vec> du(static_cast<std::size_t>(sz));
    std::vector<Vec> map(static_cast<std::size_t>(sz));
    for (int i = 0; i < sz; ++i) {
        bool ok = true;
        Vec g{};
        for (int a = 0; a < n && ok; ++a) {
            const int ip = grid.neighbor(i, a, +1), im = grid.neighbor(i, a, -1);
            if (ip < 0 || im < 0) {
                ok = false;
                break;
            }
            g[a] = (u[static_cast<std::size_t>(ip)] - u[static_cast<std::size_t>(im)]) / (2.0 * grid.h[a]);
        }
        if (!ok) continue;
        const double ui = u[static_cast<std::size_t>(i)];
        const double g2 = norm2_n(g, n);
        if (!(ui > 0.0)) throw NumericError("ma_residual_parallel: nonpositive u at an interior node");
        if (!(g2 < 1.0)) throw NumericError("ma_residual_parallel: |Du| >= 1 at an interior node");
        ring1[static_cast<std::size_t>(i)] = 1;
        du[static_cast<std::size_t>(i)] = g;
        map[static_cast<std::size_t>(i)] =
            grid.x[static_cast<std::size_t>(i)] + (2.0 * ui / (1.0 - g2)) * g;
    }

    MaResidualReport rep;
    rep.residual.assign(static_cast<std::size_t>(sz), kNan);
    rep.jac_residual.assign(static_cast<std::size_t>(sz), kNan);

    for (int i = 0; i < sz; ++i) {
        if (!ring1[static_cast<std::size_t>(i)]) continue;
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        const double ui = u[static_cast<std::size_t>(i)];
        const Vec& g = du[static_cast<std::size_t>(i)];
        const double g2 = norm2_n(g, n);

        // Hessian stencil: axis seconds plus cross terms from the diagonal
        // neighbors; require them all.
        bool ok = true;
        Mat hess{};
        for (int a = 0; a < n && ok; ++a) {
            const int ip = grid.neighbor(i, a, +1), im = grid.neighbor(i, a, -1);
            hess(a, a) = (u[static_cast<std::size_t>(ip)] - 2.0 * ui + u[static_cast<std::size_t>(im)]) /
                         (grid.h[a] * grid.h[a]);
            for (int b = a + 1; b < n && ok; ++b) {
                const int pp = grid.neighbor(ip, b, +1), pm = grid.neighbor(ip, b, -1);
                const int mp = grid.neighbor(im, b, +1), mm = grid.neighbor(im, b, -1);
                if (pp < 0 || pm < 0 || mp < 0 || mm < 0) {
                    ok = false;
                    break;
                }
                const double cross = (u[static_cast<std::size_t>(pp)] - u[static_cast<std::size_t>(pm)] -
                                      u[static_cast<std::size_t>(mp)] + u[static_cast<std::size_t>(mm)]) /
                                     (4.0 * grid.h[a] * grid.h[b]);
                hess(a, b) = cross;
                hess(b, a) = cross;
            }
        }
        if (!ok) continue;

        const double a_coef = (1.0 - g2) / (2.0 * ui);
        Mat lhs_m = hess + identity(n, a_coef);
        const double lhs = det(lhs_m, n);
        const double factor =
            std::pow(1.0 - g2, n + 1) / (std::pow(2.0 * ui, n) * (1.0 + g2));
        const double ratio = f_density(x) / g_density(map[static_cast<std::size_t>(i)]);
        rep.residual[static_cast<std::size_t>(i)] = lhs - factor * ratio;
        rep.max_residual = std::max(rep.max_residual, std::abs(rep.residual[static_cast<std::size_t>(i)]));
        rep.interior_nodes += 1;

        // Jacobian identity from central differences of the map field.
        bool jac_ok = true;
        Mat dt{};
        for (int a = 0; a < n && jac_ok; ++a) {
            const int ip = grid.neighbor(i, a, +1), im = grid.neighbor(i, a, -1);
            if (!ring1[static_cast<std::size_t>(ip)] || !ring1[static_cast<std::size_t>(im)]) {
                jac_ok = false;
                break;
            }
            const Vec col = (1.0 / (2.0 * grid.h[a])) *
                            (map[static_cast<std::size_t>(ip)] - map[static_cast<std::size_t>(im)]);
            for (int b = 0; b < n; ++b) dt(b, a) = col[b];
        }
        if (!jac_ok) continue;
        rep.jac_residual[static_cast<std::size_t>(i)] = std::abs(det(dt, n)) - ratio;
        rep.max_jac_residual =
            std::max(rep.max_jac_residual, std::abs(rep.jac_residual[static_cast<std::size_t>(i)]));
        rep.jac_nodes += 1;
    }
    return rep;
}

std::vector<double> jacobian_identity_field(const SourceGrid& grid,
                                            const std::function<Vec(const Vec&)>& map,
                                            const std::function<double(const Vec&)>& f_density,
                                            const std::function<double(const Vec&)>& g_density,
                                            double step) {
    const int n = grid.chart.dim;
    std::vector<double> out(static_cast<std::size_t>(grid.size()), kNan);
    for (int i = 0; i < grid.size(); ++i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        Mat dt{};
        for (int a = 0; a < n; ++a) {
            const double ha = step > 0.0 ? step : grid.h[a];
            Vec xp = x, xm = x;
            xp[a] += ha;
            xm[a] -= ha;
            const Vec col = (1.0 / (2.0 * ha)) * (map(xp) - map(xm));
            for (int b = 0; b < n; ++b) dt(b, a) = col[b];
        }
        out[static_cast<std::size_t>(i)] = std::abs(det(dt, n)) - f_density(x) / g_density(map(x));
    }
    return out;
}

}  // namespace sdpot
