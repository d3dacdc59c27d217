#include "sdpot/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sdpot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Branch envelope over all atoms except j.
std::vector<double> env_without(const ConstraintFamily& fam, const SourceGrid& grid,
                                const AtomicMeasure& atoms, const std::vector<double>& s, int j) {
    std::vector<double> env(static_cast<std::size_t>(grid.size()), kInf);
    for (int k = 0; k < atoms.size(); ++k) {
        if (k == j) continue;
        for (int i = 0; i < grid.size(); ++i) {
            const double b = -fam.phi(grid.x[static_cast<std::size_t>(i)], atoms.y[static_cast<std::size_t>(k)],
                                      s[static_cast<std::size_t>(k)]);
            if (b < env[static_cast<std::size_t>(i)]) env[static_cast<std::size_t>(i)] = b;
        }
    }
    return env;
}

// Node i joins cell j once s_j reaches the crossing threshold
// t_i = solve_s(x_i, y_j, env_i): membership is {s >= t_i}.  -inf marks
// nodes that belong for every s, +inf nodes that never join.
double membership_threshold(const ConstraintFamily& fam, const Vec& x, const Vec& y, double env) {
    if (env == kInf) return -kInf;  // no competing branch
    try {
        return solve_s(fam, x, y, env);
    } catch (const NumericError&) {
        const SRange r = fam.s_range(x, y);
        const double glo = env + fam.phi(x, y, r.lo);
        if (glo > 0.0) return -kInf;  // branch below the envelope on the whole range
        return kInf;
    }
}

struct Thresholds {
    std::vector<double> t;        // sorted finite thresholds
    std::vector<double> prefix;   // prefix[k] = mass captured by the first k
    double base_mass = 0.0;       // nodes that belong for every s
    double s_lo = -kInf, s_hi = kInf;  // evaluable window intersected over nodes
};

Thresholds atom_thresholds(const ConstraintFamily& fam, const SourceGrid& grid, const AtomicMeasure& atoms,
                           const std::vector<double>& s, int j) {
    const Vec& y = atoms.y[static_cast<std::size_t>(j)];
    const std::vector<double> env = env_without(fam, grid, atoms, s, j);

    Thresholds th;
    std::vector<std::pair<double, double>> tm;  // (threshold, node mass)
    tm.reserve(static_cast<std::size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        const SRange r = fam.s_range(x, y);
        if (r.hard_lo) th.s_lo = std::max(th.s_lo, r.lo);
        if (r.hard_hi) th.s_hi = std::min(th.s_hi, r.hi);
        const double t = membership_threshold(fam, x, y, env[static_cast<std::size_t>(i)]);
        const double w = grid.wf[static_cast<std::size_t>(i)];
        if (t == -kInf)
            th.base_mass += w;
        else if (t < kInf)
            tm.emplace_back(t, w);
    }
    std::sort(tm.begin(), tm.end());
    th.t.resize(tm.size());
    th.prefix.resize(tm.size() + 1);
    th.prefix[0] = th.base_mass;
    for (std::size_t k = 0; k < tm.size(); ++k) {
        th.t[k] = tm[k].first;
        th.prefix[k + 1] = th.prefix[k] + tm[k].second;
    }
    return th;
}

// Exact inversion of the step function M_j(s): pick the plateau whose mass
// is closest to the target (monotone index bisection, depth-capped), then
// place s at the plateau midpoint so the assignment is robust to later
// perturbations of the competing branches.
double invert_mass_curve(const Thresholds& th, double target, int depth) {
    const int nt = static_cast<int>(th.t.size());
    int lo = 0, hi = nt;
    for (int d = 0; d < depth && hi - lo > 1; ++d) {
        const int mid = lo + (hi - lo) / 2;
        if (th.prefix[static_cast<std::size_t>(mid)] < target)
            lo = mid;
        else
            hi = mid;
    }
    int k = lo;
    if (hi <= nt && std::abs(th.prefix[static_cast<std::size_t>(hi)] - target) <
                        std::abs(th.prefix[static_cast<std::size_t>(lo)] - target))
        k = hi;

    double span = nt > 0 ? th.t[static_cast<std::size_t>(nt - 1)] - th.t[0] : 0.0;
    const double pad = 0.5 * (span / std::max(1, nt - 1) + 1e-6);

    double snew;
    if (nt == 0)
        snew = 0.0;  // membership independent of s; keep a neutral value
    else if (k == 0)
        snew = th.t[0] - pad;
    else if (k == nt)
        snew = th.t[static_cast<std::size_t>(nt - 1)] + pad;
    else
        snew = 0.5 * (th.t[static_cast<std::size_t>(k - 1)] + th.t[static_cast<std::size_t>(k)]);

    if (snew < th.s_lo) snew = th.s_lo;
    if (snew > th.s_hi) snew = th.s_hi;
    return snew;
}

std::vector<double> cell_masses(const ConstraintFamily& fam, const SourceGrid& grid,
                                const AtomicMeasure& atoms, const std::vector<double>& s) {
    std::vector<double> mass(static_cast<std::size_t>(atoms.size()), 0.0);
    for (int i = 0; i < grid.size(); ++i) {
        const Vec& x = grid.x[static_cast<std::size_t>(i)];
        double best = kInf;
        int arg = 0;
        for (int j = 0; j < atoms.size(); ++j) {
            const double b = -fam.phi(x, atoms.y[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j)]);
            if (b < best) {
                best = b;
                arg = j;
            }
        }
        mass[static_cast<std::size_t>(arg)] += grid.wf[static_cast<std::size_t>(i)];
    }
    return mass;
}

double max_deficit(const std::vector<double>& mass, const std::vector<double>& target, int skip) {
    double d = 0.0;
    for (std::size_t j = 0; j < mass.size(); ++j) {
        if (static_cast<int>(j) == skip) continue;
        d = std::max(d, std::abs(mass[j] - target[j]));
    }
    return d;
}

// Dense solve of J dx = -r by partial-pivot elimination; small systems only.
bool solve_linear(std::vector<std::vector<double>>& J, std::vector<double>& rhs) {
    const int n = static_cast<int>(rhs.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(J[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) >
                std::abs(J[static_cast<std::size_t>(piv)][static_cast<std::size_t>(c)]))
                piv = r;
        std::swap(J[static_cast<std::size_t>(c)], J[static_cast<std::size_t>(piv)]);
        std::swap(rhs[static_cast<std::size_t>(c)], rhs[static_cast<std::size_t>(piv)]);
        const double d = J[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        if (std::abs(d) < 1e-14) return false;
        for (int r = c + 1; r < n; ++r) {
            const double f = J[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] / d;
            for (int k = c; k < n; ++k)
                J[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] -=
                    f * J[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
            rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(c)];
        }
    }
    for (int c = n - 1; c >= 0; --c) {
        double acc = rhs[static_cast<std::size_t>(c)];
        for (int k = c + 1; k < n; ++k)
            acc -= J[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(c)] = acc / J[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    }
    return true;
}

// One damped-Newton trial on the non-anchor residuals with a coarse FD
// Jacobian; keeps the sweep iterate unless the deficit strictly improves.
void newton_step(const ConstraintFamily& fam, const SourceGrid& grid, const AtomicMeasure& atoms,
                 std::vector<double>& s, const std::vector<double>& target, int anchor) {
    const int m = atoms.size();
    std::vector<int> free_ix;
    for (int j = 0; j < m; ++j)
        if (j != anchor) free_ix.push_back(j);
    const int nf = static_cast<int>(free_ix.size());
    if (nf == 0) return;

    const std::vector<double> mass0 = cell_masses(fam, grid, atoms, s);
    const double before = max_deficit(mass0, target, anchor);
    if (before == 0.0) return;

    std::vector<std::vector<double>> J(static_cast<std::size_t>(nf),
                                       std::vector<double>(static_cast<std::size_t>(nf), 0.0));
    for (int c = 0; c < nf; ++c) {
        const int j = free_ix[static_cast<std::size_t>(c)];
        const double h = 1e-2 * (1.0 + std::abs(s[static_cast<std::size_t>(j)]));
        std::vector<double> sp = s;
        sp[static_cast<std::size_t>(j)] += h;
        const std::vector<double> mp = cell_masses(fam, grid, atoms, sp);
        for (int r = 0; r < nf; ++r) {
            const int jr = free_ix[static_cast<std::size_t>(r)];
            J[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                (mp[static_cast<std::size_t>(jr)] - mass0[static_cast<std::size_t>(jr)]) / h;
        }
    }
    std::vector<double> rhs(static_cast<std::size_t>(nf));
    for (int r = 0; r < nf; ++r) {
        const int jr = free_ix[static_cast<std::size_t>(r)];
        rhs[static_cast<std::size_t>(r)] =
            target[static_cast<std::size_t>(jr)] - mass0[static_cast<std::size_t>(jr)];
    }
    if (!solve_linear(J, rhs)) return;

    double lambda = 1.0;
    for (int trial = 0; trial < 10; ++trial, lambda *= 0.5) {
        std::vector<double> snew = s;
        for (int c = 0; c < nf; ++c)
            snew[static_cast<std::size_t>(free_ix[static_cast<std::size_t>(c)])] +=
                lambda * rhs[static_cast<std::size_t>(c)];
        const std::vector<double> mn = cell_masses(fam, grid, atoms, snew);
        if (max_deficit(mn, target, anchor) < before) {
            s = snew;
            return;
        }
    }
}

}  // namespace

SolveResult solve_semidiscrete(const ConstraintFamily& fam, const SourceGrid& grid,
                               const AtomicMeasure& atoms, const SolveOptions& opts) {
    if (opts.tol_mass <= 0.0) throw std::invalid_argument("solve_semidiscrete: tol_mass must be positive");
    if (opts.max_sweeps < 1 || opts.bisection_depth < 1)
        throw std::invalid_argument("solve_semidiscrete: sweeps and depth must be >= 1");
    const int m = atoms.size();
    if (opts.anchor < 0 || opts.anchor >= m) throw std::invalid_argument("solve_semidiscrete: anchor out of range");
    const BalanceReport bal = balance_check(grid, atoms, 1e-3);
    if (!bal.balanced)
        throw std::invalid_argument("solve_semidiscrete: source/target masses differ by more than 1e-3");

    const auto t_start = std::chrono::steady_clock::now();

    // Consistent per-cell targets: scale g so the cell masses can sum to the
    // quadrature mass exactly, otherwise the anchor cell absorbs the defect.
    const double scale = grid.mass() / atoms.total();
    std::vector<double> target(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) target[static_cast<std::size_t>(j)] = atoms.g[static_cast<std::size_t>(j)] * scale;

    // Deterministic init: every branch through the reference height at the
    // grid centroid, unless the caller picked a start.
    std::vector<double> s;
    if (!opts.s0.empty()) {
        if (static_cast<int>(opts.s0.size()) != m)
            throw std::invalid_argument("solve_semidiscrete: s0 size does not match atom count");
        s = opts.s0;
    } else {
        const Vec c = grid.centroid();
        s.resize(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            s[static_cast<std::size_t>(j)] =
                solve_s(fam, c, atoms.y[static_cast<std::size_t>(j)], fam.reference_height());
    }

    SolveReport rep;
    rep.target_scale = scale;
    const double mass = grid.mass();
    const double tol_abs = opts.tol_mass * mass;

    std::vector<double> best_s = s;
    double best_deficit = kInf;

    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        for (int j = 0; j < m; ++j) {
            if (j == opts.anchor) continue;
            const Thresholds th = atom_thresholds(fam, grid, atoms, s, j);
            s[static_cast<std::size_t>(j)] =
                invert_mass_curve(th, target[static_cast<std::size_t>(j)], opts.bisection_depth);
        }
        if (opts.newton) newton_step(fam, grid, atoms, s, target, opts.anchor);

        const std::vector<double> mass_now = cell_masses(fam, grid, atoms, s);
        const double deficit = max_deficit(mass_now, target, opts.anchor);
        rep.sweep_deficits.push_back(deficit);
        rep.sweeps = sweep + 1;
        if (deficit < best_deficit) {
            best_deficit = deficit;
            best_s = s;
        }
        // The anchor must also sit at its target for full convergence; the
        // scaled targets telescope, so it does once the others do.
        const double full = max_deficit(mass_now, target, -1);
        if (full <= tol_abs) {
            rep.converged = true;
            break;
        }
    }

    if (!rep.converged) {
        s = best_s;
        rep.diagnostic = "no convergence within sweep budget; returning best iterate";
    }

    const std::vector<double> mass_fin = cell_masses(fam, grid, atoms, s);
    rep.s = s;
    rep.residuals.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        rep.residuals[static_cast<std::size_t>(j)] =
            mass_fin[static_cast<std::size_t>(j)] - target[static_cast<std::size_t>(j)];
        rep.max_rel_residual = std::max(rep.max_rel_residual,
                                        std::abs(rep.residuals[static_cast<std::size_t>(j)]) / mass);
    }

    SolveResult out;
    out.u = u_transform(fam, grid, atoms, s);
    rep.dual_residual = dual_pair_residual(fam, grid, atoms, out.u, s);
    rep.objective = separable_objective(fam, grid, atoms, out.u, s);
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    out.potential = DualPotential(fam, atoms, s);
    out.report = std::move(rep);
    return out;
}

std::vector<double> cell_mass_curve(const ConstraintFamily& fam, const SourceGrid& grid,
                                    const AtomicMeasure& atoms, const std::vector<double>& s, int j,
                                    const std::vector<double>& s_samples) {
    if (j < 0 || j >= atoms.size()) throw std::invalid_argument("cell_mass_curve: atom index out of range");
    const std::vector<double> env = env_without(fam, grid, atoms, s, j);
    std::vector<double> out;
    out.reserve(s_samples.size());
    for (const double sj : s_samples) {
        double massj = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            const double b = -fam.phi(grid.x[static_cast<std::size_t>(i)], atoms.y[static_cast<std::size_t>(j)], sj);
            if (b <= env[static_cast<std::size_t>(i)]) massj += grid.wf[static_cast<std::size_t>(i)];
        }
        out.push_back(massj);
    }
    return out;
}

DiscreteOtResult solve_discrete_ot(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) throw std::invalid_argument("solve_discrete_ot: empty cost matrix");
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != n) throw std::invalid_argument("solve_discrete_ot: matrix must be square");

    // Shortest augmenting paths with dual potentials (1-indexed scratch).
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    DiscreteOtResult out;
    out.assignment.assign(static_cast<std::size_t>(n), -1);
    out.u.resize(static_cast<std::size_t>(n));
    out.v.resize(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) out.assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    for (int i = 1; i <= n; ++i) out.u[static_cast<std::size_t>(i - 1)] = u[static_cast<std::size_t>(i)];
    for (int j = 1; j <= n; ++j) out.v[static_cast<std::size_t>(j - 1)] = v[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i)
        out.value += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(out.assignment[static_cast<std::size_t>(i)])];
    return out;
}

DiscreteOtResult discrete_oracle_ot(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n < 1 || n > 8) throw std::invalid_argument("discrete_oracle_ot: N must be in [1,8]");
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != n)
            throw std::invalid_argument("discrete_oracle_ot: matrix must be square");

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    DiscreteOtResult out;
    out.value = kInf;
    do {
        double val = 0.0;
        for (int i = 0; i < n; ++i) val += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        if (val < out.value) {
            out.value = val;
            out.assignment = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

}  // namespace sdpot
