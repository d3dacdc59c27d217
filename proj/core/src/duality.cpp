#include "sdpot/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "sdpot/catalog.hpp"
#include "sdpot/transforms.hpp"

namespace sdpot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Golden-section maximization on [lo, hi]; exact on unimodal sections,
// best-effort otherwise.  Returns the argmax; callers re-evaluate.
template <typename Fn>
double golden_max(Fn&& fn, double lo, double hi, int iters = 80) {
    if (!(hi > lo)) return lo;
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = fn(c), fd = fn(d);
    for (int k = 0; k < iters && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++k) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = fn(d);
        }
    }
    // Endpoints can beat the interior when the section is monotone.
    double xm = 0.5 * (a + b), fm = fn(xm);
    double fl = fn(lo), fh = fn(hi);
    if (fl >= fm && fl >= fh) return lo;
    if (fh >= fm) return hi;
    return xm;
}

struct Point {
    std::vector<double> u, v;
};

Point random_box_point(const FiniteInstance& inst, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ut(inst.t_lo, inst.t_hi);
    std::uniform_real_distribution<double> us(inst.s_lo, inst.s_hi);
    Point p;
    p.u.resize(inst.nu());
    p.v.resize(inst.nv());
    for (double& t : p.u) t = ut(rng);
    for (double& s : p.v) s = us(rng);
    return p;
}

// Largest v_j allowed by u and the box, or -inf when no feasible value
// exists in [s_lo, s_hi].
double v_upper_bound(const FiniteInstance& inst, const std::vector<double>& u, int j) {
    double ub = inst.s_hi;
    for (int i = 0; i < inst.nu(); ++i) {
        const double ti = u[i];
        double cap;
        try {
            cap = solve_s(*inst.family, inst.x[i], inst.y[j], ti);
        } catch (const NumericError&) {
            // No root: the slack keeps one sign across the admissible range.
            if (ti + inst.family->phi(inst.x[i], inst.y[j], inst.s_hi) <= 0.0) continue;
            return -kInf;
        }
        ub = std::min(ub, cap);
        if (ub < inst.s_lo) return -kInf;
    }
    return ub;
}

double u_upper_bound(const FiniteInstance& inst, const std::vector<double>& v, int i) {
    double ub = inst.t_hi;
    for (int j = 0; j < inst.nv(); ++j)
        ub = std::min(ub, -inst.family->phi(inst.x[i], inst.y[j], v[j]));
    return ub;
}

// Random feasible pair: sample v, push it under the box ceiling, then give
// every u_i room below its branch minimum.
bool random_feasible(const FiniteInstance& inst, std::mt19937_64& rng, Point& out) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Point p = random_box_point(inst, rng);
        bool ok = true;
        for (int i = 0; i < inst.nu() && ok; ++i) {
            double ub = u_upper_bound(inst, p.v, i);
            if (ub < inst.t_lo) {
                ok = false;
                break;
            }
            ub = std::min(ub, inst.t_hi);
            p.u[i] = inst.t_lo + unit(rng) * (ub - inst.t_lo);
        }
        if (!ok) continue;
        if (psi(inst, p.u, p.v) >= 0.0) {
            out = std::move(p);
            return true;
        }
    }
    return false;
}

// Projected ascent with golden-section line steps.  Starts from the
// coordinate directions; after every sweep the aggregate move joins the
// direction set (Powell update), which lets the iterate follow the ridges
// the min term in the Lagrangian creates.  When `constrained` is set the
// step interval is clipped to the feasible region by bisection; the region
// is convex for convex-in-s constraints, so the feasible steps form an
// interval around 0.
template <typename Objective, typename Feasible>
InnerResult line_ascent(const FiniteInstance& inst, std::vector<Point> starts, int sweeps,
                        double tol, Objective&& objective, Feasible&& feasible,
                        bool constrained) {
    const int nu = inst.nu();
    const int n = nu + inst.nv();
    auto lo_of = [&](int k) { return k < nu ? inst.t_lo : inst.s_lo; };
    auto hi_of = [&](int k) { return k < nu ? inst.t_hi : inst.s_hi; };

    InnerResult best;
    best.value = -kInf;

    for (Point& p : starts) {
        double cur = objective(p.u, p.v);
        bool moved = false;

        std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
        for (int k = 0; k < n; ++k) dirs[k][k] = 1.0;

        auto shift = [&](const std::vector<double>& d, double a) {
            Point r = p;
            for (int k = 0; k < n; ++k) {
                double& slot = k < nu ? r.u[k] : r.v[k - nu];
                slot = std::clamp(slot + a * d[k], lo_of(k), hi_of(k));
            }
            return r;
        };

        auto line_step = [&](const std::vector<double>& d) -> double {
            double alo = 0.0, ahi = 0.0;
            bool any = false;
            for (int k = 0; k < n; ++k) {
                if (d[k] == 0.0) continue;
                const double zk = k < nu ? p.u[k] : p.v[k - nu];
                const double r1 = (lo_of(k) - zk) / d[k];
                const double r2 = (hi_of(k) - zk) / d[k];
                if (!any) {
                    alo = std::min(r1, r2);
                    ahi = std::max(r1, r2);
                    any = true;
                } else {
                    alo = std::max(alo, std::min(r1, r2));
                    ahi = std::min(ahi, std::max(r1, r2));
                }
            }
            if (!any || !(ahi > alo)) return 0.0;
            alo = std::min(alo, 0.0);
            ahi = std::max(ahi, 0.0);
            if (constrained) {
                auto ok = [&](double a) {
                    Point q = shift(d, a);
                    return feasible(q.u, q.v);
                };
                auto clip = [&](double bad) {
                    if (ok(bad)) return bad;
                    double good = 0.0;
                    for (int it = 0; it < 80; ++it) {
                        const double m = 0.5 * (good + bad);
                        (ok(m) ? good : bad) = m;
                    }
                    return good;
                };
                ahi = clip(ahi);
                alo = clip(alo);
            }
            auto g = [&](double a) {
                Point q = shift(d, a);
                return objective(q.u, q.v);
            };
            const double astar = golden_max(g, alo, ahi);
            const double val = g(astar);
            if (val > cur + 1e-15 * (1.0 + std::abs(cur))) {
                const double gain = val - cur;
                p = shift(d, astar);
                cur = val;
                moved = true;
                return gain;
            }
            return 0.0;
        };

        for (int pass = 0; pass < sweeps; ++pass) {
            const Point p0 = p;
            const double before = cur;
            int kbest = 0;
            double gbest = -1.0;
            for (int k = 0; k < n; ++k) {
                const double gk = line_step(dirs[k]);
                if (gk > gbest) {
                    gbest = gk;
                    kbest = k;
                }
            }
            std::vector<double> comp(n, 0.0);
            double nrm = 0.0;
            for (int k = 0; k < n; ++k) {
                comp[k] = (k < nu ? p.u[k] - p0.u[k] : p.v[k - nu] - p0.v[k - nu]);
                nrm = std::max(nrm, std::abs(comp[k]));
            }
            if (nrm > 1e-14) {
                for (double& a : comp) a /= nrm;
                line_step(comp);
                if (n > 1) dirs[kbest] = comp;
            }
            if (cur - before <= tol * (1.0 + std::abs(cur))) break;
        }
        if (cur > best.value) {
            best.value = cur;
            best.u = p.u;
            best.v = p.v;
            best.improved = moved;
        }
    }
    return best;
}

// Both-transforms start: v capped from the box floor, then u raised to the
// branch minima.  Lands on the tight part of the feasible boundary, which
// is where monotone objectives peak.
bool tight_start(const FiniteInstance& inst, Point& out) {
    Point p;
    p.u.assign(inst.nu(), inst.t_lo);
    p.v.resize(inst.nv());
    for (int j = 0; j < inst.nv(); ++j) {
        const double ub = v_upper_bound(inst, p.u, j);
        if (ub == -kInf) return false;
        p.v[j] = std::clamp(ub, inst.s_lo, inst.s_hi);
    }
    for (int i = 0; i < inst.nu(); ++i)
        p.u[i] = std::clamp(u_upper_bound(inst, p.v, i), inst.t_lo, inst.t_hi);
    if (psi(inst, p.u, p.v) < 0.0) return false;
    out = std::move(p);
    return true;
}

std::vector<Point> box_starts(const FiniteInstance& inst, const InnerOptions& opts,
                              std::mt19937_64& rng) {
    std::vector<Point> starts;
    // Feasible-boundary point, box corners, and centre first; random fill.
    Point tight;
    if (tight_start(inst, tight)) starts.push_back(std::move(tight));
    Point centre;
    centre.u.assign(inst.nu(), 0.5 * (inst.t_lo + inst.t_hi));
    centre.v.assign(inst.nv(), 0.5 * (inst.s_lo + inst.s_hi));
    starts.push_back(centre);
    Point low;
    low.u.assign(inst.nu(), inst.t_lo);
    low.v.assign(inst.nv(), inst.s_lo);
    starts.push_back(low);
    Point high;
    high.u.assign(inst.nu(), inst.t_hi);
    high.v.assign(inst.nv(), inst.s_hi);
    starts.push_back(high);
    while (static_cast<int>(starts.size()) < std::max(1, opts.starts))
        starts.push_back(random_box_point(inst, rng));
    starts.resize(std::max(1, opts.starts));
    return starts;
}

}  // namespace

double ObjectiveF::value(double f, double g, double t, double s) const {
    double lin = f * t + g * s;
    if (kind == Kind::LinearSeparable) return lin;
    return lin - 0.5 * (a * t * t + b * s * s) - c * t * s;
}

double ObjectiveF::dt(double f, double /*g*/, double t, double s) const {
    if (kind == Kind::LinearSeparable) return f;
    return f - a * t - c * s;
}

double ObjectiveF::ds(double /*f*/, double g, double t, double s) const {
    if (kind == Kind::LinearSeparable) return g;
    return g - b * s - c * t;
}

bool ObjectiveF::concave() const {
    if (kind == Kind::LinearSeparable) return true;
    return a >= 0.0 && b >= 0.0 && a * b >= c * c;
}

bool ObjectiveF::strictly_concave() const {
    return kind == Kind::QuadraticConcave && a > 0.0 && b > 0.0 && a * b > c * c;
}

std::string ObjectiveF::name() const {
    return kind == Kind::LinearSeparable ? "linear-separable" : "quadratic-concave";
}

void FiniteInstance::validate() const {
    if (!family) throw std::invalid_argument("instance needs a constraint family");
    if (x.empty() || y.empty()) throw std::invalid_argument("instance needs nonempty node sets");
    if (f.size() != x.size() || g.size() != y.size())
        throw std::invalid_argument("coefficient arrays must match node counts");
    if (!(t_lo <= t_hi) || !(s_lo <= s_hi)) throw std::invalid_argument("empty value box");
    if (omega.size() != x.size()) throw std::invalid_argument("omega must be nu x nv");
    for (const auto& row : omega) {
        if (row.size() != y.size()) throw std::invalid_argument("omega must be nu x nv");
        for (double w : row)
            if (!(w > 0.0)) throw std::invalid_argument("omega entries must be positive");
    }
}

double psi(const FiniteInstance& inst, const std::vector<double>& u, const std::vector<double>& v) {
    double m = kInf;
    for (int i = 0; i < inst.nu(); ++i)
        for (int j = 0; j < inst.nv(); ++j)
            m = std::min(m, -(u[i] + inst.family->phi(inst.x[i], inst.y[j], v[j])));
    return m;
}

double instance_objective(const FiniteInstance& inst, const std::vector<double>& u,
                          const std::vector<double>& v) {
    double total = 0.0;
    for (int i = 0; i < inst.nu(); ++i)
        for (int j = 0; j < inst.nv(); ++j)
            total += inst.omega[i][j] * inst.F.value(inst.f[i], inst.g[j], u[i], v[j]);
    return total;
}

double lagrangian(const FiniteInstance& inst, const std::vector<double>& u,
                  const std::vector<double>& v, double mu) {
    return instance_objective(inst, u, v) + mu * psi(inst, u, v);
}

namespace {

bool always_feasible(const std::vector<double>&, const std::vector<double>&) { return true; }

// Smooth lower bound of psi: -tau log sum exp(-psi_ij / tau).  Off by at
// most tau log(nu nv), and exact in the limit.
double soft_psi(const FiniteInstance& inst, const std::vector<double>& u,
                const std::vector<double>& v, double tau) {
    double m = kInf;
    std::vector<double> slack;
    slack.reserve(static_cast<std::size_t>(inst.nu()) * inst.nv());
    for (int i = 0; i < inst.nu(); ++i)
        for (int j = 0; j < inst.nv(); ++j) {
            slack.push_back(-(u[i] + inst.family->phi(inst.x[i], inst.y[j], v[j])));
            m = std::min(m, slack.back());
        }
    double acc = 0.0;
    for (double s : slack) acc += std::exp(-(s - m) / tau);
    return m - tau * std::log(acc);
}

double log_barrier(const FiniteInstance& inst, const std::vector<double>& u,
                   const std::vector<double>& v) {
    double acc = 0.0;
    for (int i = 0; i < inst.nu(); ++i)
        for (int j = 0; j < inst.nv(); ++j) {
            const double s = -(u[i] + inst.family->phi(inst.x[i], inst.y[j], v[j]));
            if (!(s > 0.0)) return -kInf;
            acc += std::log(s);
        }
    return acc;
}

constexpr double kSoftTaus[] = {3e-1, 3e-2, 3e-3, 3e-4, 3e-5, 3e-6, 3e-7};
constexpr double kBarrierBetas[] = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9};

}  // namespace

InnerResult dual_inner_max(const FiniteInstance& inst, double mu, const InnerOptions& opts) {
    inst.validate();
    std::mt19937_64 rng(opts.seed);
    auto starts = box_starts(inst, opts, rng);
    auto exact = [&](const std::vector<double>& u, const std::vector<double>& v) {
        return lagrangian(inst, u, v, mu);
    };
    InnerResult best =
        line_ascent(inst, std::move(starts), opts.sweeps, opts.tol, exact, always_feasible, false);

    // The min term kinks the landscape, and line ascent can stall on the
    // kink ridges.  Chase the maximizer through softened Lagrangians with
    // decreasing temperature, then polish on the exact objective.  Every
    // candidate is scored by the exact L, so the result is a valid lower
    // bound regardless of the surrogate.
    if (mu != 0.0) {
        Point p{best.u, best.v};
        for (double tau : kSoftTaus) {
            auto smooth = [&](const std::vector<double>& u, const std::vector<double>& v) {
                return instance_objective(inst, u, v) + mu * soft_psi(inst, u, v, tau);
            };
            InnerResult stage = line_ascent(inst, std::vector<Point>{p}, opts.sweeps, opts.tol,
                                            smooth, always_feasible, false);
            p.u = std::move(stage.u);
            p.v = std::move(stage.v);
        }
        InnerResult polished = line_ascent(inst, std::vector<Point>{p}, opts.sweeps, opts.tol,
                                           exact, always_feasible, false);
        if (polished.value > best.value) {
            polished.improved = true;
            best = std::move(polished);
        }
    }
    return best;
}

double dual_J(const FiniteInstance& inst, double mu, const InnerOptions& opts) {
    return dual_inner_max(inst, mu, opts).value;
}

InnerResult feasible_max(const FiniteInstance& inst, const InnerOptions& opts) {
    inst.validate();
    std::mt19937_64 rng(opts.seed);
    std::vector<Point> starts;
    Point tight;
    if (tight_start(inst, tight)) starts.push_back(std::move(tight));
    for (int k = 0; k < std::max(1, opts.starts); ++k) {
        Point p;
        if (random_feasible(inst, rng, p)) starts.push_back(std::move(p));
    }
    if (starts.empty()) throw NumericError("no feasible point found in the value box");
    auto objective = [&](const std::vector<double>& u, const std::vector<double>& v) {
        return instance_objective(inst, u, v);
    };
    auto feasible = [&](const std::vector<double>& u, const std::vector<double>& v) {
        return psi(inst, u, v) >= 0.0;
    };
    InnerResult best =
        line_ascent(inst, std::move(starts), opts.sweeps, opts.tol, objective, feasible, true);

    // The feasible boundary has corners where line steps block each other.
    // Interior-point pass: ascend I plus a shrinking log barrier from a
    // strictly feasible point, then polish on the exact objective.
    Point p;
    p.u = best.u;
    p.v = best.v;
    const double pull = 1e-6 * (inst.t_hi - inst.t_lo + 1.0);
    for (double& t : p.u) t = std::max(inst.t_lo, t - pull);
    if (log_barrier(inst, p.u, p.v) > -kInf) {
        for (double beta : kBarrierBetas) {
            auto barrier = [&](const std::vector<double>& u, const std::vector<double>& v) {
                const double lb = log_barrier(inst, u, v);
                return lb == -kInf ? -kInf : instance_objective(inst, u, v) + beta * lb;
            };
            InnerResult stage = line_ascent(inst, std::vector<Point>{p}, opts.sweeps, opts.tol,
                                            barrier, feasible, true);
            p.u = std::move(stage.u);
            p.v = std::move(stage.v);
        }
        InnerResult polished = line_ascent(inst, std::vector<Point>{p}, opts.sweeps, opts.tol,
                                           objective, feasible, true);
        if (polished.value > best.value) {
            polished.improved = true;
            best = std::move(polished);
        }
    }
    return best;
}

GapReport gap_experiment(const FiniteInstance& inst, const GapOptions& opts) {
    inst.validate();
    GapReport rep;

    InnerResult primal = feasible_max(inst, opts.inner);
    rep.primal = primal.value;

    // J is convex in mu, so golden-section on -J locates the minimum.
    auto J = [&](double mu) { return dual_J(inst, mu, opts.inner); };
    double mu_star = golden_max([&](double mu) { return -J(mu); }, 0.0, opts.mu_max);
    rep.dual = J(mu_star);
    rep.multiplier = mu_star;
    rep.u_star = primal.u;
    rep.v_star = primal.v;
    // Slackness at the feasible maximizer, which is also a maximizer of
    // L(., mu*) when the multiplier exists.
    rep.slackness = mu_star * psi(inst, primal.u, primal.v);
    rep.gap = rep.dual - rep.primal;

    // Slater margin: psi is concave on the box when varphi is convex in s,
    // so ascent on psi alone finds the most interior point.
    auto slater = [&](const std::vector<double>& u, const std::vector<double>& v) {
        return psi(inst, u, v);
    };
    std::mt19937_64 rng(opts.inner.seed + 17);
    auto starts = box_starts(inst, opts.inner, rng);
    InnerResult most_interior = line_ascent(inst, std::move(starts), opts.inner.sweeps,
                                            opts.inner.tol, slater, always_feasible, false);
    rep.slater_margin = most_interior.value;

    rep.flags_hold = inst.concave_objective && inst.convex_constraint && inst.F.concave() &&
                     rep.slater_margin > 0.0;
    rep.asserted = rep.flags_hold && rep.gap <= opts.tol_gap && rep.gap >= -opts.tol_gap;
    return rep;
}

bool weak_duality_check(const FiniteInstance& inst, int trials, std::uint64_t seed, double tol) {
    inst.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mu_draw(0.0, 8.0);
    InnerOptions opts;
    for (int t = 0; t < trials; ++t) {
        Point p;
        if (!random_feasible(inst, rng, p))
            throw NumericError("no feasible point found in the value box");
        const double mu = mu_draw(rng);
        opts.seed = seed + 31 * static_cast<std::uint64_t>(t) + 1;
        const double lhs = instance_objective(inst, p.u, p.v);
        const double rhs = dual_J(inst, mu, opts);
        if (lhs > rhs + tol) return false;
    }
    return true;
}

double convexity_probe(const FiniteInstance& inst, const std::vector<double>& mu_samples,
                       const InnerOptions& opts) {
    inst.validate();
    std::vector<double> vals(mu_samples.size());
    for (std::size_t k = 0; k < mu_samples.size(); ++k) vals[k] = dual_J(inst, mu_samples[k], opts);
    double worst = -kInf;
    for (std::size_t a = 0; a < mu_samples.size(); ++a)
        for (std::size_t b = a + 1; b < mu_samples.size(); ++b) {
            const double mid = dual_J(inst, 0.5 * (mu_samples[a] + mu_samples[b]), opts);
            worst = std::max(worst, mid - 0.5 * (vals[a] + vals[b]));
        }
    return worst;
}

HcProbe hc_uniqueness_probe(const FiniteInstance& inst, std::uint64_t seed, int tries) {
    inst.validate();
    HcProbe probe;
    std::mt19937_64 rng(seed);
    std::vector<Point> pool;
    for (int k = 0; k < tries; ++k) {
        Point p;
        if (random_feasible(inst, rng, p)) pool.push_back(std::move(p));
    }
    if (pool.size() < 2) return probe;

    auto dist = [](const Point& a, const Point& b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.u.size(); ++i) d = std::max(d, std::abs(a.u[i] - b.u[i]));
        for (std::size_t j = 0; j < a.v.size(); ++j) d = std::max(d, std::abs(a.v[j] - b.v[j]));
        return d;
    };
    std::size_t ia = 0, ib = 1;
    double best = dist(pool[0], pool[1]);
    for (std::size_t a = 0; a < pool.size(); ++a)
        for (std::size_t b = a + 1; b < pool.size(); ++b)
            if (double d = dist(pool[a], pool[b]); d > best) {
                best = d;
                ia = a;
                ib = b;
            }
    if (!(best > 1e-9)) return probe;

    const Point& A = pool[ia];
    const Point& B = pool[ib];
    Point mid;
    mid.u.resize(A.u.size());
    mid.v.resize(A.v.size());
    for (std::size_t i = 0; i < A.u.size(); ++i) mid.u[i] = 0.5 * (A.u[i] + B.u[i]);
    for (std::size_t j = 0; j < A.v.size(); ++j) mid.v[j] = 0.5 * (A.v[j] + B.v[j]);

    probe.found_distinct = true;
    probe.separation = best;
    probe.midpoint_psi = psi(inst, mid.u, mid.v);
    probe.margin = instance_objective(inst, mid.u, mid.v) -
                   0.5 * (instance_objective(inst, A.u, A.v) + instance_objective(inst, B.u, B.v));
    return probe;
}

double balance_residual(const FiniteInstance& inst, const std::vector<double>& u,
                        const std::vector<double>& v) {
    inst.validate();
    double total = 0.0;
    for (int i = 0; i < inst.nu(); ++i)
        for (int j = 0; j < inst.nv(); ++j) {
            const double ft = inst.F.dt(inst.f[i], inst.g[j], u[i], v[j]);
            const double fs = inst.F.ds(inst.f[i], inst.g[j], u[i], v[j]);
            const double ps = inst.family->phi_s(inst.x[i], inst.y[j], v[j]);
            total += inst.omega[i][j] * (-ft + fs / ps);
        }
    return total;
}

double grid_search_max(const FiniteInstance& inst, double mu, int per_axis, bool feasible_only,
                       int rounds) {
    inst.validate();
    const int vars = inst.nu() + inst.nv();
    if (vars > 4) throw std::invalid_argument("grid search oracle is limited to 4 variables");
    if (per_axis < 5) throw std::invalid_argument("grid search needs at least 5 points per axis");

    std::vector<double> lo(vars), hi(vars);
    for (int k = 0; k < vars; ++k) {
        lo[k] = k < inst.nu() ? inst.t_lo : inst.s_lo;
        hi[k] = k < inst.nu() ? inst.t_hi : inst.s_hi;
    }

    std::vector<double> u(inst.nu()), v(inst.nv());
    double best = -kInf;
    std::vector<double> best_z(vars, 0.0);
    for (int round = 0; round < std::max(1, rounds); ++round) {
        std::vector<int> idx(vars, 0);
        bool found = false;
        while (true) {
            for (int k = 0; k < vars; ++k) {
                const double z = lo[k] + (hi[k] - lo[k]) * idx[k] / (per_axis - 1);
                if (k < inst.nu())
                    u[k] = z;
                else
                    v[k - inst.nu()] = z;
            }
            if (!feasible_only || psi(inst, u, v) >= 0.0) {
                const double val = feasible_only ? instance_objective(inst, u, v)
                                                 : lagrangian(inst, u, v, mu);
                if (val > best) {
                    best = val;
                    for (int k = 0; k < vars; ++k)
                        best_z[k] = k < inst.nu() ? u[k] : v[k - inst.nu()];
                    found = true;
                }
            }
            int k = 0;
            while (k < vars && ++idx[k] == per_axis) idx[k++] = 0;
            if (k == vars) break;
        }
        if (best == -kInf) throw NumericError("no feasible grid point in the value box");
        if (!found && round > 0) break;
        // Zoom: two grid steps around the incumbent, clipped to the box.
        for (int k = 0; k < vars; ++k) {
            const double step = (hi[k] - lo[k]) / (per_axis - 1);
            const double blo = k < inst.nu() ? inst.t_lo : inst.s_lo;
            const double bhi = k < inst.nu() ? inst.t_hi : inst.s_hi;
            lo[k] = std::max(blo, best_z[k] - 2.0 * step);
            hi[k] = std::min(bhi, best_z[k] + 2.0 * step);
        }
    }
    return best;
}

namespace {

LabInstance lab_base(int nu, int nv, std::uint64_t seed) {
    if (nu < 1 || nv < 1) throw std::invalid_argument("lab instance needs nu, nv >= 1");
    LabInstance lab;
    lab.family = make_family(default_entry("ot-cost"));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    std::uniform_real_distribution<double> coeff(0.5, 1.5);

    FiniteInstance& inst = lab.inst;
    inst.family = lab.family.get();
    for (int i = 0; i < nu; ++i) inst.x.push_back(vec2(pos(rng), pos(rng)));
    for (int j = 0; j < nv; ++j) inst.y.push_back(vec2(pos(rng), pos(rng)));
    for (int i = 0; i < nu; ++i) inst.f.push_back(coeff(rng));
    for (int j = 0; j < nv; ++j) inst.g.push_back(coeff(rng));

    // Product coupling w_i ghat_j, both factors normalized to unit mass.
    std::vector<double> w(nu), gh(nv);
    double ws = 0.0, gs = 0.0;
    for (double& wi : w) ws += (wi = coeff(rng));
    for (double& gj : gh) gs += (gj = coeff(rng));
    inst.omega.assign(nu, std::vector<double>(nv));
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) inst.omega[i][j] = (w[i] / ws) * (gh[j] / gs);

    // Quadratic cost on the unit box stays within [0, 1], so this box
    // contains every maximizer and leaves strictly feasible room.
    inst.t_lo = -2.0;
    inst.t_hi = 2.0;
    inst.s_lo = -2.0;
    inst.s_hi = 2.0;
    inst.convex_constraint = true;  // varphi = s - c(x,y) is affine in s
    return lab;
}

}  // namespace

LabInstance lab_linear_instance(int nu, int nv, std::uint64_t seed) {
    LabInstance lab = lab_base(nu, nv, seed);
    lab.inst.F.kind = ObjectiveF::Kind::LinearSeparable;
    lab.inst.concave_objective = true;
    return lab;
}

LabInstance lab_quadratic_instance(int nu, int nv, std::uint64_t seed, double a, double b,
                                   double c) {
    LabInstance lab = lab_base(nu, nv, seed);
    lab.inst.F.kind = ObjectiveF::Kind::QuadraticConcave;
    lab.inst.F.a = a;
    lab.inst.F.b = b;
    lab.inst.F.c = c;
    lab.inst.concave_objective = lab.inst.F.concave();
    return lab;
}

}  // namespace sdpot
