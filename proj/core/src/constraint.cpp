#include "sdpot/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdpot/rng.hpp"

namespace sdpot {

namespace {

// Central difference of a scalar-in-scalar callable.
template <typename F>
double central(F&& f, double v, double h) {
    return (f(v + h) - f(v - h)) / (2.0 * h);
}

double step_for(double v) { return 1e-5 * (1.0 + std::abs(v)); }

}  // namespace

Mat ConstraintFamily::phi_xx(const Vec& x, const Vec& y, double s) const {
    Mat out;
    for (int k = 0; k < n_; ++k) {
        const double h = step_for(x[k]);
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Vec gp = phi_x(xp, y, s);
        const Vec gm = phi_x(xm, y, s);
        for (int i = 0; i < n_; ++i) out(i, k) = (gp[i] - gm[i]) / (2.0 * h);
    }
    // Symmetrize; the analytic Hessian is symmetric and the FD noise is not.
    for (int i = 0; i < n_; ++i)
        for (int k = i + 1; k < n_; ++k) {
            const double m = 0.5 * (out(i, k) + out(k, i));
            out(i, k) = m;
            out(k, i) = m;
        }
    return out;
}

Mat ConstraintFamily::phi_xy(const Vec& x, const Vec& y, double s) const {
    Mat out;
    for (int k = 0; k < n_; ++k) {
        const double h = step_for(y[k]);
        Vec yp = y, ym = y;
        yp[k] += h;
        ym[k] -= h;
        const Vec liftp = lift_target(yp);
        const Vec liftm = lift_target(ym);
        const Vec gp = phi_x(x, liftp, s);
        const Vec gm = phi_x(x, liftm, s);
        for (int i = 0; i < n_; ++i) out(i, k) = (gp[i] - gm[i]) / (2.0 * h);
    }
    return out;
}

Vec ConstraintFamily::phi_xs(const Vec& x, const Vec& y, double s) const {
    const double h = step_for(s);
    const Vec gp = phi_x(x, y, s + h);
    const Vec gm = phi_x(x, y, s - h);
    Vec out;
    for (int i = 0; i < n_; ++i) out[i] = (gp[i] - gm[i]) / (2.0 * h);
    return out;
}

Vec ConstraintFamily::lift_target(const Vec& ychart) const { return ychart; }

double ConstraintFamily::snell_ratio() const { return std::numeric_limits<double>::quiet_NaN(); }

double ConstraintFamily::target_plane_height() const { return std::numeric_limits<double>::quiet_NaN(); }

Derivs evaluate(const ConstraintFamily& fam, const Vec& x, const Vec& y, double s) {
    Derivs d;
    d.phi = fam.phi(x, y, s);
    d.phi_s = fam.phi_s(x, y, s);
    d.phi_x = fam.phi_x(x, y, s);
    d.phi_y = fam.phi_y(x, y, s);
    d.phi_xs = fam.phi_xs(x, y, s);
    d.phi_xx = fam.phi_xx(x, y, s);
    d.phi_xy = fam.phi_xy(x, y, s);
    return d;
}

double solve_s(const ConstraintFamily& fam, const Vec& x, const Vec& y, double t) {
    const double tol = 1e-12 * (1.0 + std::abs(t));
    SRange range = fam.s_range(x, y);
    double lo = range.lo, hi = range.hi;
    if (!(lo < hi)) throw NumericError("solve_s: empty s-range");

    const auto g = [&](double s) { return t + fam.phi(x, y, s); };

    // phi is increasing in s, so g(lo) <= 0 <= g(hi) brackets the root.
    double glo = g(lo);
    double ghi = g(hi);
    double width = hi - lo;
    for (int k = 0; k < 200 && glo > 0.0 && !range.hard_lo; ++k) {
        hi = lo;
        ghi = glo;
        lo -= width;
        width *= 2.0;
        glo = g(lo);
    }
    for (int k = 0; k < 200 && ghi < 0.0 && !range.hard_hi; ++k) {
        lo = hi;
        glo = ghi;
        hi += width;
        width *= 2.0;
        ghi = g(hi);
    }
    if (std::abs(glo) <= tol) return lo;
    if (std::abs(ghi) <= tol) return hi;
    if (!(glo < 0.0) || !(ghi > 0.0) || !std::isfinite(glo) || !std::isfinite(ghi))
        throw NumericError("solve_s: no bracket; t outside the dual domain of (" + fam.id() + ")");

    double s = 0.5 * (lo + hi);
    double gs = g(s);
    for (int it = 0; it < 200; ++it) {
        if (std::abs(gs) <= tol) return s;
        if (gs > 0.0)
            hi = s;
        else
            lo = s;

        // Newton step, falling back to bisection when it leaves the bracket.
        const double slope = fam.phi_s(x, y, s);
        double snew = s - gs / slope;
        if (!std::isfinite(snew) || snew <= lo || snew >= hi) snew = 0.5 * (lo + hi);
        s = snew;
        gs = g(s);
        if (hi - lo <= std::numeric_limits<double>::epsilon() * (1.0 + std::abs(s))) {
            // Bracket exhausted at floating point resolution.
            if (std::abs(gs) <= 1e-9 * (1.0 + std::abs(t))) return s;
            break;
        }
    }
    if (std::abs(gs) <= tol) return s;
    throw NumericError("solve_s: iteration cap without meeting tolerance (" + fam.id() + ")");
}

double DerivativeReport::max_error() const {
    return std::max({err_phi_s, err_phi_x, err_phi_y, err_phi_xx, err_phi_xy, err_phi_xs});
}

SamplePoint sample_valid_point(const ConstraintFamily& fam, Rng& rng, int max_tries) {
    const SampleBox box = fam.sample_box();
    for (int tries = 0; tries < max_tries; ++tries) {
        SamplePoint p;
        for (int i = 0; i < fam.dim(); ++i) p.x[i] = rng.uniform(box.x_lo[i], box.x_hi[i]);
        Vec ychart;
        for (int i = 0; i < fam.dim(); ++i) ychart[i] = rng.uniform(box.y_lo[i], box.y_hi[i]);
        p.y = fam.lift_target(ychart);
        p.s = rng.uniform(box.s_lo, box.s_hi);
        if (fam.valid(p.x, p.y, p.s) && std::isfinite(fam.phi(p.x, p.y, p.s))) return p;
    }
    throw NumericError("sample_valid_point: no valid sample found for " + fam.id());
}

namespace {

// Richardson-refined central difference: D(h), D(h/2) -> (4 D(h/2) - D(h)) / 3.
template <typename F>
double refined_diff(F&& f, double v, double h) {
    const double d1 = central(f, v, h);
    const double d2 = central(f, v, 0.5 * h);
    return (4.0 * d2 - d1) / 3.0;
}

double rel_gap(double a, double b) { return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))); }

}  // namespace

DerivativeReport check_derivatives(const ConstraintFamily& fam, int samples, std::uint64_t seed) {
    Rng rng(seed);
    DerivativeReport rep;
    const int n = fam.dim();
    const double h0 = 1e-6;

    for (int k = 0; k < samples; ++k) {
        const SamplePoint p = sample_valid_point(fam, rng);
        const Derivs d = evaluate(fam, p.x, p.y, p.s);

        // phi_s
        {
            const auto f = [&](double s) { return fam.phi(p.x, p.y, s); };
            const double ref = refined_diff(f, p.s, h0 * (1.0 + std::abs(p.s)));
            rep.err_phi_s = std::max(rep.err_phi_s, rel_gap(d.phi_s, ref));
        }
        // phi_x
        for (int i = 0; i < n; ++i) {
            const auto f = [&](double v) {
                Vec x = p.x;
                x[i] = v;
                return fam.phi(x, p.y, p.s);
            };
            const double ref = refined_diff(f, p.x[i], h0 * (1.0 + std::abs(p.x[i])));
            rep.err_phi_x = std::max(rep.err_phi_x, rel_gap(d.phi_x[i], ref));
        }
        // phi_y: differentiate through the target lift
        for (int i = 0; i < n; ++i) {
            const auto f = [&](double v) {
                Vec yc = p.y;
                yc[i] = v;
                return fam.phi(p.x, fam.lift_target(yc), p.s);
            };
            const double ref = refined_diff(f, p.y[i], h0 * (1.0 + std::abs(p.y[i])));
            rep.err_phi_y = std::max(rep.err_phi_y, rel_gap(d.phi_y[i], ref));
        }
        // phi_xs
        for (int i = 0; i < n; ++i) {
            const auto f = [&](double s) { return fam.phi_x(p.x, p.y, s)[i]; };
            const double ref = refined_diff(f, p.s, 1e-4 * (1.0 + std::abs(p.s)));
            rep.err_phi_xs = std::max(rep.err_phi_xs, rel_gap(d.phi_xs[i], ref));
        }
        // phi_xx
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const auto f = [&](double v) {
                    Vec x = p.x;
                    x[j] = v;
                    return fam.phi_x(x, p.y, p.s)[i];
                };
                const double ref = refined_diff(f, p.x[j], 1e-4 * (1.0 + std::abs(p.x[j])));
                rep.err_phi_xx = std::max(rep.err_phi_xx, rel_gap(d.phi_xx(i, j), ref));
            }
        // phi_xy
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const auto f = [&](double v) {
                    Vec yc = p.y;
                    yc[j] = v;
                    return fam.phi_x(p.x, fam.lift_target(yc), p.s)[i];
                };
                const double ref = refined_diff(f, p.y[j], 1e-4 * (1.0 + std::abs(p.y[j])));
                rep.err_phi_xy = std::max(rep.err_phi_xy, rel_gap(d.phi_xy(i, j), ref));
            }
        ++rep.samples;
    }
    return rep;
}

Mat h2_matrix(const ConstraintFamily& fam, const Vec& x, const Vec& y, double s) {
    const double ps = fam.phi_s(x, y, s);
    const Vec xs = fam.phi_xs(x, y, s);
    const Vec py = fam.phi_y(x, y, s);
    return fam.phi_xy(x, y, s) - (1.0 / ps) * outer(xs, py);
}

H2Report check_h2(const ConstraintFamily& fam, int samples, std::uint64_t seed) {
    Rng rng(seed);
    H2Report rep;
    rep.min_abs_det = std::numeric_limits<double>::infinity();
    int sign = 0;
    for (int k = 0; k < samples; ++k) {
        const SamplePoint p = sample_valid_point(fam, rng);
        const double dv = det(h2_matrix(fam, p.x, p.y, p.s), fam.dim());
        rep.min_abs_det = std::min(rep.min_abs_det, std::abs(dv));
        rep.max_abs_det = std::max(rep.max_abs_det, std::abs(dv));
        const int sv = dv > 0.0 ? 1 : (dv < 0.0 ? -1 : 0);
        if (sign == 0) sign = sv;
        if (sv != 0 && sv != sign) rep.sign_constant = false;
        ++rep.samples;
    }
    return rep;
}

MonotonicityReport check_monotonicity(const ConstraintFamily& fam, int samples, std::uint64_t seed) {
    Rng rng(seed);
    MonotonicityReport rep;
    rep.theta0 = fam.theta0();
    rep.min_phi_s = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const SamplePoint p = sample_valid_point(fam, rng);
        rep.min_phi_s = std::min(rep.min_phi_s, fam.phi_s(p.x, p.y, p.s));
        ++rep.samples;
    }
    rep.ok = rep.min_phi_s >= rep.theta0 - 1e-12;
    return rep;
}

}  // namespace sdpot
