#include "sdpot/catalog.hpp"

#include <cmath>
#include <stdexcept>

namespace sdpot {

namespace {

// --- sphere chart helpers ---------------------------------------------------

double omega(const Vec& x, int n) { return std::sqrt(1.0 - norm2_n(x, n)); }

// X = (x, omega(x)) on the upper unit sphere.
Vec lift_sphere(const Vec& x, int n) {
    Vec X = x;
    X[n] = omega(x, n);
    return X;
}

// d<X,Y>/dx_i for the lifted source point, i < n.
Vec sphere_dot_grad(const Vec& x, const Vec& Y, int n) {
    const double w = omega(x, n);
    Vec g;
    for (int i = 0; i < n; ++i) g[i] = Y[i] - (Y[n] / w) * x[i];
    return g;
}

// --- transport costs ---------------------------------------------------------

// phi(x,y,s) = s - c(x,y).  phi_s == 1 and phi_xs == 0, so the induced map
// is driven by the mixed derivative of c alone.
class CostFamily : public ConstraintFamily {
public:
    enum class Cost { Quadratic, LogReflector, LogRefractorLow, LogRefractorHigh };

    CostFamily(std::string id, Cost cost, int n, double kappa, double delta0, double tau, SampleBox box)
        : ConstraintFamily(std::move(id), n, cost == Cost::Quadratic ? n : n + 1, 1.0),
          cost_(cost),
          kappa_(kappa),
          delta0_(delta0),
          tau_(tau),
          box_(box) {
        set_closed_second(cost_ == Cost::Quadratic);
    }

    double phi(const Vec& x, const Vec& y, double s) const override {
        switch (cost_) {
            case Cost::Quadratic:
                return s - 0.5 * norm2_n(x - y, dim());
            case Cost::LogReflector:
                return s + std::log1p(-sdot(x, y));
            case Cost::LogRefractorLow:
                return s + std::log1p(-kappa_ * sdot(x, y));
            case Cost::LogRefractorHigh:
                return s - std::log(kappa_ * sdot(x, y) - 1.0);
        }
        return 0.0;
    }

    double phi_s(const Vec&, const Vec&, double) const override { return 1.0; }

    Vec phi_x(const Vec& x, const Vec& y, double s) const override {
        (void)s;
        const int n = dim();
        switch (cost_) {
            case Cost::Quadratic: {
                Vec out;
                for (int i = 0; i < n; ++i) out[i] = y[i] - x[i];
                return out;
            }
            case Cost::LogReflector:
                return (-1.0 / (1.0 - sdot(x, y))) * sphere_dot_grad(x, y, n);
            case Cost::LogRefractorLow:
                return (-kappa_ / (1.0 - kappa_ * sdot(x, y))) * sphere_dot_grad(x, y, n);
            case Cost::LogRefractorHigh:
                return (-kappa_ / (kappa_ * sdot(x, y) - 1.0)) * sphere_dot_grad(x, y, n);
        }
        return {};
    }

    Vec phi_y(const Vec& x, const Vec& y, double s) const override {
        (void)s;
        const int n = dim();
        switch (cost_) {
            case Cost::Quadratic: {
                Vec out;
                for (int i = 0; i < n; ++i) out[i] = x[i] - y[i];
                return out;
            }
            case Cost::LogReflector:
                return (-1.0 / (1.0 - sdot(x, y))) * target_dot_grad(x, y);
            case Cost::LogRefractorLow:
                return (-kappa_ / (1.0 - kappa_ * sdot(x, y))) * target_dot_grad(x, y);
            case Cost::LogRefractorHigh:
                return (-kappa_ / (kappa_ * sdot(x, y) - 1.0)) * target_dot_grad(x, y);
        }
        return {};
    }

    Vec phi_xs(const Vec&, const Vec&, double) const override { return {}; }

    Mat phi_xx(const Vec& x, const Vec& y, double s) const override {
        if (cost_ == Cost::Quadratic) return identity(dim(), -1.0);
        return ConstraintFamily::phi_xx(x, y, s);
    }

    Mat phi_xy(const Vec& x, const Vec& y, double s) const override {
        if (cost_ == Cost::Quadratic) return identity(dim(), 1.0);
        return ConstraintFamily::phi_xy(x, y, s);
    }

    bool valid(const Vec& x, const Vec& y, double) const override {
        switch (cost_) {
            case Cost::Quadratic:
                return true;
            case Cost::LogReflector:
                return lift_ok(x, y) && sdot(x, y) <= 1.0 - delta0_;
            case Cost::LogRefractorLow:
                // Refraction cone: a ray can bend by at most arccos(kappa).
                return lift_ok(x, y) && sdot(x, y) >= kappa_ + tau_;
            case Cost::LogRefractorHigh:
                return lift_ok(x, y) && kappa_ * sdot(x, y) >= 1.0 + tau_;
        }
        return false;
    }

    SRange s_range(const Vec&, const Vec&) const override { return {-10.0, 10.0, false, false}; }

    SampleBox sample_box() const override { return box_; }

    Vec lift_target(const Vec& ychart) const override {
        if (cost_ == Cost::Quadratic) return ychart;
        return lift_sphere(ychart, dim());
    }

protected:
    double sdot(const Vec& x, const Vec& y) const {
        if (cost_ == Cost::Quadratic) return 0.0;
        return dot(lift_sphere(x, dim()), y);
    }

    Vec target_dot_grad(const Vec& x, const Vec& y) const {
        // d<X,Y>/dy'_k through the target sphere lift.
        const int n = dim();
        const double wx = omega(x, n);
        const double wy = y[n];
        Vec g;
        for (int k = 0; k < n; ++k) g[k] = x[k] - (wx / wy) * y[k];
        return g;
    }

    bool lift_ok(const Vec& x, const Vec& y) const {
        const int n = dim();
        return norm2_n(x, n) <= 0.9025 && norm2_n(y, n) <= 0.9025 && y[n] > 0.0;
    }

private:
    Cost cost_;
    double kappa_;
    double delta0_;
    double tau_;
    SampleBox box_;
};

// Fixture with a deliberately wrong gradient; exercises check failure paths.
class BrokenDerivativeFamily final : public CostFamily {
public:
    BrokenDerivativeFamily(int n, SampleBox box)
        : CostFamily("test-broken-derivative", Cost::Quadratic, n, 0.0, 0.0, 0.0, box) {}

    Vec phi_x(const Vec& x, const Vec& y, double s) const override {
        return 1.01 * CostFamily::phi_x(x, y, s);
    }
};

// --- near-field parallel-beam reflector --------------------------------------

// Supporting paraboloids of focal parameter 1/(2s):
//   phi(x,y,s) = -1/(2s) + (s/2)|x-y|^2,   s > 0.
class ParallelReflectorFamily final : public ConstraintFamily {
public:
    ParallelReflectorFamily(int n, SampleBox box)
        : ConstraintFamily("reflector-nf-parallel", n, n, 1.0 / (2.0 * box.s_hi * box.s_hi)), box_(box) {
        set_closed_second(true);
    }

    double phi(const Vec& x, const Vec& y, double s) const override {
        return -1.0 / (2.0 * s) + 0.5 * s * norm2_n(x - y, dim());
    }
    double phi_s(const Vec& x, const Vec& y, double s) const override {
        return 1.0 / (2.0 * s * s) + 0.5 * norm2_n(x - y, dim());
    }
    Vec phi_x(const Vec& x, const Vec& y, double s) const override {
        Vec out;
        for (int i = 0; i < dim(); ++i) out[i] = s * (x[i] - y[i]);
        return out;
    }
    Vec phi_y(const Vec& x, const Vec& y, double s) const override {
        Vec out;
        for (int i = 0; i < dim(); ++i) out[i] = -s * (x[i] - y[i]);
        return out;
    }
    Vec phi_xs(const Vec& x, const Vec& y, double) const override {
        Vec out;
        for (int i = 0; i < dim(); ++i) out[i] = x[i] - y[i];
        return out;
    }
    Mat phi_xx(const Vec&, const Vec&, double s) const override { return identity(dim(), s); }
    Mat phi_xy(const Vec&, const Vec&, double s) const override { return identity(dim(), -s); }

    bool valid(const Vec& x, const Vec& y, double s) const override {
        if (!(s >= box_.s_lo && s <= box_.s_hi)) return false;
        // Branch height 1/(2s) - (s/2)|x-y|^2 must stay positive, which is
        // the |Du| < 1 restriction keeping reflected rays transverse to the
        // target plane.
        return s * s * norm2_n(x - y, dim()) < 1.0;
    }

    SRange s_range(const Vec&, const Vec&) const override { return {1e-8, 64.0, true, false}; }

    SampleBox sample_box() const override { return box_; }

    double target_plane_height() const override { return 0.0; }

private:
    SampleBox box_;
};

// --- near-field point-source reflector ---------------------------------------

// Supporting ellipsoids of revolution with one focus at the origin.  In
// radial-log coordinates u = log rho the branch cut by the atom Y at weight
// s is -phi with
//   phi(X,Y,s) = s + log(1 - <X,Y>/D),  D = q + sqrt(|Y|^2 + q^2),  q = e^{-s}.
// Atoms live on the plane {y_n = plane_height}.
class PointReflectorFamily final : public ConstraintFamily {
public:
    PointReflectorFamily(int n, double plane_height, double delta0, SampleBox box)
        : ConstraintFamily("reflector-nf-point", n, n + 1, compute_theta0(delta0)),
          h_(plane_height),
          delta0_(delta0),
          box_(box) {}

    double phi(const Vec& x, const Vec& y, double s) const override {
        const double q = std::exp(-s);
        const double B = std::sqrt(norm2(y) + q * q);
        const double T = dot(lift_sphere(x, dim()), y);
        return s + std::log1p(-T / (q + B));
    }

    double phi_s(const Vec& x, const Vec& y, double s) const override {
        const double q = std::exp(-s);
        const double B = std::sqrt(norm2(y) + q * q);
        const double D = q + B;
        const double T = dot(lift_sphere(x, dim()), y);
        return 1.0 - q * T / (B * (D - T));
    }

    Vec phi_x(const Vec& x, const Vec& y, double s) const override {
        const double q = std::exp(-s);
        const double B = std::sqrt(norm2(y) + q * q);
        const double D = q + B;
        const double T = dot(lift_sphere(x, dim()), y);
        return (-1.0 / (D - T)) * sphere_dot_grad(x, y, dim());
    }

    Vec phi_y(const Vec& x, const Vec& y, double s) const override {
        const int n = dim();
        const double q = std::exp(-s);
        const double B = std::sqrt(norm2(y) + q * q);
        const double D = q + B;
        const Vec X = lift_sphere(x, n);
        const double T = dot(X, y);
        Vec out;
        for (int k = 0; k < n; ++k) out[k] = (y[k] / B - X[k]) / (D - T) - y[k] / (B * D);
        return out;
    }

    bool valid(const Vec& x, const Vec& y, double s) const override {
        const int n = dim();
        if (norm2_n(x, n) > 0.9025) return false;
        if (std::abs(y[n] - h_) > 1e-12) return false;  // atoms sit on the target plane
        const double ny = norm(y);
        if (!(ny > 0.0)) return false;
        const double T = dot(lift_sphere(x, n), y);
        if (T > (1.0 - delta0_) * ny) return false;
        if (!(s >= box_.s_lo && s <= box_.s_hi)) return false;
        // Reflection point strictly above the target plane; the induced map
        // degenerates where the surface crosses the plane height.
        return std::exp(-phi(x, y, s)) * omega(x, n) > h_;
    }

    SRange s_range(const Vec&, const Vec&) const override { return {-300.0, 300.0, true, true}; }

    SampleBox sample_box() const override { return box_; }

    double target_plane_height() const override { return h_; }

    Vec lift_target(const Vec& ychart) const override {
        Vec y = ychart;
        y[dim()] = h_;
        return y;
    }

private:
    // phi_s = 1 - beta*c / (sqrt(1+beta^2) (beta + sqrt(1+beta^2) - c)) in
    // terms of beta = q/|Y| and c = <X,Y>/|Y| <= 1 - delta0; the bound is
    // the 1-d maximum over beta at the extreme c.
    static double compute_theta0(double delta0) {
        const double c = 1.0 - delta0;
        const auto f = [c](double b) {
            const double r = std::sqrt(1.0 + b * b);
            return b * c / (r * (b + r - c));
        };
        double best = 0.0, barg = 0.0;
        for (int i = 1; i <= 4000; ++i) {
            const double b = 10.0 * i / 4000.0;
            const double v = f(b);
            if (v > best) {
                best = v;
                barg = b;
            }
        }
        // local refinement
        double lo = std::max(0.0, barg - 0.01), hi = barg + 0.01;
        for (int it = 0; it < 80; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (f(m1) < f(m2))
                lo = m1;
            else
                hi = m2;
        }
        best = std::max(best, f(0.5 * (lo + hi)));
        return 1.0 - best;
    }

    double h_;
    double delta0_;
    SampleBox box_;
};

// --- near-field point-source refractor ---------------------------------------

// Supporting Cartesian ovals |Z| + kappa |Z - Y| = p in radial-log
// coordinates.  For kappa < 1 the focal parameter is p = e^{-s}; for the
// reversed-index variant kappa > 1 monotonicity in the weight forces
// p = e^{+s} (the oval shrinks as p decreases there).
class PointRefractorFamily final : public ConstraintFamily {
public:
    PointRefractorFamily(int n, double kappa, double plane_height, double tau, SampleBox box)
        : ConstraintFamily("refractor-nf-point", n, n + 1,
                           kappa < 1.0 ? 1.0 / (1.0 - kappa * kappa) : 1.0 / (kappa * kappa - 1.0)),
          kappa_(kappa),
          h_(plane_height),
          tau_(tau),
          box_(box) {
        if (!(kappa > 0.0) || kappa == 1.0)
            throw std::invalid_argument("refractor-nf-point: kappa must be positive and != 1");
    }

    double snell_ratio() const override { return 1.0 / kappa_; }

    double phi(const Vec& x, const Vec& y, double s) const override {
        return -std::log(rho(x, y, focal(s)));
    }

    double phi_s(const Vec& x, const Vec& y, double s) const override {
        const double k2 = kappa_ * kappa_;
        const double p = focal(s);
        const double t = dot(lift_sphere(x, dim()), y);
        const double r = rho(x, y, p);
        const double sq = sqrt_disc(t, norm2(y), p);
        if (kappa_ < 1.0) {
            const double drdp = (1.0 - k2 * (p - t) / sq) / (1.0 - k2);
            return p * drdp / r;  // dp/ds = -p and phi = -log rho
        }
        const double drdp = (k2 * (t - p) / sq - 1.0) / (k2 - 1.0);
        return -p * drdp / r;  // dp/ds = +p
    }

    Vec phi_x(const Vec& x, const Vec& y, double s) const override {
        const double k2 = kappa_ * kappa_;
        const double t = dot(lift_sphere(x, dim()), y);
        const double sq = sqrt_disc(t, norm2(y), focal(s));
        // d rho/dt = +kappa^2 rho / sqrt(disc) for kappa < 1 and the
        // negative of that for kappa > 1; phi = -log rho.
        const double factor = kappa_ < 1.0 ? -k2 / sq : k2 / sq;
        return factor * sphere_dot_grad(x, y, dim());
    }

    Vec phi_y(const Vec& x, const Vec& y, double s) const override {
        const int n = dim();
        const double k2 = kappa_ * kappa_;
        const double p = focal(s);
        const double Y2 = norm2(y);
        const Vec X = lift_sphere(x, n);
        const double t = dot(X, y);
        const double r = rho(x, y, p);
        const double sq = sqrt_disc(t, Y2, p);
        Vec out;
        if (kappa_ < 1.0) {
            const double A = p - k2 * t;
            for (int k = 0; k < n; ++k) {
                const double dDisc = 2.0 * A * (-k2 * X[k]) + (1.0 - k2) * k2 * 2.0 * y[k];
                const double drho = (-k2 * X[k] - dDisc / (2.0 * sq)) / (1.0 - k2);
                out[k] = -drho / r;
            }
        } else {
            const double A2 = k2 * t - p;
            for (int k = 0; k < n; ++k) {
                const double dDisc = 2.0 * A2 * k2 * X[k] - (k2 - 1.0) * k2 * 2.0 * y[k];
                const double drho = (k2 * X[k] - dDisc / (2.0 * sq)) / (k2 - 1.0);
                out[k] = -drho / r;
            }
        }
        return out;
    }

    bool valid(const Vec& x, const Vec& y, double s) const override {
        const int n = dim();
        if (norm2_n(x, n) > 0.9025) return false;
        if (std::abs(y[n] - h_) > 1e-12) return false;
        const double ny = norm(y);
        const double t = dot(lift_sphere(x, n), y);
        const double p = focal(s);
        const double k2 = kappa_ * kappa_;
        if (kappa_ < 1.0) {
            if (!(kappa_ * ny < p && p < ny)) return false;
            if (!(p <= t)) return false;
            if (!(t >= (kappa_ + tau_) * ny)) return false;
            return rho(x, y, p) <= p;
        }
        if (!(ny < p && p < kappa_ * ny)) return false;
        if (!(t >= (1.0 / kappa_ + tau_) * ny)) return false;
        const double A2 = k2 * t - p;
        const double rad = (k2 - 1.0) * (k2 * ny * ny - p * p);
        if (!(A2 >= 0.0 && A2 * A2 >= rad)) return false;  // refracting piece
        return rho(x, y, p) <= p;
    }

    SRange s_range(const Vec& x, const Vec& y) const override {
        const double ny = norm(y);
        if (kappa_ < 1.0) {
            // p = e^{-s} must stay above kappa |Y|.
            return {-300.0, -std::log(kappa_ * ny) - 1e-9, true, true};
        }
        // p = e^{+s} in (p_low(t), kappa |Y|), disc >= 0 at the low end.
        const double t = dot(lift_sphere(x, dim()), y);
        const double k2 = kappa_ * kappa_;
        const double plow = t + std::sqrt(std::max(0.0, (k2 - 1.0) * (ny * ny - t * t)));
        const double phigh = std::min(kappa_ * ny * (1.0 - 1e-12), k2 * t);
        if (!(plow < phigh)) throw NumericError("refractor-nf-point: empty dual domain at this (x,y)");
        return {std::log(plow) + 1e-12, std::log(phigh), true, true};
    }

    SampleBox sample_box() const override { return box_; }

    double target_plane_height() const override { return h_; }

    Vec lift_target(const Vec& ychart) const override {
        Vec y = ychart;
        y[dim()] = h_;
        return y;
    }

private:
    double focal(double s) const { return kappa_ < 1.0 ? std::exp(-s) : std::exp(s); }

    // Discriminant in the stable factored form; nonnegative whenever
    // t <= |Y| (kappa < 1) or on the refracting piece (kappa > 1).
    double sqrt_disc(double t, double Y2, double p) const {
        const double k2 = kappa_ * kappa_;
        const double core = kappa_ < 1.0 ? (p - t) * (p - t) + (1.0 - k2) * (Y2 - t * t)
                                         : (p - t) * (p - t) - (k2 - 1.0) * (Y2 - t * t);
        return kappa_ * std::sqrt(std::max(0.0, core));
    }

    // Radial support of the oval along X, in the rationalized form that
    // stays stable when the direct numerator cancels.
    double rho(const Vec& x, const Vec& y, double p) const {
        const double k2 = kappa_ * kappa_;
        const double Y2 = norm2(y);
        const double t = dot(lift_sphere(x, dim()), y);
        const double sq = sqrt_disc(t, Y2, p);
        if (kappa_ < 1.0) return (p * p - k2 * Y2) / ((p - k2 * t) + sq);
        return (k2 * Y2 - p * p) / ((k2 * t - p) + sq);
    }

    double kappa_;
    double h_;
    double tau_;
    SampleBox box_;
};

// --- near-field parallel-beam refractor --------------------------------------

// Inverse ellipsoids focused at (y, plane_height):
//   phi(x,y,s) = kappa s/(1-kappa^2) + sqrt(s^2/(1-kappa^2)^2 - |x-y|^2/(1-kappa^2)) - h.
class ParallelRefractorFamily final : public ConstraintFamily {
public:
    ParallelRefractorFamily(int n, double kappa, double plane_height, double delta, SampleBox box)
        : ConstraintFamily("refractor-nf-parallel", n, n, kappa / (1.0 - kappa * kappa)),
          kappa_(kappa),
          h_(plane_height),
          delta_(delta),
          box_(box) {
        if (!(kappa > 0.0 && kappa < 1.0))
            throw std::invalid_argument("refractor-nf-parallel: kappa must lie in (0,1)");
        set_closed_second(true);
    }

    double snell_ratio() const override { return kappa_; }
    double target_plane_height() const override { return h_; }

    // Weight window from the supporting-surface geometry.
    double v_lo() const { return h_ * (1.0 - kappa_ * kappa_) / kappa_; }
    double v_hi() const {
        const double k = kappa_;
        return h_ * (1.0 - k * k) * (1.0 + k) * (1.0 + k) / (k * k * k);
    }

    double phi(const Vec& x, const Vec& y, double s) const override {
        const double w = 1.0 - kappa_ * kappa_;
        return kappa_ * s / w + R(x, y, s) - h_;
    }
    double phi_s(const Vec& x, const Vec& y, double s) const override {
        const double w = 1.0 - kappa_ * kappa_;
        return kappa_ / w + s / (w * w * R(x, y, s));
    }
    Vec phi_x(const Vec& x, const Vec& y, double s) const override {
        const double w = 1.0 - kappa_ * kappa_;
        const double r = R(x, y, s);
        Vec out;
        for (int i = 0; i < dim(); ++i) out[i] = -(x[i] - y[i]) / (w * r);
        return out;
    }
    Vec phi_y(const Vec& x, const Vec& y, double s) const override { return -phi_x(x, y, s); }
    Vec phi_xs(const Vec& x, const Vec& y, double s) const override {
        const double w = 1.0 - kappa_ * kappa_;
        const double r = R(x, y, s);
        Vec out;
        for (int i = 0; i < dim(); ++i) out[i] = (x[i] - y[i]) * s / (w * w * w * r * r * r);
        return out;
    }
    Mat phi_xx(const Vec& x, const Vec& y, double s) const override {
        const double w = 1.0 - kappa_ * kappa_;
        const double r = R(x, y, s);
        const Vec d = x - y;
        return identity(dim(), -1.0 / (w * r)) - (1.0 / (w * w * r * r * r)) * outer(d, d);
    }
    Mat phi_xy(const Vec& x, const Vec& y, double s) const override {
        const double w = 1.0 - kappa_ * kappa_;
        const double r = R(x, y, s);
        const Vec d = x - y;
        return identity(dim(), 1.0 / (w * r)) + (1.0 / (w * w * r * r * r)) * outer(d, d);
    }

    bool valid(const Vec& x, const Vec& y, double s) const override {
        if (!(s >= v_lo() && s <= v_hi())) return false;
        const double w = 1.0 - kappa_ * kappa_;
        const double d2 = norm2_n(x - y, dim());
        if (!(d2 < s * s / w)) return false;  // sqrt domain
        const double aperture = delta_ * h_ * std::sqrt(w) / kappa_;
        return d2 <= aperture * aperture;
    }

    SRange s_range(const Vec& x, const Vec& y) const override {
        const double w = 1.0 - kappa_ * kappa_;
        const double d = std::sqrt(norm2_n(x - y, dim()));
        return {d * std::sqrt(w) * (1.0 + 1e-12) + 1e-300, 64.0, true, false};
    }

    SampleBox sample_box() const override { return box_; }

private:
    double R(const Vec& x, const Vec& y, double s) const {
        const double w = 1.0 - kappa_ * kappa_;
        const double arg = s * s / (w * w) - norm2_n(x - y, dim()) / w;
        return std::sqrt(std::max(arg, 0.0));
    }

    double kappa_;
    double h_;
    double delta_;
    SampleBox box_;
};

SampleBox plane_box(int n, double x_lo, double x_hi, double y_lo, double y_hi, double s_lo, double s_hi) {
    SampleBox b;
    for (int i = 0; i < n; ++i) {
        b.x_lo[i] = x_lo;
        b.x_hi[i] = x_hi;
        b.y_lo[i] = y_lo;
        b.y_hi[i] = y_hi;
    }
    b.s_lo = s_lo;
    b.s_hi = s_hi;
    return b;
}

}  // namespace

std::vector<std::string> catalog_ids() {
    return {"ot-cost",           "reflector-ff",          "refractor-ff",        "reflector-nf-point",
            "reflector-nf-parallel", "refractor-nf-point", "refractor-nf-parallel"};
}

CatalogEntry default_entry(const std::string& id) {
    CatalogEntry e;
    e.id = id;
    if (id == "ot-cost") {
        e.cost = "quadratic";
    } else if (id == "reflector-ff" || id == "refractor-ff") {
        // far-field geometries use the sphere chart on both sides
    } else if (id == "reflector-nf-point") {
        e.plane_height = 1.0;
    } else if (id == "refractor-nf-point") {
        e.plane_height = 2.0;
    } else if (id == "reflector-nf-parallel") {
        e.plane_height = 0.0;  // target plane is the source plane
    } else if (id == "refractor-nf-parallel") {
        e.plane_height = 2.0;
    } else if (id != "test-broken-derivative") {
        throw std::invalid_argument("default_entry: unknown family id " + id);
    }
    return e;
}

std::unique_ptr<ConstraintFamily> make_family(const CatalogEntry& entry) {
    const int n = entry.dim;
    if (n < 1 || n > 2) throw std::invalid_argument("make_family: dim must be 1 or 2");
    const bool custom_s = entry.s_lo != 0.0 || entry.s_hi != 0.0;
    if (custom_s && !(entry.s_lo < entry.s_hi))
        throw std::invalid_argument("make_family: s_lo must be < s_hi");

    std::unique_ptr<ConstraintFamily> fam;
    Vec ref_x{}, ref_ychart{};
    const auto pick_s = [&](double lo, double hi) {
        return custom_s ? std::pair{entry.s_lo, entry.s_hi} : std::pair{lo, hi};
    };

    if (entry.id == "ot-cost" && entry.cost == "quadratic") {
        auto [slo, shi] = pick_s(-1.0, 1.0);
        fam = std::make_unique<CostFamily>("ot-cost", CostFamily::Cost::Quadratic, n, 0.0, 0.0, 0.0,
                                           plane_box(n, 0.0, 1.0, 0.0, 1.0, slo, shi));
        ref_x = plane_box(n, 0.0, 1.0, 0, 1, 0, 1).x_hi * 0.5;
        ref_ychart = ref_x;
    } else if (entry.id == "ot-cost" || entry.id == "reflector-ff" || entry.id == "refractor-ff") {
        const bool reflector = (entry.id == "reflector-ff") || (entry.cost == "log-reflector");
        const bool high = !reflector && entry.kappa > 1.0;
        auto [slo, shi] = pick_s(-1.0, 1.0);
        SampleBox box = plane_box(n, -0.35, 0.35, -0.95, 0.95, slo, shi);
        CostFamily::Cost cost = CostFamily::Cost::LogRefractorLow;
        if (reflector) cost = CostFamily::Cost::LogReflector;
        if (high) {
            cost = CostFamily::Cost::LogRefractorHigh;
            box = plane_box(n, -0.35, 0.35, -0.5, 0.5, slo, shi);
        }
        fam = std::make_unique<CostFamily>(entry.id, cost, n, entry.kappa, entry.delta0, entry.tau, box);
        ref_x = Vec{};
        ref_ychart = Vec{};
        ref_ychart[0] = reflector ? 0.8 : (high ? 0.2 : 0.5);
    } else if (entry.id == "reflector-nf-parallel") {
        auto [slo, shi] = pick_s(0.5, 2.0);
        fam = std::make_unique<ParallelReflectorFamily>(n, plane_box(n, 0.0, 1.0, 0.0, 1.0, slo, shi));
        ref_x = plane_box(n, 0.0, 1.0, 0, 1, 0, 1).x_hi * 0.5;
        ref_ychart = ref_x;
    } else if (entry.id == "reflector-nf-point") {
        auto [slo, shi] = pick_s(-1.6, 1.6);
        fam = std::make_unique<PointReflectorFamily>(n, entry.plane_height, entry.delta0,
                                                     plane_box(n, -0.35, 0.35, -2.0, 2.0, slo, shi));
        ref_x = Vec{};
        ref_ychart = Vec{};
        ref_ychart[0] = 1.4;
    } else if (entry.id == "refractor-nf-point") {
        const bool high = entry.kappa > 1.0;
        auto [slo, shi] = high ? pick_s(0.83, 1.07) : pick_s(-0.68, -0.35);
        fam = std::make_unique<PointRefractorFamily>(n, entry.kappa, entry.plane_height, entry.tau,
                                                     plane_box(n, -0.35, 0.35, -0.45, 0.45, slo, shi));
        ref_x = Vec{};
        ref_ychart = Vec{};
        ref_ychart[0] = high ? 0.1 : 0.2;
    } else if (entry.id == "refractor-nf-parallel") {
        auto [slo, shi] = pick_s(1.7, 4.0);
        fam = std::make_unique<ParallelRefractorFamily>(n, entry.kappa, entry.plane_height, entry.delta,
                                                        plane_box(n, 0.0, 1.0, 0.0, 1.0, slo, shi));
        ref_x = plane_box(n, 0.0, 1.0, 0, 1, 0, 1).x_hi * 0.5;
        ref_ychart = ref_x;
    } else if (entry.id == "test-broken-derivative") {
        fam = std::make_unique<BrokenDerivativeFamily>(n, plane_box(n, 0.0, 1.0, 0.0, 1.0, -1.0, 1.0));
        ref_x = plane_box(n, 0.0, 1.0, 0, 1, 0, 1).x_hi * 0.5;
        ref_ychart = ref_x;
    } else {
        throw std::invalid_argument("make_family: unknown family id " + entry.id);
    }

    // Seed height for solver initialization: the branch value of a
    // representative atom at the middle of the working weight interval.
    // The parallel reflector seeds lower: |Du| = s|x - y| must stay below 1
    // across the unit box, which keeps the anchored solution branch on the
    // raytraceable side.
    const SampleBox box = fam->sample_box();
    double smid = 0.5 * (box.s_lo + box.s_hi);
    if (entry.id == "reflector-nf-parallel") smid = 0.6;
    fam->set_reference_height(-fam->phi(ref_x, fam->lift_target(ref_ychart), smid));
    return fam;
}

}  // namespace sdpot
