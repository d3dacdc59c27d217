#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sdpot/vec.hpp"

namespace sdpot {

// Thrown when a numeric routine cannot satisfy its contract (no bracket,
// iteration cap, invalid state); distinct from std::invalid_argument which
// flags caller errors.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Admissible s-interval for root finding at fixed (x, y).  Soft ends may be
// expanded by the bracketing search; hard ends are domain boundaries the
// evaluator cannot cross.
struct SRange {
    double lo = -1.0;
    double hi = 1.0;
    bool hard_lo = false;
    bool hard_hi = false;
};

// Axis-aligned sampling region used by the derivative/monotonicity/H2
// checks: x in chart coordinates, y in target-chart coordinates (the first
// n components of the ambient atom), s scalar.  Points are rejection
// sampled against valid().
struct SampleBox {
    Vec x_lo{}, x_hi{};
    Vec y_lo{}, y_hi{};
    double s_lo = 0.0, s_hi = 1.0;
};

// A constraint family phi(x, y, s), strictly increasing in s with
// phi_s >= theta0 > 0 on its validity region.  x is a source chart
// coordinate in R^n; y is an ambient atom (dimension target_dim()); s is
// the scalar dual weight of the atom.
//
// Derivative conventions: phi_x and phi_xx differentiate in the source
// chart coordinates.  phi_y and phi_xy differentiate in the atom's
// target-chart coordinates (its first n components), holding the lift --
// plane height or sphere constraint -- fixed, so the derivative matrices
// stay square (n x n).  First derivatives are closed-form for every
// shipped family; second derivatives default to central differences of the
// first derivatives unless a family overrides them.
class ConstraintFamily {
public:
    virtual ~ConstraintFamily() = default;

    const std::string& id() const { return id_; }
    int dim() const { return n_; }
    int target_dim() const { return m_; }

    // Positive lower bound for phi_s on the validity region.
    double theta0() const { return theta0_; }

    // A potential height at which a single supporting branch is well
    // placed; solvers seed their weights by pushing every branch through
    // this height at the grid centroid.
    double reference_height() const { return ref_height_; }
    void set_reference_height(double t) { ref_height_ = t; }

    bool closed_form_second_derivatives() const { return closed_second_; }

    virtual double phi(const Vec& x, const Vec& y, double s) const = 0;
    virtual double phi_s(const Vec& x, const Vec& y, double s) const = 0;
    virtual Vec phi_x(const Vec& x, const Vec& y, double s) const = 0;
    virtual Vec phi_y(const Vec& x, const Vec& y, double s) const = 0;
    virtual Mat phi_xx(const Vec& x, const Vec& y, double s) const;
    virtual Mat phi_xy(const Vec& x, const Vec& y, double s) const;
    virtual Vec phi_xs(const Vec& x, const Vec& y, double s) const;

    virtual bool valid(const Vec& x, const Vec& y, double s) const = 0;
    virtual SRange s_range(const Vec& x, const Vec& y) const = 0;
    virtual SampleBox sample_box() const = 0;

    // Rebuild the ambient atom from target-chart coordinates: plane targets
    // append their fixed height, sphere targets append omega(y'); flat
    // targets (m == n) return the input unchanged.
    virtual Vec lift_target(const Vec& ychart) const;

    // n_in/n_out for Snell refraction through the surface described by u;
    // NaN for families without a refracting surface.
    virtual double snell_ratio() const;

    // Height of the target plane {y_ambient = h} for families whose atoms
    // live on one; NaN otherwise.
    virtual double target_plane_height() const;

protected:
    ConstraintFamily(std::string id, int n, int m, double theta0)
        : id_(std::move(id)), n_(n), m_(m), theta0_(theta0) {}

    void set_closed_second(bool v) { closed_second_ = v; }

private:
    std::string id_;
    int n_;
    int m_;
    double theta0_;
    double ref_height_ = 0.0;
    bool closed_second_ = false;
};

// Full evaluator bundle at one point.
struct Derivs {
    double phi = 0.0;
    double phi_s = 0.0;
    Vec phi_x{}, phi_y{}, phi_xs{};
    Mat phi_xx{}, phi_xy{};
};

Derivs evaluate(const ConstraintFamily& fam, const Vec& x, const Vec& y, double s);

// Root of t + phi(x, y, s) = 0 in s; equivalently s = -phi^*(x, y, t), the
// largest weight compatible with potential height t at x.  Safeguarded
// Newton/bisection with geometric bracket expansion on soft range ends;
// terminates at |t + phi| <= 1e-12 * (1 + |t|) or throws NumericError when
// t lies outside the dual domain.
double solve_s(const ConstraintFamily& fam, const Vec& x, const Vec& y, double t);

struct DerivativeReport {
    double err_phi_s = 0.0;
    double err_phi_x = 0.0;
    double err_phi_y = 0.0;
    double err_phi_xx = 0.0;
    double err_phi_xy = 0.0;
    double err_phi_xs = 0.0;
    int samples = 0;

    double max_error() const;
};

// Compares analytic evaluators against central differences of phi (step
// 1e-6 with one Richardson refinement).  Second derivatives are compared
// against differences of the first-derivative evaluators; for families
// whose seconds are themselves finite differences this degenerates to a
// two-step-size consistency check, which is the intended behavior.
DerivativeReport check_derivatives(const ConstraintFamily& fam, int samples, std::uint64_t seed);

struct H2Report {
    double min_abs_det = 0.0;
    double max_abs_det = 0.0;
    bool sign_constant = true;
    int samples = 0;
};

// det of phi_xy - (1/phi_s) phi_xs (x) phi_y over sampled valid points;
// a uniformly nonzero determinant is the injectivity/regularity condition
// on the induced map.
Mat h2_matrix(const ConstraintFamily& fam, const Vec& x, const Vec& y, double s);
H2Report check_h2(const ConstraintFamily& fam, int samples, std::uint64_t seed);

struct MonotonicityReport {
    double min_phi_s = 0.0;
    double theta0 = 0.0;
    bool ok = false;
    int samples = 0;
};

MonotonicityReport check_monotonicity(const ConstraintFamily& fam, int samples, std::uint64_t seed);

// Rejection-samples a valid (x, y-ambient, s) triple from the family's
// sample box; throws NumericError after max_tries failures.
struct SamplePoint {
    Vec x{};
    Vec y{};
    double s = 0.0;
};
SamplePoint sample_valid_point(const ConstraintFamily& fam, class Rng& rng, int max_tries = 10000);

}  // namespace sdpot
