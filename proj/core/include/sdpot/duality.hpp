#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sdpot/constraint.hpp"

namespace sdpot {

// Finite Lagrangian-duality lab.  Everything here works on explicit small
// instances: value boxes replace function spaces, inner maximizations are
// multi-start coordinate ascent, and a dense grid search serves as the
// oracle on up-to-4-variable instances.

// Objective catalog.  Linear-separable is f t + g s; quadratic-concave
// subtracts the form (a t^2 + b s^2)/2 + c t s, which is strictly concave
// when a, b > 0 and a b > c^2 and couples t with s when c != 0.
struct ObjectiveF {
    enum class Kind { LinearSeparable, QuadraticConcave };
    Kind kind = Kind::LinearSeparable;
    double a = 0.0, b = 0.0, c = 0.0;

    double value(double f, double g, double t, double s) const;
    double dt(double f, double g, double t, double s) const;
    double ds(double f, double g, double t, double s) const;
    bool concave() const;
    bool strictly_concave() const;
    std::string name() const;
};

struct FiniteInstance {
    std::vector<Vec> x;  // source nodes, chart coordinates
    std::vector<Vec> y;  // target nodes, ambient (lifted) coordinates
    std::vector<double> f, g;                // objective coefficients per node
    std::vector<std::vector<double>> omega;  // positive coupling weights, nu x nv
    const ConstraintFamily* family = nullptr;
    ObjectiveF F;
    double t_lo = -1.0, t_hi = 1.0;  // value box for u entries
    double s_lo = -1.0, s_hi = 1.0;  // value box for v entries
    bool concave_objective = false;  // Hessian of F in (t,s) nonpositive, claimed
    bool convex_constraint = false;  // varphi convex in s, claimed

    int nu() const { return static_cast<int>(x.size()); }
    int nv() const { return static_cast<int>(y.size()); }
    void validate() const;  // throws std::invalid_argument on malformed data
};

// Feasibility functional min_{ij} -(u_i + varphi(x_i, y_j, v_j)); the pair
// is feasible iff psi >= 0.
double psi(const FiniteInstance& inst, const std::vector<double>& u, const std::vector<double>& v);

// I(u,v) = sum_{ij} omega_{ij} F(x_i, y_j, u_i, v_j).
double instance_objective(const FiniteInstance& inst, const std::vector<double>& u,
                          const std::vector<double>& v);

// L(u,v,mu) = I + mu psi.
double lagrangian(const FiniteInstance& inst, const std::vector<double>& u,
                  const std::vector<double>& v, double mu);

struct InnerOptions {
    int starts = 8;
    int sweeps = 40;        // coordinate passes per start
    double tol = 1e-10;     // sweep improvement stop
    std::uint64_t seed = 1237;
};

struct InnerResult {
    double value = 0.0;
    std::vector<double> u, v;
    bool improved = false;  // at least one ascent step helped
};

// J(mu) = sup over the box of L, by multi-start projected coordinate ascent
// with golden-section line steps.  mu may be negative for probes.
InnerResult dual_inner_max(const FiniteInstance& inst, double mu, const InnerOptions& opts = {});
double dual_J(const FiniteInstance& inst, double mu, const InnerOptions& opts = {});

// Primal sup of I over the feasible part of the box; coordinate intervals
// come from the constraint (solve_s bounds for v, branch minima for u).
InnerResult feasible_max(const FiniteInstance& inst, const InnerOptions& opts = {});

struct GapOptions {
    double mu_max = 20.0;
    double tol_gap = 1e-4;
    InnerOptions inner{};
};

struct GapReport {
    double primal = 0.0;      // I*
    double dual = 0.0;        // J* = min_{mu >= 0} J(mu)
    double gap = 0.0;         // J* - I*
    double multiplier = 0.0;  // argmin mu*
    double slackness = 0.0;   // mu* psi(u*, v*) at the feasible maximizer
    double slater_margin = 0.0;  // max psi found over the box
    bool flags_hold = false;     // concave F, convex varphi, positive Slater margin
    bool asserted = false;       // flags hold and |gap| passed tol_gap
    std::vector<double> u_star, v_star;
};

// Primal and dual optima with multiplier and complementary slackness; the
// no-gap conclusion is only meaningful when flags_hold.
GapReport gap_experiment(const FiniteInstance& inst, const GapOptions& opts = {});

// I(u,v) <= J(mu) + tol for random feasible pairs and random mu >= 0.
bool weak_duality_check(const FiniteInstance& inst, int trials, std::uint64_t seed,
                        double tol = 1e-6);

// Max midpoint-convexity violation of J over all pairs of the samples.
double convexity_probe(const FiniteInstance& inst, const std::vector<double>& mu_samples,
                       const InnerOptions& opts = {});

struct HcProbe {
    bool found_distinct = false;
    double margin = 0.0;        // I(midpoint) - average I of the two pairs
    double midpoint_psi = 0.0;  // feasibility of the midpoint pair
    double separation = 0.0;    // max-norm distance between the two pairs
};

// Midpoint-improvement probe behind the uniqueness argument: two distinct
// feasible pairs, their midpoint stays feasible (convex varphi) and strictly
// improves the averaged objective when F is strictly concave.
HcProbe hc_uniqueness_probe(const FiniteInstance& inst, std::uint64_t seed = 99, int tries = 32);

// sum_{ij} omega_{ij} (-F_t + F_s / varphi_s) at (u, v); vanishes at
// balanced maximizers.
double balance_residual(const FiniteInstance& inst, const std::vector<double>& u,
                        const std::vector<double>& v);

// Dense oracle over the box, nu + nv <= 4 variables; optionally restricted
// to the feasible set.  Extra rounds re-grid a shrunken window around the
// incumbent (+/- 2 steps), sharpening the value on unimodal landscapes.
double grid_search_max(const FiniteInstance& inst, double mu, int per_axis, bool feasible_only,
                       int rounds = 1);

// Shipped instance builders (coefficients in [0.5, 1.5], nodes in the unit
// box, coupling = product weights, quadratic-cost constraint family).
struct LabInstance {
    std::unique_ptr<ConstraintFamily> family;
    FiniteInstance inst;
};

LabInstance lab_linear_instance(int nu, int nv, std::uint64_t seed);
LabInstance lab_quadratic_instance(int nu, int nv, std::uint64_t seed, double a = 0.4,
                                   double b = 0.4, double c = 0.1);

}  // namespace sdpot
