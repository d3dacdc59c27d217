#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sdpot/transforms.hpp"

namespace sdpot {

struct SolveOptions {
    double tol_mass = 1e-6;   // relative to total source mass
    int max_sweeps = 500;
    int anchor = 0;           // gauge: this atom's weight stays at its initial value
    int bisection_depth = 80; // cap on the monotone mass-curve bisection per update
    bool newton = false;      // damped-Newton acceleration after each sweep
    // Optional initial weights (size = atom count).  Empty seeds every
    // branch through the family reference height at the grid centroid.  The
    // anchor keeps its initial value, so this selects the solution branch.
    std::vector<double> s0;
};

struct SolveReport {
    std::vector<double> s;
    std::vector<double> residuals;      // M_j - target_j (renormalized target)
    double max_rel_residual = 0.0;      // max |residual| / total source mass
    int sweeps = 0;
    bool converged = false;
    double wall_ms = 0.0;
    double objective = 0.0;             // product-convention diagnostic
    double dual_residual = 0.0;         // conjugation defect after one tighten
    double target_scale = 1.0;          // mass(f)/mass(g) applied to g internally
    std::vector<double> sweep_deficits; // max non-anchor deficit after each sweep
    std::string diagnostic;
};

struct SolveResult {
    DualPotential potential;
    std::vector<double> u;
    SolveReport report;
};

// Supporting-surface coordinate sweeps: for each non-anchor atom in turn,
// move s_j to match its cell mass to the target with the other weights
// frozen, using the monotonicity of M_j(s_j).  Targets are renormalized by
// mass(f)/mass(g) so the per-cell system is consistent; balance_check at
// 1e-3 is a precondition.  Returns the best iterate with diagnostics on
// non-convergence instead of throwing.
SolveResult solve_semidiscrete(const ConstraintFamily& fam, const SourceGrid& grid,
                               const AtomicMeasure& atoms, const SolveOptions& opts = {});

// M_j(s) with the other weights frozen; monotone nondecreasing in s.
std::vector<double> cell_mass_curve(const ConstraintFamily& fam, const SourceGrid& grid,
                                    const AtomicMeasure& atoms, const std::vector<double>& s, int j,
                                    const std::vector<double>& s_samples);

// Discrete-discrete optimal transport on a square unit-mass instance:
// shortest-augmenting-path assignment with dual potentials satisfying
// u_i + v_j <= cost[i][j], equality on matched pairs; value is both the
// primal assignment cost and sum(u) + sum(v) (strong duality).
struct DiscreteOtResult {
    std::vector<int> assignment;  // row -> column
    std::vector<double> u, v;
    double value = 0.0;
};
DiscreteOtResult solve_discrete_ot(const std::vector<std::vector<double>>& cost);

// Exhaustive permutation oracle, N <= 8; primal only.
DiscreteOtResult discrete_oracle_ot(const std::vector<std::vector<double>>& cost);

}  // namespace sdpot
