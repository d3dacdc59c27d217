#pragma once

#include <string>
#include <vector>

#include "sdpot/constraint.hpp"
#include "sdpot/geometry.hpp"

namespace sdpot {

// Dual weights for a finite atom set plus the induced envelope potential
//   u(x) = min_j -varphi(x, y_j, s_j).
// The family and atoms are referenced, not owned.
struct DualPotential {
    const ConstraintFamily* family = nullptr;
    const AtomicMeasure* atoms = nullptr;
    std::vector<double> s;

    DualPotential() = default;
    DualPotential(const ConstraintFamily& fam, const AtomicMeasure& target, std::vector<double> weights);

    int size() const { return static_cast<int>(s.size()); }
    double branch(const Vec& x, int j) const;  // -varphi(x, y_j, s_j)
    double u(const Vec& x) const;
    // Lowest branch index within tie_eps of the minimum.
    int active(const Vec& x, double tie_eps = 1e-12) const;
};

// s_j = min_i solve_s(x_i, y_j, u_i): the largest weight per atom keeping
// u + varphi <= 0 across the grid.  solve_s failures are rethrown with the
// offending (node, atom) location.
std::vector<double> v_transform(const ConstraintFamily& fam, const SourceGrid& grid,
                                const AtomicMeasure& atoms, const std::vector<double>& u);

// u*_i = min_j -varphi(x_i, y_j, s_j): the lower envelope of the branches.
std::vector<double> u_transform(const ConstraintFamily& fam, const SourceGrid& grid,
                                const AtomicMeasure& atoms, const std::vector<double>& s);

// max over nodes/atoms of the conjugation defect of (u, s): how far each
// side is from being the transform of the other.
double dual_pair_residual(const ConstraintFamily& fam, const SourceGrid& grid,
                          const AtomicMeasure& atoms, const std::vector<double>& u,
                          const std::vector<double>& s);

// One conjugation pass u -> (v*(u), u*(v*)).  The result is a dual pair
// (each the transform of the other, up to root-solve tolerance) with
// u* >= u pointwise.
struct TightenResult {
    std::vector<double> u;
    std::vector<double> s;
    double dual_residual = 0.0;
};
TightenResult tighten(const ConstraintFamily& fam, const SourceGrid& grid, const AtomicMeasure& atoms,
                      const std::vector<double>& u0);

// Cell decomposition induced by the envelope: each node is assigned to its
// lowest active branch.  Ties (branch gap <= tie_eps) are flagged; interface
// nodes (a lattice neighbor with a different assignment) carry the geometric
// boundary band whose quadrature mass bounds cell-mass discretization error.
struct CellDecomposition {
    std::vector<int> active;               // per node
    std::vector<std::vector<int>> cells;   // per atom
    std::vector<double> mass;              // M_j = sum of w_i f_i over cell j
    std::vector<char> tie;                 // per node
    std::vector<char> interface;           // per node
    int tie_count = 0;
    double interface_mass = 0.0;           // sum of w_i f_i over interface nodes
    double total_mass = 0.0;
};
CellDecomposition decompose(const ConstraintFamily& fam, const SourceGrid& grid,
                            const AtomicMeasure& atoms, const std::vector<double>& s,
                            double tie_eps = 1e-12);

// Central-difference gradient of the envelope at an interior node of a
// cell, with the residual of the gradient identity varphi_x + Du = 0.
// Throws std::invalid_argument("nondifferentiable point") when the node or
// a lattice neighbor is missing, tied, or assigned to a different atom.
struct GradientResult {
    Vec du{};
    int atom = -1;
    double residual = 0.0;
};
GradientResult envelope_gradient(const ConstraintFamily& fam, const SourceGrid& grid,
                                 const AtomicMeasure& atoms, const std::vector<double>& s,
                                 const CellDecomposition& cells, int node);

// Per-atom cell-mass defects r_j = M_j - g_j.
struct ResidualReport {
    std::vector<double> r;
    double max_abs = 0.0;
    double max_rel = 0.0;  // max |r_j| / total source mass
    double sum = 0.0;      // telescopes to mass(f) - mass(g)
};
ResidualReport generalized_residual(const SourceGrid& grid, const AtomicMeasure& atoms,
                                    const CellDecomposition& cells);

// Product-convention objective
//   I = sum_i w_i f_i u_i + sum_i sum_j w_i (g_j/total g) varphi(x_i,y_j,s_j),
// the separable functional evaluated with explicit product weights.
double separable_objective(const ConstraintFamily& fam, const SourceGrid& grid,
                           const AtomicMeasure& atoms, const std::vector<double>& u,
                           const std::vector<double>& s);

// Envelope Lipschitz estimate: largest |u_i - u_k| / |x_i - x_k| over
// lattice-adjacent node pairs, against the sampled gradient bound
// sup(|varphi_x| + |varphi_y|) over the validity region.
struct LipschitzReport {
    double max_slope = 0.0;
    double bound = 0.0;
    bool ok = false;
};
LipschitzReport lipschitz_check(const ConstraintFamily& fam, const SourceGrid& grid,
                                const std::vector<double>& u, int samples, std::uint64_t seed);

// Pushforward test: for h in {1, y1, y2, y1*y2, |y|^2} compare
// sum_i w_i f_i h(y_active(i)) against sum_j g_j h(y_j).
struct PushforwardRow {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
    double sup_h = 0.0;  // max |h| over atoms
};
std::vector<PushforwardRow> measure_preservation(const SourceGrid& grid, const AtomicMeasure& atoms,
                                                 const CellDecomposition& cells);

}  // namespace sdpot
