#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sdpot/geometry.hpp"
#include "sdpot/transforms.hpp"

namespace sdpot {

// Raytracing verification layer.  The tracers rebuild the optical surface
// from the dual weights alone (envelope heights plus finite-difference
// normals) and push rays through mirror/lens physics, so agreement with the
// cell decomposition is an independent check of the constraint formulas
// rather than a restatement of them.

struct Ray {
    Vec origin{};     // ambient coordinates, R^{n+1}
    Vec direction{};  // unit length within 1e-14
};

// Mirror law d - 2<d,n>n.  dim is the ambient dimension.
Vec reflect_direction(const Vec& d, const Vec& normal, int dim);

// Vector Snell law with index ratio r = n_in/n_out; the normal may face
// either side of the surface.  Returns nullopt on total internal reflection.
std::optional<Vec> snell_refract(const Vec& d, const Vec& normal, double ratio, int dim);

// Where tracer surface normals come from.  FdEnvelope differentiates the
// assembled envelope potential (exercises solver output, O(step^2) error);
// ClosedFormBranch uses the active branch's gradient (isolates FD error in
// single-atom oracle tests).
enum class GradientMode { FdEnvelope, ClosedFormBranch };

struct TraceReport {
    std::vector<Vec> hit;       // target-chart hit coordinates per node
    std::vector<int> hit_atom;  // nearest atom per node, -1 on miss
    std::vector<char> traced;   // 1 if the node's ray produced a hit
    std::vector<double> atom_mass;

    double traced_mass = 0.0;  // all node mass (every node is attempted)
    double hit_mass = 0.0;
    double miss_mass = 0.0;
    int miss_count = 0;
    int tir_count = 0;

    double hist_l1 = 0.0;      // sum_j |atom hit mass - scaled g_j|
    double hist_l1_rel = 0.0;  // hist_l1 / source mass
};

// Vertical rays reflected off the graph of u onto the source plane {z = 0}.
// Throws NumericError if u <= 0 or |Du| >= 1 at any node.
TraceReport trace_parallel_reflector(const SourceGrid& grid, const DualPotential& pot,
                                     GradientMode mode, double fd_step = 0.0);

// Radial rays from the origin reflected off {X e^{u(X)}} onto the plane
// {z = h}; rays that cannot reach the plane are counted as misses.
TraceReport trace_point_reflector(const SourceGrid& grid, const DualPotential& pot,
                                  GradientMode mode, double fd_step = 0.0);

// Snell refraction, point or parallel source depending on the family.
// Total internal reflection at a node is a counted miss, not an error.
TraceReport trace_refractor(const SourceGrid& grid, const DualPotential& pot,
                            GradientMode mode, double fd_step = 0.0);

struct MapAgreement {
    double max_distance = 0.0;     // sup |cell atom - raytraced hit| off the interface band
    double match_fraction = 0.0;   // mass fraction with hit atom == cell atom
    double match_mass = 0.0;
    double mismatch_mass = 0.0;    // traced-but-elsewhere plus missed mass
    double boundary_band_mass = 0.0;
    int interior_nodes = 0;
};

// Compares the raytraced hits against the cell decomposition induced by the
// same weights.  Rejects families without an optical surface.
MapAgreement map_agreement(const SourceGrid& grid, const DualPotential& pot,
                           const TraceReport& trace);

struct MaResidualReport {
    // Per-node fields, NaN where the stencil does not fit.
    std::vector<double> residual;      // det[D^2u + A I] - rhs
    std::vector<double> jac_residual;  // |det DT| - f/(g o T)
    double max_residual = 0.0;
    double max_jac_residual = 0.0;
    int interior_nodes = 0;
    int jac_nodes = 0;
};

// Second-order residual of the parallel-beam reflector equation
//   det[D^2u + (1-|Du|^2)/(2u) I] = (1-|Du|^2)^{n+1} / ((2u)^n (1+|Du|^2)) f/g(T)
// with T(x) = x + 2u Du/(1-|Du|^2), plus the independent map-Jacobian
// identity, both from lattice finite differences of the supplied u values.
MaResidualReport ma_residual_parallel(const SourceGrid& grid, const std::vector<double>& u,
                                      const std::function<double(const Vec&)>& f_density,
                                      const std::function<double(const Vec&)>& g_density);

// |det DT| - f/(g o T) for an arbitrary map evaluated off-lattice with
// central differences of spacing step (grid spacing when step <= 0).
std::vector<double> jacobian_identity_field(const SourceGrid& grid,
                                            const std::function<Vec(const Vec&)>& map,
                                            const std::function<double(const Vec&)>& f_density,
                                            const std::function<double(const Vec&)>& g_density,
                                            double step = 0.0);

}  // namespace sdpot
