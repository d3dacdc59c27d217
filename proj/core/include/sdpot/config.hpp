#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdpot/catalog.hpp"
#include "sdpot/duality.hpp"
#include "sdpot/geometry.hpp"

namespace sdpot {

// JSON-backed problem descriptions for the command line tool.  Parsing is
// strict (unknown keys are rejected, identifiers are checked against the
// catalogs) and serialization is canonical: serialize(parse(serialize(c)))
// is byte-identical to serialize(c), which is what report hashing and the
// determinism guarantees build on.

struct SourceSpec {
    std::string chart = "box";  // box | disk | sphere-cap
    int dim = 2;
    int resolution = 64;
    std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0};  // box
    std::vector<double> center{0.0, 0.0};            // disk
    double radius = 1.0;                             // disk
    double cap_radius = 0.5;                         // sphere-cap
    std::string density = "uniform";  // uniform | gaussian | coordinate | radial-exp
    std::vector<double> density_center{0.5, 0.5};
    double density_sigma = 0.35;
    int density_axis = 0;
    double density_offset = 0.0;
};

// Atoms are given in target-chart coordinates; the family lift produces
// ambient atoms (plane height or sphere component appended).
struct TargetSpec {
    std::string mode = "explicit";  // explicit | circle | grid | random
    std::vector<std::vector<double>> atoms;
    std::vector<double> weights;  // empty -> uniform; renormalized to source mass
    int count = 2;                // circle/random atoms; grid atoms per axis
    double radius = 0.25;         // circle
    std::vector<double> center{0.5, 0.5};
    double extent = 0.25;  // grid/random window half-width
    std::uint64_t seed = 1;
    bool random_weights = false;
};

struct SolverSpec {
    double tol_mass = 1e-6;
    int max_sweeps = 500;
    int anchor = 0;
    bool newton = false;
    std::vector<double> s0;
};

struct VerifySpec {
    std::string gradient = "fd";  // fd | closed
    double fd_step = 0.0;         // 0 -> grid spacing
    int rays_per_node = 1;        // tracing grid carries this many rays per solve cell
    double tol_hist = 0.01;       // histogram L1 as a fraction of traced mass
    double tol_residual = 1e-6;   // solve residual gate re-checked before tracing
};

struct OutputSpec {
    std::string dir = "out";
    bool cell_map_csv = true;
};

struct ProblemConfig {
    int schema_version = 1;
    CatalogEntry family;
    SourceSpec source;
    TargetSpec targets;
    SolverSpec solver;
    VerifySpec verify;
    OutputSpec output;
};

ProblemConfig parse_problem_config(const std::string& json_text);
ProblemConfig load_problem_config(const std::string& path);
std::string serialize(const ProblemConfig& cfg);

// Structural validation beyond parsing: identifiers, dimensions, counts.
// Throws std::invalid_argument with a named error.
void validate(const ProblemConfig& cfg);

// FNV-1a hash of the canonical serialization minus the output section;
// identifies the mathematical instance a report belongs to.
std::string instance_hash(const ProblemConfig& cfg);

SourceGrid build_source(const SourceSpec& spec);

// Builds the atoms (generators are seeded and deterministic), lifts them
// through the family, and scales the weights to the source mass.
AtomicMeasure build_targets(const TargetSpec& spec, const ConstraintFamily& fam,
                            double source_mass);

// Duality-lab instance description.
struct DualityConfig {
    int schema_version = 1;
    std::string objective = "linear-separable";  // linear-separable | quadratic-concave
    double a = 0.4, b = 0.4, c = 0.1;            // quadratic curvature
    CatalogEntry family;                          // constraint family (default ot-cost)
    // Explicit nodes; empty x/y switches to the seeded generator.
    std::vector<std::vector<double>> x, y;  // y in target-chart coordinates
    std::vector<double> f, g;               // objective coefficients
    std::vector<double> w, ghat;            // product-weight factors
    int nu = 2, nv = 2;                     // generator sizes
    std::uint64_t seed = 1;                 // generator seed
    double t_lo = -2.0, t_hi = 2.0, s_lo = -2.0, s_hi = 2.0;
    bool concave_objective = true;
    bool convex_constraint = true;
    double mu_max = 20.0;
    double tol_gap = 1e-4;
    int trials = 20;  // weak-duality trials
    std::vector<double> mu_samples{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
};

DualityConfig parse_duality_config(const std::string& json_text);
DualityConfig load_duality_config(const std::string& path);
std::string serialize(const DualityConfig& cfg);
void validate(const DualityConfig& cfg);
std::string instance_hash(const DualityConfig& cfg);

LabInstance build_lab(const DualityConfig& cfg);

}  // namespace sdpot
