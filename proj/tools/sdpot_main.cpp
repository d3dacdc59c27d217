// Batch front door: solve / verify / duality / check workflows over JSON
// configs.  Reports are deterministic for a fixed config and seed; wall
// times go to a separate timing sidecar so the main report bytes stay
// reproducible.
//
// Exit codes: 0 success, 2 configuration or validation failure, 3 numeric
// failure (non-convergence, tolerance exceeded, broken derivatives).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "sdpot/config.hpp"
#include "sdpot/optics.hpp"
#include "sdpot/solver.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;
using namespace sdpot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

class Stopwatch {
  public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
    }

  private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_report(const fs::path& path, const njson& j) { write_text(path, j.dump(2) + "\n"); }

void write_timing(const fs::path& dir, const std::string& name, double wall_ms,
                  const njson& extra = njson::object()) {
    njson t = extra;
    t["wall_ms"] = wall_ms;
    write_report(dir / name, t);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// --- solve ---

int cmd_solve(const ProblemConfig& cfg, const fs::path& out_dir) {
    Stopwatch watch;
    auto fam = make_family(cfg.family);
    SourceGrid grid = build_source(cfg.source);
    AtomicMeasure atoms = build_targets(cfg.targets, *fam, grid.mass());

    SolveOptions opts;
    opts.tol_mass = cfg.solver.tol_mass;
    opts.max_sweeps = cfg.solver.max_sweeps;
    opts.anchor = cfg.solver.anchor;
    opts.newton = cfg.solver.newton;
    opts.s0 = cfg.solver.s0;

    SolveResult result = solve_semidiscrete(*fam, grid, atoms, opts);
    const SolveReport& rep = result.report;

    njson j{{"schema_version", 1},
            {"command", "solve"},
            {"instance_hash", instance_hash(cfg)},
            {"family", cfg.family.id},
            {"nodes", grid.size()},
            {"source_mass", grid.mass()},
            {"atoms", atoms.size()},
            {"target_scale", rep.target_scale},
            {"anchor", cfg.solver.anchor},
            {"seed", cfg.targets.seed},
            {"converged", rep.converged},
            {"sweeps", rep.sweeps},
            {"s", rep.s},
            {"residuals", rep.residuals},
            {"max_rel_residual", rep.max_rel_residual},
            {"objective", rep.objective},
            {"dual_residual", rep.dual_residual},
            {"diagnostic", rep.diagnostic},
            {"timing_file", "solve_timing.json"}};
    write_report(out_dir / "solve_report.json", j);

    if (cfg.output.cell_map_csv) {
        CellDecomposition cells = decompose(*fam, grid, atoms, rep.s);
        std::string csv = "x0,x1,active,u\n";
        for (int i = 0; i < grid.size(); ++i) {
            csv += fmt(grid.x[i][0]) + "," + fmt(grid.x[i][1]) + "," +
                   std::to_string(cells.active[i]) + "," + fmt(result.u[i]) + "\n";
        }
        write_text(out_dir / "cell_map.csv", csv);
    }
    write_timing(out_dir, "solve_timing.json", watch.ms(), njson{{"sweeps", rep.sweeps}});

    std::printf("solve: %s, %d sweeps, max rel residual %.3e\n",
                rep.converged ? "converged" : "no convergence", rep.sweeps, rep.max_rel_residual);
    return rep.converged ? kExitOk : kExitNumeric;
}

// --- verify ---

int cmd_verify(const ProblemConfig& cfg, const fs::path& out_dir, const fs::path& report_path,
               std::optional<double> tol_override, std::optional<int> rays_override) {
    Stopwatch watch;

    std::ifstream in(report_path);
    if (!in) {
        std::fprintf(stderr, "validation error: cannot open solve report %s\n",
                     report_path.string().c_str());
        return kExitConfig;
    }
    njson solve_rep;
    try {
        solve_rep = njson::parse(in);
    } catch (const njson::exception& e) {
        std::fprintf(stderr, "validation error: bad solve report: %s\n", e.what());
        return kExitConfig;
    }
    const std::string want = instance_hash(cfg);
    const std::string got = solve_rep.value("instance_hash", "");
    if (want != got) {
        std::fprintf(stderr, "validation error: instance hash mismatch (config %s, report %s)\n",
                     want.c_str(), got.c_str());
        return kExitConfig;
    }

    auto fam = make_family(cfg.family);
    SourceGrid grid = build_source(cfg.source);
    AtomicMeasure atoms = build_targets(cfg.targets, *fam, grid.mass());
    std::vector<double> s = solve_rep.at("s").get<std::vector<double>>();
    if (static_cast<int>(s.size()) != atoms.size()) {
        std::fprintf(stderr, "validation error: report weight count does not match targets\n");
        return kExitConfig;
    }
    DualPotential pot(*fam, atoms, s);

    // Rays per solve cell scale the tracing lattice.
    const int rays = rays_override.value_or(cfg.verify.rays_per_node);
    int trace_res = cfg.source.resolution;
    if (rays > 1) {
        const double per_axis = cfg.source.dim == 1 ? rays : std::sqrt(double(rays));
        trace_res = static_cast<int>(std::ceil(cfg.source.resolution * per_axis));
    }
    SourceSpec trace_spec = cfg.source;
    trace_spec.resolution = trace_res;
    SourceGrid trace_grid = build_source(trace_spec);

    const GradientMode mode =
        cfg.verify.gradient == "closed" ? GradientMode::ClosedFormBranch : GradientMode::FdEnvelope;

    TraceReport trace;
    const std::string& id = cfg.family.id;
    if (id == "reflector-nf-parallel") {
        trace = trace_parallel_reflector(trace_grid, pot, mode, cfg.verify.fd_step);
    } else if (id == "reflector-nf-point") {
        trace = trace_point_reflector(trace_grid, pot, mode, cfg.verify.fd_step);
    } else if (id == "refractor-nf-point" || id == "refractor-nf-parallel") {
        trace = trace_refractor(trace_grid, pot, mode, cfg.verify.fd_step);
    } else {
        std::fprintf(stderr, "validation error: family %s has no raytracing oracle\n", id.c_str());
        return kExitConfig;
    }

    MapAgreement agree = map_agreement(trace_grid, pot, trace);
    CellDecomposition cells = decompose(*fam, trace_grid, atoms, s);
    ResidualReport res = generalized_residual(trace_grid, atoms, cells);
    const double target_scale = trace_grid.mass() / atoms.total();

    const double tol_hist = tol_override.value_or(cfg.verify.tol_hist);
    const bool pass = trace.hist_l1_rel <= tol_hist;

    njson j{{"schema_version", 1},
            {"command", "verify"},
            {"instance_hash", want},
            {"family", id},
            {"gradient", cfg.verify.gradient},
            {"rays_per_node", rays},
            {"trace_resolution", trace_res},
            {"nodes_traced", trace_grid.size()},
            {"traced_mass", trace.traced_mass},
            {"hit_mass", trace.hit_mass},
            {"miss_mass", trace.miss_mass},
            {"miss_count", trace.miss_count},
            {"tir_count", trace.tir_count},
            {"hist_l1", trace.hist_l1},
            {"hist_l1_rel", trace.hist_l1_rel},
            {"match_fraction", agree.match_fraction},
            {"match_mass", agree.match_mass},
            {"mismatch_mass", agree.mismatch_mass},
            {"boundary_band_mass", agree.boundary_band_mass},
            {"max_map_distance", agree.max_distance},
            {"max_rel_cell_residual", res.max_rel},
            {"tol_hist", tol_hist},
            {"pass", pass},
            {"timing_file", "verify_timing.json"}};
    write_report(out_dir / "trace_report.json", j);

    std::string rays_csv = "x0,x1,u,active,hit_atom,hit0,hit1,hit2,mass\n";
    for (int i = 0; i < trace_grid.size(); ++i) {
        const Vec& x = trace_grid.x[i];
        rays_csv += fmt(x[0]) + "," + fmt(x[1]) + "," + fmt(pot.u(x)) + "," +
                    std::to_string(cells.active[i]) + "," + std::to_string(trace.hit_atom[i]) +
                    "," + fmt(trace.hit[i][0]) + "," + fmt(trace.hit[i][1]) + "," +
                    fmt(trace.hit[i][2]) + "," + fmt(trace_grid.wf[i]) + "\n";
    }
    write_text(out_dir / "rays.csv", rays_csv);

    std::string res_csv = "atom,target_mass,cell_mass,hit_mass,residual\n";
    for (int jd = 0; jd < atoms.size(); ++jd) {
        res_csv += std::to_string(jd) + "," + fmt(atoms.g[jd] * target_scale) + "," +
                   fmt(cells.mass[jd]) + "," + fmt(trace.atom_mass[jd]) + "," + fmt(res.r[jd]) +
                   "\n";
    }
    write_text(out_dir / "residuals.csv", res_csv);
    write_timing(out_dir, "verify_timing.json", watch.ms(),
                 njson{{"nodes_traced", trace_grid.size()}});

    std::printf("verify: hist L1 %.4e (tol %.1e), map match %.4f%%, %s\n", trace.hist_l1_rel,
                tol_hist, 100.0 * agree.match_fraction, pass ? "pass" : "FAIL");
    return pass ? kExitOk : kExitNumeric;
}

// --- duality ---

int cmd_duality(const DualityConfig& cfg, const fs::path& out_dir) {
    Stopwatch watch;
    LabInstance lab = build_lab(cfg);
    const FiniteInstance& inst = lab.inst;

    GapOptions gopts;
    gopts.mu_max = cfg.mu_max;
    gopts.tol_gap = cfg.tol_gap;
    gopts.inner.seed = cfg.seed;
    GapReport gap = gap_experiment(inst, gopts);

    const bool weak_ok = weak_duality_check(inst, cfg.trials, cfg.seed + 1);
    const double convexity = convexity_probe(inst, cfg.mu_samples, gopts.inner);

    njson j{{"schema_version", 1},
            {"command", "duality"},
            {"instance_hash", instance_hash(cfg)},
            {"objective", inst.F.name()},
            {"family", cfg.family.id},
            {"nu", inst.nu()},
            {"nv", inst.nv()},
            {"seed", cfg.seed},
            {"primal", gap.primal},
            {"dual", gap.dual},
            {"gap", gap.gap},
            {"multiplier", gap.multiplier},
            {"slackness", gap.slackness},
            {"slater_margin", gap.slater_margin},
            {"flags_hold", gap.flags_hold},
            {"gap_asserted", gap.asserted},
            {"tol_gap", cfg.tol_gap},
            {"weak_duality_ok", weak_ok},
            {"weak_duality_trials", cfg.trials},
            {"convexity_violation", convexity},
            {"timing_file", "duality_timing.json"}};

    if (inst.F.strictly_concave()) {
        HcProbe hc = hc_uniqueness_probe(inst, cfg.seed + 2);
        j["hc_probe"] = njson{{"found_distinct", hc.found_distinct},
                              {"margin", hc.margin},
                              {"midpoint_psi", hc.midpoint_psi},
                              {"separation", hc.separation}};
    }
    write_report(out_dir / "gap_report.json", j);
    write_timing(out_dir, "duality_timing.json", watch.ms());

    std::printf("duality: I*=%.6f J*=%.6f gap=%.3e (%s), weak duality %s\n", gap.primal, gap.dual,
                gap.gap, gap.flags_hold ? (gap.asserted ? "asserted" : "EXCEEDED") : "unasserted",
                weak_ok ? "ok" : "VIOLATED");

    if (!weak_ok) return kExitNumeric;
    if (gap.flags_hold && !gap.asserted) return kExitNumeric;
    return kExitOk;
}

// --- check ---

int cmd_check(const std::string& family_id, int samples, std::uint64_t seed, double tol,
              const fs::path& out_dir) {
    Stopwatch watch;
    if (samples < 1) {
        std::fprintf(stderr, "validation error: samples must be positive\n");
        return kExitConfig;
    }
    CatalogEntry entry = default_entry(family_id);
    auto fam = make_family(entry);

    DerivativeReport d = check_derivatives(*fam, samples, seed);
    H2Report h2 = check_h2(*fam, samples, seed + 1);
    MonotonicityReport mono = check_monotonicity(*fam, samples, seed + 2);

    // First derivatives are closed-form everywhere and gate at tol.  For
    // families whose second derivatives fall back to finite differences the
    // comparison is a two-step consistency check and gates at 1e-3.
    double firsts = std::max({d.err_phi_s, d.err_phi_x, d.err_phi_y});
    double seconds = std::max({d.err_phi_xx, d.err_phi_xy, d.err_phi_xs});
    const double seconds_gate = fam->closed_form_second_derivatives() ? tol : 1e-3;
    const bool deriv_ok = firsts <= tol && seconds <= seconds_gate;
    const bool h2_ok = h2.sign_constant && h2.min_abs_det > 0.0;
    const bool pass = deriv_ok && h2_ok && mono.ok;

    njson j{{"schema_version", 1},
            {"command", "check"},
            {"family", family_id},
            {"samples", samples},
            {"seed", seed},
            {"err_phi_s", d.err_phi_s},
            {"err_phi_x", d.err_phi_x},
            {"err_phi_y", d.err_phi_y},
            {"err_phi_xx", d.err_phi_xx},
            {"err_phi_xy", d.err_phi_xy},
            {"err_phi_xs", d.err_phi_xs},
            {"closed_form_seconds", fam->closed_form_second_derivatives()},
            {"tol", tol},
            {"seconds_gate", seconds_gate},
            {"derivatives_ok", deriv_ok},
            {"h2_min_abs_det", h2.min_abs_det},
            {"h2_max_abs_det", h2.max_abs_det},
            {"h2_sign_constant", h2.sign_constant},
            {"h2_ok", h2_ok},
            {"min_phi_s", mono.min_phi_s},
            {"theta0", mono.theta0},
            {"monotonicity_ok", mono.ok},
            {"pass", pass},
            {"timing_file", "check_timing.json"}};
    write_report(out_dir / "derivative_report.json", j);
    write_timing(out_dir, "check_timing.json", watch.ms());

    std::printf("check %s: firsts %.2e seconds %.2e h2 [%.3g, %.3g] phi_s >= %.4g  %s\n",
                family_id.c_str(), firsts, seconds, h2.min_abs_det, h2.max_abs_det, mono.min_phi_s,
                pass ? "pass" : "FAIL");
    return pass ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semidiscrete potential solver and verification workflows"};
    app.require_subcommand(1);

    std::string config_path, out_override, report_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> rays_override;
    std::optional<double> tol_override;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "JSON config path");
        if (needs_config) opt->required();
        sub->add_option("--out", out_override, "output directory (overrides config)");
        sub->add_option("--seed", seed_override, "seed override");
        sub->add_option("--tol", tol_override, "tolerance override");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve a semidiscrete instance");
    add_common(solve, true);

    CLI::App* verify = app.add_subcommand("verify", "raytrace a solve report against its targets");
    add_common(verify, true);
    verify->add_option("--report", report_override, "solve report path (default: OUT/solve_report.json)");
    verify->add_option("--rays", rays_override, "rays per source cell");

    CLI::App* duality = app.add_subcommand("duality", "run the finite Lagrangian duality lab");
    add_common(duality, true);

    CLI::App* check = app.add_subcommand("check", "derivative/monotonicity/injectivity checks");
    std::string family_id = "ot-cost";
    int samples = 400;
    std::uint64_t check_seed = 20240811;
    check->add_option("--family", family_id, "family id (catalog id or test fixture)")->required();
    check->add_option("--samples", samples, "sample count");
    check->add_option("--seed", check_seed, "sample seed");
    check->add_option("--out", out_override, "output directory");
    check->add_option("--tol", tol_override, "first-derivative gate (default 1e-6)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand(check)) {
            fs::path out_dir = out_override.empty() ? "out" : out_override;
            return cmd_check(family_id, samples, check_seed, tol_override.value_or(1e-6), out_dir);
        }
        if (app.got_subcommand(duality)) {
            DualityConfig cfg = load_duality_config(config_path);
            if (seed_override) cfg.seed = *seed_override;
            if (tol_override) cfg.tol_gap = *tol_override;
            validate(cfg);
            fs::path out_dir = out_override.empty() ? "out" : out_override;
            return cmd_duality(cfg, out_dir);
        }
        ProblemConfig cfg = load_problem_config(config_path);
        if (seed_override) cfg.targets.seed = *seed_override;
        validate(cfg);
        fs::path out_dir = out_override.empty() ? fs::path(cfg.output.dir) : fs::path(out_override);
        if (app.got_subcommand(solve)) return cmd_solve(cfg, out_dir);
        fs::path report_path =
            report_override.empty() ? out_dir / "solve_report.json" : fs::path(report_override);
        return cmd_verify(cfg, out_dir, report_path, tol_override, rays_override);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
}
