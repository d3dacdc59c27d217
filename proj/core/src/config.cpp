#include "sdpot/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sdpot {

namespace {

using njson = nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Strict object access: every present key must be known, every read key
// must have the right shape.
void expect_keys(const njson& j, const char* ctx, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(std::string(ctx) + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) fail("unknown key '" + item.key() + "' in " + ctx);
    }
}

template <typename T>
T get_or(const njson& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const njson::exception&) {
        fail(std::string("bad value for '") + key + "'");
    }
}

std::vector<double> get_vec(const njson& j, const char* key, std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    const njson& a = j.at(key);
    if (!a.is_array()) fail(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : a) {
        if (!e.is_number()) fail(std::string("'") + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> get_points(const njson& j, const char* key) {
    std::vector<std::vector<double>> out;
    if (!j.contains(key)) return out;
    const njson& a = j.at(key);
    if (!a.is_array()) fail(std::string("'") + key + "' must be an array of points");
    for (const auto& e : a) out.push_back(get_vec(njson{{"p", e}}, "p", {}));
    return out;
}

njson points_json(const std::vector<std::vector<double>>& pts) {
    njson a = njson::array();
    for (const auto& p : pts) a.push_back(p);
    return a;
}

// --- CatalogEntry ---

CatalogEntry entry_from_json(const njson& j) {
    expect_keys(j, "family",
                {"id", "cost", "dim", "kappa", "plane_height", "delta0", "tau", "delta", "s_lo",
                 "s_hi"});
    CatalogEntry e;
    e.id = get_or<std::string>(j, "id", e.id);
    e.cost = get_or<std::string>(j, "cost", e.cost);
    e.dim = get_or<int>(j, "dim", e.dim);
    e.kappa = get_or<double>(j, "kappa", e.kappa);
    e.plane_height = get_or<double>(j, "plane_height", e.plane_height);
    e.delta0 = get_or<double>(j, "delta0", e.delta0);
    e.tau = get_or<double>(j, "tau", e.tau);
    e.delta = get_or<double>(j, "delta", e.delta);
    e.s_lo = get_or<double>(j, "s_lo", e.s_lo);
    e.s_hi = get_or<double>(j, "s_hi", e.s_hi);
    return e;
}

njson entry_to_json(const CatalogEntry& e) {
    return njson{{"id", e.id},
                 {"cost", e.cost},
                 {"dim", e.dim},
                 {"kappa", e.kappa},
                 {"plane_height", e.plane_height},
                 {"delta0", e.delta0},
                 {"tau", e.tau},
                 {"delta", e.delta},
                 {"s_lo", e.s_lo},
                 {"s_hi", e.s_hi}};
}

// --- SourceSpec ---

SourceSpec source_from_json(const njson& j) {
    expect_keys(j, "source",
                {"chart", "dim", "resolution", "lo", "hi", "center", "radius", "cap_radius",
                 "density"});
    SourceSpec s;
    s.chart = get_or<std::string>(j, "chart", s.chart);
    s.dim = get_or<int>(j, "dim", s.dim);
    s.resolution = get_or<int>(j, "resolution", s.resolution);
    s.lo = get_vec(j, "lo", s.lo);
    s.hi = get_vec(j, "hi", s.hi);
    s.center = get_vec(j, "center", s.center);
    s.radius = get_or<double>(j, "radius", s.radius);
    s.cap_radius = get_or<double>(j, "cap_radius", s.cap_radius);
    if (j.contains("density")) {
        const njson& d = j.at("density");
        expect_keys(d, "density", {"kind", "center", "sigma", "axis", "offset"});
        s.density = get_or<std::string>(d, "kind", s.density);
        s.density_center = get_vec(d, "center", s.density_center);
        s.density_sigma = get_or<double>(d, "sigma", s.density_sigma);
        s.density_axis = get_or<int>(d, "axis", s.density_axis);
        s.density_offset = get_or<double>(d, "offset", s.density_offset);
    }
    return s;
}

njson source_to_json(const SourceSpec& s) {
    return njson{{"chart", s.chart},
                 {"dim", s.dim},
                 {"resolution", s.resolution},
                 {"lo", s.lo},
                 {"hi", s.hi},
                 {"center", s.center},
                 {"radius", s.radius},
                 {"cap_radius", s.cap_radius},
                 {"density",
                  njson{{"kind", s.density},
                        {"center", s.density_center},
                        {"sigma", s.density_sigma},
                        {"axis", s.density_axis},
                        {"offset", s.density_offset}}}};
}

// --- TargetSpec ---

TargetSpec targets_from_json(const njson& j) {
    expect_keys(j, "targets",
                {"mode", "atoms", "weights", "count", "radius", "center", "extent", "seed",
                 "random_weights"});
    TargetSpec t;
    t.mode = get_or<std::string>(j, "mode", t.mode);
    t.atoms = get_points(j, "atoms");
    t.weights = get_vec(j, "weights", t.weights);
    t.count = get_or<int>(j, "count", t.count);
    t.radius = get_or<double>(j, "radius", t.radius);
    t.center = get_vec(j, "center", t.center);
    t.extent = get_or<double>(j, "extent", t.extent);
    t.seed = get_or<std::uint64_t>(j, "seed", t.seed);
    t.random_weights = get_or<bool>(j, "random_weights", t.random_weights);
    return t;
}

njson targets_to_json(const TargetSpec& t) {
    return njson{{"mode", t.mode},     {"atoms", points_json(t.atoms)},
                 {"weights", t.weights}, {"count", t.count},
                 {"radius", t.radius},   {"center", t.center},
                 {"extent", t.extent},   {"seed", t.seed},
                 {"random_weights", t.random_weights}};
}

// --- SolverSpec / VerifySpec / OutputSpec ---

SolverSpec solver_from_json(const njson& j) {
    expect_keys(j, "solver", {"tol_mass", "max_sweeps", "anchor", "newton", "s0"});
    SolverSpec s;
    s.tol_mass = get_or<double>(j, "tol_mass", s.tol_mass);
    s.max_sweeps = get_or<int>(j, "max_sweeps", s.max_sweeps);
    s.anchor = get_or<int>(j, "anchor", s.anchor);
    s.newton = get_or<bool>(j, "newton", s.newton);
    s.s0 = get_vec(j, "s0", s.s0);
    return s;
}

njson solver_to_json(const SolverSpec& s) {
    return njson{{"tol_mass", s.tol_mass},
                 {"max_sweeps", s.max_sweeps},
                 {"anchor", s.anchor},
                 {"newton", s.newton},
                 {"s0", s.s0}};
}

VerifySpec verify_from_json(const njson& j) {
    expect_keys(j, "verify", {"gradient", "fd_step", "rays_per_node", "tol_hist", "tol_residual"});
    VerifySpec v;
    v.gradient = get_or<std::string>(j, "gradient", v.gradient);
    v.fd_step = get_or<double>(j, "fd_step", v.fd_step);
    v.rays_per_node = get_or<int>(j, "rays_per_node", v.rays_per_node);
    v.tol_hist = get_or<double>(j, "tol_hist", v.tol_hist);
    v.tol_residual = get_or<double>(j, "tol_residual", v.tol_residual);
    return v;
}

njson verify_to_json(const VerifySpec& v) {
    return njson{{"gradient", v.gradient},
                 {"fd_step", v.fd_step},
                 {"rays_per_node", v.rays_per_node},
                 {"tol_hist", v.tol_hist},
                 {"tol_residual", v.tol_residual}};
}

OutputSpec output_from_json(const njson& j) {
    expect_keys(j, "output", {"dir", "cell_map_csv"});
    OutputSpec o;
    o.dir = get_or<std::string>(j, "dir", o.dir);
    o.cell_map_csv = get_or<bool>(j, "cell_map_csv", o.cell_map_csv);
    return o;
}

njson output_to_json(const OutputSpec& o) {
    return njson{{"dir", o.dir}, {"cell_map_csv", o.cell_map_csv}};
}

njson problem_to_json(const ProblemConfig& c) {
    return njson{{"schema_version", c.schema_version}, {"family", entry_to_json(c.family)},
                 {"source", source_to_json(c.source)}, {"targets", targets_to_json(c.targets)},
                 {"solver", solver_to_json(c.solver)}, {"verify", verify_to_json(c.verify)},
                 {"output", output_to_json(c.output)}};
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

Vec to_vec(const std::vector<double>& v, const char* what, int dim) {
    if (static_cast<int>(v.size()) != dim)
        fail(std::string(what) + " must have exactly " + std::to_string(dim) + " components");
    Vec out;
    for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ProblemConfig parse_problem_config(const std::string& json_text) {
    njson j;
    try {
        j = njson::parse(json_text);
    } catch (const njson::exception& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    expect_keys(j, "config",
                {"schema_version", "family", "source", "targets", "solver", "verify", "output"});
    ProblemConfig c;
    c.schema_version = get_or<int>(j, "schema_version", 1);
    if (j.contains("family")) c.family = entry_from_json(j.at("family"));
    if (j.contains("source")) c.source = source_from_json(j.at("source"));
    if (j.contains("targets")) c.targets = targets_from_json(j.at("targets"));
    if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
    if (j.contains("verify")) c.verify = verify_from_json(j.at("verify"));
    if (j.contains("output")) c.output = output_from_json(j.at("output"));
    return c;
}

ProblemConfig load_problem_config(const std::string& path) {
    return parse_problem_config(read_file(path));
}

std::string serialize(const ProblemConfig& cfg) { return problem_to_json(cfg).dump(2) + "\n"; }

std::string instance_hash(const ProblemConfig& cfg) {
    njson j = problem_to_json(cfg);
    j.erase("output");
    return hex64(fnv1a(j.dump()));
}

void validate(const ProblemConfig& cfg) {
    if (cfg.schema_version != 1) fail("unsupported schema_version");
    bool known = false;
    for (const auto& id : catalog_ids())
        if (id == cfg.family.id) known = true;
    if (!known) fail("unknown family id: " + cfg.family.id);
    make_family(cfg.family);  // throws with a named error on bad parameters

    const SourceSpec& s = cfg.source;
    if (s.dim != 1 && s.dim != 2) fail("source dim must be 1 or 2");
    if (s.dim != cfg.family.dim) fail("source dim must match the family dim");
    if (s.resolution < 2) fail("source resolution must be at least 2");
    if (s.chart == "box") {
        if (static_cast<int>(s.lo.size()) != s.dim || static_cast<int>(s.hi.size()) != s.dim)
            fail("box lo/hi must have dim components");
        for (int a = 0; a < s.dim; ++a)
            if (!(s.lo[static_cast<std::size_t>(a)] < s.hi[static_cast<std::size_t>(a)]))
                fail("box lo must be strictly below hi");
    } else if (s.chart == "disk") {
        if (s.dim != 2) fail("disk chart requires dim 2");
        if (!(s.radius > 0.0)) fail("disk radius must be positive");
    } else if (s.chart == "sphere-cap") {
        if (!(s.cap_radius > 0.0 && s.cap_radius < 1.0)) fail("cap_radius must lie in (0,1)");
    } else {
        fail("unknown source chart: " + s.chart);
    }
    if (s.density != "uniform" && s.density != "gaussian" && s.density != "coordinate" &&
        s.density != "radial-exp")
        fail("unknown density kind: " + s.density);
    if (s.density == "gaussian" && !(s.density_sigma > 0.0)) fail("density sigma must be positive");
    if (s.density == "coordinate" && (s.density_axis < 0 || s.density_axis >= s.dim))
        fail("density axis out of range");

    const TargetSpec& t = cfg.targets;
    int expected = 0;
    if (t.mode == "explicit") {
        if (t.atoms.empty()) fail("explicit targets need at least one atom");
        for (const auto& a : t.atoms)
            if (static_cast<int>(a.size()) != s.dim) fail("atom coordinates must have dim components");
        expected = static_cast<int>(t.atoms.size());
    } else if (t.mode == "circle") {
        if (s.dim != 2) fail("circle targets require dim 2");
        if (t.count < 1) fail("target count must be positive");
        if (!(t.radius > 0.0)) fail("target circle radius must be positive");
        expected = t.count;
    } else if (t.mode == "grid") {
        if (t.count < 1) fail("target count must be positive");
        if (!(t.extent > 0.0)) fail("target extent must be positive");
        expected = 1;
        for (int a = 0; a < s.dim; ++a) expected *= t.count;
    } else if (t.mode == "random") {
        if (t.count < 1) fail("target count must be positive");
        if (!(t.extent > 0.0)) fail("target extent must be positive");
        expected = t.count;
    } else {
        fail("unknown target mode: " + t.mode);
    }
    if (!t.weights.empty()) {
        if (static_cast<int>(t.weights.size()) != expected)
            fail("weights must match the atom count");
        for (double wj : t.weights)
            if (!(wj > 0.0)) fail("weights must be positive");
    }
    if (static_cast<int>(t.center.size()) != s.dim && t.mode != "explicit")
        fail("target center must have dim components");

    if (!(cfg.solver.tol_mass > 0.0)) fail("tol_mass must be positive");
    if (cfg.solver.max_sweeps < 1) fail("max_sweeps must be positive");
    if (cfg.solver.anchor < 0 || cfg.solver.anchor >= expected) fail("anchor out of range");
    if (!cfg.solver.s0.empty() && static_cast<int>(cfg.solver.s0.size()) != expected)
        fail("s0 must match the atom count");

    if (cfg.verify.gradient != "fd" && cfg.verify.gradient != "closed")
        fail("verify gradient must be 'fd' or 'closed'");
    if (cfg.verify.rays_per_node < 1) fail("rays_per_node must be positive");
    if (!(cfg.verify.tol_hist > 0.0) || !(cfg.verify.tol_residual > 0.0))
        fail("verification tolerances must be positive");
}

SourceGrid build_source(const SourceSpec& s) {
    SourceChart chart;
    if (s.chart == "box") {
        chart = box_chart(to_vec(s.lo, "box lo", s.dim), to_vec(s.hi, "box hi", s.dim), s.dim);
    } else if (s.chart == "disk") {
        chart = disk_chart(to_vec(s.center, "disk center", 2), s.radius);
    } else if (s.chart == "sphere-cap") {
        chart = cap_chart(s.cap_radius, s.dim);
    } else {
        fail("unknown source chart: " + s.chart);
    }

    Density d;
    if (s.density == "uniform") {
        d = uniform_density();
    } else if (s.density == "gaussian") {
        d = gaussian_density(to_vec(s.density_center, "density center", s.dim), s.density_sigma);
    } else if (s.density == "coordinate") {
        d = coordinate_density(s.density_axis, s.density_offset);
    } else if (s.density == "radial-exp") {
        d = radial_exp_density(to_vec(s.density_center, "density center", s.dim));
    } else {
        fail("unknown density kind: " + s.density);
    }
    return build_grid(chart, s.resolution, d);
}

AtomicMeasure build_targets(const TargetSpec& t, const ConstraintFamily& fam, double source_mass) {
    const int n = fam.dim();
    std::vector<Vec> chart_atoms;
    std::mt19937_64 rng(t.seed);

    if (t.mode == "explicit") {
        for (const auto& a : t.atoms) chart_atoms.push_back(to_vec(a, "atom", n));
    } else if (t.mode == "circle") {
        const Vec c = to_vec(t.center, "target center", 2);
        for (int k = 0; k < t.count; ++k) {
            const double ang = 2.0 * M_PI * k / t.count;
            chart_atoms.push_back(vec2(c[0] + t.radius * std::cos(ang),
                                       c[1] + t.radius * std::sin(ang)));
        }
    } else if (t.mode == "grid") {
        const Vec c = to_vec(t.center, "target center", n);
        auto coordv = [&](int k) {
            if (t.count == 1) return 0.0;
            return -t.extent + 2.0 * t.extent * k / (t.count - 1);
        };
        if (n == 1) {
            for (int k = 0; k < t.count; ++k) chart_atoms.push_back(vec1(c[0] + coordv(k)));
        } else {
            for (int k1 = 0; k1 < t.count; ++k1)
                for (int k0 = 0; k0 < t.count; ++k0)
                    chart_atoms.push_back(vec2(c[0] + coordv(k0), c[1] + coordv(k1)));
        }
    } else if (t.mode == "random") {
        const Vec c = to_vec(t.center, "target center", n);
        std::uniform_real_distribution<double> off(-t.extent, t.extent);
        for (int k = 0; k < t.count; ++k) {
            Vec p;
            for (int a = 0; a < n; ++a) p[a] = c[a] + off(rng);
            chart_atoms.push_back(p);
        }
    } else {
        fail("unknown target mode: " + t.mode);
    }

    std::vector<double> weights;
    if (!t.weights.empty()) {
        weights = t.weights;
    } else if (t.random_weights) {
        std::uniform_real_distribution<double> wdist(0.5, 1.5);
        for (std::size_t k = 0; k < chart_atoms.size(); ++k) weights.push_back(wdist(rng));
    } else {
        weights.assign(chart_atoms.size(), 1.0);
    }

    double total = 0.0;
    for (double wj : weights) total += wj;
    if (!(total > 0.0)) fail("target weights must have positive total");
    for (double& wj : weights) wj *= source_mass / total;

    std::vector<Vec> lifted;
    for (const Vec& p : chart_atoms) lifted.push_back(fam.lift_target(p));
    return make_atomic(std::move(lifted), std::move(weights), fam.target_dim());
}

// --- DualityConfig ---

DualityConfig parse_duality_config(const std::string& json_text) {
    njson j;
    try {
        j = njson::parse(json_text);
    } catch (const njson::exception& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    expect_keys(j, "duality config",
                {"schema_version", "objective", "family", "nodes", "generator", "box", "flags",
                 "experiment"});
    DualityConfig c;
    c.schema_version = get_or<int>(j, "schema_version", 1);
    if (j.contains("objective")) {
        const njson& o = j.at("objective");
        expect_keys(o, "objective", {"kind", "a", "b", "c"});
        c.objective = get_or<std::string>(o, "kind", c.objective);
        c.a = get_or<double>(o, "a", c.a);
        c.b = get_or<double>(o, "b", c.b);
        c.c = get_or<double>(o, "c", c.c);
    }
    if (j.contains("family")) c.family = entry_from_json(j.at("family"));
    if (j.contains("nodes")) {
        const njson& n = j.at("nodes");
        expect_keys(n, "nodes", {"x", "y", "f", "g", "w", "ghat"});
        c.x = get_points(n, "x");
        c.y = get_points(n, "y");
        c.f = get_vec(n, "f", {});
        c.g = get_vec(n, "g", {});
        c.w = get_vec(n, "w", {});
        c.ghat = get_vec(n, "ghat", {});
    }
    if (j.contains("generator")) {
        const njson& g = j.at("generator");
        expect_keys(g, "generator", {"nu", "nv", "seed"});
        c.nu = get_or<int>(g, "nu", c.nu);
        c.nv = get_or<int>(g, "nv", c.nv);
        c.seed = get_or<std::uint64_t>(g, "seed", c.seed);
    }
    if (j.contains("box")) {
        const njson& b = j.at("box");
        expect_keys(b, "box", {"t_lo", "t_hi", "s_lo", "s_hi"});
        c.t_lo = get_or<double>(b, "t_lo", c.t_lo);
        c.t_hi = get_or<double>(b, "t_hi", c.t_hi);
        c.s_lo = get_or<double>(b, "s_lo", c.s_lo);
        c.s_hi = get_or<double>(b, "s_hi", c.s_hi);
    }
    if (j.contains("flags")) {
        const njson& f = j.at("flags");
        expect_keys(f, "flags", {"concave_objective", "convex_constraint"});
        c.concave_objective = get_or<bool>(f, "concave_objective", c.concave_objective);
        c.convex_constraint = get_or<bool>(f, "convex_constraint", c.convex_constraint);
    }
    if (j.contains("experiment")) {
        const njson& e = j.at("experiment");
        expect_keys(e, "experiment", {"mu_max", "tol_gap", "trials", "mu_samples"});
        c.mu_max = get_or<double>(e, "mu_max", c.mu_max);
        c.tol_gap = get_or<double>(e, "tol_gap", c.tol_gap);
        c.trials = get_or<int>(e, "trials", c.trials);
        c.mu_samples = get_vec(e, "mu_samples", c.mu_samples);
    }
    return c;
}

DualityConfig load_duality_config(const std::string& path) {
    return parse_duality_config(read_file(path));
}

std::string serialize(const DualityConfig& c) {
    njson j{{"schema_version", c.schema_version},
            {"objective", njson{{"kind", c.objective}, {"a", c.a}, {"b", c.b}, {"c", c.c}}},
            {"family", entry_to_json(c.family)},
            {"nodes",
             njson{{"x", points_json(c.x)},
                   {"y", points_json(c.y)},
                   {"f", c.f},
                   {"g", c.g},
                   {"w", c.w},
                   {"ghat", c.ghat}}},
            {"generator", njson{{"nu", c.nu}, {"nv", c.nv}, {"seed", c.seed}}},
            {"box",
             njson{{"t_lo", c.t_lo}, {"t_hi", c.t_hi}, {"s_lo", c.s_lo}, {"s_hi", c.s_hi}}},
            {"flags",
             njson{{"concave_objective", c.concave_objective},
                   {"convex_constraint", c.convex_constraint}}},
            {"experiment",
             njson{{"mu_max", c.mu_max},
                   {"tol_gap", c.tol_gap},
                   {"trials", c.trials},
                   {"mu_samples", c.mu_samples}}}};
    return j.dump(2) + "\n";
}

void validate(const DualityConfig& c) {
    if (c.schema_version != 1) fail("unsupported schema_version");
    if (c.objective != "linear-separable" && c.objective != "quadratic-concave")
        fail("unknown objective kind: " + c.objective);
    make_family(c.family);
    if (c.x.empty() != c.y.empty()) fail("explicit nodes need both x and y");
    if (!c.x.empty()) {
        if (c.f.size() != c.x.size() || c.g.size() != c.y.size())
            fail("f and g must match the node counts");
        if (!c.w.empty() && c.w.size() != c.x.size()) fail("w must match the x count");
        if (!c.ghat.empty() && c.ghat.size() != c.y.size()) fail("ghat must match the y count");
    } else {
        if (c.nu < 1 || c.nv < 1) fail("generator sizes must be positive");
        if (c.family.id != "ot-cost") fail("generated lab instances use the ot-cost family");
    }
    if (!(c.t_lo <= c.t_hi) || !(c.s_lo <= c.s_hi)) fail("empty value box");
    if (!(c.mu_max > 0.0)) fail("mu_max must be positive");
    if (!(c.tol_gap > 0.0)) fail("tol_gap must be positive");
    if (c.trials < 1) fail("trials must be positive");
    if (c.mu_samples.size() < 2) fail("need at least two mu samples");
    for (double m : c.mu_samples)
        if (m < 0.0) fail("mu samples must be nonnegative");
}

std::string instance_hash(const DualityConfig& c) { return hex64(fnv1a(serialize(c))); }

LabInstance build_lab(const DualityConfig& c) {
    validate(c);
    if (c.x.empty()) {
        LabInstance lab = c.objective == "linear-separable"
                              ? lab_linear_instance(c.nu, c.nv, c.seed)
                              : lab_quadratic_instance(c.nu, c.nv, c.seed, c.a, c.b, c.c);
        lab.inst.t_lo = c.t_lo;
        lab.inst.t_hi = c.t_hi;
        lab.inst.s_lo = c.s_lo;
        lab.inst.s_hi = c.s_hi;
        lab.inst.concave_objective = c.concave_objective;
        lab.inst.convex_constraint = c.convex_constraint;
        return lab;
    }

    LabInstance lab;
    lab.family = make_family(c.family);
    FiniteInstance& inst = lab.inst;
    inst.family = lab.family.get();
    const int n = lab.family->dim();
    for (const auto& p : c.x) inst.x.push_back(to_vec(p, "x node", n));
    for (const auto& p : c.y) inst.y.push_back(lab.family->lift_target(to_vec(p, "y node", n)));
    inst.f = c.f;
    inst.g = c.g;

    std::vector<double> w = c.w.empty() ? std::vector<double>(c.x.size(), 1.0) : c.w;
    std::vector<double> gh = c.ghat.empty() ? std::vector<double>(c.y.size(), 1.0) : c.ghat;
    double ws = 0.0, gs = 0.0;
    for (double v : w) ws += v;
    for (double v : gh) gs += v;
    inst.omega.assign(c.x.size(), std::vector<double>(c.y.size()));
    for (std::size_t i = 0; i < c.x.size(); ++i)
        for (std::size_t j = 0; j < c.y.size(); ++j) inst.omega[i][j] = (w[i] / ws) * (gh[j] / gs);

    inst.F.kind = c.objective == "linear-separable" ? ObjectiveF::Kind::LinearSeparable
                                                    : ObjectiveF::Kind::QuadraticConcave;
    inst.F.a = c.a;
    inst.F.b = c.b;
    inst.F.c = c.c;
    inst.t_lo = c.t_lo;
    inst.t_hi = c.t_hi;
    inst.s_lo = c.s_lo;
    inst.s_hi = c.s_hi;
    inst.concave_objective = c.concave_objective;
    inst.convex_constraint = c.convex_constraint;
    inst.validate();
    return lab;
}

}  // namespace sdpot
