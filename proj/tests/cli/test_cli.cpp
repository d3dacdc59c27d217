#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

const fs::path kCli = SDPOT_CLI_PATH;
const fs::path kConfigs = SDPOT_CONFIG_DIR;

int run(const std::string& args) {
    const std::string cmd = kCli.string() + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

njson report(const fs::path& p) { return njson::parse(slurp(p)); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("sdpot_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("solve writes a converged deterministic report") {
    TempDir tmp("solve");
    const std::string cfg = (kConfigs / "ot_two_atoms.json").string();
    CHECK(run("solve --config " + cfg + " --out " + tmp.str("a")) == 0);
    CHECK(run("solve --config " + cfg + " --out " + tmp.str("b")) == 0);

    njson rep = report(tmp.path / "a" / "solve_report.json");
    CHECK(rep.at("converged").get<bool>());
    CHECK(rep.at("family") == "ot-cost");
    CHECK(rep.at("s").size() == 2);
    CHECK(rep.at("max_rel_residual").get<double>() <= 1e-8);
    CHECK_FALSE(rep.contains("wall_ms"));  // timing lives in the sidecar
    CHECK(report(tmp.path / "a" / "solve_timing.json").contains("wall_ms"));

    CHECK(slurp(tmp.path / "a" / "solve_report.json") ==
          slurp(tmp.path / "b" / "solve_report.json"));
    CHECK(slurp(tmp.path / "a" / "cell_map.csv") == slurp(tmp.path / "b" / "cell_map.csv"));

    // header plus one row per node
    std::istringstream csv(slurp(tmp.path / "a" / "cell_map.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 1 + 40 * 40);
}

TEST_CASE("verify raytraces a solved reflector against its report") {
    TempDir tmp("verify");
    const std::string cfg = (kConfigs / "reflector_three_atoms.json").string();
    REQUIRE(run("solve --config " + cfg + " --out " + tmp.str()) == 0);
    CHECK(run("verify --config " + cfg + " --out " + tmp.str()) == 0);

    njson rep = report(tmp.path / "trace_report.json");
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("hist_l1_rel").get<double>() <= 0.01);
    CHECK(rep.at("match_fraction").get<double>() >= 0.99);
    CHECK(fs::exists(tmp.path / "rays.csv"));
    CHECK(fs::exists(tmp.path / "residuals.csv"));

    SUBCASE("a finer tracing lattice still passes") {
        CHECK(run("verify --config " + cfg + " --out " + tmp.str() + " --rays 4") == 0);
        CHECK(report(tmp.path / "trace_report.json").at("trace_resolution").get<int>() == 128);
    }
    SUBCASE("tampered weights exceed the histogram tolerance") {
        njson solved = report(tmp.path / "solve_report.json");
        for (auto& v : solved.at("s")) v = v.get<double>() + 0.05;
        std::ofstream(tmp.path / "solve_report.json") << solved.dump(2) << "\n";
        CHECK(run("verify --config " + cfg + " --out " + tmp.str()) == 3);
    }
    SUBCASE("a mismatched instance hash is refused") {
        njson solved = report(tmp.path / "solve_report.json");
        solved["instance_hash"] = "0000000000000000";
        std::ofstream(tmp.path / "solve_report.json") << solved.dump(2) << "\n";
        CHECK(run("verify --config " + cfg + " --out " + tmp.str()) == 2);
    }
}

TEST_CASE("verify needs a solve report and an optical family") {
    TempDir tmp("verify_pre");
    CHECK(run("verify --config " + (kConfigs / "reflector_three_atoms.json").string() +
              " --out " + tmp.str()) == 2);

    TempDir tmp2("verify_ot");
    const std::string ot = (kConfigs / "ot_two_atoms.json").string();
    REQUIRE(run("solve --config " + ot + " --out " + tmp2.str()) == 0);
    CHECK(run("verify --config " + ot + " --out " + tmp2.str()) == 2);
}

TEST_CASE("duality experiments assert the gap and stay deterministic") {
    TempDir tmp("dual");
    for (const char* name : {"duality_linear.json", "duality_quadratic.json"}) {
        CAPTURE(name);
        const std::string cfg = (kConfigs / name).string();
        CHECK(run("duality --config " + cfg + " --out " + tmp.str("a")) == 0);
        njson rep = report(tmp.path / "a" / "gap_report.json");
        CHECK(rep.at("flags_hold").get<bool>());
        CHECK(rep.at("gap_asserted").get<bool>());
        CHECK(rep.at("weak_duality_ok").get<bool>());
        CHECK(std::abs(rep.at("slackness").get<double>()) <= 1e-6);
        CHECK(run("duality --config " + cfg + " --out " + tmp.str("b")) == 0);
        CHECK(slurp(tmp.path / "a" / "gap_report.json") ==
              slurp(tmp.path / "b" / "gap_report.json"));
    }
}

TEST_CASE("family checks gate on derivative quality") {
    TempDir tmp("check");
    CHECK(run("check --family reflector-nf-parallel --samples 300 --seed 11 --out " +
              tmp.str()) == 0);
    njson rep = report(tmp.path / "derivative_report.json");
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("err_phi_x").get<double>() <= 1e-6);
    CHECK(rep.at("monotonicity_ok").get<bool>());
    CHECK(rep.at("h2_sign_constant").get<bool>());

    CHECK(run("check --family test-broken-derivative --samples 300 --seed 11 --out " +
              tmp.str("broken")) == 3);
    CHECK(run("check --family ot-cost --samples 0 --out " + tmp.str("none")) == 2);
    CHECK(run("check --family no-such-family --samples 10 --out " + tmp.str("unknown")) == 2);
}

TEST_CASE("malformed configs and flags exit with the validation code") {
    TempDir tmp("bad");
    std::ofstream(tmp.path / "bad.json") << "{\"schema_version\": 1, \"bogus\": true}\n";
    CHECK(run("solve --config " + tmp.str("bad.json")) == 2);
    std::ofstream(tmp.path / "notjson.json") << "not json at all\n";
    CHECK(run("solve --config " + tmp.str("notjson.json")) == 2);
    CHECK(run("solve --config " + tmp.str("missing.json")) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("solve") == 2);  // --config is required
    CHECK(run("--help") == 0);
}
