#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "balsplit/errors.hpp"
#include "scenario.hpp"

using namespace balsplit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        cli::parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("balsplit_test_" + name);
    fs::remove_all(p);
    return p;
}

const char* kQuick = R"(schema: 1
name: quick
model: scalar_rosenau
datum:
  preset: bump
  value: [1.0]
schedule:
  s: 0.05
  t: 0.1
  eps: 0.01
  N: 16
seed: 3
diagnostics:
  - trace
  - kind: limit
    t: 0.1
    levels: 3
)";

}  // namespace

TEST_CASE("scenario parsing fills defaults") {
    cli::Scenario sc = cli::parse_scenario(kQuick);
    CHECK(sc.name == "quick");
    CHECK(sc.model_id == "scalar_rosenau");
    CHECK(sc.s_list == std::vector<double>{0.05});
    CHECK(sc.N == 16);
    CHECK(sc.seed == 3);
    REQUIRE(sc.diagnostics.size() == 2);
    CHECK(sc.diagnostics[1].kind == "limit");
    CHECK(sc.diagnostics[1].number("levels", 0) == 3);
    CHECK(sc.diagnostics[1].line == 15);
}

TEST_CASE("configuration errors name the line and the field") {
    std::string e = config_error("schema: 1\nmodel: scalar_rosenau\nschedul:\n  s: 0.1\n");
    CHECK(e.find("line 3") != std::string::npos);
    CHECK(e.find("did you mean 'schedule'") != std::string::npos);

    e = config_error("schema: 1\nmodel: scalar_rosenau\nschedule:\n  s: -0.1\n");
    CHECK(e.find("line 4") != std::string::npos);

    e = config_error("schema: 1\nmodel: scalar_rosenau\ndiagnostics:\n  - kind: limt\n");
    CHECK(e.find("did you mean 'limit'") != std::string::npos);

    e = config_error("schema: 1\nmodel: scalar_rosenau\ndiagnostics:\n  - kind: limit\n    levls: 3\n");
    CHECK(e.find("line 5") != std::string::npos);
    CHECK(e.find("levels") != std::string::npos);

    CHECK(!config_error("schema: 7\nmodel: scalar_rosenau\n").empty());
    CHECK(!config_error("model: [unclosed\n").empty());
}

TEST_CASE("unknown ids get suggestions") {
    CHECK_THROWS_WITH_AS(cli::describe("scalar_rosenoo"), doctest::Contains("scalar_rosenau"), ConfigError);
    std::string d = cli::describe("scalar_rosenau");
    CHECK(d.find("L1, L2, L3 = 2, 2, 0") != std::string::npos);
    CHECK(cli::describe("limit").find("limit") != std::string::npos);
}

TEST_CASE("output directory precedence") {
    cli::Scenario sc;
    sc.output = "from_scenario";
    cli::RunOptions opts;
    unsetenv("BALSPLIT_OUTPUT_DIR");
    CHECK(cli::resolve_output_dir(sc, opts) == "from_scenario");
    setenv("BALSPLIT_OUTPUT_DIR", "from_env", 1);
    CHECK(cli::resolve_output_dir(sc, opts) == "from_env");
    opts.out = "from_flag";
    CHECK(cli::resolve_output_dir(sc, opts) == "from_flag");
    unsetenv("BALSPLIT_OUTPUT_DIR");
}

TEST_CASE("a scenario without diagnostics writes only the summary") {
    cli::Scenario sc = cli::parse_scenario("schema: 1\nmodel: scalar_rosenau\n");
    fs::path dir = fresh_dir("empty");
    cli::RunOptions opts;
    opts.out = dir.string();
    std::ostringstream log;
    CHECK(cli::run_scenario(sc, opts, log) == cli::kOk);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path().filename());
    REQUIRE(files.size() == 1);
    CHECK(files[0] == "summary.json");
    auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j["schema_version"] == cli::kSchemaVersion);
    CHECK(j["diagnostics"].empty());
    CHECK(j["pass"] == true);
}

TEST_CASE("runs are byte-for-byte deterministic and follow the output schemas") {
    cli::Scenario sc = cli::parse_scenario(kQuick);
    fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    std::ostringstream log;
    cli::RunOptions oa, ob;
    oa.out = a.string();
    ob.out = b.string();
    oa.jobs = 1;
    ob.jobs = 4;
    int ra = cli::run_scenario(sc, oa, log);
    int rb = cli::run_scenario(sc, ob, log);
    CHECK(ra == rb);
    for (const char* f : {"summary.json", "trace.csv", "limit.csv"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    std::string trace = slurp(a / "trace.csv");
    CHECK(trace.rfind("time,V,Q,Upsilon,Upsilon_pre,TV,L1,fronts,admission_bound,admitted\n", 0) == 0);
    CHECK(slurp(a / "limit.csv").rfind("s,t,distance,slope,bound,pass\n", 0) == 0);

    auto j = nlohmann::json::parse(slurp(a / "summary.json"));
    for (const char* key : {"schema_version", "scenario", "model", "datum", "schedule", "seed", "diagnostics", "pass"})
        CHECK(j.contains(key));
    CHECK(j["model"]["constants"]["L1"] == 2.0);
    // scalar interactions do not amplify strengths, so the calibrated constant is the floor
    CHECK(j["schedule"]["c0_calibrated"] == true);
    CHECK(j["schedule"]["c0"] == 1.0);
    REQUIRE(j["diagnostics"].size() == 2);
    const auto& lim = j["diagnostics"][1];
    CHECK(lim["kind"] == "limit");
    CHECK(lim["csv"] == "limit.csv");
    CHECK(lim["checks"].is_array());
    CHECK(lim["pass"].is_boolean());
}

TEST_CASE("diagnostic failures inside a run map to exit codes") {
    // sensitivity needs the perturbed parameter in the model parameters
    cli::Scenario sc = cli::parse_scenario(
        "schema: 1\nmodel: scalar_rosenau\ndiagnostics:\n  - kind: sensitivity\n    param: b\n");
    fs::path dir = fresh_dir("fail");
    cli::RunOptions opts;
    opts.out = dir.string();
    std::ostringstream log;
    CHECK(cli::run_scenario(sc, opts, log) == cli::kConfigError);
    auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j["diagnostics"][0].contains("error"));
    CHECK(j["pass"] == false);
}
