#ifndef BALSPLIT_TOOLS_SCENARIO_HPP
#define BALSPLIT_TOOLS_SCENARIO_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "balsplit/models.hpp"
#include "balsplit/presets.hpp"

namespace balsplit::cli {

inline constexpr int kSchemaVersion = 1;

/// Exit statuses of `run`.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3, kIoError = 4 };

struct DatumSpec {
    std::string preset = "bump";
    std::vector<double> value;
    std::vector<double> left;
    std::vector<double> right;
    double x0 = 0.0;
    std::optional<double> a;
    std::optional<double> b;
    RandomDatumSpec random;
    bool random_dim_set = false;
};

struct DiagnosticSpec {
    std::string kind;
    int line = 0;
    std::map<std::string, std::vector<double>> numbers;
    std::map<std::string, std::string> strings;

    double number(const std::string& key, double fallback) const;
    std::vector<double> list(const std::string& key, std::vector<double> fallback) const;
    std::string text(const std::string& key, std::string fallback) const;
};

struct Scenario {
    std::string name = "scenario";
    std::string model_id;
    ParamMap params;
    bool source_disabled = false;
    DatumSpec datum;
    std::vector<double> s_list = {0.01};
    double t = 0.1;
    double eps = 1e-3;
    int N = 64;
    std::optional<double> delta;
    double C = 0.0;
    double T = std::numeric_limits<double>::infinity();
    /// Unset means calibrated from sampled interactions at run time.
    std::optional<double> c0;
    std::uint64_t seed = 0;
    std::string output = "out";
    std::vector<DiagnosticSpec> diagnostics;
};

/// Parses a scenario; errors are ConfigError with the offending line and field.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

struct DiagnosticInfo {
    std::string kind;
    std::string summary;
    std::vector<std::string> options;
};
const std::vector<DiagnosticInfo>& registered_diagnostics();
const std::vector<DiagnosticInfo>& registered_presets();

struct RunOptions {
    /// Overrides the scenario output directory.
    std::optional<std::string> out;
    int jobs = 0;
};

/// Output directory: --out, then BALSPLIT_OUTPUT_DIR, then the scenario's.
std::string resolve_output_dir(const Scenario& sc, const RunOptions& opts);

/// Runs every diagnostic and writes CSVs plus summary.json. Returns an ExitCode.
int run_scenario(const Scenario& sc, const RunOptions& opts, std::ostream& log);

/// Human-readable description of a model, diagnostic or preset; ConfigError for unknown ids.
std::string describe(const std::string& id);

/// 17 significant digits.
std::string format_number(double v);

}  // namespace balsplit::cli

#endif
