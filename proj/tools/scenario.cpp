#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "balsplit/errors.hpp"
#include "balsplit/parallel.hpp"
#include "balsplit/splitting.hpp"
#include "balsplit/verify.hpp"

namespace balsplit::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// parsing

int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

[[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& msg) {
    throw ConfigError(fmt::format("line {}: {}: {}", line_of(n), field, msg));
}

double as_double(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) fail(n, field, "expected a number");
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        fail(n, field, fmt::format("'{}' is not a number", n.Scalar()));
    }
}

std::string as_string(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) fail(n, field, "expected a string");
    return n.Scalar();
}

bool as_bool(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) fail(n, field, "expected true or false");
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        fail(n, field, fmt::format("'{}' is not a boolean", n.Scalar()));
    }
}

/// A number or a (possibly nested) sequence of numbers, flattened.
std::vector<double> as_list(const YAML::Node& n, const std::string& field) {
    std::vector<double> out;
    if (n.IsScalar()) {
        out.push_back(as_double(n, field));
    } else if (n.IsSequence()) {
        for (const auto& item : n) {
            auto sub = as_list(item, field);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    } else {
        fail(n, field, "expected a number or a list of numbers");
    }
    return out;
}

void check_keys(const YAML::Node& map, const std::string& section, const std::vector<std::string>& allowed) {
    if (!map.IsMap()) fail(map, section, "expected a mapping");
    for (const auto& kv : map) {
        const std::string key = kv.first.Scalar();
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
        const std::string hint = closest_match(key, allowed);
        fail(kv.first, section, fmt::format("unknown key '{}'{}", key, hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
}

const ModelInfo* find_model(const std::string& id) {
    for (const auto& m : registered_models())
        if (m.id == id) return &m;
    return nullptr;
}

const DiagnosticInfo* find_diagnostic(const std::string& kind) {
    for (const auto& d : registered_diagnostics())
        if (d.kind == kind) return &d;
    return nullptr;
}

std::vector<std::string> ids_of(const std::vector<DiagnosticInfo>& v) {
    std::vector<std::string> out;
    for (const auto& d : v) out.push_back(d.kind);
    return out;
}

void parse_model(const YAML::Node& n, Scenario& sc) {
    if (n.IsScalar()) {
        sc.model_id = n.Scalar();
    } else {
        check_keys(n, "model", {"id", "params"});
        if (!n["id"]) fail(n, "model", "missing 'id'");
        sc.model_id = as_string(n["id"], "model.id");
        if (const auto p = n["params"]) {
            if (!p.IsMap()) fail(p, "model.params", "expected a mapping");
            for (const auto& kv : p) sc.params[kv.first.Scalar()] = as_double(kv.second, "model.params." + kv.first.Scalar());
        }
    }
    const ModelInfo* info = find_model(sc.model_id);
    if (!info) {
        std::vector<std::string> ids;
        for (const auto& m : registered_models()) ids.push_back(m.id);
        const std::string hint = closest_match(sc.model_id, ids);
        fail(n, "model.id", fmt::format("unknown model '{}'{}", sc.model_id, hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
}

void check_model_params(const YAML::Node& where, const Scenario& sc) {
    const ModelInfo* info = find_model(sc.model_id);
    for (const auto& [key, value] : sc.params) {
        if (std::find(info->params.begin(), info->params.end(), key) != info->params.end()) continue;
        const std::string hint = closest_match(key, info->params);
        fail(where, "model.params", fmt::format("unknown parameter '{}' for model '{}'{}", key, sc.model_id,
                                                hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
}

void parse_source(const YAML::Node& n, Scenario& sc) {
    if (!n.IsMap()) fail(n, "source", "expected a mapping");
    for (const auto& kv : n) {
        const std::string key = kv.first.Scalar();
        if (key == "disable")
            sc.source_disabled = as_bool(kv.second, "source.disable");
        else
            sc.params[key] = as_double(kv.second, "source." + key);
    }
}

void parse_datum(const YAML::Node& n, DatumSpec& d) {
    check_keys(n, "datum", {"preset", "value", "left", "right", "x0", "a", "b", "dim", "jumps", "lo", "hi", "amplitude"});
    if (const auto p = n["preset"]) d.preset = as_string(p, "datum.preset");
    std::vector<std::string> presets = ids_of(registered_presets());
    if (std::find(presets.begin(), presets.end(), d.preset) == presets.end()) {
        const std::string hint = closest_match(d.preset, presets);
        fail(n["preset"], "datum.preset", fmt::format("unknown preset '{}'{}", d.preset, hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
    if (const auto v = n["value"]) d.value = as_list(v, "datum.value");
    if (const auto v = n["left"]) d.left = as_list(v, "datum.left");
    if (const auto v = n["right"]) d.right = as_list(v, "datum.right");
    if (const auto v = n["x0"]) d.x0 = as_double(v, "datum.x0");
    if (const auto v = n["a"]) d.a = as_double(v, "datum.a");
    if (const auto v = n["b"]) d.b = as_double(v, "datum.b");
    if (const auto v = n["dim"]) {
        d.random.dim = static_cast<int>(as_double(v, "datum.dim"));
        d.random_dim_set = true;
    }
    if (const auto v = n["jumps"]) d.random.jumps = static_cast<int>(as_double(v, "datum.jumps"));
    if (const auto v = n["lo"]) d.random.lo = as_double(v, "datum.lo");
    if (const auto v = n["hi"]) d.random.hi = as_double(v, "datum.hi");
    if (const auto v = n["amplitude"]) d.random.amplitude = as_double(v, "datum.amplitude");
    if (d.a && d.b && !(*d.a < *d.b)) fail(n, "datum", "requires a < b");
    if (d.random.jumps < 1) fail(n, "datum.jumps", "must be positive");
}

void parse_schedule(const YAML::Node& n, Scenario& sc) {
    check_keys(n, "schedule", {"s", "t", "eps", "N", "delta", "C", "T", "c0"});
    if (const auto v = n["s"]) {
        sc.s_list = as_list(v, "schedule.s");
        for (double s : sc.s_list)
            if (!(s > 0.0)) fail(v, "schedule.s", "steps must be positive");
    }
    if (const auto v = n["t"]) sc.t = as_double(v, "schedule.t");
    if (const auto v = n["eps"]) sc.eps = as_double(v, "schedule.eps");
    if (const auto v = n["N"]) sc.N = static_cast<int>(as_double(v, "schedule.N"));
    if (const auto v = n["delta"]) sc.delta = as_double(v, "schedule.delta");
    if (const auto v = n["C"]) sc.C = as_double(v, "schedule.C");
    if (const auto v = n["T"]) sc.T = as_double(v, "schedule.T");
    if (const auto v = n["c0"]) sc.c0 = as_double(v, "schedule.c0");
    if (!(sc.t >= 0.0)) fail(n, "schedule.t", "must be nonnegative");
    if (!(sc.eps > 0.0)) fail(n, "schedule.eps", "must be positive");
    if (sc.N < 1) fail(n, "schedule.N", "must be positive");
    if (sc.c0 && !(*sc.c0 > 0.0)) fail(n["c0"], "schedule.c0", "must be positive");
}

DiagnosticSpec parse_diagnostic(const YAML::Node& n) {
    DiagnosticSpec d;
    d.line = line_of(n);
    if (n.IsScalar()) {
        d.kind = n.Scalar();
    } else if (n.IsMap()) {
        if (!n["kind"]) fail(n, "diagnostics", "entry needs a 'kind'");
        d.kind = as_string(n["kind"], "diagnostics.kind");
    } else {
        fail(n, "diagnostics", "expected a name or a mapping with 'kind'");
    }
    const DiagnosticInfo* info = find_diagnostic(d.kind);
    if (!info) {
        const std::string hint = closest_match(d.kind, ids_of(registered_diagnostics()));
        fail(n, "diagnostics", fmt::format("unknown diagnostic '{}'{}", d.kind, hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
    if (n.IsMap()) {
        std::vector<std::string> allowed = info->options;
        allowed.push_back("kind");
        check_keys(n, "diagnostics." + d.kind, allowed);
        for (const auto& kv : n) {
            const std::string key = kv.first.Scalar();
            if (key == "kind") continue;
            const std::string field = "diagnostics." + d.kind + "." + key;
            if (key == "param")
                d.strings[key] = as_string(kv.second, field);
            else
                d.numbers[key] = as_list(kv.second, field);
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// execution

std::string csv_bool(bool b) { return b ? "true" : "false"; }

struct Check {
    std::string name;
    double value;
    std::string bound;
    bool pass;
};

struct Outcome {
    std::string kind;
    std::string csv_name;
    std::string csv;
    std::vector<Check> checks;
    json measured = json::object();
    std::string fit;
    std::string error;
    int error_code = kOk;
};

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }
    template <class... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << "\n";
    }
    std::string str() const { return out_.str(); }

private:
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return csv_bool(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
    std::ostringstream out_;
};

std::string num(double v) { return fmt::format("{}", v); }

struct Context {
    const Scenario& sc;
    ModelBundle bundle;
    PCFn u0;
    SplitSchedule sched;
};

constexpr double kC0Strength = 0.01;
constexpr int kC0Samples = 200;

SplitSchedule base_schedule(const Scenario& sc) {
    SplitSchedule s;
    s.s = sc.s_list.front();
    s.t_final = sc.t;
    s.delta = sc.delta;
    s.C = sc.C;
    s.T = sc.T;
    s.N = sc.N;
    if (sc.c0) s.c0 = *sc.c0;
    s.ft.eps = sc.eps;
    return s;
}

ModelBundle build_bundle(const Scenario& sc, const ParamMap& params) {
    ModelBundle b = make_model(sc.model_id, params);
    if (sc.source_disabled) b.source = std::make_shared<ZeroSource>(b.model->dim());
    return b;
}

PCFn build_datum(const Scenario& sc, int dim) {
    const DatumSpec& d = sc.datum;
    auto state = [&](const std::vector<double>& v, const char* field, double fallback) -> State {
        if (v.empty()) {
            if (dim == 1) return State::Constant(1, fallback);
            throw ConfigError(fmt::format("datum.{}: required for a {}-component model", field, dim));
        }
        if (static_cast<int>(v.size()) != dim)
            throw ConfigError(fmt::format("datum.{}: has {} components, the model has {}", field, v.size(), dim));
        State out(dim);
        for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
        return out;
    };
    if (d.preset == "bump") return bump_datum(state(d.value, "value", 1.0), d.a.value_or(0.0), d.b.value_or(1.0));
    if (d.preset == "riemann")
        return riemann_datum(state(d.left, "left", 1.0), state(d.right, "right", 0.0), d.x0, d.a.value_or(-1.0),
                             d.b.value_or(1.0));
    RandomDatumSpec r = d.random;
    if (!d.random_dim_set) r.dim = dim;
    if (r.dim != dim) throw ConfigError(fmt::format("datum.dim: {} differs from the model dimension {}", r.dim, dim));
    return random_datum(sc.seed, r);
}

Outcome diag_trace(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    SplitSchedule s = c.sched;
    s.s = d.number("s", s.s);
    s.t_final = d.number("t", s.t_final);
    RunResult r = run(c.bundle, c.u0, s);
    Csv csv({"time", "V", "Q", "Upsilon", "Upsilon_pre", "TV", "L1", "fronts", "admission_bound", "admitted"});
    bool admitted = true;
    double ups_max = 0.0;
    for (const auto& row : r.trace.rows) {
        csv.row(row.time, row.V, row.Q, row.Upsilon, row.Upsilon_pre, row.TV, row.L1, row.fronts, row.admission_bound,
                row.admitted);
        admitted = admitted && row.admitted;
        if (std::isfinite(row.Upsilon)) ups_max = std::max(ups_max, row.Upsilon);
    }
    o.csv = csv.str();
    o.checks.push_back({"admitted", ups_max, s.delta ? "Upsilon <= delta + C t" : "no admission bound", admitted});
    o.measured["interactions"] = r.trace.interactions;
    o.measured["upsilon_max"] = ups_max;
    o.measured["approximate_source"] = r.trace.approximate;
    return o;
}

Outcome diag_limit(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    const double t = d.number("t", c.sched.t_final);
    std::vector<double> seq = d.list("s", c.sc.s_list.size() > 1 ? c.sc.s_list : std::vector<double>{});
    if (seq.empty()) seq = step_sequence(t, static_cast<int>(d.number("levels", 4)), true);
    LimitResult r = limit_run(c.bundle, c.u0, t, seq, c.sched, 1);
    Csv csv({"s", "t", "distance", "slope", "bound", "pass"});
    bool mono = true;
    for (const auto& row : r.rows) {
        csv.row(row.s, row.t, row.distance, row.slope, row.bound, row.pass);
        mono = mono && row.pass;
    }
    o.csv = csv.str();
    o.fit = "least squares of log distance on log s, largest s dropped";
    o.checks.push_back({"monotone", r.rows.empty() ? kNaN : r.rows.front().slope,
                        "distance <= 1.05 * previous distance", mono});
    o.measured["uniform_constant"] = r.uniform_constant;
    o.measured["error_bar"] = r.error_bar;
    return o;
}

Outcome diag_commutation(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    const auto ts = d.list("t", {0.2, 0.1, 0.05, 0.025, 0.0125});
    const int N = static_cast<int>(d.number("N", c.sched.N));
    const double min_slope = d.number("min_slope", 1.9);
    DefectTable tab = commutation_defect(c.bundle, c.u0, ts, N, c.sched.ft, 1);
    const bool pass = tab.slope >= min_slope;
    Csv csv({"t", "defect", "slope", "bound", "pass"});
    for (const auto& row : tab.rows) csv.row(row.t, row.defect, tab.slope, min_slope, pass);
    o.csv = csv.str();
    o.fit = "least squares of log defect on log t, largest t dropped";
    o.checks.push_back({"slope", tab.slope, "slope >= " + num(min_slope), pass});
    return o;
}

Outcome diag_tangent(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    const auto ts = d.list("t", {0.2, 0.1, 0.05, 0.025});
    const int levels = static_cast<int>(d.number("levels", 3));
    const double min_slope = d.number("min_slope", 0.9);
    TangentTable tab = tangent_defect(c.bundle, c.u0, ts, c.sched, levels, 1);
    const bool pass = tab.slope >= min_slope;
    Csv csv({"t", "quotient", "quotient_ps", "error_bar", "slope", "bound", "pass"});
    for (const auto& row : tab.rows) csv.row(row.t, row.quotient, row.quotient_ps, row.error_bar, tab.slope, min_slope, pass);
    o.csv = csv.str();
    o.fit = "least squares of log quotient on log t, largest t dropped";
    o.checks.push_back({"slope", tab.slope, "slope >= " + num(min_slope), pass});
    o.measured["slope_ps"] = tab.slope_ps;
    return o;
}

Outcome diag_sensitivity(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    const std::string param = d.text("param", "b");
    auto it = c.sc.params.find(param);
    if (it == c.sc.params.end())
        throw ConfigError(fmt::format("line {}: diagnostics.sensitivity.param: '{}' must be set in model.params", d.line, param));
    const auto deltas = d.list("deltas", {1e-2, 1e-3, 1e-4});
    const auto ts = d.list("t", {0.0025, 0.005, 0.01});
    const double frac = d.number("s_fraction", 0.25);
    const double tol = d.number("slope_tol", 0.1);
    std::vector<ModelBundle> perturbed;
    for (double delta : deltas) {
        ParamMap p = c.sc.params;
        p[param] = it->second + delta;
        perturbed.push_back(build_bundle(c.sc, p));
    }
    std::vector<std::vector<double>> dist(ts.size(), std::vector<double>(deltas.size()));
    for (std::size_t i = 0; i < ts.size(); ++i)
        for (std::size_t j = 0; j < deltas.size(); ++j) {
            SplitSchedule s = c.sched;
            s.t_final = ts[i];
            s.s = ts[i] * frac;
            s.trace = false;
            dist[i][j] = sensitivity(c.bundle, perturbed[j], c.u0, s, 1).distance;
        }
    Csv csv({"param", "t", "distance", "slope", "bound", "pass"});
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double slope = loglog_slope(deltas, dist[i], false);
        const bool pass = std::abs(slope - 1.0) <= tol;
        for (std::size_t j = 0; j < deltas.size(); ++j) csv.row(deltas[j], ts[i], dist[i][j], slope, tol, pass);
        o.checks.push_back({fmt::format("slope_in_{}_at_t={}", param, num(ts[i])), slope, "|slope - 1| <= " + num(tol), pass});
    }
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        std::vector<double> col;
        for (std::size_t i = 0; i < ts.size(); ++i) col.push_back(dist[i][j]);
        const double slope = loglog_slope(ts, col, false);
        o.checks.push_back({fmt::format("slope_in_t_at_d{}={}", param, num(deltas[j])), slope,
                            "|slope - 1| <= " + num(tol), std::abs(slope - 1.0) <= tol});
    }
    o.csv = csv.str();
    o.fit = "least squares of log distance on log param (per t) and on log t (per param), all rows";
    o.measured["param"] = param;
    o.measured["base_value"] = it->second;
    return o;
}

Outcome diag_characterization(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    LocalWindow w;
    w.xi = d.number("xi", 0.0);
    auto flat = d.list("windows", {w.xi - 0.5, w.xi + 0.5, w.xi - 0.25, w.xi + 0.25, w.xi - 0.125, w.xi + 0.125});
    if (flat.size() % 2 != 0) throw ConfigError(fmt::format("line {}: diagnostics.characterization.windows: needs pairs", d.line));
    for (std::size_t i = 0; i < flat.size(); i += 2) w.bounds.emplace_back(flat[i], flat[i + 1]);
    w.thetas = d.list("thetas", {0.08, 0.04, 0.02, 0.01, 0.005, 0.0025});
    const int substeps = static_cast<int>(d.number("substeps", 8));
    const double tau = d.number("tau", 0.0);
    const double max_ratio = d.number("max_sharp_ratio", 0.05);
    const double max_spread = d.number("max_spread", 2.0);
    PCFn u = c.u0;
    if (tau > 0.0) {
        SplitSchedule s = c.sched;
        s.t_final = tau;
        s.trace = false;
        u = run(c.bundle, c.u0, s).u;
    }
    CharacterizationReport r = check_characterization(c.bundle, u, w, c.sched, substeps, 1);
    Csv csv({"check", "parameter", "value", "bound", "pass"});
    for (const auto& row : r.rows) {
        csv.row(std::string("sharp"), row.theta, row.sharp, kNaN, true);
        for (std::size_t k = 0; k < row.flat.size(); ++k)
            csv.row(fmt::format("flat_w{}", k), row.theta, row.flat[k], kNaN, true);
    }
    for (std::size_t k = 0; k < r.tv.size(); ++k) {
        csv.row(fmt::format("tv_w{}", k), static_cast<double>(k), r.tv[k], kNaN, true);
        csv.row(fmt::format("flat_constant_w{}", k), static_cast<double>(k), r.flat_constant[k], kNaN, true);
    }
    const double theta_min = *std::min_element(w.thetas.begin(), w.thetas.end());
    const bool sharp_ok = r.sharp_ratio <= max_ratio;
    const bool flat_ok = r.flat_spread <= max_spread;
    csv.row(std::string("sharp_ratio"), theta_min, r.sharp_ratio, max_ratio, sharp_ok);
    csv.row(std::string("flat_spread"), static_cast<double>(w.bounds.size()), r.flat_spread, max_spread, flat_ok);
    o.csv = csv.str();
    o.checks.push_back({"sharp_ratio", r.sharp_ratio, "sharp_ratio <= " + num(max_ratio), sharp_ok});
    o.checks.push_back({"flat_spread", r.flat_spread, "flat_spread <= " + num(max_spread), flat_ok});
    return o;
}

Outcome diag_entropy(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    const auto eps = d.list("eps", {4e-3, 2e-3, 1e-3});
    const auto steps = d.list("s", {0.02, 0.01, 0.005});
    if (eps.size() != steps.size())
        throw ConfigError(fmt::format("line {}: diagnostics.entropy: eps and s need equal lengths", d.line));
    EntropyOptions e;
    e.kruzkov = d.list("k", e.kruzkov);
    e.x_lo = d.number("x_lo", e.x_lo);
    e.x_hi = d.number("x_hi", e.x_hi);
    e.x_hats = static_cast<int>(d.number("x_hats", e.x_hats));
    e.t_lo = d.number("t_lo", 0.0);
    e.t_hi = d.number("t_hi", c.sched.t_final);
    e.t_hats = static_cast<int>(d.number("t_hats", e.t_hats));
    e.source_grid = static_cast<int>(d.number("source_grid", e.source_grid));
    const double bound = d.number("max_positive", 1e-3);
    if (c.bundle.model->dim() != 1) {
        auto euler = std::dynamic_pointer_cast<const EulerModel>(c.bundle.model);
        if (!euler) throw ConfigError("entropy: needs a scalar model or an Euler model");
        e.pair = euler_entropy_pair(euler);
    }
    Csv csv({"check", "parameter", "value", "bound", "pass"});
    double prev = std::numeric_limits<double>::infinity();
    bool all_small = true, decreasing = true;
    for (std::size_t l = 0; l < eps.size(); ++l) {
        SplitSchedule s = c.sched;
        s.ft.eps = eps[l];
        s.s = steps[l];
        s.trace = false;
        EntropyReport r = entropy_residual(c.bundle, c.u0, s, e);
        const bool small = r.max_positive <= bound;
        const bool dec = r.max_positive <= prev;
        all_small = all_small && small;
        if (l > 0) decreasing = decreasing && dec;
        csv.row(std::string("max_positive"), eps[l], r.max_positive, bound, small);
        csv.row(std::string("min_residual"), eps[l], r.min_residual, kNaN, true);
        prev = r.max_positive;
        o.measured["max_positive"].push_back(r.max_positive);
    }
    o.csv = csv.str();
    o.checks.push_back({"max_positive", prev, "max_positive <= " + num(bound), all_small});
    o.checks.push_back({"decreasing", prev, "max_positive nonincreasing under refinement", decreasing});
    return o;
}

Outcome diag_rescaling(const Context& c, const DiagnosticSpec& d) {
    Outcome o;
    const double t = d.number("t", c.sched.t_final);
    const auto lambdas = d.list("lambdas", {0.5, 2.0, 4.0});
    const auto eps = d.list("eps", {c.sched.ft.eps});
    const double tol = d.number("tol", 1e-10);
    const bool scalar = c.bundle.model->dim() == 1;
    Csv csv({"check", "parameter", "value", "bound", "pass"});
    std::vector<double> devs;
    for (double e : eps) {
        FrontTrackingParams ft = c.sched.ft;
        ft.eps = e;
        RescalingReport r = rescaling_check(c.bundle.model, c.u0, t, lambdas, ft);
        for (const auto& row : r.rows)
            csv.row(fmt::format("deviation_eps={}", num(e)), row.lambda, row.deviation, scalar ? tol : kNaN,
                    scalar ? row.deviation <= tol : true);
        devs.push_back(r.max_deviation);
    }
    bool pass = true;
    std::string bound;
    if (scalar) {
        for (double v : devs) pass = pass && v <= tol;
        bound = "deviation <= " + num(tol);
    } else {
        for (std::size_t i = 1; i < devs.size(); ++i) pass = pass && devs[i] <= devs[i - 1];
        bound = "deviation nonincreasing as eps decreases";
    }
    for (std::size_t i = 0; i < eps.size(); ++i) csv.row(std::string("max_deviation"), eps[i], devs[i], scalar ? tol : kNaN, pass);
    o.csv = csv.str();
    o.checks.push_back({"deviation", devs.back(), bound, pass});
    return o;
}

Outcome dispatch(const Context& c, const DiagnosticSpec& d) {
    if (d.kind == "trace") return diag_trace(c, d);
    if (d.kind == "limit") return diag_limit(c, d);
    if (d.kind == "commutation") return diag_commutation(c, d);
    if (d.kind == "tangent") return diag_tangent(c, d);
    if (d.kind == "sensitivity") return diag_sensitivity(c, d);
    if (d.kind == "characterization") return diag_characterization(c, d);
    if (d.kind == "entropy") return diag_entropy(c, d);
    if (d.kind == "rescaling") return diag_rescaling(c, d);
    throw ConfigError(fmt::format("line {}: unknown diagnostic '{}'", d.line, d.kind));
}

json datum_json(const DatumSpec& d) {
    json j;
    j["preset"] = d.preset;
    if (!d.value.empty()) j["value"] = d.value;
    if (!d.left.empty()) j["left"] = d.left;
    if (!d.right.empty()) j["right"] = d.right;
    if (d.preset == "riemann") j["x0"] = d.x0;
    if (d.a) j["a"] = *d.a;
    if (d.b) j["b"] = *d.b;
    if (d.preset == "random") {
        j["jumps"] = d.random.jumps;
        j["lo"] = d.random.lo;
        j["hi"] = d.random.hi;
        j["amplitude"] = d.random.amplitude;
    }
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot open " + path.string());
    f << text;
    if (!f) throw std::ios_base::failure("cannot write " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------

double DiagnosticSpec::number(const std::string& key, double fallback) const {
    auto it = numbers.find(key);
    if (it == numbers.end()) return fallback;
    if (it->second.size() != 1)
        throw ConfigError(fmt::format("line {}: diagnostics.{}.{}: expected a single number", line, kind, key));
    return it->second.front();
}

std::vector<double> DiagnosticSpec::list(const std::string& key, std::vector<double> fallback) const {
    auto it = numbers.find(key);
    return it == numbers.end() ? fallback : it->second;
}

std::string DiagnosticSpec::text(const std::string& key, std::string fallback) const {
    auto it = strings.find(key);
    return it == strings.end() ? fallback : it->second;
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

const std::vector<DiagnosticInfo>& registered_diagnostics() {
    static const std::vector<DiagnosticInfo> d = {
        {"trace", "Glimm functionals V, Q, Upsilon along one splitting run", {"s", "t"}},
        {"limit", "pairwise distances of F^s_t over a decreasing step sequence", {"s", "t", "levels"}},
        {"commutation", "|S_t P_t u - P_t S_t u|_1 and its log-log slope in t", {"t", "N", "min_slope"}},
        {"tangent", "(1/t)|F_t u - S_t u - t G(u)|_1 and its log-log slope in t", {"t", "levels", "min_slope"}},
        {"sensitivity", "distance between runs with a perturbed model parameter",
         {"param", "deltas", "t", "s_fraction", "slope_tol"}},
        {"characterization", "local integral quotients against the Riemann fan and the frozen linear flow",
         {"xi", "windows", "thetas", "substeps", "tau", "max_sharp_ratio", "max_spread"}},
        {"entropy", "entropy inequality residual against tensor hat test functions",
         {"eps", "s", "k", "x_lo", "x_hi", "x_hats", "t_lo", "t_hi", "t_hats", "source_grid", "max_positive"}},
        {"rescaling", "deviation from the hyperbolic rescaling identity of the convective flow",
         {"t", "lambdas", "eps", "tol"}},
    };
    return d;
}

const std::vector<DiagnosticInfo>& registered_presets() {
    static const std::vector<DiagnosticInfo> p = {
        {"bump", "value on [a, b[, zero elsewhere", {"value", "a", "b"}},
        {"riemann", "left on [a, x0[, right on [x0, b[, zero elsewhere", {"left", "right", "x0", "a", "b"}},
        {"random", "seeded piecewise constant function", {"dim", "jumps", "lo", "hi", "amplitude"}},
    };
    return p;
}

Scenario parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(fmt::format("line {}: syntax error: {}", e.mark.line + 1, e.msg));
    }
    if (!root.IsMap()) throw ConfigError("line 1: scenario must be a mapping");
    check_keys(root, "scenario", {"schema", "name", "model", "source", "datum", "schedule", "seed", "output", "diagnostics"});
    Scenario sc;
    if (const auto v = root["schema"]) {
        const double version = as_double(v, "schema");
        if (version != kSchemaVersion) fail(v, "schema", fmt::format("unsupported version {} (expected {})", version, kSchemaVersion));
    }
    if (const auto v = root["name"]) sc.name = as_string(v, "name");
    if (!root["model"]) fail(root, "model", "missing");
    parse_model(root["model"], sc);
    if (const auto v = root["source"]) parse_source(v, sc);
    check_model_params(root["model"], sc);
    if (const auto v = root["datum"]) parse_datum(v, sc.datum);
    if (const auto v = root["schedule"]) parse_schedule(v, sc);
    if (const auto v = root["seed"]) {
        const double s = as_double(v, "seed");
        if (s < 0.0 || s != std::floor(s)) fail(v, "seed", "must be a nonnegative integer");
        sc.seed = static_cast<std::uint64_t>(s);
    }
    if (const auto v = root["output"]) sc.output = as_string(v, "output");
    if (const auto v = root["diagnostics"]) {
        if (v.IsNull()) return sc;
        if (!v.IsSequence()) fail(v, "diagnostics", "expected a list");
        for (const auto& item : v) sc.diagnostics.push_back(parse_diagnostic(item));
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::ios_base::failure("cannot read scenario " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_scenario(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string resolve_output_dir(const Scenario& sc, const RunOptions& opts) {
    if (opts.out) return *opts.out;
    if (const char* env = std::getenv("BALSPLIT_OUTPUT_DIR"); env && *env) return env;
    return sc.output;
}

int run_scenario(const Scenario& sc, const RunOptions& opts, std::ostream& log) {
    Context ctx{sc, build_bundle(sc, sc.params), PCFn(1), base_schedule(sc)};
    ctx.u0 = build_datum(sc, ctx.bundle.model->dim());
    if (!sc.c0) ctx.sched.c0 = calibrate_c0(*ctx.bundle.model, kC0Strength, kC0Samples, sc.seed).c0;

    // artifact names, suffixed when a kind repeats
    std::map<std::string, int> seen;
    std::vector<std::string> names;
    for (const auto& d : sc.diagnostics) {
        const int k = seen[d.kind]++;
        names.push_back(k == 0 ? d.kind + ".csv" : fmt::format("{}_{}.csv", d.kind, k + 1));
    }

    auto outcomes = parallel_map<Outcome>(sc.diagnostics.size(), opts.jobs, [&](std::size_t i) {
        const DiagnosticSpec& d = sc.diagnostics[i];
        Outcome o;
        try {
            o = dispatch(ctx, d);
        } catch (const ConfigError& e) {
            o.error = e.what();
            o.error_code = kConfigError;
        } catch (const std::exception& e) {
            o.error = fmt::format("diagnostic '{}' (line {}): {}", d.kind, d.line, e.what());
            o.error_code = kRuntimeError;
        }
        o.kind = d.kind;
        o.csv_name = o.error.empty() ? names[i] : "";
        return o;
    });

    const std::filesystem::path dir = resolve_output_dir(sc, opts);
    std::filesystem::create_directories(dir);

    const SourceConstants k = ctx.bundle.source->constants();
    json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["scenario"] = sc.name;
    summary["model"] = {{"id", sc.model_id},
                        {"params", sc.params},
                        {"source", ctx.bundle.source->id()},
                        {"source_kind", to_string(ctx.bundle.source->kind())},
                        {"constants", {{"L1", k.L1}, {"L2", k.L2}, {"L3", k.L3}}},
                        {"lambda_hat", ctx.bundle.model->lambda_hat()}};
    summary["datum"] = datum_json(sc.datum);
    summary["schedule"] = {{"s", sc.s_list}, {"t", sc.t}, {"eps", sc.eps}, {"N", sc.N}, {"c0", ctx.sched.c0}};
    summary["schedule"]["c0_calibrated"] = !sc.c0.has_value();
    if (sc.delta) summary["schedule"]["delta"] = *sc.delta;
    summary["seed"] = sc.seed;
    summary["diagnostics"] = json::array();

    bool all_pass = true;
    int code = kOk;
    for (const auto& o : outcomes) {
        json d;
        d["kind"] = o.kind;
        if (!o.error.empty()) {
            d["pass"] = false;
            d["error"] = o.error;
            log << "error: " << o.error << "\n";
            all_pass = false;
            code = std::max(code, o.error_code);
            summary["diagnostics"].push_back(d);
            continue;
        }
        write_file(dir / o.csv_name, o.csv);
        bool pass = true;
        d["csv"] = o.csv_name;
        if (!o.fit.empty()) d["fit"] = o.fit;
        d["checks"] = json::array();
        for (const auto& c : o.checks) {
            d["checks"].push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
            pass = pass && c.pass;
            log << fmt::format("{:<17} {:<32} {:>24}  [{}]  {}\n", o.kind, c.name, format_number(c.value), c.bound,
                               c.pass ? "PASS" : "FAIL");
        }
        d["measured"] = o.measured;
        d["pass"] = pass;
        all_pass = all_pass && pass;
        summary["diagnostics"].push_back(d);
    }
    summary["pass"] = all_pass;
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    if (code != kOk) return code;
    return all_pass ? kOk : kCheckFailed;
}

std::string describe(const std::string& id) {
    if (const ModelInfo* m = find_model(id)) {
        ModelBundle b = make_model(id);
        const SourceConstants k = b.source->constants();
        std::string params;
        for (const auto& p : m->params) params += (params.empty() ? "" : ", ") + p;
        return fmt::format(
            "model {}\n  {}\n  components: {}\n  lambda_hat: {}\n  source: {} ({})\n  L1, L2, L3 = {}, {}, {}\n"
            "  params: {}\n",
            id, m->summary, b.model->dim(), format_number(b.model->lambda_hat()), b.source->id(),
            to_string(b.source->kind()), num(k.L1), num(k.L2), num(k.L3), params);
    }
    for (const auto* list : {&registered_diagnostics(), &registered_presets()}) {
        for (const auto& d : *list) {
            if (d.kind != id) continue;
            std::string opts;
            for (const auto& o : d.options) opts += (opts.empty() ? "" : ", ") + o;
            const char* what = list == &registered_diagnostics() ? "diagnostic" : "preset";
            return fmt::format("{} {}\n  {}\n  options: {}\n", what, id, d.summary, opts);
        }
    }
    std::vector<std::string> all;
    for (const auto& m : registered_models()) all.push_back(m.id);
    for (const auto& d : registered_diagnostics()) all.push_back(d.kind);
    for (const auto& p : registered_presets()) all.push_back(p.kind);
    const std::string hint = closest_match(id, all);
    throw ConfigError(fmt::format("unknown id '{}'{}", id, hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
}

}  // namespace balsplit::cli
