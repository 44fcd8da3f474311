#ifndef BALSPLIT_SPLITTING_HPP
#define BALSPLIT_SPLITTING_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "balsplit/fronttrack.hpp"
#include "balsplit/models.hpp"

namespace balsplit {

/// Parameters of the fractional-step operator F^s_t.
struct SplitSchedule {
    double s = 0.01;
    double t_final = 0.1;
    /// Admission parameter; unset disables the domain check.
    std::optional<double> delta;
    /// Growth rate of the admissible domain.
    double C = 0.0;
    /// Admissible horizon.
    double T = std::numeric_limits<double>::infinity();
    int N = 64;
    double c0 = 1.0;
    FrontTrackingParams ft;
    /// Record Glimm functionals at every source step.
    bool trace = true;
};

struct TraceRow {
    double time;
    double V;
    double Q;
    double Upsilon;
    /// Upsilon just before the source step that produced this row (NaN for the first row).
    double Upsilon_pre;
    double TV;
    double L1;
    std::size_t fronts;
    double admission_bound;
    bool admitted;
};

struct RunTrace {
    std::string model_id;
    std::string source_id;
    SplitSchedule schedule;
    std::vector<TraceRow> rows;
    std::size_t interactions = 0;
    bool approximate = false;
};

struct RunResult {
    PCFn u;
    RunTrace trace;
};

/// F^s_t u0 = S_{t-hs} (P_s o S_s)^h u0 with h = floor(t / s).
RunResult run(const ModelBundle& bundle, const PCFn& u0, const SplitSchedule& sched);

/// Pure convective semigroup S_t u.
PCFn convective(const ModelBundle& bundle, const PCFn& u, double t, const FrontTrackingParams& ft);

/// Least-squares slope of log y against log x after dropping the point with the largest x.
/// Points with non-positive y are ignored; NaN when fewer than two remain.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, bool drop_coarsest = true);

/// t * 2^-k for k = 0..levels-1, or t^2 * 2^-k when `quadratic`.
std::vector<double> step_sequence(double t, int levels, bool quadratic);

struct LimitRow {
    double s;
    double t;
    double distance;  ///< |F^s_t u - F^{s_next}_t u|_1; NaN for the finest run
    double slope;
    double bound;     ///< monotonicity bound 1.05 * previous distance
    bool pass;
};
struct LimitResult {
    std::vector<LimitRow> rows;
    std::vector<PCFn> runs;
    /// Finest run, used as the F_t surrogate.
    PCFn surrogate;
    /// Distance between the two finest runs.
    double error_bar = 0.0;
    /// sup over all pairs of |F^s u - F^s' u| / (t^2 (1 + |u|_1)).
    double uniform_constant = 0.0;
};
LimitResult limit_run(const ModelBundle& bundle, const PCFn& u0, double t, const std::vector<double>& s_sequence,
                      const SplitSchedule& base, int jobs = 1);

struct DefectRow {
    double t;
    double defect;
};
struct DefectTable {
    std::vector<DefectRow> rows;
    double slope;
};
/// |S_t P_t u - P_t S_t u|_1 for each t.
DefectTable commutation_defect(const ModelBundle& bundle, const PCFn& u, const std::vector<double>& t_list,
                               int N, const FrontTrackingParams& ft, int jobs = 1);

struct TangentRow {
    double t;
    double quotient;        ///< |F_t u - S_t u - t Pi_N G(u)|_1 / t
    double quotient_ps;     ///< |F_t u - P_t S_t u|_1 / t
    double error_bar;       ///< surrogate error / t
};
struct TangentTable {
    std::vector<TangentRow> rows;
    double slope;
    double slope_ps;
};
/// Surrogate F_t from limit_run with s = t^2 2^-k, k < levels.
TangentTable tangent_defect(const ModelBundle& bundle, const PCFn& u, const std::vector<double>& t_list,
                            const SplitSchedule& base, int levels, int jobs = 1);

struct SensitivityReport {
    double distance;
    double flux_gap;    ///< sup over sampled Omega of |Df1 - Df2|
    double source_gap;  ///< sup over probes of |G1(u) - G2(u)|_1
    /// distance / ((flux_gap + source_gap) t)
    double rate;
};
SensitivityReport sensitivity(const ModelBundle& a, const ModelBundle& b, const PCFn& u0, const SplitSchedule& sched,
                              int jobs = 1);

/// |F^s_t u - F^s_t w|_1 / |u - w|_1.
double lipschitz_quotient(const ModelBundle& bundle, const PCFn& u, const PCFn& w, const SplitSchedule& sched);

/// Largest ratio (Upsilon(P_s u) - Upsilon(u)) / (s (L3 + V(u))) over random data, doubled.
double calibrate_domain_growth(const ModelBundle& bundle, double s, int N, double c0, int samples,
                               std::uint64_t seed);

}  // namespace balsplit

#endif
