#ifndef BALSPLIT_VERIFY_HPP
#define BALSPLIT_VERIFY_HPP

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "balsplit/splitting.hpp"

namespace balsplit {

/// Integral of |u - w| over [a, b].
double windowed_l1(const PCFn& u, const PCFn& w, double a, double b);

/// Self-similar solution of the homogeneous Riemann problem at xi with data v(xi-), v(xi+).
class SharpFan {
public:
    /// Rarefactions are resolved into `pieces` constant states each.
    SharpFan(const SystemModel& model, const PCFn& v, double xi, int pieces = 1024);

    double xi() const { return xi_; }
    /// Front speeds, nondecreasing.
    const std::vector<double>& speeds() const { return speeds_; }
    /// States between fronts; size speeds() + 1.
    const std::vector<State>& states() const { return states_; }

    State value(double theta, double x) const;
    /// The fan at time theta restricted to [lo, hi], zero outside.
    PCFn window(double theta, double lo, double hi) const;

private:
    double xi_;
    std::vector<double> speeds_;
    std::vector<State> states_;
};

/// Linear evolution with the characteristic structure frozen at v(xi) and source G(v).
class FlatSolution {
public:
    FlatSolution(const SystemModel& model, const SourceOp& source, const PCFn& v, double xi);

    const Eigensystem& frozen() const { return eig_; }
    /// Transport part: sum_i (l_i . v(x - lambda_i theta)) r_i.
    PCFn transport(double theta) const;
    /// Source part at sorted points: sum_i int_0^theta (l_i . G(v)(x - lambda_i s)) ds r_i.
    std::vector<State> source_part(double theta, std::span<const double> xs) const;
    State value(double theta, double x) const;
    /// Integral over [lo, hi] of |w - U(theta)|; infinite bounds are clipped to the supports.
    double l1_distance(const PCFn& w, double theta, double lo, double hi) const;

private:
    PCFn v_;
    SourceField field_;
    Eigensystem eig_;
};

/// Point xi with nested windows ]a, b[ around it and decreasing durations theta.
struct LocalWindow {
    double xi = 0.0;
    std::vector<std::pair<double, double>> bounds;
    std::vector<double> thetas;
};

struct CharacterizationRow {
    double theta;
    /// (1/theta) int over [xi -+ theta lambda_hat] of |F_theta u - U_sharp|.
    double sharp;
    /// (1/theta) int over [a + theta lambda_hat, b - theta lambda_hat] of |F_theta u - U_flat|, per window.
    std::vector<double> flat;
};

struct CharacterizationReport {
    LocalWindow window;
    /// TV(u; ]a, b[) per window.
    std::vector<double> tv;
    std::vector<CharacterizationRow> rows;
    /// sharp quotient at the smallest theta over the one at the largest theta.
    double sharp_ratio = 0.0;
    /// Per window: max over the two smallest theta of flat / tv^2.
    std::vector<double> flat_constant;
    /// max over windows of flat_constant divided by the outermost window's.
    double flat_spread = 0.0;
};

/// F_theta is the splitting flow with s = theta / substeps.
CharacterizationReport check_characterization(const ModelBundle& bundle, const PCFn& u, const LocalWindow& window,
                                              const SplitSchedule& sched, int substeps = 8, int jobs = 1);

/// Trajectory of F^s_t at sorted times in [0, t_final].
std::vector<PCFn> sample_trajectory(const ModelBundle& bundle, const PCFn& u0, const SplitSchedule& sched,
                                    std::span<const double> times);

/// Convex entropy eta with flux q, gradient D eta.
struct EntropyPair {
    std::function<double(const State&)> eta;
    std::function<double(const State&)> q;
    std::function<State(const State&)> grad;
};
/// Kruzkov pair |u - k|, sgn(u - k)(f(u) - f(k)) for a scalar model.
EntropyPair kruzkov_pair(std::shared_ptr<const SystemModel> model, double k);
/// Physical entropy -rho s with flux -rho v s for the Euler model.
EntropyPair euler_entropy_pair(std::shared_ptr<const EulerModel> model);
/// Throws ConfigError when midpoint convexity fails on random pairs in Omega.
void require_convex(const EntropyPair& pair, const SystemModel& model, int samples = 200);

struct EntropyOptions {
    /// Kruzkov constants (scalar models); ignored when `pair` is set.
    std::vector<double> kruzkov = {-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0};
    std::optional<EntropyPair> pair;
    double x_lo = -1.0, x_hi = 2.0;
    int x_hats = 12;
    double t_lo = 0.0, t_hi = 0.2;
    int t_hats = 4;
    /// Grid for evaluating the source term.
    int source_grid = 1024;
};

struct EntropyRow {
    double k;  ///< Kruzkov constant, NaN for a custom pair
    double t_center;
    double x_center;
    /// -int int (eta phi_t + q phi_x + D eta . G phi) for the unit-height tensor hat phi.
    double residual;
};

struct EntropyReport {
    std::vector<EntropyRow> rows;
    double max_positive = 0.0;
    double min_residual = 0.0;
};

/// Entropy inequality residual of the splitting trajectory against tensor hat test functions.
EntropyReport entropy_residual(const ModelBundle& bundle, const PCFn& u0, const SplitSchedule& sched,
                               const EntropyOptions& opts);

struct RescalingRow {
    double lambda;
    double deviation;
};
struct RescalingReport {
    std::vector<RescalingRow> rows;
    double max_deviation = 0.0;
};
/// lambda * |(S_t u)_lambda - S_{t/lambda} u_lambda|_1 with u_lambda(x) = u(lambda x).
RescalingReport rescaling_check(std::shared_ptr<const SystemModel> model, const PCFn& u, double t,
                                const std::vector<double>& lambdas, const FrontTrackingParams& ft);

}  // namespace balsplit

#endif
