#ifndef BALSPLIT_SYSTEM_HPP
#define BALSPLIT_SYSTEM_HPP

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "balsplit/pcfn.hpp"
#include "balsplit/state.hpp"

namespace balsplit {

enum class FieldKind { GenuinelyNonlinear, LinearlyDegenerate };

/// Sorted eigenvalues with biorthonormal eigenvectors: columns of R, rows of L, L*R = I.
struct Eigensystem {
    State lambda;
    Matrix R;
    Matrix L;
};

/**
 * @brief Strictly hyperbolic flux in deviation coordinates around a base state.
 *
 * Families are indexed 0..n-1 in order of increasing speed. Wave curves are
 * normalized so that d/dsigma lambda_j = k_j along genuinely nonlinear curves
 * and by arc length along linearly degenerate ones.
 */
class SystemModel {
public:
    virtual ~SystemModel() = default;

    const std::string& id() const { return id_; }
    int dim() const { return n_; }
    FieldKind field(int j) const { return kinds_[static_cast<std::size_t>(j)]; }
    bool genuinely_nonlinear(int j) const { return field(j) == FieldKind::GenuinelyNonlinear; }
    double k(int j) const { return k_[static_cast<std::size_t>(j)]; }
    /// Strict upper bound of all characteristic speeds on omega.
    double lambda_hat() const { return lambda_hat_; }
    const Box& omega() const { return omega_; }
    /// Throws DomainError when u is outside omega.
    void require_in_omega(const State& u, const char* what) const;

    virtual State flux(const State& u) const = 0;
    virtual Matrix jacobian(const State& u) const;
    virtual Eigensystem eig(const State& u) const;
    virtual double lambda(int j, const State& u) const;

    /// Integral curve of r_j through u with the model normalization.
    virtual State rarefaction_curve(int j, double sigma, const State& u) const;
    /// Rankine-Hugoniot locus of family j through u, same parametrization.
    virtual State hugoniot_curve(int j, double sigma, const State& u) const;
    /// Rankine-Hugoniot speed of a j-discontinuity between ul and ur.
    virtual double shock_speed(int j, const State& ul, const State& ur) const;
    /// Speed assigned to a rarefaction front between ul and ur.
    virtual double rarefaction_speed(int j, const State& ul, const State& ur) const;
    /// Optional exact inversion of the Lax curve composition.
    virtual std::optional<State> closed_form_strengths(const State& ul, const State& ur) const;

    /// psi_j: rarefaction branch for sigma >= 0, shock branch for sigma < 0.
    State lax_curve(int j, double sigma, const State& u) const;

protected:
    SystemModel(std::string id, int n, std::vector<FieldKind> kinds, Box omega);
    /// Fixes eigenvector orientation at the origin, certifies strict hyperbolicity
    /// on a grid over omega and sets lambda_hat (unless positive already).
    void finalize(int samples_per_axis = 5);
    void set_lambda_hat(double v) { lambda_hat_ = v; }
    void set_k(std::vector<double> k) { k_ = std::move(k); }
    /// Reference orientation for numerically computed eigenvectors.
    Matrix ref_R_;

private:
    std::string id_;
    int n_;
    std::vector<FieldKind> kinds_;
    std::vector<double> k_;
    Box omega_;
    double lambda_hat_ = 0.0;
};

/// Wave strengths together with the intermediate states omega_0 = ul, ..., omega_n = ur.
struct RiemannSolution {
    State sigma;
    std::vector<State> states;
};

enum class CurveKind { Lax, Hugoniot };

/// Psi(sigma)(u): composition psi_{n-1} o ... o psi_0.
State wave_sequence(const SystemModel& model, const State& sigma, const State& u);
/// S(sigma)(u): composition of Rankine-Hugoniot curves for all signs.
State rh_glue(const SystemModel& model, const State& sigma, const State& u);

struct NewtonOptions {
    int max_iterations = 50;
    double damping = 0.5;
    int max_halvings = 30;
    double tolerance = 1e-10;
};

/// Inverse of Psi (or S) by damped Newton iteration; throws ConvergenceError.
RiemannSolution newton_strengths(const SystemModel& model, const State& ul, const State& ur,
                                 CurveKind kind = CurveKind::Lax, const NewtonOptions& opts = {});
/// Riemann solution with strengths sigma = E(ul, ur); uses the model's closed form when present.
RiemannSolution solve_riemann(const SystemModel& model, const State& ul, const State& ur);
State riemann_strengths(const SystemModel& model, const State& ul, const State& ur);

/// Strengths of the waves generated at one jump.
struct JumpWaves {
    double x;
    State sigma;
};
std::vector<JumpWaves> wave_decomposition(const SystemModel& model, const PCFn& u);

struct GlimmValues {
    double V = 0.0;
    double Q = 0.0;
    double Upsilon = 0.0;
};
/// Linear strength, interaction potential over approaching pairs, and V + c0 Q.
GlimmValues glimm_functionals(const SystemModel& model, const PCFn& u, double c0);
GlimmValues glimm_from_waves(const SystemModel& model, std::span<const JumpWaves> waves, double c0);

struct C0Calibration {
    double c0;
    double max_amplification;
};
/// 4 * max over random interacting pairs of |outgoing - incoming| / |sigma sigma'|, at least 1.
C0Calibration calibrate_c0(const SystemModel& model, double strength, int samples, std::uint64_t seed);

}  // namespace balsplit

#endif
