#ifndef BALSPLIT_FLUX_MODELS_HPP
#define BALSPLIT_FLUX_MODELS_HPP

#include <functional>
#include <memory>

#include "balsplit/system.hpp"

namespace balsplit {

/// Strictly convex scalar flux with its derivative, the inverse derivative and
/// the Legendre conjugate of the flux.
struct ConvexFlux {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> df_inv;
    std::function<double(double)> conjugate;
    /// Optional exact Rankine-Hugoniot speed.
    std::function<double(double, double)> rh;
};

/// f(u) = u^2/2.
ConvexFlux burgers_flux();

/// Scalar conservation law with a strictly convex flux; k_1 = 1.
class ScalarConvexModel : public SystemModel {
public:
    ScalarConvexModel(std::string id, ConvexFlux flux, double half_width = 2.0);

    const ConvexFlux& convex_flux() const { return flux_; }
    State flux(const State& u) const override;
    Matrix jacobian(const State& u) const override;
    Eigensystem eig(const State& u) const override;
    double lambda(int j, const State& u) const override;
    State rarefaction_curve(int j, double sigma, const State& u) const override;
    State hugoniot_curve(int j, double sigma, const State& u) const override;
    double shock_speed(int j, const State& ul, const State& ur) const override;
    double rarefaction_speed(int j, const State& ul, const State& ur) const override;
    std::optional<State> closed_form_strengths(const State& ul, const State& ur) const override;

private:
    ConvexFlux flux_;
};

std::shared_ptr<ScalarConvexModel> make_burgers(double half_width = 2.0);

/// f(u) = A u with real distinct eigenvalues; every field linearly degenerate.
class LinearModel : public SystemModel {
public:
    LinearModel(std::string id, const Matrix& A, double half_width = 1.0);

    State flux(const State& u) const override { return A_ * u; }
    Matrix jacobian(const State&) const override { return A_; }
    Eigensystem eig(const State&) const override { return es_; }
    double lambda(int j, const State&) const override { return es_.lambda[j]; }
    State rarefaction_curve(int j, double sigma, const State& u) const override;
    State hugoniot_curve(int j, double sigma, const State& u) const override;
    double shock_speed(int j, const State&, const State&) const override { return es_.lambda[j]; }
    double rarefaction_speed(int j, const State&, const State&) const override { return es_.lambda[j]; }
    std::optional<State> closed_form_strengths(const State& ul, const State& ur) const override;

private:
    Matrix A_;
    Eigensystem es_;
};

/// Ideal gas state and constants.
struct GasParams {
    double gamma = 5.0 / 3.0;
    double cv = 1.0;
    double rho = 1.0;
    double v = 0.0;
    double e = 1.0;
    double half_width = 0.05;
};

struct Primitive {
    double rho, v, p, c, e;
};

/**
 * @brief One-dimensional Euler equations in conserved deviations (rho, m, E) - base.
 *
 * Families 0 and 2 are acoustic (genuinely nonlinear), family 1 is the contact.
 * Curves, eigenstructure and the Riemann inversion are analytic.
 */
class EulerModel : public SystemModel {
public:
    explicit EulerModel(const GasParams& gas, std::string id = "euler");

    const GasParams& gas() const { return gas_; }
    const State& base() const { return base_; }
    /// Conserved variables of base + u.
    State absolute(const State& u) const { return base_ + u; }
    State deviation(const State& U) const { return U - base_; }
    Primitive primitive(const State& u) const;
    State from_primitive(double rho, double v, double p) const;
    /// Temperature e / c_v.
    double temperature(const State& u) const;

    State flux(const State& u) const override;
    Matrix jacobian(const State& u) const override;
    Eigensystem eig(const State& u) const override;
    double lambda(int j, const State& u) const override;
    State rarefaction_curve(int j, double sigma, const State& u) const override;
    State hugoniot_curve(int j, double sigma, const State& u) const override;
    double shock_speed(int j, const State& ul, const State& ur) const override;
    std::optional<State> closed_form_strengths(const State& ul, const State& ur) const override;

    /// Point on the j-Hugoniot locus with pressure ratio P = p'/p.
    State hugoniot_state(int j, double P, const State& u) const;

private:
    GasParams gas_;
    State base_;
};

/// Flux given as a function only; everything else numeric.
class GenericFluxModel : public SystemModel {
public:
    GenericFluxModel(std::string id, int n, std::function<State(const State&)> flux,
                     std::vector<FieldKind> kinds, Box omega);
    State flux(const State& u) const override { return f_(u); }

private:
    std::function<State(const State&)> f_;
};

/**
 * @brief Adds a transported clock component w with speed lambda_hat of the base model.
 *
 * The clock family is last and linearly degenerate; the augmented lambda_hat is
 * 1.1 times the base one.
 */
class AugmentedModel : public SystemModel {
public:
    explicit AugmentedModel(std::shared_ptr<const SystemModel> base, double clock_half_width = 2.0);

    const SystemModel& base() const { return *base_; }
    double clock_speed() const { return speed_; }

    State flux(const State& u) const override;
    Matrix jacobian(const State& u) const override;
    Eigensystem eig(const State& u) const override;
    double lambda(int j, const State& u) const override;
    State rarefaction_curve(int j, double sigma, const State& u) const override;
    State hugoniot_curve(int j, double sigma, const State& u) const override;
    double shock_speed(int j, const State& ul, const State& ur) const override;
    double rarefaction_speed(int j, const State& ul, const State& ur) const override;
    std::optional<State> closed_form_strengths(const State& ul, const State& ur) const override;

private:
    static Box augmented_box(const SystemModel& base, double w);
    std::shared_ptr<const SystemModel> base_;
    double speed_;
};

}  // namespace balsplit

#endif
