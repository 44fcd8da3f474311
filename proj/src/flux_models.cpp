#include "balsplit/flux_models.hpp"

#include <cmath>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "balsplit/errors.hpp"

namespace balsplit {

ConvexFlux burgers_flux() {
    ConvexFlux fl;
    fl.f = [](double u) { return 0.5 * u * u; };
    fl.df = [](double u) { return u; };
    fl.df_inv = [](double y) { return y; };
    fl.conjugate = [](double y) { return 0.5 * y * y; };
    fl.rh = [](double a, double b) { return 0.5 * (a + b); };
    return fl;
}

ScalarConvexModel::ScalarConvexModel(std::string id, ConvexFlux flux, double half_width)
    : SystemModel(std::move(id), 1, {FieldKind::GenuinelyNonlinear}, Box::centered(1, half_width)),
      flux_(std::move(flux)) {
    if (!flux_.f || !flux_.df || !flux_.df_inv)
        throw ConfigError("scalar flux needs f, f' and (f')^-1");
    double prev = flux_.df(-half_width);
    for (int i = 1; i <= 256; ++i) {
        double x = -half_width + 2.0 * half_width * i / 256.0;
        double d = flux_.df(x);
        if (!(d > prev)) throw ConfigError(fmt::format("flux is not strictly convex near u = {}", x));
        prev = d;
    }
    finalize();
}

State ScalarConvexModel::flux(const State& u) const {
    return State::Constant(1, flux_.f(u[0]) - flux_.f(0.0));
}

Matrix ScalarConvexModel::jacobian(const State& u) const { return Matrix::Constant(1, 1, flux_.df(u[0])); }

Eigensystem ScalarConvexModel::eig(const State& u) const {
    return {State::Constant(1, flux_.df(u[0])), Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
}

double ScalarConvexModel::lambda(int, const State& u) const { return flux_.df(u[0]); }

State ScalarConvexModel::rarefaction_curve(int, double sigma, const State& u) const {
    if (sigma == 0.0) return u;
    return State::Constant(1, flux_.df_inv(flux_.df(u[0]) + k(0) * sigma));
}

State ScalarConvexModel::hugoniot_curve(int j, double sigma, const State& u) const {
    return rarefaction_curve(j, sigma, u);
}

double ScalarConvexModel::shock_speed(int, const State& ul, const State& ur) const {
    double a = ul[0], b = ur[0];
    if (flux_.rh) return flux_.rh(a, b);
    if (std::abs(b - a) < 1e-7) return 0.5 * (flux_.df(a) + flux_.df(b));
    return (flux_.f(b) - flux_.f(a)) / (b - a);
}

double ScalarConvexModel::rarefaction_speed(int j, const State& ul, const State& ur) const {
    return shock_speed(j, ul, ur);
}

std::optional<State> ScalarConvexModel::closed_form_strengths(const State& ul, const State& ur) const {
    return State::Constant(1, (flux_.df(ur[0]) - flux_.df(ul[0])) / k(0));
}

std::shared_ptr<ScalarConvexModel> make_burgers(double half_width) {
    return std::make_shared<ScalarConvexModel>("burgers", burgers_flux(), half_width);
}

LinearModel::LinearModel(std::string id, const Matrix& A, double half_width)
    : SystemModel(std::move(id), static_cast<int>(A.rows()),
                  std::vector<FieldKind>(static_cast<std::size_t>(A.rows()), FieldKind::LinearlyDegenerate),
                  Box::centered(static_cast<int>(A.rows()), half_width)),
      A_(A) {
    es_ = SystemModel::eig(State::Zero(dim()));
    finalize(2);
}

State LinearModel::rarefaction_curve(int j, double sigma, const State& u) const {
    return u + sigma * es_.R.col(j);
}

State LinearModel::hugoniot_curve(int j, double sigma, const State& u) const {
    return rarefaction_curve(j, sigma, u);
}

std::optional<State> LinearModel::closed_form_strengths(const State& ul, const State& ur) const {
    return State(es_.L * (ur - ul));
}

namespace {

Box euler_box(const GasParams& g) {
    if (!(g.gamma > 1.0)) throw ConfigError("adiabatic exponent must exceed 1");
    if (!(g.cv > 0.0)) throw ConfigError("specific heat must be positive");
    if (!(g.rho > 0.0) || !(g.e > 0.0)) throw ConfigError("base state must have positive density and energy");
    if (!(g.half_width > 0.0)) throw ConfigError("omega half-width must be positive");
    if (g.half_width >= 0.5 * g.rho) throw ConfigError("omega reaches vacuum: reduce half_width");
    return Box::centered(3, g.half_width);
}

}  // namespace

EulerModel::EulerModel(const GasParams& gas, std::string id)
    : SystemModel(std::move(id), 3,
                  {FieldKind::GenuinelyNonlinear, FieldKind::LinearlyDegenerate, FieldKind::GenuinelyNonlinear},
                  euler_box(gas)),
      gas_(gas) {
    base_.resize(3);
    base_ << gas.rho, gas.rho * gas.v, gas.rho * (gas.e + 0.5 * gas.v * gas.v);
    finalize(5);
}

Primitive EulerModel::primitive(const State& u) const {
    State U = base_ + u;
    double rho = U[0];
    if (!(rho > 0.0)) throw DomainError("non-positive density");
    double v = U[1] / rho;
    double e = U[2] / rho - 0.5 * v * v;
    double p = (gas_.gamma - 1.0) * rho * e;
    if (!(p > 0.0)) throw DomainError("non-positive pressure");
    return {rho, v, p, std::sqrt(gas_.gamma * p / rho), e};
}

State EulerModel::from_primitive(double rho, double v, double p) const {
    State U(3);
    U << rho, rho * v, p / (gas_.gamma - 1.0) + 0.5 * rho * v * v;
    return U - base_;
}

double EulerModel::temperature(const State& u) const { return primitive(u).e / gas_.cv; }

State EulerModel::flux(const State& u) const {
    auto physical = [&](const State& U) {
        double rho = U[0], v = U[1] / rho;
        double p = (gas_.gamma - 1.0) * (U[2] - 0.5 * rho * v * v);
        State F(3);
        F << U[1], U[1] * v + p, (U[2] + p) * v;
        return F;
    };
    return physical(base_ + u) - physical(base_);
}

Matrix EulerModel::jacobian(const State& u) const {
    Primitive w = primitive(u);
    const double g = gas_.gamma, v = w.v;
    const double H = (base_[2] + u[2] + w.p) / w.rho;
    Matrix A(3, 3);
    A << 0.0, 1.0, 0.0,
        0.5 * (g - 3.0) * v * v, (3.0 - g) * v, g - 1.0,
        v * (0.5 * (g - 1.0) * v * v - H), H - (g - 1.0) * v * v, g * v;
    return A;
}

Eigensystem EulerModel::eig(const State& u) const {
    Primitive w = primitive(u);
    const double v = w.v, c = w.c;
    const double H = (base_[2] + u[2] + w.p) / w.rho;
    Eigensystem es;
    es.lambda.resize(3);
    es.lambda << v - c, v, v + c;
    es.R.resize(3, 3);
    es.R.col(0) << 1.0, v - c, H - v * c;
    es.R.col(1) << 1.0, v, 0.5 * v * v;
    es.R.col(2) << 1.0, v + c, H + v * c;
    for (int j = 0; j < 3; ++j) es.R.col(j).normalize();
    es.L = es.R.inverse();
    return es;
}

double EulerModel::lambda(int j, const State& u) const {
    Primitive w = primitive(u);
    return w.v + (j - 1) * w.c;
}

State EulerModel::rarefaction_curve(int j, double sigma, const State& u) const {
    if (sigma == 0.0) return u;
    Primitive w = primitive(u);
    if (j == 1) {
        State r(3);
        r << 1.0, w.v, 0.5 * w.v * w.v;
        return u + sigma * r / r.norm();
    }
    const double g = gas_.gamma;
    const double dir = (j == 0) ? -1.0 : 1.0;
    double c2 = w.c + dir * (g - 1.0) / (g + 1.0) * k(j) * sigma;
    if (!(c2 > 0.0)) throw DomainError("rarefaction reaches vacuum");
    double v2 = w.v + dir * 2.0 * (c2 - w.c) / (g - 1.0);
    double rho2 = w.rho * std::pow(c2 / w.c, 2.0 / (g - 1.0));
    double p2 = w.p * std::pow(rho2 / w.rho, g);
    return from_primitive(rho2, v2, p2);
}

State EulerModel::hugoniot_state(int j, double P, const State& u) const {
    Primitive w = primitive(u);
    const double g = gas_.gamma;
    const double mu2 = (g - 1.0) / (g + 1.0);
    double rho2 = w.rho * (P + mu2) / (mu2 * P + 1.0);
    double dv = (P - 1.0) * std::sqrt(w.p * (1.0 - mu2) / (w.rho * (P + mu2)));
    double v2 = (j == 0) ? w.v - dv : w.v + dv;
    return from_primitive(rho2, v2, P * w.p);
}

State EulerModel::hugoniot_curve(int j, double sigma, const State& u) const {
    if (sigma == 0.0) return u;
    // the two curves agree to third order; the bracket below is roundoff-limited there
    if (j == 1 || std::abs(sigma) < 1e-9) return rarefaction_curve(j, sigma, u);
    const double target = lambda(j, u) + k(j) * sigma;
    // x = P - 1; lambda_0 decreases and lambda_2 increases with P
    auto g = [&](double x) { return lambda(j, hugoniot_state(j, 1.0 + x, u)) - target; };
    const bool up = (j == 0) ? sigma < 0.0 : sigma > 0.0;
    double a = 0.0, ga = g(0.0);
    double b = up ? 4.0 * std::abs(sigma) : -std::min(0.5, 4.0 * std::abs(sigma));
    double gb = g(b);
    for (int it = 0; it < 80 && ga * gb > 0.0; ++it) {
        a = b;
        ga = gb;
        b = up ? 2.0 * b : -1.0 + 0.5 * (1.0 + b);
        gb = g(b);
    }
    if (ga * gb > 0.0) throw DomainError(fmt::format("Hugoniot curve of family {} cannot reach strength {}", j, sigma));
    if (gb == 0.0) return hugoniot_state(j, 1.0 + b, u);
    if (a > b) {
        std::swap(a, b);
        std::swap(ga, gb);
    }
    boost::uintmax_t max_iter = 200;
    auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, boost::math::tools::eps_tolerance<double>(53),
                                               max_iter);
    double x = std::abs(g(r.first)) <= std::abs(g(r.second)) ? r.first : r.second;
    return hugoniot_state(j, 1.0 + x, u);
}

double EulerModel::shock_speed(int j, const State& ul, const State& ur) const {
    Primitive l = primitive(ul), r = primitive(ur);
    const double g = gas_.gamma;
    if (j == 1) return 0.5 * (l.v + r.v);
    if (j == 0) return l.v - l.c * std::sqrt((g + 1.0) / (2.0 * g) * (r.p / l.p) + (g - 1.0) / (2.0 * g));
    return r.v + r.c * std::sqrt((g + 1.0) / (2.0 * g) * (l.p / r.p) + (g - 1.0) / (2.0 * g));
}

std::optional<State> EulerModel::closed_form_strengths(const State& ul, const State& ur) const {
    Primitive L = primitive(ul), R = primitive(ur);
    const double g = gas_.gamma;
    const double mu2 = (g - 1.0) / (g + 1.0);
    const double dv = R.v - L.v;
    if (2.0 * (L.c + R.c) / (g - 1.0) <= dv) throw DomainError("Riemann data generate vacuum");

    struct Branch {
        double f, df;
    };
    auto side = [&](double p, const Primitive& K) -> Branch {
        if (p > K.p) {
            double A = 2.0 / ((g + 1.0) * K.rho), B = mu2 * K.p;
            double s = std::sqrt(A / (p + B));
            return {(p - K.p) * s, s * (1.0 - 0.5 * (p - K.p) / (B + p))};
        }
        double ratio = p / K.p;
        return {2.0 * K.c / (g - 1.0) * (std::pow(ratio, (g - 1.0) / (2.0 * g)) - 1.0),
                std::pow(ratio, -(g + 1.0) / (2.0 * g)) / (K.rho * K.c)};
    };

    double p = std::max(1e-8 * std::min(L.p, R.p), 0.5 * (L.p + R.p));
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        Branch fl = side(p, L), fr = side(p, R);
        double F = fl.f + fr.f + dv;
        double dp = -F / (fl.df + fr.df);
        double pn = p + dp;
        if (pn <= 0.0) pn = 0.5 * p;
        bool done = std::abs(pn - p) <= 1e-15 * p;
        p = pn;
        if (done) {
            converged = true;
            break;
        }
    }
    if (!converged) throw ConvergenceError("star pressure iteration did not converge");

    Branch fl = side(p, L), fr = side(p, R);
    const double vs = 0.5 * (L.v + R.v) + 0.5 * (fr.f - fl.f);
    auto star_rho = [&](const Primitive& K) {
        double P = p / K.p;
        return P > 1.0 ? K.rho * (P + mu2) / (mu2 * P + 1.0) : K.rho * std::pow(P, 1.0 / g);
    };
    double rl = star_rho(L), rr = star_rho(R);
    double cl = std::sqrt(g * p / rl), cr = std::sqrt(g * p / rr);
    State sigma(3);
    sigma[0] = ((vs - cl) - (L.v - L.c)) / k(0);
    sigma[1] = (rr - rl) * std::sqrt(1.0 + vs * vs + 0.25 * vs * vs * vs * vs);
    sigma[2] = ((R.v + R.c) - (vs + cr)) / k(2);
    return sigma;
}

GenericFluxModel::GenericFluxModel(std::string id, int n, std::function<State(const State&)> flux,
                                   std::vector<FieldKind> kinds, Box omega)
    : SystemModel(std::move(id), n, std::move(kinds), std::move(omega)), f_(std::move(flux)) {
    finalize(3);
}

Box AugmentedModel::augmented_box(const SystemModel& base, double w) {
    int n = base.dim();
    Box b{State(n + 1), State(n + 1)};
    b.lo.head(n) = base.omega().lo;
    b.hi.head(n) = base.omega().hi;
    b.lo[n] = -w;
    b.hi[n] = w;
    return b;
}

namespace {

std::vector<FieldKind> augmented_kinds(const SystemModel& base) {
    std::vector<FieldKind> k;
    for (int j = 0; j < base.dim(); ++j) k.push_back(base.field(j));
    k.push_back(FieldKind::LinearlyDegenerate);
    return k;
}

}  // namespace

AugmentedModel::AugmentedModel(std::shared_ptr<const SystemModel> base, double clock_half_width)
    : SystemModel(base->id() + "+clock", base->dim() + 1, augmented_kinds(*base),
                  augmented_box(*base, clock_half_width)),
      base_(std::move(base)),
      speed_(base_->lambda_hat()) {
    if (base_->dim() + 1 > kMaxDim) throw ConfigError("augmented system too large");
    std::vector<double> k;
    for (int j = 0; j < base_->dim(); ++j) k.push_back(base_->k(j));
    k.push_back(1.0);
    set_k(std::move(k));
    set_lambda_hat(1.1 * speed_);
    finalize(3);
}

State AugmentedModel::flux(const State& u) const {
    const int n = base_->dim();
    State F(n + 1);
    F.head(n) = base_->flux(u.head(n));
    F[n] = speed_ * u[n];
    return F;
}

Matrix AugmentedModel::jacobian(const State& u) const {
    const int n = base_->dim();
    Matrix J = Matrix::Zero(n + 1, n + 1);
    J.topLeftCorner(n, n) = base_->jacobian(u.head(n));
    J(n, n) = speed_;
    return J;
}

Eigensystem AugmentedModel::eig(const State& u) const {
    const int n = base_->dim();
    Eigensystem b = base_->eig(u.head(n));
    Eigensystem es;
    es.lambda.resize(n + 1);
    es.lambda.head(n) = b.lambda;
    es.lambda[n] = speed_;
    es.R = Matrix::Zero(n + 1, n + 1);
    es.L = Matrix::Zero(n + 1, n + 1);
    es.R.topLeftCorner(n, n) = b.R;
    es.L.topLeftCorner(n, n) = b.L;
    es.R(n, n) = 1.0;
    es.L(n, n) = 1.0;
    return es;
}

double AugmentedModel::lambda(int j, const State& u) const {
    return j == base_->dim() ? speed_ : base_->lambda(j, u.head(base_->dim()));
}

State AugmentedModel::rarefaction_curve(int j, double sigma, const State& u) const {
    const int n = base_->dim();
    State v = u;
    if (j == n)
        v[n] += sigma;
    else
        v.head(n) = base_->rarefaction_curve(j, sigma, u.head(n));
    return v;
}

State AugmentedModel::hugoniot_curve(int j, double sigma, const State& u) const {
    const int n = base_->dim();
    State v = u;
    if (j == n)
        v[n] += sigma;
    else
        v.head(n) = base_->hugoniot_curve(j, sigma, u.head(n));
    return v;
}

double AugmentedModel::shock_speed(int j, const State& ul, const State& ur) const {
    const int n = base_->dim();
    return j == n ? speed_ : base_->shock_speed(j, ul.head(n), ur.head(n));
}

double AugmentedModel::rarefaction_speed(int j, const State& ul, const State& ur) const {
    const int n = base_->dim();
    return j == n ? speed_ : base_->rarefaction_speed(j, ul.head(n), ur.head(n));
}

std::optional<State> AugmentedModel::closed_form_strengths(const State& ul, const State& ur) const {
    const int n = base_->dim();
    State s(n + 1);
    s.head(n) = riemann_strengths(*base_, ul.head(n), ur.head(n));
    s[n] = ur[n] - ul[n];
    return s;
}

}  // namespace balsplit
