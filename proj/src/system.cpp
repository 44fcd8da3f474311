#include "balsplit/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "balsplit/errors.hpp"

namespace balsplit {

namespace {

std::string fmt_state(const State& u) {
    std::string s;
    for (int i = 0; i < u.size(); ++i) s += fmt::format("{}{:.6g}", i ? ", " : "", u[i]);
    return s;
}

void orient_largest_positive(Matrix& R) {
    for (int j = 0; j < R.cols(); ++j) {
        Eigen::Index imax = 0;
        R.col(j).cwiseAbs().maxCoeff(&imax);
        if (R(imax, j) < 0) R.col(j) = -R.col(j);
    }
}

}  // namespace

SystemModel::SystemModel(std::string id, int n, std::vector<FieldKind> kinds, Box omega)
    : id_(std::move(id)), n_(n), kinds_(std::move(kinds)), omega_(std::move(omega)) {
    if (n_ < 1 || n_ > kMaxDim) throw ConfigError(fmt::format("system dimension {} out of range", n_));
    if (static_cast<int>(kinds_.size()) != n_) throw ConfigError("one field kind per family required");
    if (omega_.lo.size() != n_ || omega_.hi.size() != n_) throw ConfigError("omega box has wrong dimension");
    for (int i = 0; i < n_; ++i)
        if (!(omega_.lo[i] < 0.0 && omega_.hi[i] > 0.0))
            throw ConfigError("omega must contain the origin in its interior");
    k_.assign(static_cast<std::size_t>(n_), 1.0);
}

void SystemModel::require_in_omega(const State& u, const char* what) const {
    if (!u.allFinite() || !omega_.contains(u, 1e-12))
        throw DomainError(fmt::format("{}: state ({}) outside the domain of model '{}'", what,
                                      fmt_state(u), id_));
}

void SystemModel::finalize(int samples_per_axis) {
    for (double kj : k_)
        if (!(kj > 0.0)) throw ConfigError("curve normalization constants must be positive");
    ref_R_.resize(0, 0);
    Eigensystem e0 = eig(State::Zero(n_));
    ref_R_ = e0.R;
    orient_largest_positive(ref_R_);

    // certify strict hyperbolicity on a tensor grid over omega
    int m = std::max(2, samples_per_axis);
    long long total = 1;
    for (int i = 0; i < n_; ++i) total *= m;
    double max_speed = 0.0;
    State u(n_);
    for (long long idx = 0; idx < total; ++idx) {
        long long r = idx;
        for (int i = 0; i < n_; ++i) {
            int c = static_cast<int>(r % m);
            r /= m;
            u[i] = omega_.lo[i] + (omega_.hi[i] - omega_.lo[i]) * c / (m - 1);
        }
        Eigensystem es;
        try {
            es = eig(u);
        } catch (const DomainError& err) {
            throw ConfigError(fmt::format("model '{}' is not strictly hyperbolic on omega: {}", id_, err.what()));
        }
        for (int i = 0; i < n_; ++i) max_speed = std::max(max_speed, std::abs(es.lambda[i]));
    }
    if (lambda_hat_ <= 0.0) {
        lambda_hat_ = max_speed > 0.0 ? 1.1 * max_speed : 1.0;
    } else if (!(lambda_hat_ > max_speed)) {
        throw ConfigError(fmt::format("lambda_hat {} does not bound the sampled speed {}", lambda_hat_, max_speed));
    }
}

Matrix SystemModel::jacobian(const State& u) const {
    Matrix J(n_, n_);
    for (int i = 0; i < n_; ++i) {
        double h = 1e-6 * (1.0 + std::abs(u[i]));
        State up = u, um = u;
        up[i] += h;
        um[i] -= h;
        J.col(i) = (flux(up) - flux(um)) / (2.0 * h);
    }
    return J;
}

Eigensystem SystemModel::eig(const State& u) const {
    Matrix A = jacobian(u);
    Eigensystem out;
    if (n_ == 1) {
        out.lambda = State::Constant(1, A(0, 0));
        out.R = Matrix::Identity(1, 1);
        out.L = Matrix::Identity(1, 1);
        return out;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(A)};
    if (es.info() != Eigen::Success) throw DomainError("eigen decomposition failed");
    Eigen::VectorXcd ev = es.eigenvalues();
    Eigen::MatrixXcd V = es.eigenvectors();
    double scale = 1.0 + ev.cwiseAbs().maxCoeff();
    if (ev.imag().cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw DomainError(fmt::format("complex characteristic speeds at ({})", fmt_state(u)));
    std::vector<int> order(static_cast<std::size_t>(n_));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ev[a].real() < ev[b].real(); });
    out.lambda.resize(n_);
    out.R.resize(n_, n_);
    for (int j = 0; j < n_; ++j) {
        out.lambda[j] = ev[order[static_cast<std::size_t>(j)]].real();
        State r = V.col(order[static_cast<std::size_t>(j)]).real();
        r.normalize();
        out.R.col(j) = r;
        if (j > 0 && !(out.lambda[j] - out.lambda[j - 1] > 1e-10 * scale))
            throw DomainError(fmt::format("coinciding characteristic speeds at ({})", fmt_state(u)));
    }
    if (ref_R_.size() == n_ * n_) {
        for (int j = 0; j < n_; ++j)
            if (out.R.col(j).dot(ref_R_.col(j)) < 0) out.R.col(j) = -out.R.col(j);
    } else {
        orient_largest_positive(out.R);
    }
    out.L = out.R.inverse();
    return out;
}

double SystemModel::lambda(int j, const State& u) const { return eig(u).lambda[j]; }

State SystemModel::rarefaction_curve(int j, double sigma, const State& u) const {
    if (sigma == 0.0) return u;
    auto direction = [&](const State& v) -> State {
        State r = eig(v).R.col(j);
        if (!genuinely_nonlinear(j)) return r;
        double h = 1e-5;
        double dl = (lambda(j, v + h * r) - lambda(j, v - h * r)) / (2.0 * h);
        if (std::abs(dl) < 1e-12)
            throw DomainError(fmt::format("family {} is not genuinely nonlinear at ({})", j, fmt_state(v)));
        return k(j) * r / dl;
    };
    int steps = std::max(8, static_cast<int>(std::ceil(std::abs(sigma) / 2e-3)));
    double h = sigma / steps;
    State v = u;
    for (int s = 0; s < steps; ++s) {
        State k1 = direction(v);
        State k2 = direction(v + 0.5 * h * k1);
        State k3 = direction(v + 0.5 * h * k2);
        State k4 = direction(v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return v;
}

State SystemModel::hugoniot_curve(int j, double sigma, const State& u) const {
    if (!genuinely_nonlinear(j) || std::abs(sigma) < 1e-5) return rarefaction_curve(j, sigma, u);
    // unknowns (v, s): f(v) - f(u) - s (v - u) = 0, lambda_j(v) - lambda_j(u) = k_j sigma
    const int m = n_ + 1;
    const State fu = flux(u);
    const double lu = lambda(j, u);
    auto residual = [&](const Eigen::VectorXd& z) {
        State v = z.head(n_);
        Eigen::VectorXd F(m);
        F.head(n_) = flux(v) - fu - z[n_] * (v - u);
        F[n_] = lambda(j, v) - lu - k(j) * sigma;
        return F;
    };
    State v0 = rarefaction_curve(j, sigma, u);
    Eigen::VectorXd z(m);
    z.head(n_) = v0;
    z[n_] = 0.5 * (lu + lambda(j, v0));
    Eigen::VectorXd F = residual(z);
    for (int it = 0; it < 50 && F.norm() > 1e-14; ++it) {
        Eigen::MatrixXd J(m, m);
        for (int c = 0; c < m; ++c) {
            double h = 1e-8 * (1.0 + std::abs(z[c]));
            Eigen::VectorXd zp = z;
            zp[c] += h;
            J.col(c) = (residual(zp) - F) / h;
        }
        Eigen::VectorXd dz = J.fullPivLu().solve(-F);
        double t = 1.0;
        bool accepted = false;
        for (int hv = 0; hv < 30; ++hv, t *= 0.5) {
            Eigen::VectorXd zt = z + t * dz;
            Eigen::VectorXd Ft = residual(zt);
            if (Ft.norm() < F.norm()) {
                z = zt;
                F = Ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (F.norm() > 1e-10)
        throw ConvergenceError(fmt::format("Hugoniot locus of family {} not resolved (residual {:.3g})", j, F.norm()));
    return z.head(n_);
}

double SystemModel::shock_speed(int j, const State& ul, const State& ur) const {
    State du = ur - ul;
    double nd = du.norm();
    if (nd < 1e-7) return 0.5 * (lambda(j, ul) + lambda(j, ur));
    return (flux(ur) - flux(ul)).dot(du) / (nd * nd);
}

double SystemModel::rarefaction_speed(int j, const State& ul, const State& ur) const {
    return 0.5 * (lambda(j, ul) + lambda(j, ur));
}

std::optional<State> SystemModel::closed_form_strengths(const State&, const State&) const {
    return std::nullopt;
}

State SystemModel::lax_curve(int j, double sigma, const State& u) const {
    if (sigma == 0.0) return u;
    State v = (sigma > 0.0 || !genuinely_nonlinear(j)) ? rarefaction_curve(j, sigma, u)
                                                        : hugoniot_curve(j, sigma, u);
    require_in_omega(v, "wave curve");
    return v;
}

State wave_sequence(const SystemModel& model, const State& sigma, const State& u) {
    State v = u;
    for (int j = 0; j < model.dim(); ++j) v = model.lax_curve(j, sigma[j], v);
    return v;
}

State rh_glue(const SystemModel& model, const State& sigma, const State& u) {
    State v = u;
    for (int j = 0; j < model.dim(); ++j) {
        if (sigma[j] == 0.0) continue;
        v = model.hugoniot_curve(j, sigma[j], v);
        model.require_in_omega(v, "Rankine-Hugoniot curve");
    }
    return v;
}

namespace {

RiemannSolution build_solution(const SystemModel& model, const State& sigma, const State& ul,
                               const State& ur, CurveKind kind) {
    const int n = model.dim();
    RiemannSolution sol;
    sol.sigma = sigma;
    sol.states.reserve(static_cast<std::size_t>(n + 1));
    sol.states.push_back(ul);
    for (int j = 0; j + 1 < n; ++j) {
        const State& prev = sol.states.back();
        if (sigma[j] == 0.0)
            sol.states.push_back(prev);
        else if (kind == CurveKind::Lax)
            sol.states.push_back(model.lax_curve(j, sigma[j], prev));
        else
            sol.states.push_back(model.hugoniot_curve(j, sigma[j], prev));
    }
    sol.states.push_back(ur);
    return sol;
}

}  // namespace

RiemannSolution newton_strengths(const SystemModel& model, const State& ul, const State& ur,
                                 CurveKind kind, const NewtonOptions& opts) {
    const int n = model.dim();
    State sigma = State::Zero(n);
    const double scale = (ur - ul).norm();
    if (scale == 0.0) return build_solution(model, sigma, ul, ur, kind);

    auto phi = [&](const State& s) {
        return kind == CurveKind::Lax ? wave_sequence(model, s, ul) : rh_glue(model, s, ul);
    };
    auto residual_norm = [&](const State& s, State& F) {
        try {
            F = phi(s) - ur;
            return F.norm();
        } catch (const DomainError&) {
            return std::numeric_limits<double>::infinity();
        } catch (const ConvergenceError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    const double tol = std::max(opts.tolerance * std::min(1.0, scale), 1e-15);
    State F;
    double r = residual_norm(sigma, F);
    if (!std::isfinite(r)) throw DomainError("Riemann data outside the model domain");
    int it = 0;
    bool polished = false;
    while (true) {
        if (r <= tol) {
            if (polished) break;
            polished = true;
        }
        if (it++ >= opts.max_iterations) {
            if (r <= tol) break;
            throw ConvergenceError(fmt::format(
                "Riemann strengths did not converge in {} iterations (residual {:.3g}, jump {:.3g})",
                opts.max_iterations, r, scale));
        }
        Matrix J(n, n);
        for (int c = 0; c < n; ++c) {
            double h = 1e-7 * std::max(1.0, std::abs(sigma[c]));
            State sp = sigma;
            sp[c] += h;
            State Fp;
            double rp = residual_norm(sp, Fp);
            if (!std::isfinite(rp)) {
                sp[c] = sigma[c] - h;
                rp = residual_norm(sp, Fp);
                if (!std::isfinite(rp)) throw DomainError("Riemann Jacobian leaves the model domain");
                J.col(c) = (F - Fp) / h;
            } else {
                J.col(c) = (Fp - F) / h;
            }
        }
        State delta = Eigen::MatrixXd(J).fullPivLu().solve(Eigen::VectorXd(-F));
        double t = 1.0;
        bool accepted = false;
        for (int hv = 0; hv <= opts.max_halvings; ++hv, t *= opts.damping) {
            State trial = sigma + t * delta;
            State Ft;
            double rt = residual_norm(trial, Ft);
            if (rt < r) {
                sigma = trial;
                F = Ft;
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (r <= tol) break;
            throw ConvergenceError(fmt::format(
                "Riemann strengths: line search failed (residual {:.3g}, jump {:.3g})", r, scale));
        }
    }
    return build_solution(model, sigma, ul, ur, kind);
}

RiemannSolution solve_riemann(const SystemModel& model, const State& ul, const State& ur) {
    if (ul == ur) return build_solution(model, State::Zero(model.dim()), ul, ur, CurveKind::Lax);
    if (auto cf = model.closed_form_strengths(ul, ur)) return build_solution(model, *cf, ul, ur, CurveKind::Lax);
    return newton_strengths(model, ul, ur, CurveKind::Lax);
}

State riemann_strengths(const SystemModel& model, const State& ul, const State& ur) {
    if (ul == ur) return State::Zero(model.dim());
    if (auto cf = model.closed_form_strengths(ul, ur)) return *cf;
    return newton_strengths(model, ul, ur, CurveKind::Lax).sigma;
}

std::vector<JumpWaves> wave_decomposition(const SystemModel& model, const PCFn& u) {
    if (u.dim() != model.dim())
        throw std::invalid_argument(fmt::format("function of dim {} for model of dim {}", u.dim(), model.dim()));
    auto br = u.breakpoints();
    auto vals = u.values();
    std::vector<JumpWaves> out;
    out.reserve(br.size());
    for (std::size_t k = 0; k < br.size(); ++k)
        out.push_back({br[k], riemann_strengths(model, vals[k], vals[k + 1])});
    return out;
}

GlimmValues glimm_from_waves(const SystemModel& model, std::span<const JumpWaves> waves, double c0) {
    const int n = model.dim();
    std::vector<double> all(static_cast<std::size_t>(n), 0.0), neg(static_cast<std::size_t>(n), 0.0);
    GlimmValues g;
    for (const auto& w : waves) {
        for (int j = 0; j < n; ++j) {
            double s = w.sigma[j];
            double a = std::abs(s);
            if (a == 0.0) continue;
            g.V += a;
            // faster families to the left
            double faster = 0.0;
            for (int i = j + 1; i < n; ++i) faster += all[static_cast<std::size_t>(i)];
            g.Q += a * faster;
            if (model.genuinely_nonlinear(j))
                g.Q += a * (s < 0.0 ? all[static_cast<std::size_t>(j)] : neg[static_cast<std::size_t>(j)]);
        }
        for (int j = 0; j < n; ++j) {
            double s = w.sigma[j];
            all[static_cast<std::size_t>(j)] += std::abs(s);
            if (s < 0.0) neg[static_cast<std::size_t>(j)] += -s;
        }
    }
    g.Upsilon = g.V + c0 * g.Q;
    return g;
}

GlimmValues glimm_functionals(const SystemModel& model, const PCFn& u, double c0) {
    auto waves = wave_decomposition(model, u);
    return glimm_from_waves(model, waves, c0);
}

C0Calibration calibrate_c0(const SystemModel& model, double strength, int samples, std::uint64_t seed) {
    const int n = model.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> fam(0, n - 1);
    double amp = 0.0;
    for (int s = 0; s < samples; ++s) {
        State ul(n);
        for (int i = 0; i < n; ++i)
            ul[i] = 0.3 * (unit(rng) > 0 ? model.omega().hi[i] : -model.omega().lo[i]) * unit(rng);
        int i = fam(rng), j = fam(rng);
        if (i < j) std::swap(i, j);
        double a = strength * unit(rng), b = strength * unit(rng);
        if (i == j) {
            if (!model.genuinely_nonlinear(i)) continue;
            if (a >= 0 && b >= 0) a = -a;
        }
        if (a == 0.0 || b == 0.0) continue;
        try {
            State um = model.lax_curve(i, a, ul);
            State ur = model.lax_curve(j, b, um);
            State out = riemann_strengths(model, ul, ur);
            State in = State::Zero(n);
            in[i] += a;
            in[j] += b;
            amp = std::max(amp, (out - in).lpNorm<1>() / std::abs(a * b));
        } catch (const DomainError&) {
            continue;
        }
    }
    return {std::max(1.0, 4.0 * amp), amp};
}

}  // namespace balsplit
