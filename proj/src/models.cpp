#include "balsplit/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "balsplit/errors.hpp"
#include "balsplit/presets.hpp"

namespace balsplit {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

void validate_gas(const GasParams& g) {
    require(g.gamma > 1.0, "gamma must exceed 1");
    require(g.cv > 0.0, "cv must be positive");
    require(g.rho > 0.0 && g.e > 0.0, "base density and internal energy must be positive");
    require(g.half_width > 0.0, "domain half-width must be positive");
}

std::shared_ptr<EulerModel> make_euler(const GasParams& gas, const std::string& id) {
    validate_gas(gas);
    // every corner of the domain box must be a non-vacuum state
    const double hw = gas.half_width;
    for (int corner = 0; corner < 8; ++corner) {
        double rho = gas.rho + ((corner & 1) ? hw : -hw);
        double m = gas.rho * gas.v + ((corner & 2) ? hw : -hw);
        double E = gas.rho * (gas.e + 0.5 * gas.v * gas.v) + ((corner & 4) ? hw : -hw);
        double eint = rho > 0.0 ? E / rho - 0.5 * (m / rho) * (m / rho) : -1.0;
        if (!(rho > 0.0) || !(eint > 0.0))
            throw ConfigError(fmt::format("{}: base state too close to vacuum for half-width {}", id, hw));
    }
    try {
        return std::make_shared<EulerModel>(gas, id);
    } catch (const DomainError& e) {
        throw ConfigError(fmt::format("{}: base state too close to vacuum ({})", id, e.what()));
    }
}

struct GasFunctions {
    GasParams gas;
    State base;

    double rho(const State& u) const { return base[0] + u[0]; }
    double velocity(const State& u) const { return (base[1] + u[1]) / rho(u); }
    double theta(const State& u) const {
        double r = rho(u), m = base[1] + u[1], E = base[2] + u[2];
        return (E / r - 0.5 * m * m / (r * r)) / gas.cv;
    }
    Eigen::RowVector3d grad_velocity(const State& u) const {
        double r = rho(u), m = base[1] + u[1];
        return {-m / (r * r), 1.0 / r, 0.0};
    }
    Eigen::RowVector3d grad_theta(const State& u) const {
        double r = rho(u), m = base[1] + u[1], E = base[2] + u[2];
        return Eigen::RowVector3d(-E / (r * r) + m * m / (r * r * r), -m / (r * r), 1.0 / r) / gas.cv;
    }
};

void probe_or_throw(const ModelBundle& b) {
    SourceProbe p = probe_source(*b.model, *b.source, 3, 0x5eed);
    if (p.lipschitz_ratio > 1.0 + 1e-6 || p.tv_ratio > 1.0 + 1e-6)
        throw ConfigError(fmt::format("{}: declared source constants violated on probes (Lipschitz ratio {:.6g}, "
                                      "TV ratio {:.6g})",
                                      b.id, p.lipschitz_ratio, p.tv_ratio));
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double sampled_lipschitz(const std::function<Matrix(const State&)>& jacobian, const Box& box, int per_axis) {
    const int n = static_cast<int>(box.lo.size());
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= per_axis;
    double best = 0.0;
    for (long long idx = 0; idx < total; ++idx) {
        State u(n);
        long long r = idx;
        for (int i = 0; i < n; ++i) {
            int k = static_cast<int>(r % per_axis);
            r /= per_axis;
            u[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * k / (per_axis - 1);
        }
        Eigen::MatrixXd J = jacobian(u);
        best = std::max(best, Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues()(0));
    }
    return 1.02 * best;
}

ModelBundle radiating_gas(const RadiatingGasParams& p) {
    require(p.a > 0.0, "radiating_gas: a must be positive");
    require(p.b >= 0.0, "radiating_gas: b must be nonnegative");
    auto model = make_euler(p.gas, "radiating_gas");
    if (p.b == 0.0) return {"radiating_gas", model, std::make_shared<ZeroSource>(3)};

    GasFunctions gf{p.gas, model->base()};
    const double theta_bar = gf.theta(State::Zero(3));
    const double tb4 = std::pow(theta_bar, 4);
    auto h = [gf, tb4](const State& u) {
        State out = State::Zero(3);
        out[2] = std::pow(gf.theta(u), 4) - tb4;
        return out;
    };
    auto jac_h = [gf](const State& u) {
        Matrix J = Matrix::Zero(3, 3);
        J.row(2) = 4.0 * std::pow(gf.theta(u), 3) * gf.grad_theta(u);
        return J;
    };
    const double lip = sampled_lipschitz(jac_h, model->omega());
    const double b = p.b, ra = std::sqrt(p.a);
    Matrix C = Matrix::Zero(3, 3);
    C(2, 2) = b;
    ConvolutionSource::Spec spec{
        "radiating_gas",
        3,
        [h, b](const State& u) { return State(-b * h(u)); },
        h,
        MatrixKernel({KernelBlock{C, ExpKernel::two_sided(0.5 * ra, ra)}}),
        b * lip,
        lip,
        model->omega(),
    };
    ModelBundle out{"radiating_gas", model, std::make_shared<ConvolutionSource>(std::move(spec))};
    probe_or_throw(out);
    return out;
}

ModelBundle rosenau(const RosenauParams& p) {
    require(p.mu >= 0.0 && p.lambda >= 0.0, "rosenau: mu and lambda must be nonnegative");
    require(p.m > 0.0 && p.s > 0.0 && p.eps > 0.0, "rosenau: m, s and eps must be positive");
    auto model = make_euler(p.gas, "rosenau");
    if (p.mu == 0.0 && p.lambda == 0.0) return {"rosenau", model, std::make_shared<ZeroSource>(3)};

    GasFunctions gf{p.gas, model->base()};
    const double theta_bar = gf.theta(State::Zero(3));
    auto h = [gf, theta_bar](const State& u) {
        State out = State::Zero(3);
        out[1] = gf.velocity(u);
        out[2] = gf.theta(u) - theta_bar;
        return out;
    };
    auto jac_h = [gf](const State& u) {
        Matrix J = Matrix::Zero(3, 3);
        J.row(1) = gf.grad_velocity(u);
        J.row(2) = gf.grad_theta(u);
        return J;
    };
    const double lip = sampled_lipschitz(jac_h, model->omega());
    const double inv = 1.0 / (p.eps * p.eps);
    const double dv = p.mu / p.m, dt = p.lambda / p.s;
    std::vector<KernelBlock> blocks;
    auto add = [&](int comp, double mass) {
        if (mass == 0.0) return;
        ExpKernel k = ExpKernel::two_sided(mass / (2.0 * p.eps), 1.0 / p.eps);
        if (std::abs(k.l1_norm() - mass) > 1e-12 * mass)
            throw ConfigError(fmt::format("rosenau: kernel mass {} differs from {}", k.l1_norm(), mass));
        Matrix C = Matrix::Zero(3, 3);
        C(comp, comp) = inv;
        blocks.push_back({C, k});
    };
    add(1, dv);
    add(2, dt);
    ConvolutionSource::Spec spec{
        "rosenau",
        3,
        [h, inv, dv, dt](const State& u) {
            State v = h(u);
            v[1] *= -inv * dv;
            v[2] *= -inv * dt;
            return v;
        },
        h,
        MatrixKernel(std::move(blocks)),
        inv * std::max(dv, dt) * lip,
        lip,
        model->omega(),
    };
    ModelBundle out{"rosenau", model, std::make_shared<ConvolutionSource>(std::move(spec))};
    probe_or_throw(out);
    return out;
}

ModelBundle scalar_rosenau(double half_width) {
    auto model = std::make_shared<ScalarConvexModel>("scalar_rosenau", burgers_flux(), half_width);
    ConvolutionSource::Spec spec{
        "scalar_rosenau",
        1,
        [](const State& u) { return State(-u); },
        [](const State& u) { return u; },
        MatrixKernel::scalar(ExpKernel::two_sided(0.5, 1.0)),
        1.0,
        1.0,
        model->omega(),
    };
    return {"scalar_rosenau", model, std::make_shared<ConvolutionSource>(std::move(spec))};
}

ModelBundle local_source(std::shared_ptr<const SystemModel> model, StepFunction a, PCFn b) {
    if (!model) throw std::invalid_argument("local source needs a model");
    if (b.dim() != model->dim()) throw std::invalid_argument("local source dimension does not match the model");
    return {"local", model, std::make_shared<LocalSource>(std::move(a), std::move(b))};
}

ModelBundle nonautonomous(const ModelBundle& base, NonautonomousSource::Modulation mod, double l1_bound) {
    auto model = std::make_shared<AugmentedModel>(base.model);
    auto src = std::make_shared<NonautonomousSource>(base.source, std::move(mod), l1_bound);
    return {"nonautonomous", model, src};
}

SourceProbe probe_source(const SystemModel& model, const SourceOp& src, int samples, std::uint64_t seed) {
    const Box& om = model.omega();
    double amp = std::numeric_limits<double>::infinity();
    for (int i = 0; i < om.lo.size(); ++i) amp = std::min({amp, -om.lo[i], om.hi[i]});
    amp *= 0.5;
    std::mt19937_64 rng(seed);
    SourceConstants c = src.constants();
    SourceProbe out;
    auto ratio = [](double num, double den) {
        if (den > 0.0) return num / den;
        return num > 1e-13 ? std::numeric_limits<double>::infinity() : 0.0;
    };
    for (int k = 0; k < samples; ++k) {
        PCFn u = random_datum(rng, {model.dim(), 5, -1.0, 1.0, amp});
        PCFn du = random_datum(rng, {model.dim(), 4, -1.0, 1.0, 0.2 * amp});
        PCFn w = u + du;
        SourceField gu = src.apply(u);
        SourceField gw = src.apply(w);
        out.lipschitz_ratio = std::max(out.lipschitz_ratio, ratio(gu.minus(gw).l1_norm(), c.L1 * l1_dist(u, w)));
        out.tv_ratio = std::max(out.tv_ratio, ratio(gu.tv(), c.L2 * tv(u) + c.L3));
        ++out.samples;
    }
    return out;
}

const std::vector<ModelInfo>& registered_models() {
    static const std::vector<ModelInfo> models = {
        {"radiating_gas", "Euler flow with a nonlocal radiative energy source",
         {"a", "b", "gamma", "cv", "rho", "e", "half_width"}},
        {"rosenau", "Euler flow with nonlocal relaxation of velocity and temperature",
         {"mu", "lambda", "m", "s", "eps", "gamma", "cv", "rho", "e", "half_width"}},
        {"scalar_rosenau", "Burgers equation with source -u + Q * u", {"half_width"}},
        {"local", "Burgers equation with source coefficient * 1{x > 0} * u", {"coefficient", "half_width"}},
        {"nonautonomous", "scalar_rosenau with time modulation 1 + amplitude sin(2 pi frequency t), clock-augmented",
         {"amplitude", "frequency", "l1_bound", "half_width"}},
        {"burgers", "Burgers equation without source", {"half_width"}},
        {"euler", "Euler flow without source", {"gamma", "cv", "rho", "e", "half_width"}},
    };
    return models;
}

std::string closest_match(const std::string& word, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_d = std::string::npos;
    for (const auto& c : candidates) {
        std::size_t d = edit_distance(word, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (best.empty() || best_d > std::max<std::size_t>(2, word.size() / 3)) return {};
    return best;
}

ModelBundle make_model(const std::string& id, const ParamMap& params) {
    const auto& models = registered_models();
    auto it = std::find_if(models.begin(), models.end(), [&](const ModelInfo& m) { return m.id == id; });
    if (it == models.end()) {
        std::vector<std::string> ids;
        for (const auto& m : models) ids.push_back(m.id);
        std::string hint = closest_match(id, ids);
        throw ConfigError(fmt::format("unknown model '{}'{}", id, hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
    }
    for (const auto& [key, value] : params) {
        if (std::find(it->params.begin(), it->params.end(), key) == it->params.end()) {
            std::string hint = closest_match(key, it->params);
            throw ConfigError(fmt::format("unknown parameter '{}' for model '{}'{}", key, id,
                                          hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
        }
    }
    auto get = [&](const std::string& key, double fallback) {
        auto p = params.find(key);
        return p == params.end() ? fallback : p->second;
    };
    auto gas = [&] {
        GasParams g;
        g.gamma = get("gamma", g.gamma);
        g.cv = get("cv", g.cv);
        g.rho = get("rho", g.rho);
        g.e = get("e", g.e);
        g.half_width = get("half_width", g.half_width);
        return g;
    };
    if (id == "radiating_gas") {
        RadiatingGasParams p;
        p.a = get("a", p.a);
        p.b = get("b", p.b);
        p.gas = gas();
        return radiating_gas(p);
    }
    if (id == "rosenau") {
        RosenauParams p;
        p.mu = get("mu", p.mu);
        p.lambda = get("lambda", p.lambda);
        p.m = get("m", p.m);
        p.s = get("s", p.s);
        p.eps = get("eps", p.eps);
        p.gas = gas();
        return rosenau(p);
    }
    if (id == "scalar_rosenau") return scalar_rosenau(get("half_width", 2.0));
    if (id == "local") {
        double c = get("coefficient", -1.0);
        auto model = std::make_shared<ScalarConvexModel>("local", burgers_flux(), get("half_width", 2.0));
        return local_source(model, StepFunction{{0.0}, {0.0, c}}, PCFn(1));
    }
    if (id == "nonautonomous") {
        double amp = get("amplitude", 0.5), freq = get("frequency", 1.0);
        require(get("l1_bound", 1.0) > 0.0, "nonautonomous: l1_bound must be positive");
        NonautonomousSource::Modulation mod{
            [amp, freq](double t) { return 1.0 + amp * std::sin(2.0 * std::numbers::pi * freq * t); },
            1.0 + std::abs(amp), 2.0 * std::numbers::pi * std::abs(freq * amp)};
        return nonautonomous(scalar_rosenau(get("half_width", 2.0)), std::move(mod), get("l1_bound", 1.0));
    }
    if (id == "burgers") {
        auto model = std::make_shared<ScalarConvexModel>("burgers", burgers_flux(), get("half_width", 2.0));
        return {"burgers", model, std::make_shared<ZeroSource>(1)};
    }
    auto model = make_euler(gas(), "euler");
    return {"euler", model, std::make_shared<ZeroSource>(3)};
}

}  // namespace balsplit
