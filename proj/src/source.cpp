#include "balsplit/source.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "balsplit/errors.hpp"

namespace balsplit {

namespace {

constexpr int kSamplesPerInterval = 8;

double gk(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    if (!(b > a)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, tol);
}

/// Root of a continuous function with f(a) f(b) < 0.
double bracket_root(const std::function<double(double)>& f, double a, double b, double fa, double fb) {
    std::uintmax_t iters = 100;
    auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 4e-16 * std::max(1.0, std::abs(lo)); };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    return 0.5 * (r.first + r.second);
}

/// Sum over atoms (ax_j, aw_j) of exp(-rate |x - ax_j|) aw_j at sorted xs.
std::vector<State> atom_sweep(double rate, const std::vector<double>& ax, const std::vector<State>& aw,
                              std::span<const double> xs, int dim) {
    std::vector<State> out(xs.size(), State::Zero(dim));
    if (ax.empty()) return out;
    State acc = State::Zero(dim);
    double p = 0.0;
    bool any = false;
    std::size_t j = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        while (j < ax.size() && ax[j] <= xs[i]) {
            if (any) acc *= std::exp(-rate * (ax[j] - p));
            acc += aw[j];
            p = ax[j];
            any = true;
            ++j;
        }
        if (any) out[i] += acc * std::exp(-rate * (xs[i] - p));
    }
    acc.setZero();
    any = false;
    j = ax.size();
    for (std::size_t i = xs.size(); i-- > 0;) {
        while (j > 0 && ax[j - 1] > xs[i]) {
            --j;
            if (any) acc *= std::exp(-rate * (p - ax[j]));
            acc += aw[j];
            p = ax[j];
            any = true;
        }
        if (any) out[i] += acc * std::exp(-rate * (p - xs[i]));
    }
    return out;
}

/// Derivatives of K * w at sorted xs.
std::vector<State> exp_derivatives(const ExpConvolution& c, std::span<const double> xs) {
    const int n = c.dim();
    std::vector<State> out(xs.size(), State::Zero(n));
    auto br = c.density().breakpoints();
    auto vals = c.density().values();
    std::vector<double> ax(br.begin(), br.end());
    std::vector<State> aw;
    aw.reserve(ax.size());
    for (std::size_t j = 0; j < ax.size(); ++j) aw.push_back(vals[j + 1] - vals[j]);
    for (const auto& block : c.kernel().blocks()) {
        for (const auto& term : block.kernel.terms()) {
            auto s = atom_sweep(term.rate, ax, aw, xs, n);
            for (std::size_t i = 0; i < xs.size(); ++i) out[i] += term.coeff * (block.coupling * s[i]);
        }
    }
    return out;
}

State quad_integral(const QuadratureConvolution& q, double a, double b) {
    const int n = static_cast<int>(q.coupling.rows());
    State out = State::Zero(n);
    for (int i = 0; i < n; ++i)
        out[i] = gk([&](double x) { return q.value(x)[i]; }, a, b, 1e-10);
    return out;
}

/// Appends the sign changes of sampled derivative values d at xs to pts.
void add_critical_points(const std::function<double(double)>& dfun, const std::vector<double>& xs,
                         const std::vector<double>& d, std::vector<double>& pts) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (d[i] == 0.0) pts.push_back(xs[i]);
        if (i + 1 < xs.size() && ((d[i] < 0.0 && d[i + 1] > 0.0) || (d[i] > 0.0 && d[i + 1] < 0.0)))
            pts.push_back(bracket_root(dfun, xs[i], xs[i + 1], d[i], d[i + 1]));
    }
}

Matrix pad(const Matrix& m, int n) {
    Matrix out = Matrix::Zero(n, n);
    out.topLeftCorner(m.rows(), m.cols()) = m;
    return out;
}

PCFn pad(const PCFn& w, int extra) { return stack(w, PCFn(extra)); }

/// a(x) u(x) + b(x) on the merged partition.
PCFn local_combination(const PCFn& u, const StepFunction& a, const PCFn& b) {
    std::vector<double> grid(u.breakpoints().begin(), u.breakpoints().end());
    grid.insert(grid.end(), a.breakpoints.begin(), a.breakpoints.end());
    grid.insert(grid.end(), b.breakpoints().begin(), b.breakpoints().end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<State> vals;
    vals.reserve(grid.size() + 1);
    const State zero = State::Zero(u.dim());
    vals.push_back(zero);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double x = grid[i];
        vals.push_back(a(x) * u(x) + b(x));
    }
    if (!grid.empty()) vals.push_back(zero);
    return PCFn(std::move(grid), std::move(vals));
}

}  // namespace

double StepFunction::operator()(double x) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

double StepFunction::sup_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double StepFunction::tv() const {
    double s = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) s += std::abs(values[i] - values[i - 1]);
    return s;
}

State QuadratureConvolution::value(double x) const {
    auto br = density.breakpoints();
    auto vals = density.values();
    State acc = State::Zero(density.dim());
    for (std::size_t k = 1; k < br.size(); ++k) {
        if (vals[k].isZero()) continue;
        // piece ]br[k-1], br[k][ seen from x: z = x - y in [x - br[k], x - br[k-1]]
        double lo = std::max(x - br[k], -reach), hi = std::min(x - br[k - 1], reach);
        if (!(hi > lo)) continue;
        double w = 0.0;
        if (lo < 0.0 && hi > 0.0)
            w = gk(kernel, lo, 0.0, 1e-10) + gk(kernel, 0.0, hi, 1e-10);
        else
            w = gk(kernel, lo, hi, 1e-10);
        acc += w * vals[k];
    }
    return coupling * acc;
}

SourceField::SourceField(PCFn local) : local_(std::move(local)) {}

SourceField::SourceField(PCFn local, std::vector<ExpConvolution> exp_terms,
                         std::vector<QuadratureConvolution> quad_terms)
    : local_(std::move(local)), exp_(std::move(exp_terms)), quad_(std::move(quad_terms)) {
    for (const auto& e : exp_)
        if (e.dim() != dim()) throw std::invalid_argument("convolution dimension does not match the field");
    for (const auto& q : quad_)
        if (q.coupling.rows() != dim()) throw std::invalid_argument("convolution dimension does not match the field");
}

State SourceField::smooth_value(double x) const {
    State v = State::Zero(dim());
    for (const auto& e : exp_) v += e.value(x);
    for (const auto& q : quad_) v += q.value(x);
    return v;
}

State SourceField::smooth_derivative(double x) const {
    State d = State::Zero(dim());
    for (const auto& e : exp_) d += e.derivative(x);
    if (!quad_.empty()) {
        double h = 1e-6 * std::max(1.0, std::abs(x));
        for (const auto& q : quad_) d += (q.value(x + h) - q.value(x - h)) / (2.0 * h);
    }
    return d;
}

State SourceField::value(double x) const { return local_(x) + smooth_value(x); }

std::vector<double> SourceField::grid() const {
    std::vector<double> g(local_.breakpoints().begin(), local_.breakpoints().end());
    for (const auto& e : exp_) {
        auto br = e.density().breakpoints();
        if (br.empty()) continue;
        g.insert(g.end(), br.begin(), br.end());
        g.push_back(e.reach_lo());
        g.push_back(e.reach_hi());
    }
    for (const auto& q : quad_) {
        auto br = q.density.breakpoints();
        if (br.empty()) continue;
        g.insert(g.end(), br.begin(), br.end());
        g.push_back(br.front() - q.reach);
        g.push_back(br.back() + q.reach);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

int SourceField::active_component() const {
    const int n = dim();
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    for (const auto& v : local_.values())
        for (int i = 0; i < n; ++i)
            if (v[i] != 0.0) active[static_cast<std::size_t>(i)] = true;
    auto rows = [&](const Matrix& C) {
        for (int i = 0; i < n; ++i)
            if (!C.row(i).isZero()) active[static_cast<std::size_t>(i)] = true;
    };
    for (const auto& e : exp_)
        for (const auto& b : e.kernel().blocks()) rows(b.coupling);
    for (const auto& q : quad_) rows(q.coupling);
    int idx = -1, count = 0;
    for (int i = 0; i < n; ++i)
        if (active[static_cast<std::size_t>(i)]) {
            idx = i;
            ++count;
        }
    if (count == 0) return 0;
    return count == 1 ? idx : -1;
}

PCFn SourceField::project(int N) const {
    PCFn out = balsplit::project(local_, N);
    for (const auto& e : exp_) out = out + balsplit::project(e, N);
    for (const auto& q : quad_) {
        auto br = q.density.breakpoints();
        if (br.empty()) continue;
        CellRange cells = projection_cells(N);
        long long k_lo = std::max(cells.first, static_cast<long long>(std::floor((br.front() - q.reach) * N)) - 1);
        long long k_hi = std::min(cells.last, static_cast<long long>(std::ceil((br.back() + q.reach) * N)));
        std::vector<State> means;
        for (long long k = k_lo; k <= k_hi; ++k)
            means.push_back(quad_integral(q, cell_edge(k, N), cell_edge(k + 1, N)) * N);
        if (!means.empty()) out = out + from_cell_means(N, k_lo, means, dim());
    }
    return out;
}

double SourceField::tv() const {
    double jumps = balsplit::tv(local_);
    std::vector<double> g = grid();
    if (g.size() < 2 || (exp_.empty() && quad_.empty())) return jumps;

    int c = active_component();
    if (c < 0) {
        double cont = 0.0;
        for (std::size_t i = 0; i + 1 < g.size(); ++i)
            cont += gk([&](double x) { return smooth_derivative(x).norm(); }, g[i], g[i + 1]);
        return jumps + cont;
    }

    // Scalar: variation of the smooth part is the sum of |increments| between critical points.
    std::vector<double> xs;
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
        for (int k = 0; k < kSamplesPerInterval; ++k) xs.push_back(g[i] + (g[i + 1] - g[i]) * k / kSamplesPerInterval);
    xs.push_back(g.back());
    std::vector<double> d(xs.size(), 0.0);
    if (quad_.empty()) {
        for (const auto& e : exp_) {
            auto de = exp_derivatives(e, xs);
            for (std::size_t i = 0; i < xs.size(); ++i) d[i] += de[i][c];
        }
    } else {
        for (std::size_t i = 0; i < xs.size(); ++i) d[i] = smooth_derivative(xs[i])[c];
    }
    std::vector<double> pts(g);
    auto dfun = [&](double x) { return smooth_derivative(x)[c]; };
    add_critical_points(dfun, xs, d, pts);
    std::sort(pts.begin(), pts.end());
    std::vector<double> f(pts.size(), 0.0);
    for (const auto& e : exp_) {
        auto v = e.values(pts);
        for (std::size_t i = 0; i < pts.size(); ++i) f[i] += v[i][c];
    }
    for (const auto& q : quad_)
        for (std::size_t i = 0; i < pts.size(); ++i) f[i] += q.value(pts[i])[c];
    double cont = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) cont += std::abs(f[i + 1] - f[i]);
    return jumps + cont;
}

double SourceField::l1_norm() const {
    std::vector<double> g = grid();
    if (exp_.empty() && quad_.empty()) return balsplit::l1_norm(local_);
    int c = active_component();
    if (c < 0) {
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < g.size(); ++i)
            sum += gk([&](double x) { return value(x).norm(); }, g[i], g[i + 1]);
        return sum;
    }
    // Scalar: split into monotone pieces of the smooth part, then at sign changes.
    std::vector<double> xs;
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
        for (int k = 0; k < kSamplesPerInterval; ++k) xs.push_back(g[i] + (g[i + 1] - g[i]) * k / kSamplesPerInterval);
    xs.push_back(g.back());
    auto dfun = [&](double x) { return smooth_derivative(x)[c]; };
    std::vector<double> pts(g);
    std::vector<double> d(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) d[i] = dfun(xs[i]);
    add_critical_points(dfun, xs, d, pts);
    std::sort(pts.begin(), pts.end());
    std::vector<double> cuts(pts);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double a = pts[i], b = pts[i + 1];
        if (!(b > a)) continue;
        double level = local_(0.5 * (a + b))[c];
        auto f = [&](double x) { return level + smooth_value(x)[c]; };
        double fa = f(a), fb = f(b);
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) cuts.push_back(bracket_root(f, a, b, fa, fb));
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> ints(cuts.size() > 0 ? cuts.size() - 1 : 0, 0.0);
    for (const auto& e : exp_) {
        auto v = e.integrals(cuts);
        for (std::size_t i = 0; i < ints.size(); ++i) ints[i] += v[i][c];
    }
    for (const auto& q : quad_)
        for (std::size_t i = 0; i < ints.size(); ++i) ints[i] += quad_integral(q, cuts[i], cuts[i + 1])[c];
    double sum = 0.0;
    for (std::size_t i = 0; i < ints.size(); ++i) {
        double a = cuts[i], b = cuts[i + 1];
        if (!(b > a)) continue;
        sum += std::abs(local_(0.5 * (a + b))[c] * (b - a) + ints[i]);
    }
    return sum;
}

State SourceField::integral() const {
    State s = local_.integral();
    for (const auto& e : exp_) {
        if (e.density().is_zero()) continue;
        double pts[2] = {e.reach_lo(), e.reach_hi()};
        s += e.integrals(pts)[0];
    }
    for (const auto& q : quad_) {
        auto br = q.density.breakpoints();
        if (br.empty()) continue;
        s += quad_integral(q, br.front() - q.reach, br.back() + q.reach);
    }
    return s;
}

std::vector<double> SourceField::kinks() const { return grid(); }

std::vector<State> SourceField::integrals(std::span<const double> xs) const {
    std::vector<State> out;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) out.push_back(integral_on(local_, xs[i], xs[i + 1]));
    if (out.empty()) return out;
    for (const auto& e : exp_) {
        auto ints = e.integrals(xs);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += ints[i];
    }
    for (const auto& q : quad_)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += quad_integral(q, xs[i], xs[i + 1]);
    return out;
}

SourceField SourceField::scaled(double a) const {
    std::vector<ExpConvolution> e;
    for (const auto& c : exp_) e.emplace_back(c.kernel(), a * c.density());
    std::vector<QuadratureConvolution> q;
    for (const auto& c : quad_) q.push_back({c.kernel, c.reach, c.coupling, a * c.density});
    return SourceField(a * local_, std::move(e), std::move(q));
}

SourceField SourceField::minus(const SourceField& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("source fields of different dimension");
    std::vector<ExpConvolution> e(exp_);
    for (const auto& c : other.exp_) e.emplace_back(c.kernel(), -1.0 * c.density());
    std::vector<QuadratureConvolution> q(quad_);
    for (const auto& c : other.quad_) q.push_back({c.kernel, c.reach, c.coupling, -1.0 * c.density});
    return SourceField(local_ - other.local_, std::move(e), std::move(q));
}

const char* to_string(SourceKind k) {
    switch (k) {
        case SourceKind::Zero: return "zero";
        case SourceKind::Convolution: return "convolution";
        case SourceKind::Local: return "local";
        case SourceKind::Constant: return "constant";
        case SourceKind::Nonautonomous: return "nonautonomous-augmented";
    }
    return "?";
}

SourceField ZeroSource::apply(const PCFn& u) const {
    if (u.dim() != n_) throw std::invalid_argument("state dimension does not match the source");
    return SourceField(PCFn(n_));
}

SourceField ConstantSource::apply(const PCFn& u) const {
    if (u.dim() != dim()) throw std::invalid_argument("state dimension does not match the source");
    return SourceField(c_);
}

ConvolutionSource::ConvolutionSource(Spec spec) : spec_(std::move(spec)) {
    if (!spec_.g || !spec_.h) throw std::invalid_argument("convolution source needs both pointwise maps");
    if (!spec_.kernel.empty() && spec_.kernel.dim() != spec_.dim)
        throw std::invalid_argument("kernel dimension does not match the source");
    if (spec_.lip_g < 0.0 || spec_.lip_h < 0.0) throw std::invalid_argument("Lipschitz constants must be nonnegative");
    kernel_l1_ = spec_.kernel.empty() ? 0.0 : spec_.kernel.l1_norm();
    for (const auto& gk : spec_.general) {
        Eigen::MatrixXd dense = gk.coupling;
        kernel_l1_ += gk.l1 * Eigen::JacobiSVD<Eigen::MatrixXd>(dense).singularValues()(0);
    }
}

SourceConstants ConvolutionSource::constants() const {
    double L = spec_.lip_g + kernel_l1_ * spec_.lip_h;
    return {L, L, 0.0};
}

void ConvolutionSource::check(const PCFn& u) const {
    if (u.dim() != spec_.dim) throw std::invalid_argument("state dimension does not match the source");
    if (!spec_.omega) return;
    for (const auto& v : u.values())
        if (!spec_.omega->contains(v, 1e-12))
            throw DomainError(fmt::format("source {}: state leaves the domain of the source", spec_.id));
}

SourceField ConvolutionSource::convolution_part(const PCFn& u) const {
    check(u);
    PCFn hu = map_values(u, spec_.h);
    std::vector<ExpConvolution> e;
    if (!spec_.kernel.empty()) e.emplace_back(spec_.kernel, hu);
    std::vector<QuadratureConvolution> q;
    for (const auto& gk : spec_.general) q.push_back({gk.k, gk.reach, gk.coupling, hu});
    return SourceField(PCFn(spec_.dim), std::move(e), std::move(q));
}

SourceField ConvolutionSource::apply(const PCFn& u) const {
    SourceField conv = convolution_part(u);
    return SourceField(map_values(u, spec_.g), conv.exp_terms(), conv.quad_terms());
}

LocalSource::LocalSource(StepFunction a, PCFn b, std::string id)
    : a_(std::move(a)), b_(std::move(b)), id_(std::move(id)) {
    if (a_.values.size() != a_.breakpoints.size() + 1)
        throw std::invalid_argument("step function needs exactly one more value than breakpoints");
    if (!std::is_sorted(a_.breakpoints.begin(), a_.breakpoints.end()))
        throw std::invalid_argument("step function breakpoints must increase");
}

std::shared_ptr<LocalSource> LocalSource::linear(int n, double alpha) {
    return std::make_shared<LocalSource>(StepFunction::constant(alpha), PCFn(n), fmt::format("linear({})", alpha));
}

SourceConstants LocalSource::constants() const {
    double L1 = a_.sup_abs();
    return {L1, L1 + a_.tv(), balsplit::tv(b_)};
}

SourceField LocalSource::apply(const PCFn& u) const {
    if (u.dim() != dim()) throw std::invalid_argument("state dimension does not match the source");
    return SourceField(local_combination(u, a_, b_));
}

NonautonomousSource::NonautonomousSource(std::shared_ptr<const SourceOp> base, Modulation mod, double l1_bound)
    : base_(std::move(base)), mod_(std::move(mod)), l1_bound_(l1_bound) {
    if (!base_ || !mod_.m) throw std::invalid_argument("nonautonomous source needs a base source and a modulation");
}

SourceConstants NonautonomousSource::constants() const {
    SourceConstants c = base_->constants();
    return {mod_.sup * c.L1 + mod_.lip * c.L1 * l1_bound_, mod_.sup * c.L2, mod_.sup * c.L3 + 2.0};
}

double NonautonomousSource::clock(const PCFn& u) { return u.integral()[u.dim() - 1]; }

SourceField NonautonomousSource::apply(const PCFn& u) const {
    const int n = base_->dim();
    if (u.dim() != n + 1) throw std::invalid_argument("state dimension does not match the source");
    PCFn base_state = components(u, 0, n);
    double tau = clock(u);
    SourceField f = base_->apply(base_state).scaled(mod_.m(tau));
    State unit = State::Zero(n + 1);
    unit[n] = 1.0;
    PCFn local = pad(f.local(), 1) + PCFn::box(0.0, 1.0, unit);
    std::vector<ExpConvolution> e;
    for (const auto& c : f.exp_terms()) {
        std::vector<KernelBlock> blocks;
        for (const auto& b : c.kernel().blocks()) blocks.push_back({pad(b.coupling, n + 1), b.kernel});
        e.emplace_back(MatrixKernel(std::move(blocks)), pad(c.density(), 1));
    }
    std::vector<QuadratureConvolution> q;
    for (const auto& c : f.quad_terms()) q.push_back({c.kernel, c.reach, pad(c.coupling, n + 1), pad(c.density, 1)});
    return SourceField(std::move(local), std::move(e), std::move(q));
}

PCFn apply_g(const SourceOp& src, const PCFn& u, int N) {
    if (N < 1) throw std::invalid_argument("projection resolution must be positive");
    return src.apply(u).project(N);
}

PCFn euler_step(const SourceOp& src, const PCFn& u, double s, int N) {
    if (s < 0.0) throw std::invalid_argument("Euler step needs s >= 0");
    if (s == 0.0) return u;
    return combine(1.0, u, s, apply_g(src, u, N));
}

double admissible_horizon(const SourceConstants& c, double delta, double delta0) {
    double growth = delta0 * c.L2 + c.L3;
    double a = growth > 0.0 ? (delta0 - delta) / growth : std::numeric_limits<double>::infinity();
    return std::min(a, 1.0 / (c.L1 + 1.0));
}

PCFn ode_flow(const SourceOp& src, const PCFn& u, double t, const OdeOptions& opts) {
    if (t < 0.0) throw std::invalid_argument("flow time must be nonnegative");
    if (opts.substeps < 1) throw std::invalid_argument("flow needs at least one substep");
    if (opts.delta && opts.delta0) {
        double T = admissible_horizon(src.constants(), *opts.delta, *opts.delta0);
        if (t > T) throw DomainError(fmt::format("flow time {} exceeds the admissible horizon {}", t, T));
    }
    if (t == 0.0) return u;
    const double h = t / opts.substeps;
    PCFn v = u;
    for (int k = 0; k < opts.substeps; ++k) {
        PCFn k1 = apply_g(src, v, opts.N);
        PCFn k2 = apply_g(src, combine(1.0, v, 0.5 * h, k1), opts.N);
        PCFn k3 = apply_g(src, combine(1.0, v, 0.5 * h, k2), opts.N);
        PCFn k4 = apply_g(src, combine(1.0, v, h, k3), opts.N);
        PCFn incr = combine(1.0, k1 + k4, 2.0, k2 + k3);
        v = combine(1.0, v, h / 6.0, incr);
    }
    return v;
}

}  // namespace balsplit
