#include "balsplit/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

namespace balsplit {

namespace {

constexpr double kTailDecay = 40.0;

double op_norm(const Matrix& M) {
    if (M.rows() == 1 && M.cols() == 1) return std::abs(M(0, 0));
    Eigen::MatrixXd dense = M;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
    return svd.singularValues()(0);
}

}  // namespace

ExpKernel::ExpKernel(std::vector<ExpTerm> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (!(t.rate > 0.0) || !std::isfinite(t.rate))
            throw std::invalid_argument(fmt::format("ExpKernel rate must be positive, got {}", t.rate));
        if (!std::isfinite(t.coeff)) throw std::invalid_argument("ExpKernel coefficient not finite");
    }
}

double ExpKernel::operator()(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.coeff * std::exp(-t.rate * std::abs(x));
    return s;
}

double ExpKernel::mass() const {
    double s = 0.0;
    for (const auto& t : terms_) s += 2.0 * t.coeff / t.rate;
    return s;
}

double ExpKernel::l1_norm() const {
    double s = 0.0;
    for (const auto& t : terms_) s += 2.0 * std::abs(t.coeff) / t.rate;
    return s;
}

double ExpKernel::min_rate() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& t : terms_) r = std::min(r, t.rate);
    return r;
}

double ExpKernel::tail_width() const { return terms_.empty() ? 0.0 : kTailDecay / min_rate(); }

ExpKernel ExpKernel::scaled(double a) const {
    auto t = terms_;
    for (auto& x : t) x.coeff *= a;
    return ExpKernel(std::move(t));
}

MatrixKernel::MatrixKernel(std::vector<KernelBlock> blocks) : blocks_(std::move(blocks)) {
    for (const auto& b : blocks_) {
        if (b.coupling.rows() != b.coupling.cols())
            throw std::invalid_argument("MatrixKernel coupling must be square");
        if (dim_ == 0) dim_ = static_cast<int>(b.coupling.rows());
        if (b.coupling.rows() != dim_) throw std::invalid_argument("MatrixKernel blocks of mixed size");
    }
}

MatrixKernel MatrixKernel::scalar(const ExpKernel& k) {
    return MatrixKernel({KernelBlock{Matrix::Identity(1, 1), k}});
}

MatrixKernel MatrixKernel::diagonal(const std::vector<ExpKernel>& per_component) {
    int n = static_cast<int>(per_component.size());
    std::vector<KernelBlock> blocks;
    for (int i = 0; i < n; ++i) {
        if (per_component[static_cast<std::size_t>(i)].empty()) continue;
        Matrix M = Matrix::Zero(n, n);
        M(i, i) = 1.0;
        blocks.push_back({M, per_component[static_cast<std::size_t>(i)]});
    }
    MatrixKernel K(std::move(blocks));
    K.dim_ = n;
    return K;
}

Matrix MatrixKernel::operator()(double x) const {
    Matrix M = Matrix::Zero(dim_, dim_);
    for (const auto& b : blocks_) M += b.kernel(x) * b.coupling;
    return M;
}

double MatrixKernel::tail_width() const {
    double w = 0.0;
    for (const auto& b : blocks_) w = std::max(w, b.kernel.tail_width());
    return w;
}

double MatrixKernel::l1_norm() const {
    if (blocks_.empty()) return 0.0;
    if (blocks_.size() == 1) return op_norm(blocks_[0].coupling) * blocks_[0].kernel.l1_norm();
    // the operator norm of K(x) is smooth on each side of 0; integrate on a geometric partition
    double width = tail_width();
    double total = 0.0;
    double a = 0.0;
    double h = width / 4096.0;
    while (a < width) {
        double b = std::min(width, a + h);
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double x) { return op_norm((*this)(x)); }, a, b, 8, 1e-14);
        a = b;
        h *= 2.0;
    }
    return 2.0 * total * (1.0 + 1e-9);
}

SweepResult exp_sweep(double rate, const PCFn& w, std::span<const double> q) {
    const int n = w.dim();
    auto br = w.breakpoints();
    auto vals = w.values();

    // merged grid; qidx[i] is the grid index of q[i]
    std::vector<double> grid;
    grid.reserve(q.size() + br.size());
    std::vector<std::size_t> qidx(q.size());
    {
        std::size_t i = 0, j = 0;
        while (i < q.size() || j < br.size()) {
            if (j >= br.size() || (i < q.size() && q[i] <= br[j])) {
                qidx[i] = grid.size();
                grid.push_back(q[i++]);
            } else {
                grid.push_back(br[j++]);
            }
        }
    }
    const std::size_t G = grid.size();
    SweepResult out;
    if (G == 0) return out;

    // value of w on ]grid[m], grid[m+1][
    std::vector<State> piece(G > 0 ? G - 1 : 0, State::Zero(n));
    {
        std::size_t p = 0;
        for (std::size_t m = 0; m + 1 < G; ++m) {
            while (p < br.size() && br[p] <= grid[m]) ++p;
            piece[m] = vals[p];
        }
    }

    std::vector<State> L(G, State::Zero(n)), R(G, State::Zero(n));
    std::vector<State> I(G > 0 ? G - 1 : 0, State::Zero(n));
    const double inv_r = 1.0 / rate;
    for (std::size_t m = 0; m + 1 < G; ++m) {
        double d = grid[m + 1] - grid[m];
        double decay = std::exp(-rate * d);
        double one_minus = -std::expm1(-rate * d);
        const State& v = piece[m];
        L[m + 1] = L[m] * decay + v * (one_minus * inv_r);
        I[m] = v * (d * inv_r) + (L[m] - v * inv_r) * (one_minus * inv_r);
    }
    for (std::size_t m = G - 1; m-- > 0;) {
        double d = grid[m + 1] - grid[m];
        double decay = std::exp(-rate * d);
        double one_minus = -std::expm1(-rate * d);
        const State& v = piece[m];
        R[m] = R[m + 1] * decay + v * (one_minus * inv_r);
        I[m] += v * (d * inv_r) + (R[m + 1] - v * inv_r) * (one_minus * inv_r);
    }

    out.value.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out.value[i] = L[qidx[i]] + R[qidx[i]];
    if (q.size() >= 2) {
        out.integral.resize(q.size() - 1);
        for (std::size_t i = 0; i + 1 < q.size(); ++i) {
            State s = State::Zero(n);
            for (std::size_t m = qidx[i]; m < qidx[i + 1]; ++m) s += I[m];
            out.integral[i] = s;
        }
    }
    return out;
}

ExpConvolution::ExpConvolution(MatrixKernel K, PCFn w) : K_(std::move(K)), w_(std::move(w)) {
    if (!K_.empty() && K_.dim() != w_.dim())
        throw std::invalid_argument(
            fmt::format("kernel dimension {} does not match density dimension {}", K_.dim(), w_.dim()));
}

State ExpConvolution::value(double x) const {
    double xs[1] = {x};
    return values(xs)[0];
}

std::vector<State> ExpConvolution::values(std::span<const double> xs) const {
    std::vector<State> out(xs.size(), State::Zero(w_.dim()));
    if (w_.is_zero()) return out;
    for (const auto& b : K_.blocks()) {
        for (const auto& t : b.kernel.terms()) {
            auto s = exp_sweep(t.rate, w_, xs);
            for (std::size_t i = 0; i < xs.size(); ++i) out[i] += t.coeff * (b.coupling * s.value[i]);
        }
    }
    return out;
}

std::vector<State> ExpConvolution::integrals(std::span<const double> xs) const {
    std::vector<State> out(xs.size() >= 2 ? xs.size() - 1 : 0, State::Zero(w_.dim()));
    if (w_.is_zero() || out.empty()) return out;
    for (const auto& b : K_.blocks()) {
        for (const auto& t : b.kernel.terms()) {
            auto s = exp_sweep(t.rate, w_, xs);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.coeff * (b.coupling * s.integral[i]);
        }
    }
    return out;
}

State ExpConvolution::derivative(double x) const {
    State d = State::Zero(w_.dim());
    auto br = w_.breakpoints();
    auto vals = w_.values();
    for (std::size_t j = 0; j < br.size(); ++j) d += K_(x - br[j]) * (vals[j + 1] - vals[j]);
    return d;
}

double ExpConvolution::reach_lo() const { return w_.support_lo() - K_.tail_width(); }
double ExpConvolution::reach_hi() const { return w_.support_hi() + K_.tail_width(); }

std::vector<State> ExpConvolution::cell_means(int N, long long k_lo, long long k_hi) const {
    if (k_hi < k_lo) return {};
    std::vector<double> edges;
    edges.reserve(static_cast<std::size_t>(k_hi - k_lo + 2));
    for (long long k = k_lo; k <= k_hi + 1; ++k) edges.push_back(cell_edge(k, N));
    auto ints = integrals(edges);
    for (auto& v : ints) v *= static_cast<double>(N);
    return ints;
}

PCFn project(const ExpConvolution& c, int N) {
    CellRange cells = projection_cells(N);
    if (c.density().is_zero() || c.kernel().empty()) return PCFn(c.dim());
    long long k_lo = std::max(cells.first, static_cast<long long>(std::floor(c.reach_lo() * N)) - 1);
    long long k_hi = std::min(cells.last, static_cast<long long>(std::ceil(c.reach_hi() * N)));
    if (k_lo > k_hi) return PCFn(c.dim());
    return from_cell_means(N, k_lo, c.cell_means(N, k_lo, k_hi), c.dim());
}

}  // namespace balsplit
