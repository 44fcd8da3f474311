#ifndef BALSPLIT_KERNEL_HPP
#define BALSPLIT_KERNEL_HPP

#include <span>
#include <vector>

#include "balsplit/pcfn.hpp"

namespace balsplit {

struct ExpTerm {
    double coeff;
    double rate;
};

/// x -> sum_k c_k exp(-r_k |x|).
class ExpKernel {
public:
    ExpKernel() = default;
    explicit ExpKernel(std::vector<ExpTerm> terms);
    static ExpKernel two_sided(double coeff, double rate) { return ExpKernel({{coeff, rate}}); }

    double operator()(double x) const;
    /// Integral of the kernel.
    double mass() const;
    /// sum 2|c_k|/r_k; equals the L1 norm when all coefficients are nonnegative.
    double l1_norm() const;
    /// Half-width beyond which every term is below exp(-40) of its peak.
    double tail_width() const;
    double min_rate() const;
    ExpKernel scaled(double a) const;
    const std::vector<ExpTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

private:
    std::vector<ExpTerm> terms_;
};

/// One coupling block of a matrix kernel: x -> coupling * k(x).
struct KernelBlock {
    Matrix coupling;
    ExpKernel kernel;
};

/// K(x) = sum_b coupling_b k_b(x).
class MatrixKernel {
public:
    MatrixKernel() = default;
    explicit MatrixKernel(std::vector<KernelBlock> blocks);
    static MatrixKernel scalar(const ExpKernel& k);
    static MatrixKernel diagonal(const std::vector<ExpKernel>& per_component);

    int dim() const { return dim_; }
    Matrix operator()(double x) const;
    /// Integral of the operator norm of K(x) over the line.
    double l1_norm() const;
    double tail_width() const;
    const std::vector<KernelBlock>& blocks() const { return blocks_; }
    bool empty() const { return blocks_.empty(); }

private:
    int dim_ = 0;
    std::vector<KernelBlock> blocks_;
};

/**
 * @brief Closed-form convolution K * w of a matrix exponential kernel with a PCFn.
 *
 * Everything is evaluated by forward/backward exponential sweeps; the result is
 * continuous and smooth away from the breakpoints of w.
 */
class ExpConvolution {
public:
    ExpConvolution(MatrixKernel K, PCFn w);

    int dim() const { return K_.dim(); }
    const PCFn& density() const { return w_; }
    const MatrixKernel& kernel() const { return K_; }

    State value(double x) const;
    /// Values at sorted points.
    std::vector<State> values(std::span<const double> xs) const;
    /// Integrals over [xs[i], xs[i+1]] for sorted points.
    std::vector<State> integrals(std::span<const double> xs) const;
    /// Derivative (K * w') at x, i.e. sum over jumps of w of K(x - x_j) [w](x_j).
    State derivative(double x) const;
    /// Interval outside of which the convolution is below the tail cutoff.
    double reach_lo() const;
    double reach_hi() const;

    /// Cell averages, see project(PCFn, int).
    std::vector<State> cell_means(int N, long long k_lo, long long k_hi) const;

private:
    MatrixKernel K_;
    PCFn w_;
};

/// Scalar sweep primitive: for q sorted, values of (e^{-r|.|} * w)(q_i) and
/// the integrals over [q_i, q_{i+1}].
struct SweepResult {
    std::vector<State> value;
    std::vector<State> integral;
};
SweepResult exp_sweep(double rate, const PCFn& w, std::span<const double> q);

/// Projection of the convolution onto the averaging cells.
PCFn project(const ExpConvolution& c, int N);

}  // namespace balsplit

#endif
