#ifndef BALSPLIT_SOURCE_HPP
#define BALSPLIT_SOURCE_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "balsplit/kernel.hpp"
#include "balsplit/pcfn.hpp"

namespace balsplit {

/// Scalar piecewise-constant coefficient with arbitrary (not necessarily zero) tails.
struct StepFunction {
    std::vector<double> breakpoints;
    std::vector<double> values;  ///< one more than breakpoints

    static StepFunction constant(double c) { return {{}, {c}}; }
    double operator()(double x) const;
    double sup_abs() const;
    double tv() const;
};

/// Convolution with a general integrable kernel, evaluated by adaptive quadrature.
struct QuadratureConvolution {
    std::function<double(double)> kernel;
    double reach;      ///< kernel treated as zero beyond |x| > reach
    Matrix coupling;   ///< applied to the density
    PCFn density;

    State value(double x) const;
};

/**
 * @brief A source term G(u) as a function of x.
 *
 * Sum of a piecewise-constant local part and convolutions; convolutions with
 * exponential kernels are exact, quadrature ones are flagged approximate.
 */
class SourceField {
public:
    explicit SourceField(PCFn local);
    SourceField(PCFn local, std::vector<ExpConvolution> exp_terms,
                std::vector<QuadratureConvolution> quad_terms = {});

    int dim() const { return local_.dim(); }
    const PCFn& local() const { return local_; }
    const std::vector<ExpConvolution>& exp_terms() const { return exp_; }
    const std::vector<QuadratureConvolution>& quad_terms() const { return quad_; }
    bool approximate() const { return !quad_.empty(); }

    State value(double x) const;
    /// Pi_N of the field.
    PCFn project(int N) const;
    double tv() const;
    double l1_norm() const;
    /// Integral over the line.
    State integral() const;
    /// Integrals over [xs[i], xs[i+1]] for sorted points.
    std::vector<State> integrals(std::span<const double> xs) const;
    /// Points where the field may fail to be smooth, sorted; the field vanishes (up to the
    /// tail cutoff) outside [front, back].
    std::vector<double> kinks() const;

    SourceField scaled(double a) const;
    /// This field minus another.
    SourceField minus(const SourceField& other) const;

private:
    State smooth_value(double x) const;
    State smooth_derivative(double x) const;
    std::vector<double> grid() const;
    int active_component() const;

    PCFn local_;
    std::vector<ExpConvolution> exp_;
    std::vector<QuadratureConvolution> quad_;
};

/// Declared constants of the source hypothesis: Lipschitz L1 and TV(G(u)) <= L2 TV(u) + L3.
struct SourceConstants {
    double L1 = 0.0;
    double L2 = 0.0;
    double L3 = 0.0;
};

enum class SourceKind { Zero, Convolution, Local, Constant, Nonautonomous };
const char* to_string(SourceKind k);

class SourceOp {
public:
    virtual ~SourceOp() = default;
    virtual std::string id() const = 0;
    virtual SourceKind kind() const = 0;
    virtual int dim() const = 0;
    virtual SourceConstants constants() const = 0;
    /// G(u); throws DomainError when u leaves the domain of the source.
    virtual SourceField apply(const PCFn& u) const = 0;
    virtual bool approximate() const { return false; }
};

class ZeroSource : public SourceOp {
public:
    explicit ZeroSource(int n) : n_(n) {}
    std::string id() const override { return "zero"; }
    SourceKind kind() const override { return SourceKind::Zero; }
    int dim() const override { return n_; }
    SourceConstants constants() const override { return {}; }
    SourceField apply(const PCFn& u) const override;

private:
    int n_;
};

/// G(u) = c independent of u.
class ConstantSource : public SourceOp {
public:
    explicit ConstantSource(PCFn c) : c_(std::move(c)) {}
    std::string id() const override { return "constant"; }
    SourceKind kind() const override { return SourceKind::Constant; }
    int dim() const override { return c_.dim(); }
    SourceConstants constants() const override { return {0.0, 0.0, tv(c_)}; }
    SourceField apply(const PCFn& u) const override;

private:
    PCFn c_;
};

/// Integrable kernel x -> k(x) coupling, with its L1 norm and the reach beyond which it is negligible.
struct GeneralKernel {
    std::function<double(double)> k;
    double reach;
    double l1;
    Matrix coupling;
};

/**
 * @brief G(u) = g(u) + K * h(u) with pointwise maps g, h vanishing at 0.
 *
 * Declared L1 = L2 = Lip(g) + |K|_1 Lip(h), L3 = 0.
 */
class ConvolutionSource : public SourceOp {
public:
    using PointMap = std::function<State(const State&)>;
    struct Spec {
        std::string id;
        int dim;
        PointMap g;
        PointMap h;
        MatrixKernel kernel;
        double lip_g;
        double lip_h;
        std::optional<Box> omega;
        /// Extra kernels that are not sums of exponentials; evaluated approximately.
        std::vector<GeneralKernel> general = {};
    };
    explicit ConvolutionSource(Spec spec);

    std::string id() const override { return spec_.id; }
    SourceKind kind() const override { return SourceKind::Convolution; }
    int dim() const override { return spec_.dim; }
    SourceConstants constants() const override;
    SourceField apply(const PCFn& u) const override;
    bool approximate() const override { return !spec_.general.empty(); }

    const Spec& spec() const { return spec_; }
    /// The convolution part K * h(u) alone.
    SourceField convolution_part(const PCFn& u) const;
    double kernel_l1() const { return kernel_l1_; }

private:
    void check(const PCFn& u) const;
    Spec spec_;
    double kernel_l1_;
};

/**
 * @brief Local source G(u)(x) = a(x) u(x) + b(x).
 *
 * L1 = sup|a|, L2 = sup|a| + TV(a), L3 = TV(b).
 */
class LocalSource : public SourceOp {
public:
    LocalSource(StepFunction a, PCFn b, std::string id = "local");
    /// G(u) = alpha u.
    static std::shared_ptr<LocalSource> linear(int n, double alpha);

    std::string id() const override { return id_; }
    SourceKind kind() const override { return SourceKind::Local; }
    int dim() const override { return b_.dim(); }
    SourceConstants constants() const override;
    SourceField apply(const PCFn& u) const override;

    /// Mass of the x-variation measure for data bounded by sup_u.
    double measure_mass(double sup_u) const { return a_.tv() * sup_u + tv(b_); }

private:
    StepFunction a_;
    PCFn b_;
    std::string id_;
};

/**
 * @brief Augmented autonomous source for G(t, u) = m(t) G_base(u).
 *
 * The state carries a clock component w with dw/dt = chi_[0,1]; the time fed
 * to G is the integral of w.
 */
class NonautonomousSource : public SourceOp {
public:
    struct Modulation {
        std::function<double(double)> m;
        double sup;
        double lip;
    };
    /// l1_bound bounds |u|_1 on the domain of interest; it enters L1 through the time dependence.
    NonautonomousSource(std::shared_ptr<const SourceOp> base, Modulation mod, double l1_bound = 1.0);

    std::string id() const override { return "nonautonomous(" + base_->id() + ")"; }
    SourceKind kind() const override { return SourceKind::Nonautonomous; }
    int dim() const override { return base_->dim() + 1; }
    SourceConstants constants() const override;
    SourceField apply(const PCFn& u) const override;
    bool approximate() const override { return base_->approximate(); }

    const SourceOp& base() const { return *base_; }
    /// Clock time encoded in an augmented state.
    static double clock(const PCFn& u);

private:
    std::shared_ptr<const SourceOp> base_;
    Modulation mod_;
    double l1_bound_;
};

/// Pi_N(G(u)).
PCFn apply_g(const SourceOp& src, const PCFn& u, int N);
/// P_s u = u + s Pi_N(G(u)).
PCFn euler_step(const SourceOp& src, const PCFn& u, double s, int N);

/// min((delta0 - delta) / (delta0 L2 + L3), 1 / (L1 + 1)).
double admissible_horizon(const SourceConstants& c, double delta, double delta0);

struct OdeOptions {
    int substeps = 64;
    int N = 64;
    /// When both are set, t beyond the admissible horizon is refused.
    std::optional<double> delta;
    std::optional<double> delta0;
};
/// Sigma_t u by classical Runge-Kutta on projected source evaluations.
PCFn ode_flow(const SourceOp& src, const PCFn& u, double t, const OdeOptions& opts = {});

}  // namespace balsplit

#endif
