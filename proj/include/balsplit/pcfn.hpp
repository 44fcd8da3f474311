#ifndef BALSPLIT_PCFN_HPP
#define BALSPLIT_PCFN_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "balsplit/state.hpp"

namespace balsplit {

struct NormalizeOptions {
    /// Breakpoints closer than this are merged.
    double merge_width = 1e-12;
    /// Jumps with Euclidean norm below this are dropped.
    double jump_tol = 1e-14;
};

/**
 * @brief Piecewise-constant, compactly supported function from the real line to R^n.
 *
 * values[0] lives on ]-inf, b_0[, values[k] on ]b_{k-1}, b_k[ and values.back()
 * on ]b_last, +inf[. Both outer values are exactly zero after construction.
 * Point evaluation is right-continuous.
 */
class PCFn {
public:
    explicit PCFn(int dim = 1);
    PCFn(std::vector<double> breakpoints, std::vector<State> values,
         const NormalizeOptions& opts = {});

    /// Scalar convenience constructor.
    static PCFn scalar(std::vector<double> breakpoints, const std::vector<double>& values,
                       const NormalizeOptions& opts = {});
    /// v on [a, b[, zero elsewhere.
    static PCFn box(double a, double b, const State& v);

    int dim() const { return dim_; }
    std::span<const double> breakpoints() const { return breaks_; }
    std::span<const State> values() const { return values_; }
    std::size_t jumps() const { return breaks_.size(); }
    bool is_zero() const { return breaks_.empty(); }

    State operator()(double x) const;
    State left_limit(double x) const;
    State right_limit(double x) const { return (*this)(x); }

    /// Support hull [first breakpoint, last breakpoint]; empty function gives {0, 0}.
    double support_lo() const { return breaks_.empty() ? 0.0 : breaks_.front(); }
    double support_hi() const { return breaks_.empty() ? 0.0 : breaks_.back(); }

    /// Componentwise integral.
    State integral() const;

    bool operator==(const PCFn& other) const;

private:
    int dim_;
    std::vector<double> breaks_;
    std::vector<State> values_;
};

double tv(const PCFn& u);
double l1_norm(const PCFn& u);
double l1_dist(const PCFn& u, const PCFn& w);
/// Sup over x of the Euclidean norm.
double sup_norm(const PCFn& u);

/// alpha*u + beta*w on the merged partition.
PCFn combine(double alpha, const PCFn& u, double beta, const PCFn& w);
PCFn operator+(const PCFn& u, const PCFn& w);
PCFn operator-(const PCFn& u, const PCFn& w);
PCFn operator*(double alpha, const PCFn& u);

/// Pointwise map of the values; f must send 0 to 0.
PCFn map_values(const PCFn& u, const std::function<State(const State&)>& f, int out_dim = -1);
/// Pointwise map of values depending also on the position of the piece.
PCFn map_pieces(const PCFn& u, const std::function<State(double a, double b, const State&)>& f,
                int out_dim = -1);

/// u(x - a).
PCFn shift(const PCFn& u, double a);
/// u_lambda(x) = u(lambda * x).
PCFn dilate(const PCFn& u, double lambda);
/// Restriction of u to ]a, b[, zero outside.
PCFn restrict_to(const PCFn& u, double a, double b);
/// Select components [first, first+count).
PCFn components(const PCFn& u, int first, int count);
/// Stack two functions of dims n and m into one of dim n+m.
PCFn stack(const PCFn& u, const PCFn& w);

/// Total variation of u restricted to the open interval ]a, b[.
double tv_on(const PCFn& u, double a, double b);
/// Integral of the norm over [a, b].
double l1_on(const PCFn& u, double a, double b);
/// Integral of u over [a, b].
State integral_on(const PCFn& u, double a, double b);

/// Index range of the averaging cells ]k/N, (k+1)/N].
struct CellRange {
    long long first;
    long long last;
};
CellRange projection_cells(int N);
inline double cell_edge(long long k, int N) { return static_cast<double>(k) / N; }

/// Cell averages on ]k/N, (k+1)/N], k = -1-N^2 .. -1+N^2; zero outside [-N-1/N, N].
PCFn project(const PCFn& u, int N);
/// Build a PCFn from cell means on the cells k0, k0+1, ... of width 1/N.
PCFn from_cell_means(int N, long long k0, const std::vector<State>& means, int dim);

std::string to_table(const PCFn& u);
PCFn from_table(const std::string& text);
nlohmann::json to_json(const PCFn& u);
PCFn pcfn_from_json(const nlohmann::json& j);

}  // namespace balsplit

#endif
