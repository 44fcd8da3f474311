#ifndef BALSPLIT_SCALAR_EXACT_HPP
#define BALSPLIT_SCALAR_EXACT_HPP

#include <vector>

#include "balsplit/flux_models.hpp"
#include "balsplit/pcfn.hpp"

namespace balsplit {

/**
 * @brief Entropy solution of a scalar convex conservation law with piecewise-constant data.
 *
 * Built from the Lax-Oleinik minimization: the minimizer moves monotonically
 * through the candidates (plateaus of the data and centered fans at its
 * increasing jumps), so the solution is a finite list of constant and fan segments.
 */
class ScalarExactSolution {
public:
    struct Segment {
        double lo;
        double hi;
        bool fan;
        double value;   ///< plateau value when !fan
        double origin;  ///< fan center when fan
    };

    ScalarExactSolution(ConvexFlux flux, double t, std::vector<Segment> segments);

    double time() const { return t_; }
    const std::vector<Segment>& segments() const { return segments_; }
    double value(double x) const;
    /// Piecewise-constant approximation: fans replaced by exact cell means of width at most h.
    PCFn sample(double h) const;
    /// Exact L1 distance to a piecewise-constant function.
    double l1_dist(const PCFn& w) const;
    /// Exact integral over the line.
    double integral() const;

private:
    double fan_value(const Segment& s, double x) const;
    /// Integral of the fan over [a, b].
    double fan_integral(const Segment& s, double a, double b) const;
    /// Integral of |fan - c| over [a, b].
    double fan_abs_integral(const Segment& s, double a, double b, double c) const;

    ConvexFlux flux_;
    double t_;
    std::vector<Segment> segments_;
};

ScalarExactSolution scalar_exact_solution(const ConvexFlux& flux, const PCFn& u, double t);
/// Exact solution sampled with resolution h.
PCFn scalar_exact(const ConvexFlux& flux, const PCFn& u, double t, double h = 1e-5);

}  // namespace balsplit

#endif
