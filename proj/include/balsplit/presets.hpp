#ifndef BALSPLIT_PRESETS_HPP
#define BALSPLIT_PRESETS_HPP

#include <cstdint>
#include <random>

#include "balsplit/pcfn.hpp"

namespace balsplit {

/// ul on [a, x0[, ur on [x0, b[, zero outside [a, b[.
PCFn riemann_datum(const State& ul, const State& ur, double x0 = 0.0, double a = -1.0, double b = 1.0);

/// v on [a, b[.
PCFn bump_datum(const State& v, double a = 0.0, double b = 1.0);

struct RandomDatumSpec {
    int dim = 1;
    int jumps = 6;
    double lo = -1.0;
    double hi = 1.0;
    /// Values uniform in [-amplitude, amplitude] per component.
    double amplitude = 0.5;
};

/// Seeded random piecewise-constant function with `jumps` breakpoints in [lo, hi].
PCFn random_datum(std::mt19937_64& rng, const RandomDatumSpec& spec);
PCFn random_datum(std::uint64_t seed, const RandomDatumSpec& spec);

}  // namespace balsplit

#endif
