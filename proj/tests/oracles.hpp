#ifndef BALSPLIT_TESTS_ORACLES_HPP
#define BALSPLIT_TESTS_ORACLES_HPP

// Brute-force references that only use point evaluation of a PCFn.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "balsplit/pcfn.hpp"

namespace oracle {

/// Sum of jumps seen on a uniform grid of `n` points over [a, b].
inline double sampled_tv(const balsplit::PCFn& u, double a, double b, int n) {
    double total = 0.0;
    balsplit::State prev = u(a);
    for (int i = 1; i <= n; ++i) {
        balsplit::State cur = u(a + (b - a) * i / n);
        total += (cur - prev).norm();
        prev = cur;
    }
    return total;
}

/// Midpoint rule for the integral of |u - w| over [a, b].
inline double midpoint_l1(const balsplit::PCFn& u, const balsplit::PCFn& w, double a, double b, int n) {
    double h = (b - a) / n, total = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = a + (i + 0.5) * h;
        total += (u(x) - w(x)).norm() * h;
    }
    return total;
}

/// Random scalar PCFn on [-1, 1] whose breakpoints are at least `gap` apart.
inline balsplit::PCFn spaced_random(std::mt19937_64& rng, int jumps, double gap, int dim = 1) {
    std::uniform_real_distribution<double> pos(-1.0, 1.0), val(-1.0, 1.0);
    std::vector<double> br;
    while (static_cast<int>(br.size()) < jumps) {
        double x = pos(rng);
        bool ok = std::all_of(br.begin(), br.end(), [&](double y) { return std::abs(x - y) >= gap; });
        if (ok) br.push_back(x);
    }
    std::sort(br.begin(), br.end());
    std::vector<balsplit::State> vals{balsplit::State::Zero(dim)};
    for (int k = 1; k < jumps; ++k) {
        balsplit::State v(dim);
        for (int i = 0; i < dim; ++i) v[i] = val(rng);
        vals.push_back(v);
    }
    vals.push_back(balsplit::State::Zero(dim));
    return balsplit::PCFn(br, vals);
}

}  // namespace oracle

#endif
