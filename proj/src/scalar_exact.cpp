#include "balsplit/scalar_exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "balsplit/errors.hpp"

namespace balsplit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Gauss-Legendre on [a, b] with panels of width at most 0.05.
template <class F>
double smooth_integral(F&& f, double a, double b) {
    if (!(b > a)) return 0.0;
    int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.05)));
    double h = (b - a) / panels, sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h, hi = (p + 1 == panels) ? b : lo + h;
        sum += boost::math::quadrature::gauss<double, 7>::integrate(f, lo, hi);
    }
    return sum;
}

/// Lax-Oleinik minimization over the plateaus of piecewise-constant data.
class Minimizer {
public:
    Minimizer(const ConvexFlux& flux, const PCFn& u, double t) : flux_(flux), t_(t) {
        auto br = u.breakpoints();
        auto vals = u.values();
        b_.assign(br.begin(), br.end());
        for (const auto& v : vals) v_.push_back(v[0]);
        U_.assign(b_.size(), 0.0);
        for (std::size_t j = 1; j < b_.size(); ++j) U_[j] = U_[j - 1] + v_[j] * (b_[j] - b_[j - 1]);
        for (double v : v_) speed_.push_back(flux.df(v));
    }

    std::size_t plateaus() const { return v_.size(); }
    double plateau_value(std::size_t k) const { return v_[k]; }
    double vertex(std::size_t j) const { return b_[j]; }
    double min_speed() const { return *std::min_element(speed_.begin(), speed_.end()); }
    double max_speed() const { return *std::max_element(speed_.begin(), speed_.end()); }

    /// Position of the global minimizer encoded as 2k (inside plateau k) or 2j+1 (at vertex j).
    int label(double x) const {
        double best = kInf;
        int best_label = 0;
        const std::size_t B = b_.size();
        for (std::size_t k = 0; k <= B; ++k) {
            double y = x - t_ * speed_[k];
            int lab = 2 * static_cast<int>(k);
            if (k > 0 && y <= b_[k - 1]) {
                y = b_[k - 1];
                lab = 2 * static_cast<int>(k - 1) + 1;
            } else if (k < B && y >= b_[k]) {
                y = b_[k];
                lab = 2 * static_cast<int>(k) + 1;
            }
            double val = primitive(y) + t_ * flux_.conjugate((x - y) / t_);
            if (val < best) {
                best = val;
                best_label = lab;
            }
        }
        return best_label;
    }

private:
    /// Antiderivative of the data vanishing at -infinity.
    double primitive(double y) const {
        if (b_.empty() || y <= b_[0]) return 0.0;
        auto it = std::upper_bound(b_.begin(), b_.end(), y);
        std::size_t j = static_cast<std::size_t>(it - b_.begin()) - 1;
        return U_[j] + v_[j + 1] * (y - b_[j]);
    }

    const ConvexFlux& flux_;
    double t_;
    std::vector<double> b_, v_, U_, speed_;
};

void check_convex(const ConvexFlux& flux, const PCFn& u) {
    double lo = 0.0, hi = 0.0;
    for (const auto& v : u.values()) {
        lo = std::min(lo, v[0]);
        hi = std::max(hi, v[0]);
    }
    if (hi == lo) return;
    constexpr int kSamples = 64;
    double prev = flux.df(lo);
    for (int i = 1; i <= kSamples; ++i) {
        double d = flux.df(lo + (hi - lo) * i / kSamples);
        if (!(d > prev))
            throw ConfigError(fmt::format("flux is not strictly convex on [{}, {}]", lo, hi));
        prev = d;
    }
}

}  // namespace

ScalarExactSolution::ScalarExactSolution(ConvexFlux flux, double t, std::vector<Segment> segments)
    : flux_(std::move(flux)), t_(t), segments_(std::move(segments)) {}

double ScalarExactSolution::fan_value(const Segment& s, double x) const {
    return flux_.df_inv((x - s.origin) / t_);
}

double ScalarExactSolution::fan_integral(const Segment& s, double a, double b) const {
    return smooth_integral([&](double x) { return fan_value(s, x); }, a, b);
}

double ScalarExactSolution::fan_abs_integral(const Segment& s, double a, double b, double c) const {
    if (!(b > a)) return 0.0;
    double cross = std::clamp(s.origin + t_ * flux_.df(c), a, b);
    double left = c * (cross - a) - fan_integral(s, a, cross);
    double right = fan_integral(s, cross, b) - c * (b - cross);
    return std::abs(left) + std::abs(right);
}

double ScalarExactSolution::value(double x) const {
    auto it = std::lower_bound(segments_.begin(), segments_.end(), x,
                               [](const Segment& s, double v) { return s.hi <= v; });
    if (it == segments_.end()) return 0.0;
    return it->fan ? fan_value(*it, x) : it->value;
}

PCFn ScalarExactSolution::sample(double h) const {
    if (!(h > 0.0)) throw std::invalid_argument("sampling width must be positive");
    std::vector<double> breaks, values{0.0};
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const Segment& s = segments_[i];
        if (i > 0) breaks.push_back(s.lo);
        if (!s.fan) {
            values.push_back(s.value);
            continue;
        }
        int cells = std::max(1, static_cast<int>(std::ceil((s.hi - s.lo) / h)));
        double w = (s.hi - s.lo) / cells;
        for (int c = 0; c < cells; ++c) {
            double a = s.lo + c * w, b = (c + 1 == cells) ? s.hi : a + w;
            if (c > 0) breaks.push_back(a);
            values.push_back(fan_integral(s, a, b) / (b - a));
        }
    }
    values.erase(values.begin());
    return PCFn::scalar(std::move(breaks), values);
}

double ScalarExactSolution::l1_dist(const PCFn& w) const {
    auto wb = w.breakpoints();
    std::vector<double> grid(wb.begin(), wb.end());
    for (std::size_t i = 1; i < segments_.size(); ++i) grid.push_back(segments_[i].lo);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double a = grid[i], b = grid[i + 1];
        double mid = 0.5 * (a + b);
        double c = w(mid)[0];
        auto it = std::lower_bound(segments_.begin(), segments_.end(), mid,
                                   [](const Segment& s, double v) { return s.hi <= v; });
        if (it->fan)
            sum += fan_abs_integral(*it, a, b, c);
        else
            sum += std::abs(it->value - c) * (b - a);
    }
    return sum;
}

double ScalarExactSolution::integral() const {
    double sum = 0.0;
    for (const auto& s : segments_) {
        if (s.fan)
            sum += fan_integral(s, s.lo, s.hi);
        else if (s.value != 0.0)
            sum += s.value * (s.hi - s.lo);
    }
    return sum;
}

ScalarExactSolution scalar_exact_solution(const ConvexFlux& flux, const PCFn& u, double t) {
    if (u.dim() != 1) throw std::invalid_argument("exact solution needs scalar data");
    if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
    using Segment = ScalarExactSolution::Segment;
    std::vector<Segment> segs;
    auto vals = u.values();
    auto br = u.breakpoints();
    if (t == 0.0 || u.is_zero()) {
        double lo = -kInf;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            double hi = i < br.size() ? br[i] : kInf;
            segs.push_back({lo, hi, false, vals[i][0], 0.0});
            lo = hi;
        }
        return ScalarExactSolution(flux, t, std::move(segs));
    }
    check_convex(flux, u);

    Minimizer m(flux, u, t);
    double xl = br.front() + t * m.min_speed() - 1.0;
    double xr = br.back() + t * m.max_speed() + 1.0;
    std::vector<std::pair<double, int>> transitions;  // (position, label to the right)

    auto refine = [&](auto&& self, double a, int la, double b, int lb) -> void {
        if (la == lb) return;
        double tol = 1e-13 * std::max(1.0, std::abs(a));
        if (b - a <= tol) {
            transitions.emplace_back(0.5 * (a + b), lb);
            return;
        }
        double c = 0.5 * (a + b);
        int lc = m.label(c);
        self(self, a, la, c, lc);
        self(self, c, lc, b, lb);
    };
    int l0 = m.label(xl);
    refine(refine, xl, l0, xr, m.label(xr));

    auto make = [&](double lo, double hi, int lab) -> Segment {
        if (lab % 2 == 0) return {lo, hi, false, m.plateau_value(static_cast<std::size_t>(lab / 2)), 0.0};
        return {lo, hi, true, 0.0, m.vertex(static_cast<std::size_t>(lab / 2))};
    };
    double lo = -kInf;
    int lab = l0;
    for (const auto& [x, next] : transitions) {
        if (x > lo) segs.push_back(make(lo, x, lab));
        lo = std::max(lo, x);
        lab = next;
    }
    segs.push_back(make(lo, kInf, lab));
    return ScalarExactSolution(flux, t, std::move(segs));
}

PCFn scalar_exact(const ConvexFlux& flux, const PCFn& u, double t, double h) {
    return scalar_exact_solution(flux, u, t).sample(h);
}

}  // namespace balsplit
