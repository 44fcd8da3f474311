#include "balsplit/pcfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace balsplit {

namespace {

void check_dim(const PCFn& u, const PCFn& w) {
    if (u.dim() != w.dim())
        throw std::invalid_argument(
            fmt::format("PCFn dimension mismatch: {} vs {}", u.dim(), w.dim()));
}

// Calls fn(a, b, vu, vw) on every bounded piece of the common refinement.
template <class Fn>
void merged_pieces(const PCFn& u, const PCFn& w, Fn&& fn) {
    auto bu = u.breakpoints();
    auto bw = w.breakpoints();
    auto vu = u.values();
    auto vw = w.values();
    std::size_t i = 0, j = 0;
    bool have_prev = false;
    double prev = 0.0;
    while (i < bu.size() || j < bw.size()) {
        double x;
        if (j >= bw.size() || (i < bu.size() && bu[i] <= bw[j]))
            x = bu[i];
        else
            x = bw[j];
        if (have_prev && x > prev) fn(prev, x, vu[i], vw[j]);
        while (i < bu.size() && bu[i] == x) ++i;
        while (j < bw.size() && bw[j] == x) ++j;
        prev = x;
        have_prev = true;
    }
}

// Calls fn(lo, hi, v) on every bounded piece of u clipped to [a, b].
template <class Fn>
void clipped_pieces(const PCFn& u, double a, double b, Fn&& fn) {
    auto br = u.breakpoints();
    auto vals = u.values();
    if (br.empty() || !(a < b)) return;
    // piece m is ]br[m-1], br[m][; pieces 0 and br.size() are the zero tails
    std::size_t m = static_cast<std::size_t>(std::upper_bound(br.begin(), br.end(), a) - br.begin());
    double lo = a;
    while (lo < b && m < br.size()) {
        double hi = std::min(br[m], b);
        if (m > 0 && hi > lo) fn(lo, hi, vals[m]);
        lo = br[m];
        ++m;
    }
}

}  // namespace

PCFn::PCFn(int dim) : dim_(dim), values_{State::Zero(dim)} {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument(fmt::format("PCFn dimension {} out of range", dim));
}

PCFn::PCFn(std::vector<double> breakpoints, std::vector<State> values,
           const NormalizeOptions& opts) {
    if (values.size() != breakpoints.size() + 1)
        throw std::invalid_argument("PCFn needs exactly one more value than breakpoints");
    dim_ = static_cast<int>(values.front().size());
    if (dim_ < 1 || dim_ > kMaxDim)
        throw std::invalid_argument(fmt::format("PCFn dimension {} out of range", dim_));
    for (const auto& v : values) {
        if (v.size() != dim_) throw std::invalid_argument("PCFn values of mixed dimension");
        if (!v.allFinite()) throw std::invalid_argument("PCFn value is not finite");
    }
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        if (!std::isfinite(breakpoints[k]))
            throw std::invalid_argument("PCFn breakpoint is not finite");
        if (k > 0 && breakpoints[k] < breakpoints[k - 1])
            throw std::invalid_argument("PCFn breakpoints must be non-decreasing");
    }

    std::vector<double> br;
    std::vector<State> vals;
    br.reserve(breakpoints.size());
    vals.reserve(values.size());
    vals.push_back(values[0]);

    // Merge a tiny jump at the last kept breakpoint; the smaller value wins so
    // zero tails survive.
    auto absorb_tiny_jump = [&] {
        while (!br.empty()) {
            const State& a = vals[vals.size() - 2];
            const State& b = vals.back();
            if ((a - b).norm() >= opts.jump_tol) return;
            State keep = a.norm() <= b.norm() ? a : b;
            vals.pop_back();
            br.pop_back();
            vals.back() = keep;
        }
    };

    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        double x = breakpoints[k];
        const State& v = values[k + 1];
        if (!br.empty() && x - br.back() < opts.merge_width) {
            vals.back() = v;
            absorb_tiny_jump();
            continue;
        }
        if ((v - vals.back()).norm() < opts.jump_tol) {
            if (v.norm() < vals.back().norm()) vals.back() = v;
            continue;
        }
        br.push_back(x);
        vals.push_back(v);
    }
    for (State* end : {&vals.front(), &vals.back()}) {
        if (end->norm() >= opts.jump_tol)
            throw std::invalid_argument("PCFn must vanish outside a bounded set");
        end->setZero();
    }
    absorb_tiny_jump();
    breaks_ = std::move(br);
    values_ = std::move(vals);
}

PCFn PCFn::scalar(std::vector<double> breakpoints, const std::vector<double>& values,
                  const NormalizeOptions& opts) {
    std::vector<State> v;
    v.reserve(values.size());
    for (double x : values) v.push_back(State::Constant(1, x));
    return PCFn(std::move(breakpoints), std::move(v), opts);
}

PCFn PCFn::box(double a, double b, const State& v) {
    if (!(a < b)) throw std::invalid_argument("box needs a < b");
    State z = State::Zero(v.size());
    return PCFn({a, b}, {z, v, z});
}

State PCFn::operator()(double x) const {
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    return values_[static_cast<std::size_t>(it - breaks_.begin())];
}

State PCFn::left_limit(double x) const {
    auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
    return values_[static_cast<std::size_t>(it - breaks_.begin())];
}

State PCFn::integral() const {
    State s = State::Zero(dim_);
    for (std::size_t k = 0; k + 1 < breaks_.size(); ++k)
        s += (breaks_[k + 1] - breaks_[k]) * values_[k + 1];
    return s;
}

bool PCFn::operator==(const PCFn& other) const {
    if (dim_ != other.dim_ || breaks_ != other.breaks_) return false;
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (values_[k] != other.values_[k]) return false;
    return true;
}

double tv(const PCFn& u) {
    double s = 0.0;
    auto v = u.values();
    for (std::size_t k = 0; k + 1 < v.size(); ++k) s += (v[k + 1] - v[k]).norm();
    return s;
}

double l1_norm(const PCFn& u) {
    double s = 0.0;
    auto b = u.breakpoints();
    auto v = u.values();
    for (std::size_t k = 0; k + 1 < b.size(); ++k) s += (b[k + 1] - b[k]) * v[k + 1].norm();
    return s;
}

double l1_dist(const PCFn& u, const PCFn& w) {
    check_dim(u, w);
    double s = 0.0;
    merged_pieces(u, w, [&](double a, double b, const State& x, const State& y) {
        s += (b - a) * (x - y).norm();
    });
    return s;
}

double sup_norm(const PCFn& u) {
    double s = 0.0;
    for (const auto& v : u.values()) s = std::max(s, v.norm());
    return s;
}

PCFn combine(double alpha, const PCFn& u, double beta, const PCFn& w) {
    check_dim(u, w);
    std::vector<double> br;
    std::vector<State> vals{State::Zero(u.dim())};
    merged_pieces(u, w, [&](double a, double b, const State& x, const State& y) {
        if (br.empty()) br.push_back(a);
        vals.push_back(alpha * x + beta * y);
        br.push_back(b);
    });
    vals.push_back(State::Zero(u.dim()));
    if (br.empty()) return PCFn(u.dim());
    return PCFn(std::move(br), std::move(vals));
}

PCFn operator+(const PCFn& u, const PCFn& w) { return combine(1.0, u, 1.0, w); }
PCFn operator-(const PCFn& u, const PCFn& w) { return combine(1.0, u, -1.0, w); }
PCFn operator*(double alpha, const PCFn& u) {
    if (alpha == 0.0) return PCFn(u.dim());
    std::vector<State> vals(u.values().begin(), u.values().end());
    for (auto& v : vals) v *= alpha;
    return PCFn(std::vector<double>(u.breakpoints().begin(), u.breakpoints().end()),
                std::move(vals));
}

PCFn map_values(const PCFn& u, const std::function<State(const State&)>& f, int out_dim) {
    return map_pieces(u, [&](double, double, const State& v) { return f(v); }, out_dim);
}

PCFn map_pieces(const PCFn& u, const std::function<State(double, double, const State&)>& f,
                int out_dim) {
    int n = out_dim > 0 ? out_dim : u.dim();
    auto b = u.breakpoints();
    auto v = u.values();
    if (b.empty()) return PCFn(n);
    std::vector<State> vals;
    vals.reserve(v.size());
    vals.push_back(State::Zero(n));
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        State y = f(b[k - 1], b[k], v[k]);
        if (y.size() != n) throw std::invalid_argument("map_pieces: output dimension mismatch");
        vals.push_back(std::move(y));
    }
    vals.push_back(State::Zero(n));
    return PCFn(std::vector<double>(b.begin(), b.end()), std::move(vals));
}

PCFn shift(const PCFn& u, double a) {
    std::vector<double> b(u.breakpoints().begin(), u.breakpoints().end());
    for (auto& x : b) x += a;
    return PCFn(std::move(b), std::vector<State>(u.values().begin(), u.values().end()));
}

PCFn dilate(const PCFn& u, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument(fmt::format("dilate needs lambda > 0, got {}", lambda));
    std::vector<double> b(u.breakpoints().begin(), u.breakpoints().end());
    for (auto& x : b) x /= lambda;
    return PCFn(std::move(b), std::vector<State>(u.values().begin(), u.values().end()));
}

PCFn restrict_to(const PCFn& u, double a, double b) {
    if (!(a < b)) return PCFn(u.dim());
    std::vector<double> br{a};
    std::vector<State> vals{State::Zero(u.dim())};
    vals.push_back(u(a));
    for (double x : u.breakpoints()) {
        if (x > a && x < b) {
            br.push_back(x);
            vals.push_back(u(x));
        }
    }
    br.push_back(b);
    vals.push_back(State::Zero(u.dim()));
    return PCFn(std::move(br), std::move(vals));
}

PCFn components(const PCFn& u, int first, int count) {
    if (first < 0 || count < 1 || first + count > u.dim())
        throw std::invalid_argument("components: index range out of bounds");
    return map_values(u, [&](const State& v) -> State { return v.segment(first, count); }, count);
}

PCFn stack(const PCFn& u, const PCFn& w) {
    int n = u.dim() + w.dim();
    if (n > kMaxDim) throw std::invalid_argument("stack: combined dimension too large");
    std::vector<double> br;
    std::vector<State> vals{State::Zero(n)};
    merged_pieces(u, w, [&](double a, double b, const State& x, const State& y) {
        if (br.empty()) br.push_back(a);
        State z(n);
        z << x, y;
        vals.push_back(z);
        br.push_back(b);
    });
    vals.push_back(State::Zero(n));
    if (br.empty()) return PCFn(n);
    return PCFn(std::move(br), std::move(vals));
}

double tv_on(const PCFn& u, double a, double b) {
    double s = 0.0;
    auto br = u.breakpoints();
    auto v = u.values();
    for (std::size_t k = 0; k < br.size(); ++k)
        if (br[k] > a && br[k] < b) s += (v[k + 1] - v[k]).norm();
    return s;
}

double l1_on(const PCFn& u, double a, double b) {
    double s = 0.0;
    clipped_pieces(u, a, b, [&](double lo, double hi, const State& v) { s += (hi - lo) * v.norm(); });
    return s;
}

State integral_on(const PCFn& u, double a, double b) {
    State s = State::Zero(u.dim());
    clipped_pieces(u, a, b, [&](double lo, double hi, const State& v) { s += (hi - lo) * v; });
    return s;
}

CellRange projection_cells(int N) {
    if (N < 1) throw std::invalid_argument(fmt::format("projection needs N >= 1, got {}", N));
    long long n2 = static_cast<long long>(N) * N;
    return {-1 - n2, -1 + n2};
}

PCFn from_cell_means(int N, long long k0, const std::vector<State>& means, int dim) {
    if (means.empty()) return PCFn(dim);
    std::vector<double> br;
    std::vector<State> vals;
    br.reserve(means.size() + 1);
    vals.reserve(means.size() + 2);
    vals.push_back(State::Zero(dim));
    for (std::size_t i = 0; i < means.size(); ++i) {
        br.push_back(cell_edge(k0 + static_cast<long long>(i), N));
        vals.push_back(means[i]);
    }
    br.push_back(cell_edge(k0 + static_cast<long long>(means.size()), N));
    vals.push_back(State::Zero(dim));
    return PCFn(std::move(br), std::move(vals));
}

PCFn project(const PCFn& u, int N) {
    CellRange cells = projection_cells(N);
    if (u.is_zero()) return PCFn(u.dim());
    auto br = u.breakpoints();
    auto vals = u.values();
    long long k_lo = std::max(cells.first, static_cast<long long>(std::floor(br.front() * N)) - 1);
    long long k_hi = std::min(cells.last, static_cast<long long>(std::ceil(br.back() * N)));
    if (k_lo > k_hi) return PCFn(u.dim());

    std::vector<State> means;
    means.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    // piece j is ]br[j-1], br[j][ with value vals[j]; j = 0 and j = br.size() are the zero tails
    std::size_t j = static_cast<std::size_t>(
        std::upper_bound(br.begin(), br.end(), cell_edge(k_lo, N)) - br.begin());
    for (long long k = k_lo; k <= k_hi; ++k) {
        double e0 = cell_edge(k, N), e1 = cell_edge(k + 1, N);
        State acc = State::Zero(u.dim());
        while (j < br.size() && br[j] <= e0) ++j;
        std::size_t m = j;
        double lo = e0;
        while (true) {
            double hi = m < br.size() ? std::min(br[m], e1) : e1;
            if (hi > lo && m > 0 && m < br.size()) acc += (hi - lo) * vals[m];
            if (m >= br.size() || br[m] >= e1) break;
            lo = br[m];
            ++m;
        }
        means.push_back(acc * static_cast<double>(N));
    }
    return from_cell_means(N, k_lo, means, u.dim());
}

std::string to_table(const PCFn& u) {
    std::string out = fmt::format("# pcfn dim={} jumps={}\n", u.dim(), u.jumps());
    auto br = u.breakpoints();
    auto vals = u.values();
    auto row = [&](const std::string& x, const State& v) {
        out += x;
        out += " |";
        for (int i = 0; i < v.size(); ++i) out += fmt::format(" {:.17g}", v[i]);
        out += '\n';
    };
    row("-inf", vals[0]);
    for (std::size_t k = 0; k < br.size(); ++k) row(fmt::format("{:.17g}", br[k]), vals[k + 1]);
    return out;
}

PCFn from_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int dim = -1;
    std::vector<double> br;
    std::vector<State> vals;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto p = line.find("dim=");
            if (p != std::string::npos) dim = std::stoi(line.substr(p + 4));
            continue;
        }
        auto bar = line.find('|');
        if (bar == std::string::npos)
            throw std::invalid_argument(fmt::format("pcfn table line {}: missing '|'", lineno));
        std::istringstream lhs(line.substr(0, bar));
        std::string xs;
        lhs >> xs;
        std::istringstream rhs(line.substr(bar + 1));
        std::vector<double> comps;
        std::string tok;
        while (rhs >> tok) comps.push_back(std::strtod(tok.c_str(), nullptr));
        if (dim < 0) dim = static_cast<int>(comps.size());
        if (static_cast<int>(comps.size()) != dim)
            throw std::invalid_argument(fmt::format("pcfn table line {}: expected {} components", lineno, dim));
        State v(dim);
        for (int i = 0; i < dim; ++i) v[i] = comps[static_cast<std::size_t>(i)];
        if (xs != "-inf") br.push_back(std::strtod(xs.c_str(), nullptr));
        else if (!vals.empty())
            throw std::invalid_argument(fmt::format("pcfn table line {}: '-inf' must come first", lineno));
        vals.push_back(v);
    }
    if (vals.empty()) {
        if (dim < 1) throw std::invalid_argument("pcfn table: empty");
        return PCFn(dim);
    }
    return PCFn(std::move(br), std::move(vals));
}

nlohmann::json to_json(const PCFn& u) {
    nlohmann::json j;
    j["dim"] = u.dim();
    j["breakpoints"] = std::vector<double>(u.breakpoints().begin(), u.breakpoints().end());
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : u.values()) vs.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    j["values"] = std::move(vs);
    return j;
}

PCFn pcfn_from_json(const nlohmann::json& j) {
    int dim = j.at("dim").get<int>();
    auto br = j.at("breakpoints").get<std::vector<double>>();
    std::vector<State> vals;
    for (const auto& row : j.at("values")) {
        auto c = row.get<std::vector<double>>();
        if (static_cast<int>(c.size()) != dim) throw std::invalid_argument("pcfn json: bad value size");
        vals.push_back(Eigen::Map<const Eigen::VectorXd>(c.data(), dim));
    }
    if (br.empty() && vals.size() <= 1) return PCFn(dim);
    return PCFn(std::move(br), std::move(vals));
}

}  // namespace balsplit
