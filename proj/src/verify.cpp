#include "balsplit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>

#include "balsplit/errors.hpp"
#include "balsplit/parallel.hpp"

namespace balsplit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Gauss-Legendre nodes and weights on [-1, 1].
template <int M>
std::pair<std::vector<double>, std::vector<double>> gauss_rule() {
    using G = boost::math::quadrature::gauss<double, M>;
    std::vector<double> x, w;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        x.push_back(a[i]);
        w.push_back(wt[i]);
        if (a[i] != 0.0) {
            x.push_back(-a[i]);
            w.push_back(wt[i]);
        }
    }
    return {x, w};
}

/// Sorted unique copy.
std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

/// int over [c, d] of the hat of half-width h centred at m.
double hat_integral(double m, double h, double c, double d) {
    auto prim = [&](double x) {
        double y = std::clamp((x - m) / h, -1.0, 1.0);
        double v = y <= 0.0 ? 0.5 * (1.0 + y) * (1.0 + y) : 1.0 - 0.5 * (1.0 - y) * (1.0 - y);
        return h * v;
    };
    return prim(d) - prim(c);
}

double hat(double m, double h, double x) { return std::max(0.0, 1.0 - std::abs(x - m) / h); }

}  // namespace

double windowed_l1(const PCFn& u, const PCFn& w, double a, double b) { return l1_on(u - w, a, b); }

// ---------------------------------------------------------------------------

SharpFan::SharpFan(const SystemModel& model, const PCFn& v, double xi, int pieces) : xi_(xi) {
    if (pieces < 1) throw std::invalid_argument("fan resolution must be positive");
    const State ul = v.left_limit(xi), ur = v(xi);
    states_.push_back(ul);
    if (ul == ur) return;
    RiemannSolution sol = solve_riemann(model, ul, ur);
    for (int i = 0; i < model.dim(); ++i) {
        const double sigma = sol.sigma[i];
        const State& a = sol.states[static_cast<std::size_t>(i)];
        const State& b = sol.states[static_cast<std::size_t>(i + 1)];
        if (sigma == 0.0) continue;
        if (model.genuinely_nonlinear(i) && sigma > 0.0) {
            // piece k spans the speeds of the curve states k-1 and k; its value is the midpoint state
            for (int k = 1; k <= pieces; ++k) {
                State lo = model.rarefaction_curve(i, sigma * (k - 1) / pieces, a);
                State mid = model.rarefaction_curve(i, sigma * (k - 0.5) / pieces, a);
                speeds_.push_back(model.lambda(i, lo));
                states_.push_back(mid);
            }
            speeds_.push_back(model.lambda(i, b));
            states_.push_back(b);
        } else {
            speeds_.push_back(model.shock_speed(i, a, b));
            states_.push_back(b);
        }
    }
    states_.back() = ur;
    for (std::size_t k = 1; k < speeds_.size(); ++k) speeds_[k] = std::max(speeds_[k], speeds_[k - 1]);
}

State SharpFan::value(double theta, double x) const {
    if (!(theta > 0.0)) return x < xi_ ? states_.front() : states_.back();
    const double z = (x - xi_) / theta;
    auto it = std::upper_bound(speeds_.begin(), speeds_.end(), z);
    return states_[static_cast<std::size_t>(it - speeds_.begin())];
}

PCFn SharpFan::window(double theta, double lo, double hi) const {
    const int n = static_cast<int>(states_.front().size());
    if (!(hi > lo)) return PCFn(n);
    std::vector<double> br{lo};
    std::vector<State> vals{State::Zero(n), value(theta, lo)};
    for (std::size_t k = 0; k < speeds_.size(); ++k) {
        double x = xi_ + speeds_[k] * theta;
        if (x <= br.back() || x >= hi) continue;
        br.push_back(x);
        vals.push_back(states_[k + 1]);
    }
    br.push_back(hi);
    vals.push_back(State::Zero(n));
    return PCFn(std::move(br), std::move(vals));
}

// ---------------------------------------------------------------------------

FlatSolution::FlatSolution(const SystemModel& model, const SourceOp& source, const PCFn& v, double xi)
    : v_(v), field_(source.apply(v)), eig_(model.eig(v(xi))) {}

PCFn FlatSolution::transport(double theta) const {
    const int n = v_.dim();
    PCFn out(n);
    for (int i = 0; i < n; ++i) {
        const State l = eig_.L.row(i).transpose();
        const State r = eig_.R.col(i);
        PCFn part = map_values(v_, [&](const State& s) -> State { return l.dot(s) * r; });
        out = out + shift(part, eig_.lambda[i] * theta);
    }
    return out;
}

std::vector<State> FlatSolution::source_part(double theta, std::span<const double> xs) const {
    const int n = v_.dim();
    std::vector<State> out(xs.size(), State::Zero(n));
    if (!(theta > 0.0) || xs.empty()) return out;
    for (int i = 0; i < n; ++i) {
        const State l = eig_.L.row(i).transpose();
        const State r = eig_.R.col(i);
        const double shift_len = eig_.lambda[i] * theta;
        if (std::abs(shift_len) <= 1e-14 * (1.0 + theta)) {
            for (std::size_t q = 0; q < xs.size(); ++q) out[q] += theta * l.dot(field_.value(xs[q])) * r;
            continue;
        }
        // primitive of G(v) on the union of xs and the shifted points
        std::vector<double> pts(xs.begin(), xs.end());
        for (double x : xs) pts.push_back(x - shift_len);
        pts = sorted_unique(std::move(pts));
        std::vector<State> prim(pts.size(), State::Zero(n));
        auto ints = field_.integrals(pts);
        for (std::size_t k = 0; k < ints.size(); ++k) prim[k + 1] = prim[k] + ints[k];
        auto at = [&](double x) {
            auto it = std::lower_bound(pts.begin(), pts.end(), x);
            return prim[static_cast<std::size_t>(it - pts.begin())];
        };
        const double inv = 1.0 / eig_.lambda[i];
        for (std::size_t q = 0; q < xs.size(); ++q) {
            State integral = (at(xs[q]) - at(xs[q] - shift_len)) * inv;
            out[q] += l.dot(integral) * r;
        }
    }
    return out;
}

State FlatSolution::value(double theta, double x) const {
    double p[1] = {x};
    return transport(theta)(x) + source_part(theta, p)[0];
}

double FlatSolution::l1_distance(const PCFn& w, double theta, double lo, double hi) const {
    const PCFn D = w - transport(theta);
    std::vector<double> kinks = field_.kinks();
    std::vector<double> cuts;
    for (int i = 0; i < v_.dim(); ++i)
        for (double k : kinks) {
            cuts.push_back(k);
            cuts.push_back(k + eig_.lambda[i] * theta);
        }
    auto br = D.breakpoints();
    cuts.insert(cuts.end(), br.begin(), br.end());
    if (cuts.empty()) return 0.0;
    cuts = sorted_unique(std::move(cuts));
    lo = std::max(lo, cuts.front());
    hi = std::min(hi, cuts.back());
    if (!(hi > lo)) return 0.0;

    std::vector<double> edges{lo};
    for (double c : cuts)
        if (c > lo && c < hi) edges.push_back(c);
    edges.push_back(hi);
    const double max_width = (hi - lo) / 512.0;

    static const auto rule = gauss_rule<7>();
    std::vector<double> xs, ws;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double a = edges[k], b = edges[k + 1];
        const int sub = std::max(1, static_cast<int>(std::ceil((b - a) / max_width)));
        for (int j = 0; j < sub; ++j) {
            const double c = a + (b - a) * j / sub, d = a + (b - a) * (j + 1) / sub;
            for (std::size_t q = 0; q < rule.first.size(); ++q) {
                xs.push_back(0.5 * (c + d) + 0.5 * (d - c) * rule.first[q]);
                ws.push_back(0.5 * (d - c) * rule.second[q]);
            }
        }
    }
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> sorted(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = xs[order[i]];
    auto src = source_part(theta, sorted);
    double sum = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double x = sorted[i];
        sum += ws[order[i]] * (D(x) - src[i]).norm();
    }
    return sum;
}

// ---------------------------------------------------------------------------

CharacterizationReport check_characterization(const ModelBundle& bundle, const PCFn& u, const LocalWindow& window,
                                              const SplitSchedule& sched, int substeps, int jobs) {
    if (window.thetas.empty()) throw std::invalid_argument("characterization needs at least one theta");
    if (substeps < 1) throw std::invalid_argument("substeps must be positive");
    for (const auto& [a, b] : window.bounds)
        if (!(a < window.xi && window.xi < b))
            throw std::invalid_argument(fmt::format("window ]{}, {}[ does not contain xi = {}", a, b, window.xi));

    const SystemModel& model = *bundle.model;
    const double lh = model.lambda_hat();
    const SharpFan sharp(model, u, window.xi);
    const FlatSolution flat(model, *bundle.source, u, window.xi);

    CharacterizationReport rep;
    rep.window = window;
    for (const auto& [a, b] : window.bounds) rep.tv.push_back(tv_on(u, a, b));

    rep.rows = parallel_map<CharacterizationRow>(window.thetas.size(), jobs, [&](std::size_t i) {
        const double theta = window.thetas[i];
        SplitSchedule sc = sched;
        sc.t_final = theta;
        sc.s = theta / substeps;
        sc.trace = false;
        PCFn w = run(bundle, u, sc).u;
        CharacterizationRow row{theta, 0.0, {}};
        const double lo = window.xi - theta * lh, hi = window.xi + theta * lh;
        row.sharp = windowed_l1(w, sharp.window(theta, lo, hi), lo, hi) / theta;
        for (const auto& [a, b] : window.bounds) {
            const double wl = a + theta * lh, wh = b - theta * lh;
            row.flat.push_back(wh > wl ? flat.l1_distance(w, theta, wl, wh) / theta : 0.0);
        }
        return row;
    });

    std::vector<std::size_t> by_theta(rep.rows.size());
    for (std::size_t i = 0; i < by_theta.size(); ++i) by_theta[i] = i;
    std::sort(by_theta.begin(), by_theta.end(),
              [&](std::size_t a, std::size_t b) { return rep.rows[a].theta < rep.rows[b].theta; });
    const auto& smallest = rep.rows[by_theta.front()];
    const auto& largest = rep.rows[by_theta.back()];
    rep.sharp_ratio = largest.sharp > 0.0 ? smallest.sharp / largest.sharp : 0.0;

    const std::size_t tail = std::min<std::size_t>(2, by_theta.size());
    for (std::size_t w = 0; w < window.bounds.size(); ++w) {
        double c = 0.0;
        for (std::size_t k = 0; k < tail; ++k) {
            const double q = rep.rows[by_theta[k]].flat[w];
            const double t2 = rep.tv[w] * rep.tv[w];
            c = std::max(c, t2 > 0.0 ? q / t2 : (q > 0.0 ? kInf : 0.0));
        }
        rep.flat_constant.push_back(c);
    }
    if (!rep.flat_constant.empty()) {
        const double outer = rep.flat_constant.front();
        const double top = *std::max_element(rep.flat_constant.begin(), rep.flat_constant.end());
        rep.flat_spread = outer > 0.0 ? top / outer : (top > 0.0 ? kInf : 0.0);
    }
    return rep;
}

// ---------------------------------------------------------------------------

std::vector<PCFn> sample_trajectory(const ModelBundle& bundle, const PCFn& u0, const SplitSchedule& sched,
                                    std::span<const double> times) {
    if (!std::is_sorted(times.begin(), times.end())) throw std::invalid_argument("sample times must be sorted");
    if (!times.empty() && (times.front() < 0.0 || times.back() > sched.t_final * (1.0 + 1e-12)))
        throw std::invalid_argument("sample times must lie in [0, t_final]");
    std::vector<PCFn> out;
    out.reserve(times.size());
    std::size_t next = 0;
    const bool zero = bundle.source->kind() == SourceKind::Zero;
    const double s = zero ? std::max(sched.t_final, 1e-300) : sched.s;
    if (!(s > 0.0)) throw std::invalid_argument("splitting step s must be positive");

    PCFn u = u0;
    double t0 = 0.0;
    const double end = sched.t_final * (1.0 - 1e-12);
    while (next < times.size() && t0 < end) {
        const double t1 = std::min(t0 + s, sched.t_final);
        const bool full = t0 + s <= sched.t_final * (1.0 + 1e-12);
        for (; next < times.size() && times[next] <= t0; ++next) out.push_back(u);
        if (next == times.size()) break;
        FrontState st = init_fronts(bundle.model, u, sched.ft);
        double elapsed = 0.0;
        while (next < times.size() && times[next] < t1) {
            st.advance(std::max(0.0, times[next] - t0 - elapsed));
            elapsed = std::max(elapsed, times[next] - t0);
            out.push_back(st.snapshot());
            ++next;
        }
        st.advance(std::max(0.0, t1 - t0 - elapsed));
        u = st.snapshot();
        if (!zero && full) u = euler_step(*bundle.source, u, s, sched.N);
        t0 = full ? t0 + s : t1;
    }
    while (next < times.size()) {
        out.push_back(u);
        ++next;
    }
    return out;
}

// ---------------------------------------------------------------------------

EntropyPair kruzkov_pair(std::shared_ptr<const SystemModel> model, double k) {
    if (model->dim() != 1) throw ConfigError("Kruzkov entropies need a scalar model");
    const double fk = model->flux(State::Constant(1, k))[0];
    EntropyPair p;
    p.eta = [k](const State& u) { return std::abs(u[0] - k); };
    p.q = [model, k, fk](const State& u) {
        const double d = u[0] - k;
        return (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * (model->flux(u)[0] - fk);
    };
    p.grad = [k](const State& u) {
        const double d = u[0] - k;
        return State::Constant(1, d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
    };
    return p;
}

EntropyPair euler_entropy_pair(std::shared_ptr<const EulerModel> model) {
    const double g = model->gas().gamma;
    EntropyPair p;
    auto spec = [model, g](const State& u) {
        Primitive w = model->primitive(u);
        return std::log(w.p / std::pow(w.rho, g)) / (g - 1.0);
    };
    p.eta = [model, spec](const State& u) { return -model->primitive(u).rho * spec(u); };
    p.q = [model, spec](const State& u) {
        Primitive w = model->primitive(u);
        return -w.rho * w.v * spec(u);
    };
    p.grad = [model, g, spec](const State& u) {
        // gradient of -rho s in conserved variables
        Primitive w = model->primitive(u);
        const double s = spec(u);
        const double beta = w.rho / w.p;
        State d(3);
        d << (g - s * (g - 1.0)) / (g - 1.0) - 0.5 * beta * w.v * w.v, beta * w.v, -beta;
        return d;
    };
    return p;
}

void require_convex(const EntropyPair& pair, const SystemModel& model, int samples) {
    std::mt19937_64 rng(12345);
    const Box& box = model.omega();
    const int n = model.dim();
    auto draw = [&] {
        State u(n);
        for (int i = 0; i < n; ++i) u[i] = std::uniform_real_distribution<double>(box.lo[i], box.hi[i])(rng);
        return u;
    };
    for (int k = 0; k < samples; ++k) {
        State a = draw(), b = draw();
        const double mid = pair.eta(0.5 * (a + b));
        const double avg = 0.5 * (pair.eta(a) + pair.eta(b));
        if (mid > avg + 1e-12 * (1.0 + std::abs(avg)))
            throw ConfigError(fmt::format("entropy is not convex: eta(mid) = {:.6g} > {:.6g}", mid, avg));
    }
}

EntropyReport entropy_residual(const ModelBundle& bundle, const PCFn& u0, const SplitSchedule& sched,
                               const EntropyOptions& opts) {
    if (opts.x_hats < 1 || opts.t_hats < 1) throw std::invalid_argument("need at least one test function");
    if (!(opts.x_hi > opts.x_lo) || !(opts.t_hi > opts.t_lo)) throw std::invalid_argument("empty test region");
    const SystemModel& model = *bundle.model;

    std::vector<EntropyPair> pairs;
    std::vector<double> labels;
    if (opts.pair) {
        pairs.push_back(*opts.pair);
        labels.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
        for (double k : opts.kruzkov) {
            pairs.push_back(kruzkov_pair(bundle.model, k));
            labels.push_back(k);
        }
    }
    for (const auto& p : pairs) require_convex(p, model);

    // hats on interior knots: supports [c - h, c + h] inside the region
    const double hx = (opts.x_hi - opts.x_lo) / (opts.x_hats + 1);
    const double ht = (opts.t_hi - opts.t_lo) / (opts.t_hats + 1);
    SplitSchedule sc = sched;
    sc.t_final = opts.t_hi;
    sc.trace = false;

    // time quadrature between the knots of the time hats and the source instants
    std::vector<double> tcuts;
    for (int m = 0; m <= opts.t_hats + 1; ++m) tcuts.push_back(opts.t_lo + m * ht);
    if (bundle.source->kind() != SourceKind::Zero)
        for (double t = sched.s; t < opts.t_hi; t += sched.s)
            if (t > opts.t_lo) tcuts.push_back(t);
    tcuts = sorted_unique(std::move(tcuts));
    static const auto rule = gauss_rule<5>();
    std::vector<double> tn, tw;
    for (std::size_t k = 0; k + 1 < tcuts.size(); ++k) {
        const double a = tcuts[k], b = tcuts[k + 1];
        std::vector<std::pair<double, double>> local;
        for (std::size_t q = 0; q < rule.first.size(); ++q)
            local.emplace_back(0.5 * (a + b) + 0.5 * (b - a) * rule.first[q], 0.5 * (b - a) * rule.second[q]);
        std::sort(local.begin(), local.end());
        for (auto& [x, w] : local) {
            tn.push_back(x);
            tw.push_back(w);
        }
    }
    const auto traj = sample_trajectory(bundle, u0, sc, tn);

    const std::size_t P = pairs.size();
    const std::size_t X = static_cast<std::size_t>(opts.x_hats);
    const std::size_t T = static_cast<std::size_t>(opts.t_hats);
    // accumulated residual[p][m][j]
    std::vector<double> res(P * T * X, 0.0);

    for (std::size_t q = 0; q < tn.size(); ++q) {
        const PCFn& u = traj[q];
        const PCFn g = bundle.source->kind() == SourceKind::Zero ? PCFn(u.dim())
                                                                 : apply_g(*bundle.source, u, opts.source_grid);
        const PCFn ug = stack(u, g);
        auto br = ug.breakpoints();
        const int n = u.dim();
        for (std::size_t m = 0; m < T; ++m) {
            const double tc = opts.t_lo + (m + 1) * ht;
            const double Tv = hat(tc, ht, tn[q]);
            const double dT = (tn[q] > tc - ht && tn[q] < tc + ht) ? (tn[q] < tc ? 1.0 / ht : -1.0 / ht) : 0.0;
            if (Tv == 0.0 && dT == 0.0) continue;
            for (std::size_t j = 0; j < X; ++j) {
                const double xc = opts.x_lo + (j + 1) * hx;
                const double a = xc - hx, b = xc + hx;
                std::vector<double> cuts{a, xc, b};
                auto lo_it = std::upper_bound(br.begin(), br.end(), a);
                for (auto it = lo_it; it != br.end() && *it < b; ++it) cuts.push_back(*it);
                cuts = sorted_unique(std::move(cuts));
                for (std::size_t p = 0; p < P; ++p) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
                        const double lo = cuts[c], hi = cuts[c + 1];
                        const State val = ug(0.5 * (lo + hi));
                        const State uu = val.head(n), gg = val.tail(n);
                        const double X_int = hat_integral(xc, hx, lo, hi);
                        const double dX = hat(xc, hx, hi) - hat(xc, hx, lo);
                        acc += dT * pairs[p].eta(uu) * X_int + Tv * pairs[p].q(uu) * dX +
                               Tv * pairs[p].grad(uu).dot(gg) * X_int;
                    }
                    res[(p * T + m) * X + j] -= tw[q] * acc;
                }
            }
        }
    }

    EntropyReport rep;
    rep.min_residual = kInf;
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t m = 0; m < T; ++m)
            for (std::size_t j = 0; j < X; ++j) {
                const double r = res[(p * T + m) * X + j];
                rep.rows.push_back({labels[p], opts.t_lo + (m + 1) * ht, opts.x_lo + (j + 1) * hx, r});
                rep.max_positive = std::max(rep.max_positive, r);
                rep.min_residual = std::min(rep.min_residual, r);
            }
    return rep;
}

// ---------------------------------------------------------------------------

RescalingReport rescaling_check(std::shared_ptr<const SystemModel> model, const PCFn& u, double t,
                                const std::vector<double>& lambdas, const FrontTrackingParams& ft) {
    RescalingReport rep;
    const PCFn base = semigroup(model, u, t, ft);
    for (double lam : lambdas) {
        if (!(lam > 0.0)) throw std::invalid_argument("dilation factors must be positive");
        const PCFn a = dilate(base, lam);
        const PCFn b = semigroup(model, dilate(u, lam), t / lam, ft);
        const double d = lam * l1_dist(a, b);
        rep.rows.push_back({lam, d});
        rep.max_deviation = std::max(rep.max_deviation, d);
    }
    return rep;
}

}  // namespace balsplit
