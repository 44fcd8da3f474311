#include "balsplit/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "balsplit/errors.hpp"
#include "balsplit/parallel.hpp"
#include "balsplit/presets.hpp"

namespace balsplit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

TraceRow make_row(const SystemModel& model, const PCFn& u, double time, std::size_t fronts, double ups_pre,
                  const SplitSchedule& sched, bool functionals) {
    TraceRow r{time, kNaN, kNaN, kNaN, ups_pre, tv(u), l1_norm(u), fronts,
               std::numeric_limits<double>::infinity(), true};
    if (functionals) {
        GlimmValues g = glimm_functionals(model, u, sched.c0);
        r.V = g.V;
        r.Q = g.Q;
        r.Upsilon = g.Upsilon;
        if (sched.delta) {
            r.admission_bound = *sched.delta + sched.C * time;
            r.admitted = g.Upsilon <= r.admission_bound;
        }
    }
    return r;
}

void admit(const TraceRow& r, const std::string& id) {
    if (!r.admitted)
        throw DomainError(fmt::format("{}: Upsilon = {:.6g} exceeds the admission bound {:.6g} at t = {:.6g}", id,
                                      r.Upsilon, r.admission_bound, r.time));
}

}  // namespace

PCFn convective(const ModelBundle& bundle, const PCFn& u, double t, const FrontTrackingParams& ft) {
    return semigroup(bundle.model, u, t, ft);
}

RunResult run(const ModelBundle& bundle, const PCFn& u0, const SplitSchedule& sched) {
    if (!(sched.s > 0.0)) throw std::invalid_argument("splitting step s must be positive");
    if (!(sched.t_final >= 0.0)) throw std::invalid_argument("final time must be nonnegative");
    if (sched.t_final > sched.T)
        throw DomainError(fmt::format("final time {} exceeds the admissible horizon {}", sched.t_final, sched.T));
    if (sched.N < 1) throw std::invalid_argument("projection resolution must be positive");
    const SystemModel& model = *bundle.model;
    const SourceOp& src = *bundle.source;
    if (u0.dim() != model.dim() || src.dim() != model.dim())
        throw std::invalid_argument("datum, model and source dimensions differ");

    RunResult out;
    out.trace.model_id = model.id();
    out.trace.source_id = src.id();
    out.trace.schedule = sched;
    out.trace.approximate = src.approximate();
    auto& rows = out.trace.rows;
    const bool fun = sched.trace;
    const std::string& id = bundle.id;

    rows.push_back(make_row(model, u0, 0.0, 0, kNaN, sched, fun));
    admit(rows.back(), id);

    if (src.kind() == SourceKind::Zero) {
        FrontState st = init_fronts(bundle.model, u0, sched.ft);
        rows.back().fronts = st.size();
        st.advance(sched.t_final);
        out.u = st.snapshot();
        out.trace.interactions = st.interactions();
        if (sched.t_final > 0.0) {
            rows.push_back(make_row(model, out.u, sched.t_final, st.size(), kNaN, sched, fun));
            admit(rows.back(), id);
        }
        return out;
    }

    const double t = sched.t_final, s = sched.s;
    const auto h = static_cast<long long>(std::floor(t / s * (1.0 + 1e-12)));
    double rem = t - static_cast<double>(h) * s;
    if (rem < 1e-12 * std::max(t, s)) rem = 0.0;

    PCFn u = u0;
    for (long long k = 1; k <= h; ++k) {
        FrontState st = init_fronts(bundle.model, u, sched.ft);
        st.advance(s);
        out.trace.interactions += st.interactions();
        PCFn v = st.snapshot();
        double pre = kNaN;
        if (fun) pre = glimm_functionals(model, v, sched.c0).Upsilon;
        u = euler_step(src, v, s, sched.N);
        rows.push_back(make_row(model, u, static_cast<double>(k) * s, st.size(), pre, sched, fun));
        admit(rows.back(), id);
    }
    if (rem > 0.0) {
        FrontState st = init_fronts(bundle.model, u, sched.ft);
        st.advance(rem);
        out.trace.interactions += st.interactions();
        u = st.snapshot();
        rows.push_back(make_row(model, u, t, st.size(), kNaN, sched, fun));
        admit(rows.back(), id);
    }
    out.u = std::move(u);
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, bool drop_coarsest) {
    if (x.size() != y.size()) throw std::invalid_argument("slope fit needs equally many x and y");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) pts.emplace_back(x[i], y[i]);
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    if (drop_coarsest && pts.size() > 2) pts.erase(pts.begin());
    if (pts.size() < 2) return kNaN;
    double mx = 0.0, my = 0.0;
    for (const auto& [a, b] : pts) {
        mx += std::log(a);
        my += std::log(b);
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [a, b] : pts) {
        double dx = std::log(a) - mx;
        sxy += dx * (std::log(b) - my);
        sxx += dx * dx;
    }
    return sxx > 0.0 ? sxy / sxx : kNaN;
}

std::vector<double> step_sequence(double t, int levels, bool quadratic) {
    std::vector<double> out;
    double base = quadratic ? t * t : t;
    for (int k = 0; k < levels; ++k) out.push_back(std::ldexp(base, -k));
    return out;
}

LimitResult limit_run(const ModelBundle& bundle, const PCFn& u0, double t, const std::vector<double>& s_sequence,
                      const SplitSchedule& base, int jobs) {
    if (s_sequence.size() < 2) throw std::invalid_argument("limit run needs at least two step sizes");
    for (std::size_t i = 1; i < s_sequence.size(); ++i)
        if (!(s_sequence[i] < s_sequence[i - 1])) throw std::invalid_argument("step sizes must decrease");
    LimitResult res;
    res.runs = parallel_map<PCFn>(s_sequence.size(), jobs, [&](std::size_t i) {
        SplitSchedule sc = base;
        sc.s = s_sequence[i];
        sc.t_final = t;
        sc.trace = false;
        return run(bundle, u0, sc).u;
    });
    const std::size_t n = s_sequence.size();
    std::vector<double> d(n, kNaN);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = l1_dist(res.runs[i], res.runs[i + 1]);
    std::vector<double> sx(s_sequence.begin(), s_sequence.end() - 1), dy(d.begin(), d.end() - 1);
    const double slope = loglog_slope(sx, dy);
    for (std::size_t i = 0; i < n; ++i) {
        double bound = i == 0 || i + 1 == n ? kNaN : 1.05 * d[i - 1];
        bool pass = i == 0 || i + 1 == n || d[i] <= bound;
        res.rows.push_back({s_sequence[i], t, d[i], slope, bound, pass});
    }
    const double scale = t * t * (1.0 + l1_norm(u0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            res.uniform_constant = std::max(res.uniform_constant, l1_dist(res.runs[i], res.runs[j]) / scale);
    res.surrogate = res.runs.back();
    res.error_bar = d[n - 2];
    return res;
}

DefectTable commutation_defect(const ModelBundle& bundle, const PCFn& u, const std::vector<double>& t_list, int N,
                               const FrontTrackingParams& ft, int jobs) {
    const SourceOp& src = *bundle.source;
    DefectTable tab;
    auto defects = parallel_map<double>(t_list.size(), jobs, [&](std::size_t i) {
        double t = t_list[i];
        PCFn a = convective(bundle, euler_step(src, u, t, N), t, ft);
        PCFn b = euler_step(src, convective(bundle, u, t, ft), t, N);
        return l1_dist(a, b);
    });
    for (std::size_t i = 0; i < t_list.size(); ++i) tab.rows.push_back({t_list[i], defects[i]});
    tab.slope = loglog_slope(t_list, defects);
    return tab;
}

TangentTable tangent_defect(const ModelBundle& bundle, const PCFn& u, const std::vector<double>& t_list,
                            const SplitSchedule& base, int levels, int jobs) {
    const SourceOp& src = *bundle.source;
    const PCFn gu = apply_g(src, u, base.N);
    TangentTable tab;
    std::vector<double> q, qps;
    for (double t : t_list) {
        LimitResult lim = limit_run(bundle, u, t, step_sequence(t, levels, true), base, jobs);
        PCFn st = convective(bundle, u, t, base.ft);
        double a = l1_dist(lim.surrogate, combine(1.0, st, t, gu)) / t;
        double b = l1_dist(lim.surrogate, euler_step(src, st, t, base.N)) / t;
        tab.rows.push_back({t, a, b, lim.error_bar / t});
        q.push_back(a);
        qps.push_back(b);
    }
    tab.slope = loglog_slope(t_list, q);
    tab.slope_ps = loglog_slope(t_list, qps);
    return tab;
}

SensitivityReport sensitivity(const ModelBundle& a, const ModelBundle& b, const PCFn& u0, const SplitSchedule& sched,
                              int jobs) {
    if (a.model->dim() != b.model->dim() || a.model->dim() != u0.dim())
        throw std::invalid_argument("sensitivity needs models of equal dimension");
    auto finals = parallel_map<PCFn>(2, jobs, [&](std::size_t i) { return run(i == 0 ? a : b, u0, sched).u; });
    SensitivityReport r{};
    r.distance = l1_dist(finals[0], finals[1]);

    const Box& oa = a.model->omega();
    const Box& ob = b.model->omega();
    Box common{oa.lo.cwiseMax(ob.lo), oa.hi.cwiseMin(ob.hi)};
    const int n = a.model->dim();
    constexpr int kPerAxis = 5;
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= kPerAxis;
    for (long long idx = 0; idx < total; ++idx) {
        State u(n);
        long long rr = idx;
        for (int i = 0; i < n; ++i) {
            u[i] = common.lo[i] + (common.hi[i] - common.lo[i]) * static_cast<double>(rr % kPerAxis) / (kPerAxis - 1);
            rr /= kPerAxis;
        }
        Eigen::MatrixXd diff = a.model->jacobian(u) - b.model->jacobian(u);
        r.flux_gap = std::max(r.flux_gap, Eigen::JacobiSVD<Eigen::MatrixXd>(diff).singularValues()(0));
    }

    double amp = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) amp = std::min({amp, -common.lo[i], common.hi[i]});
    std::vector<PCFn> probes{u0};
    std::mt19937_64 rng(0xfeed);
    for (int k = 0; k < 3; ++k) probes.push_back(random_datum(rng, {n, 5, -1.0, 1.0, 0.5 * amp}));
    for (const auto& p : probes)
        r.source_gap = std::max(r.source_gap, a.source->apply(p).minus(b.source->apply(p)).l1_norm());
    double denom = (r.flux_gap + r.source_gap) * sched.t_final;
    r.rate = denom > 0.0 ? r.distance / denom : kNaN;
    return r;
}

double lipschitz_quotient(const ModelBundle& bundle, const PCFn& u, const PCFn& w, const SplitSchedule& sched) {
    double d0 = l1_dist(u, w);
    if (!(d0 > 0.0)) throw std::invalid_argument("Lipschitz quotient needs distinct data");
    SplitSchedule sc = sched;
    sc.trace = false;
    return l1_dist(run(bundle, u, sc).u, run(bundle, w, sc).u) / d0;
}

double calibrate_domain_growth(const ModelBundle& bundle, double s, int N, double c0, int samples,
                               std::uint64_t seed) {
    const SystemModel& model = *bundle.model;
    const SourceOp& src = *bundle.source;
    const Box& om = model.omega();
    double amp = std::numeric_limits<double>::infinity();
    for (int i = 0; i < om.lo.size(); ++i) amp = std::min({amp, -om.lo[i], om.hi[i]});
    std::mt19937_64 rng(seed);
    const double L3 = src.constants().L3;
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        PCFn u = random_datum(rng, {model.dim(), 6, -1.0, 1.0, 0.25 * amp});
        GlimmValues before = glimm_functionals(model, u, c0);
        GlimmValues after = glimm_functionals(model, euler_step(src, u, s, N), c0);
        double den = s * (L3 + before.V);
        if (den > 0.0) worst = std::max(worst, (after.Upsilon - before.Upsilon) / den);
    }
    return 2.0 * worst;
}

}  // namespace balsplit
