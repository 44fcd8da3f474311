#include <doctest.h>

#include <cmath>
#include <random>

#include "balsplit/fronttrack.hpp"
#include "balsplit/kernel.hpp"
#include "balsplit/models.hpp"
#include "balsplit/presets.hpp"
#include "balsplit/splitting.hpp"

using namespace balsplit;

namespace {

State s1(double x) { return State::Constant(1, x); }

}  // namespace

TEST_CASE("dilation by reciprocal factors is the identity") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 20; ++k) {
        PCFn u = random_datum(rng, RandomDatumSpec{});
        for (double lam : {0.25, 2.0, 8.0}) CHECK(dilate(dilate(u, lam), 1.0 / lam) == u);
        CHECK(l1_dist(dilate(dilate(u, 3.0), 1.0 / 3.0), u) < 1e-14);
    }
}

TEST_CASE("projection error is bounded by TV / N plus tails") {
    std::mt19937_64 rng(37);
    for (int k = 0; k < 50; ++k) {
        RandomDatumSpec spec;
        spec.dim = 1 + k % 2;
        PCFn u = random_datum(rng, spec);
        for (int N : {2, 5, 17, 64}) CHECK(l1_dist(project(u, N), u) <= tv(u) / N + 1e-12);
    }
    // mass outside [-N - 1/N, N] is cut off
    PCFn far = PCFn::box(3.0, 4.0, s1(1.0));
    CHECK(l1_dist(project(far, 2), far) == doctest::Approx(1.0));
}

TEST_CASE("Young's inequality for exponential convolutions") {
    std::mt19937_64 rng(41);
    ExpKernel k({{0.8, 1.5}, {-0.3, 4.0}});
    for (int i = 0; i < 20; ++i) {
        PCFn w = random_datum(rng, RandomDatumSpec{});
        ExpConvolution c(MatrixKernel::scalar(k), w);
        std::vector<double> xs;
        for (double x = c.reach_lo(); x <= c.reach_hi(); x += 0.01) xs.push_back(x);
        double mass = 0.0;
        for (const auto& v : c.integrals(xs)) mass += std::abs(v[0]);
        // sum of |interval integrals| is a lower bound of the L1 norm
        CHECK(mass <= k.l1_norm() * l1_norm(w) + 1e-12);
    }
}

TEST_CASE("shock and rarefaction branches have second-order contact") {
    auto euler = std::make_shared<EulerModel>(GasParams{});
    State u(3);
    u << 0.01, 0.005, -0.01;
    for (int j : {0, 2}) {
        double h = 1e-4;
        State r = euler->lax_curve(j, h, u), s = euler->lax_curve(j, -h, u);
        State d_right = (r - u) / h, d_left = (u - s) / h;
        // one-sided difference quotients agree to O(h)
        CHECK((d_right - d_left).norm() < 10 * h);
        CHECK((euler->lax_curve(j, 1e-12, u) - u).norm() < 1e-11);
    }
}

TEST_CASE("wave strengths depend Lipschitz-continuously on perturbed data") {
    auto euler = std::make_shared<EulerModel>(GasParams{});
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> d(-0.01, 0.01);
    double worst = 0.0;
    for (int k = 0; k < 30; ++k) {
        State ul(3), ur(3), a(3), b(3);
        for (int i = 0; i < 3; ++i) {
            ul[i] = d(rng);
            ur[i] = d(rng);
            a[i] = d(rng) * 50;
            b[i] = d(rng) * 50;
        }
        State base = riemann_strengths(*euler, ul, ur);
        for (double s : {1e-3, 1e-4}) {
            State pert = riemann_strengths(*euler, ul + s * a, ur + s * b);
            double ratio = (pert - base).lpNorm<1>() / ((a - b).norm() + base.lpNorm<1>()) / s;
            worst = std::max(worst, ratio);
        }
    }
    CHECK(worst < 10.0);
}

TEST_CASE("convective flow: Lipschitz in data and time, finite speed") {
    auto m = make_burgers();
    std::mt19937_64 rng(47);
    FrontTrackingParams ft;
    ft.eps = 1e-3;
    for (int k = 0; k < 10; ++k) {
        PCFn u = random_datum(rng, RandomDatumSpec{});
        PCFn w = random_datum(rng, RandomDatumSpec{});
        double t = 0.3;
        PCFn su = semigroup(m, u, t, ft), sw = semigroup(m, w, t, ft);
        // contraction up to the data-dependent splitting of rarefactions
        CHECK(l1_dist(su, sw) <= l1_dist(u, w) + ft.eps * ft.eps);
        CHECK(l1_dist(su, u) <= m->lambda_hat() * tv(u) * t);
        CHECK(su.support_lo() >= u.support_lo() - m->lambda_hat() * t);
        CHECK(su.support_hi() <= u.support_hi() + m->lambda_hat() * t);
    }
}

TEST_CASE("zero data is an equilibrium of every model") {
    for (const auto& info : registered_models()) {
        ModelBundle b = make_model(info.id);
        SplitSchedule sc;
        sc.s = 0.05;
        sc.t_final = 0.1;
        sc.N = 16;
        CAPTURE(info.id);
        PCFn out = run(b, PCFn(b.model->dim()), sc).u;
        // the augmented clock component advances with unit speed
        if (info.id == "nonautonomous") out = components(out, 0, 1);
        CHECK(out.is_zero());
    }
}

TEST_CASE("repeated Euler steps approach the source flow at first order") {
    ModelBundle b = scalar_rosenau();
    PCFn u = project(bump_datum(s1(1.0)), 32);
    OdeOptions opts;
    opts.N = 32;
    PCFn exact = ode_flow(*b.source, u, 0.4, opts);
    std::vector<double> ks{4, 8, 16, 32}, err;
    for (double kd : ks) {
        int k = static_cast<int>(kd);
        PCFn v = u;
        for (int i = 0; i < k; ++i) v = euler_step(*b.source, v, 0.4 / k, 32);
        err.push_back(l1_dist(v, exact));
    }
    CHECK(loglog_slope(ks, err, false) == doctest::Approx(-1.0).epsilon(0.1));

    // (P_s)^k u against P_{ks} u is quadratic in ks
    for (double s : {0.02, 0.01}) {
        PCFn v = u;
        for (int i = 0; i < 4; ++i) v = euler_step(*b.source, v, s, 32);
        double gap = l1_dist(v, euler_step(*b.source, u, 4 * s, 32));
        CHECK(gap <= 2.0 * 16 * s * s * (1.0 + l1_norm(u)));
    }
}

TEST_CASE("approximate semigroup property of the scheme") {
    ModelBundle b = scalar_rosenau();
    PCFn u = bump_datum(s1(1.0));
    std::vector<double> gaps;
    for (double s : {0.02, 0.01, 0.005}) {
        SplitSchedule sc;
        sc.s = s;
        sc.N = 64;
        sc.ft.eps = 1e-3;
        sc.trace = false;
        sc.t_final = 0.05;
        PCFn half = run(b, u, sc).u;
        PCFn twice = run(b, half, sc).u;
        sc.t_final = 0.1;
        PCFn whole = run(b, u, sc).u;
        gaps.push_back(l1_dist(twice, whole) / (s * (1.0 + l1_norm(u))));
    }
    // gap / s stays bounded (the schedules align here, so it is near zero)
    for (double g : gaps) CHECK(g < 1.0);
}
