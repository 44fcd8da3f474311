#include <doctest.h>

#include <cmath>
#include <random>

#include "balsplit/fronttrack.hpp"
#include "balsplit/presets.hpp"
#include "balsplit/scalar_exact.hpp"

using namespace balsplit;

namespace {
State s1(double x) { return State::Constant(1, x); }
}  // namespace

TEST_CASE("a Burgers shock moves with the Rankine-Hugoniot speed") {
    auto m = make_burgers();
    FrontTrackingParams p;
    PCFn u = PCFn::box(-1.0, 0.0, s1(1.0));
    FrontState st = init_fronts(m, u, p);
    // rarefaction at -1 is split into 1/eps pieces, the shock stays one front
    CHECK(st.size() == 1001);
    st.advance(0.5);
    auto fronts = st.fronts();
    CHECK(fronts.back().kind == FrontKind::Shock);
    CHECK(fronts.back().position == doctest::Approx(0.25));
    CHECK(fronts.back().speed == doctest::Approx(0.5));
}

TEST_CASE("rarefactions are split into pieces of size at most eps") {
    auto m = make_burgers();
    FrontTrackingParams p;
    p.eps = 0.01;
    FrontState st = init_fronts(m, PCFn::box(0.0, 1.0, s1(-0.03)), p);
    auto fronts = st.fronts();
    // jump -0.03 at 0 is a shock, the jump +0.03 at 1 a fan of three pieces
    REQUIRE(fronts.size() == 4);
    int fans = 0;
    for (const auto& f : fronts)
        if (f.kind == FrontKind::Rarefaction) {
            ++fans;
            CHECK(f.strength == doctest::Approx(0.01));
        }
    CHECK(fans == 3);
}

TEST_CASE("front tracking conserves the integral and tracks the exact solution") {
    auto m = make_burgers();
    RandomDatumSpec spec;
    spec.amplitude = 1.0;
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        PCFn u = random_datum(rng, spec);
        double mass = u.integral()[0];
        for (double eps : {1e-2, 1e-3}) {
            FrontTrackingParams p;
            p.eps = eps;
            PCFn v = semigroup(m, u, 0.5, p);
            CHECK(std::abs(v.integral()[0] - mass) < 1e-12);
            double err = scalar_exact_solution(m->convex_flux(), u, 0.5).l1_dist(v);
            CHECK(err <= 2.0 * eps * 1.5);
            CHECK(tv(v) <= tv(u) + 1e-12);
        }
    }
}

TEST_CASE("evolution is a semigroup and copies are independent") {
    auto m = make_burgers();
    FrontTrackingParams p;
    p.eps = 0.01;
    PCFn u = random_datum(23, RandomDatumSpec{});
    FrontState a = init_fronts(m, u, p);
    FrontState b = a;
    a.advance(0.2);
    a.advance(0.3);
    b.advance(0.5);
    CHECK(l1_dist(a.snapshot(), b.snapshot()) < 1e-12);
    FrontState c = init_fronts(m, u, p);
    CHECK(c.time() == 0.0);
    CHECK(l1_dist(c.snapshot(), u) < 1e-12);
}

TEST_CASE("Euler fronts keep states in omega and record segments") {
    auto m = std::make_shared<EulerModel>(GasParams{});
    State v(3);
    v << 0.01, 0.0, 0.02;
    FrontTrackingParams p;
    p.eps = 0.01;
    p.record_segments = true;
    p.record_events = true;
    FrontState st = init_fronts(m, bump_datum(v), p);
    st.advance(0.5);
    for (const auto& f : st.fronts()) {
        CHECK(m->omega().contains(f.left));
        CHECK(m->omega().contains(f.right));
        CHECK(std::abs(f.speed) < m->lambda_hat());
    }
    CHECK(!st.segments().empty());
    CHECK(st.interactions() == st.events().size());
    State mass = bump_datum(v).integral();
    // rarefaction pieces of a system are not Rankine-Hugoniot jumps
    CHECK((st.snapshot().integral() - mass).norm() < p.eps * p.eps);
}

TEST_CASE("exact scalar solution of a Riemann fan and a shock") {
    ConvexFlux f = burgers_flux();
    ScalarExactSolution sol = scalar_exact_solution(f, PCFn::box(0.0, 1.0, s1(1.0)), 0.5);
    CHECK(sol.value(0.25) == doctest::Approx(0.5));  // fan x / t
    CHECK(sol.value(0.75) == doctest::Approx(1.0));
    CHECK(sol.value(1.3) == doctest::Approx(0.0));
    CHECK(sol.value(1.6) == doctest::Approx(0.0));
    CHECK(sol.integral() == doctest::Approx(1.0).epsilon(1e-12));
    // the shock leaves 1 at speed 1/2
    CHECK(sol.value(1.249) == doctest::Approx(1.0));
    CHECK(sol.value(1.251) == doctest::Approx(0.0));
    // exact L1 distance to the zero function is the mass
    CHECK(sol.l1_dist(PCFn(1)) == doctest::Approx(1.0).epsilon(1e-12));
    PCFn sampled = sol.sample(1e-3);
    CHECK(sol.l1_dist(sampled) < 1e-3);
}
