#include <doctest.h>

#include <cmath>
#include <random>

#include "balsplit/pcfn.hpp"
#include "balsplit/presets.hpp"
#include "oracles.hpp"

using namespace balsplit;

namespace {
State s1(double x) { return State::Constant(1, x); }
}  // namespace

TEST_CASE("construction normalizes tails and merges breakpoints") {
    PCFn u = PCFn::scalar({0.0, 0.5, 0.5 + 1e-14, 1.0}, {0.0, 1.0, 5.0, 2.0, 0.0});
    CHECK(u.jumps() == 3);
    CHECK(u(0.25)[0] == 1.0);
    CHECK(u(0.5)[0] == 2.0);
    PCFn flat = PCFn::scalar({0.0, 0.5, 1.0}, {0.0, 1.0, 1.0, 0.0});
    CHECK(flat.jumps() == 2);
    CHECK(u(-1.0)[0] == 0.0);
    CHECK(u(1.0)[0] == 0.0);
    CHECK_THROWS_AS(PCFn::scalar({0.0}, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(PCFn::scalar({1.0, 0.0}, {0.0, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(PCFn::scalar({0.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("evaluation is right-continuous") {
    PCFn u = PCFn::box(0.0, 1.0, s1(3.0));
    CHECK(u(0.0)[0] == 3.0);
    CHECK(u.left_limit(0.0)[0] == 0.0);
    CHECK(u(1.0)[0] == 0.0);
    CHECK(u.left_limit(1.0)[0] == 3.0);
}

TEST_CASE("tv and l1 agree with grid sampling") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        int dim = 1 + trial % 3;
        PCFn u = oracle::spaced_random(rng, 8, 0.01, dim);
        PCFn w = oracle::spaced_random(rng, 5, 0.01, dim);
        // grid spacing 2.5e-4 hits every piece
        CHECK(tv(u) == doctest::Approx(oracle::sampled_tv(u, -1.5, 1.5, 12000)).epsilon(1e-12));
        CHECK(l1_dist(u, w) == doctest::Approx(oracle::midpoint_l1(u, w, -1.5, 1.5, 300000)).epsilon(2e-4));
        CHECK(l1_norm(u) == doctest::Approx(l1_dist(u, PCFn(dim))));
    }
}

TEST_CASE("closed-form values of small examples") {
    PCFn u = PCFn::scalar({0.0, 1.0, 3.0}, {0.0, 2.0, -1.0, 0.0});
    CHECK(tv(u) == doctest::Approx(6.0));
    CHECK(l1_norm(u) == doctest::Approx(4.0));
    CHECK(u.integral()[0] == doctest::Approx(0.0));
    CHECK(sup_norm(u) == doctest::Approx(2.0));
    CHECK(tv_on(u, 0.5, 4.0) == doctest::Approx(4.0));
    CHECK(l1_on(u, 0.5, 2.0) == doctest::Approx(2.0));
    CHECK(integral_on(u, 0.5, 2.0)[0] == doctest::Approx(0.0));
}

TEST_CASE("projection of indicator functions") {
    // cells ]k/2, (k+1)/2]
    PCFn chi = PCFn::box(0.0, 1.0, s1(1.0));
    CHECK(project(chi, 2) == chi);
    PCFn mid = PCFn::box(0.25, 0.75, s1(1.0));
    PCFn p = project(mid, 2);
    CHECK(p(0.1)[0] == doctest::Approx(0.5));
    CHECK(p(0.9)[0] == doctest::Approx(0.5));
    CHECK(p(1.1)[0] == doctest::Approx(0.0));
    CHECK(l1_norm(p) == doctest::Approx(0.5));
    // support is cut at -N - 1/N and N
    PCFn wide = PCFn::box(-5.0, 5.0, s1(1.0));
    PCFn q = project(wide, 2);
    CHECK(q.support_lo() == doctest::Approx(-2.5));
    CHECK(q.support_hi() == doctest::Approx(2.0));
}

TEST_CASE("projection properties on random data") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        RandomDatumSpec spec;
        spec.dim = 1 + trial % 3;
        PCFn u = random_datum(rng, spec);
        PCFn w = random_datum(rng, spec);
        for (int N : {1, 3, 16}) {
            PCFn pu = project(u, N);
            CHECK(l1_norm(pu) <= l1_norm(u) + 1e-12);
            CHECK(tv(pu) <= 2.0 * tv(u) + 1e-12);
            PCFn lin = combine(2.0, project(u, N), -3.0, project(w, N));
            CHECK(l1_dist(project(combine(2.0, u, -3.0, w), N), lin) < 1e-12);
            CHECK(l1_dist(project(pu, N), pu) < 1e-12);
        }
    }
}

TEST_CASE("algebra, shift and dilation") {
    std::mt19937_64 rng(3);
    PCFn u = oracle::spaced_random(rng, 6, 0.01);
    PCFn w = oracle::spaced_random(rng, 4, 0.01);
    PCFn z = oracle::spaced_random(rng, 3, 0.01);
    CHECK(l1_dist(u, z) <= l1_dist(u, w) + l1_dist(w, z) + 1e-14);
    CHECK(l1_norm(u - u) == 0.0);
    CHECK(l1_dist(u + w, w + u) == 0.0);
    CHECK(l1_norm(2.0 * u) == doctest::Approx(2.0 * l1_norm(u)));
    PCFn sh = shift(u, 0.3);
    CHECK(sh(0.123 + 0.3)[0] == u(0.123)[0]);
    PCFn d = dilate(u, 4.0);
    CHECK(d(0.1)[0] == u(0.4)[0]);
    CHECK(l1_norm(d) == doctest::Approx(l1_norm(u) / 4.0));
    CHECK(tv(d) == doctest::Approx(tv(u)));
    CHECK_THROWS(dilate(u, 0.0));
    PCFn st = stack(u, w);
    CHECK(st.dim() == 2);
    CHECK(components(st, 1, 1) == w);
    PCFn r = restrict_to(u, -0.2, 0.4);
    CHECK(l1_norm(r) == doctest::Approx(l1_on(u, -0.2, 0.4)));
}

TEST_CASE("text table and JSON round-trip exactly") {
    std::mt19937_64 rng(5);
    RandomDatumSpec spec;
    spec.dim = 3;
    PCFn u = random_datum(rng, spec);
    CHECK(from_table(to_table(u)) == u);
    CHECK(pcfn_from_json(to_json(u)) == u);
    CHECK(from_table(to_table(PCFn(2))) == PCFn(2));
    CHECK_THROWS(from_table("# pcfn dim=1\n-inf 0\n"));
}
