#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "balsplit/errors.hpp"
#include "balsplit/models.hpp"
#include "balsplit/presets.hpp"
#include "balsplit/verify.hpp"

using namespace balsplit;

namespace {

State s1(double x) { return State::Constant(1, x); }

State vec(double a, double b) {
    State v(2);
    v << a, b;
    return v;
}

std::shared_ptr<LinearModel> split_transport() {
    Matrix A(2, 2);
    A << -1.0, 0.0, 0.0, 1.0;
    return std::make_shared<LinearModel>("split", A, 2.0);
}

}  // namespace

TEST_CASE("windowed distance") {
    PCFn u = PCFn::box(0.0, 1.0, s1(1.0)), w = PCFn::box(0.5, 2.0, s1(3.0));
    CHECK(windowed_l1(u, w, 0.25, 1.5) == doctest::Approx(0.25 + 1.0 + 1.5));
}

TEST_CASE("sharp fan of a Burgers shock and rarefaction") {
    auto m = make_burgers();
    SharpFan shock(*m, PCFn::box(-1.0, 0.0, s1(1.0)), 0.0);
    REQUIRE(shock.speeds().size() == 1);
    CHECK(shock.speeds()[0] == doctest::Approx(0.5));
    CHECK(shock.value(0.1, 0.04)[0] == 1.0);
    CHECK(shock.value(0.1, 0.06)[0] == 0.0);
    CHECK(shock.value(0.1, -0.5)[0] == 1.0);  // constant extension of the left state

    SharpFan fan(*m, PCFn::box(0.0, 1.0, s1(1.0)), 0.0);
    CHECK(fan.speeds().size() == 1025);
    CHECK(fan.value(1.0, 0.5)[0] == doctest::Approx(0.5).epsilon(1e-3));
    PCFn w = fan.window(0.5, -0.25, 0.75);
    CHECK(w(-0.3)[0] == 0.0);
    CHECK(w(0.6)[0] == 1.0);
    // integral of min(x / 0.5, 1) over [0, 0.75]
    CHECK(w.integral()[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("sharp fan at a point of continuity is constant") {
    auto m = make_burgers();
    SharpFan c(*m, PCFn::box(-1.0, 1.0, s1(0.3)), 0.2);
    CHECK(c.speeds().empty());
    CHECK(c.value(1.0, 5.0)[0] == doctest::Approx(0.3));
}

TEST_CASE("flat solution without source is frozen transport") {
    auto m = split_transport();
    ZeroSource zero(2);
    PCFn v = PCFn::box(0.0, 1.0, vec(1.0, 2.0));
    FlatSolution flat(*m, zero, v, 0.5);
    double theta = 0.1;
    PCFn expected = stack(shift(components(v, 0, 1), -theta), shift(components(v, 1, 1), theta));
    CHECK(l1_dist(flat.transport(theta), expected) < 1e-14);
    double inf = std::numeric_limits<double>::infinity();
    CHECK(flat.l1_distance(expected, theta, -inf, inf) < 1e-14);
    CHECK(flat.l1_distance(v, theta, -inf, inf) == doctest::Approx(2 * 0.1 + 2 * 0.2));
}

TEST_CASE("flat solution source part of a decoupled constant source") {
    auto m = split_transport();
    // the first component is transported left at unit speed
    ConstantSource src(PCFn::box(0.0, 1.0, vec(1.0, 0.0)));
    FlatSolution flat(*m, src, PCFn(2), 0.5);
    std::vector<double> xs{-0.15, 0.5, 0.95};
    auto part = flat.source_part(0.2, xs);
    // length of {s in [0, 0.2] : x + s in [0, 1[}
    CHECK(part[0][0] == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(part[1][0] == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(part[2][0] == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(std::abs(part[1][1]) < 1e-15);
    // U(theta) = integral of the source part, zero transport part
    double inf = std::numeric_limits<double>::infinity();
    CHECK(flat.l1_distance(PCFn(2), 0.2, -inf, inf) == doctest::Approx(0.2).epsilon(1e-8));
}

TEST_CASE("trajectory samples match runs of the scheme") {
    ModelBundle b = scalar_rosenau();
    PCFn u = bump_datum(s1(1.0));
    SplitSchedule sc;
    sc.s = 0.02;
    sc.t_final = 0.1;
    std::vector<double> times{0.0, 0.04, 0.05, 0.1};
    auto traj = sample_trajectory(b, u, sc, times);
    CHECK(l1_dist(traj[0], u) == 0.0);
    SplitSchedule sub = sc;
    sub.t_final = 0.04;
    CHECK(l1_dist(traj[1], run(b, u, sub).u) < 1e-13);
    CHECK(l1_dist(traj[3], run(b, u, sc).u) < 1e-13);
}

TEST_CASE("entropy residual vanishes for a constant state and is nonpositive across a shock") {
    ModelBundle b = make_model("burgers");
    SplitSchedule sc;
    sc.s = 0.05;
    sc.t_final = 0.2;
    EntropyOptions opts;
    opts.x_hats = 6;
    opts.t_hats = 2;
    EntropyReport flat = entropy_residual(b, PCFn::box(-5.0, 5.0, s1(0.3)), sc, opts);
    for (const auto& r : flat.rows) CHECK(std::abs(r.residual) < 1e-13);

    EntropyReport shock = entropy_residual(b, PCFn::box(-5.0, 0.5, s1(1.0)), sc, opts);
    CHECK(shock.max_positive < 1e-13);
    CHECK(shock.min_residual < -1e-3);
}

TEST_CASE("entropy pairs") {
    auto euler = std::make_shared<EulerModel>(GasParams{});
    EntropyPair p = euler_entropy_pair(euler);
    CHECK_NOTHROW(require_convex(p, *euler));
    State u(3);
    u << 0.01, -0.02, 0.03;
    for (int i = 0; i < 3; ++i) {
        State e = State::Zero(3);
        e[i] = 1e-6;
        double fd = (p.eta(u + e) - p.eta(u - e)) / 2e-6;
        CHECK(p.grad(u)[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    // q' = D eta . Df along the state space
    State d(3);
    d << 0.3, -0.2, 0.5;
    double h = 1e-6;
    double dq = (p.q(u + h * d) - p.q(u - h * d)) / (2 * h);
    CHECK(dq == doctest::Approx(p.grad(u).dot(euler->jacobian(u) * d)).epsilon(1e-6));

    auto burgers = make_burgers();
    EntropyPair concave{[](const State& v) { return -v[0] * v[0]; }, [](const State& v) { return -2.0 * v[0] * v[0] * v[0] / 3.0; },
                        [](const State& v) { return State(-2.0 * v); }};
    CHECK_THROWS_AS(require_convex(concave, *burgers), ConfigError);
    CHECK_NOTHROW(require_convex(kruzkov_pair(burgers, 0.3), *burgers));
}

TEST_CASE("rescaling identity") {
    auto m = make_burgers();
    PCFn u = random_datum(13, RandomDatumSpec{});
    FrontTrackingParams ft;
    ft.eps = 1e-2;
    RescalingReport r = rescaling_check(m, u, 0.3, {1.0, 0.5, 2.0, 4.0}, ft);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].deviation == 0.0);
    CHECK(r.max_deviation <= 1e-10);
}
