#include <doctest.h>

#include <cmath>

#include "balsplit/errors.hpp"
#include "balsplit/models.hpp"
#include "balsplit/presets.hpp"
#include "balsplit/splitting.hpp"

using namespace balsplit;

namespace {

State s1(double x) { return State::Constant(1, x); }

ModelBundle transport_with_decay(double alpha) {
    Matrix A(1, 1);
    A << 1.0;
    auto model = std::make_shared<LinearModel>("advection", A, 2.0);
    return {"advection", model, LocalSource::linear(1, alpha)};
}

}  // namespace

TEST_CASE("registry lists the models and suggests near misses") {
    std::vector<std::string> ids;
    for (const auto& m : registered_models()) ids.push_back(m.id);
    for (const char* id : {"radiating_gas", "rosenau", "scalar_rosenau", "local", "nonautonomous"})
        CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
    for (const auto& id : ids) CHECK_NOTHROW(make_model(id));
    try {
        make_model("radiatng_gas");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("did you mean 'radiating_gas'") != std::string::npos);
    }
    CHECK_THROWS_AS(make_model("radiating_gas", {{"bb", 1.0}}), ConfigError);
    CHECK_THROWS_AS(make_model("radiating_gas", {{"a", -1.0}}), ConfigError);
    CHECK(closest_match("zzzzzz", ids).empty());
    CHECK(make_model("radiating_gas", {{"b", 0.0}}).source->kind() == SourceKind::Zero);
}

TEST_CASE("splitting of transport with linear decay is exact on aligned cells") {
    const double alpha = -0.8, s = 1.0 / 64, t = 0.25;
    ModelBundle b = transport_with_decay(alpha);
    PCFn u = PCFn::box(-0.5, 0.25, s1(0.4));
    SplitSchedule sc;
    sc.s = s;
    sc.t_final = t;
    sc.N = 64;
    RunResult r = run(b, u, sc);
    PCFn exact = std::pow(1.0 + alpha * s, 16) * shift(u, t);
    CHECK(l1_dist(r.u, exact) < 1e-13);
    REQUIRE(r.trace.rows.size() == 17);
    CHECK(r.trace.rows.back().time == doctest::Approx(t));
    CHECK(std::isnan(r.trace.rows.front().Upsilon_pre));
}

TEST_CASE("one step is the Euler step after the convective step") {
    ModelBundle b = scalar_rosenau();
    PCFn u = random_datum(5, RandomDatumSpec{});
    SplitSchedule sc;
    sc.s = 0.05;
    sc.t_final = 0.05;
    sc.N = 32;
    PCFn direct = euler_step(*b.source, convective(b, u, 0.05, sc.ft), 0.05, 32);
    CHECK(l1_dist(run(b, u, sc).u, direct) < 1e-14);
    // remainder step is purely convective
    sc.t_final = 0.07;
    PCFn two = convective(b, direct, 0.02, sc.ft);
    CHECK(l1_dist(run(b, u, sc).u, two) < 1e-14);
}

TEST_CASE("without a source the scheme is the convective semigroup") {
    ModelBundle b = make_model("burgers");
    PCFn u = random_datum(8, RandomDatumSpec{});
    SplitSchedule sc;
    sc.s = 0.01;
    sc.t_final = 0.3;
    CHECK(l1_dist(run(b, u, sc).u, convective(b, u, 0.3, sc.ft)) == 0.0);
}

TEST_CASE("slope fits and step sequences") {
    std::vector<double> x{1.0, 0.5, 0.25, 0.125}, y;
    for (double v : x) y.push_back(3.0 * v * v);
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
    y[0] = 100.0;  // the coarsest point is ignored
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
    CHECK(loglog_slope(x, y, false) != doctest::Approx(2.0));
    CHECK(std::isnan(loglog_slope({1.0, 0.5}, {1.0, 0.0})));
    auto seq = step_sequence(0.2, 3, true);
    REQUIRE(seq.size() == 3);
    CHECK(seq[0] == doctest::Approx(0.04));
    CHECK(seq[2] == doctest::Approx(0.01));
    CHECK(step_sequence(0.2, 2, false)[1] == doctest::Approx(0.1));
}

TEST_CASE("admission and horizon guards") {
    ModelBundle b = scalar_rosenau();
    SplitSchedule sc;
    sc.T = 0.1;
    sc.t_final = 0.2;
    CHECK_THROWS_AS(run(b, PCFn::box(0.0, 1.0, s1(0.1)), sc), DomainError);
    sc.T = 1.0;
    sc.s = 0.0;
    CHECK_THROWS_AS(run(b, PCFn::box(0.0, 1.0, s1(0.1)), sc), std::invalid_argument);
}

TEST_CASE("refinement distances shrink and Lipschitz quotients are bounded") {
    ModelBundle b = scalar_rosenau();
    PCFn u = bump_datum(s1(1.0));
    SplitSchedule sc;
    sc.N = 64;
    sc.ft.eps = 1e-3;
    LimitResult lr = limit_run(b, u, 0.2, step_sequence(0.2, 3, true), sc);
    REQUIRE(lr.rows.size() == 3);
    CHECK(lr.rows[1].distance < lr.rows[0].distance);
    CHECK(lr.error_bar == doctest::Approx(lr.rows[1].distance));
    sc.s = 0.01;
    sc.t_final = 0.2;
    double q = lipschitz_quotient(b, u, shift(u, 0.01), sc);
    CHECK(q > 0.0);
    CHECK(q <= std::exp(2.0 * 0.2) * 1.01);
    sc.trace = false;
    SensitivityReport same = sensitivity(b, b, u, sc);
    CHECK(same.distance == 0.0);
}
