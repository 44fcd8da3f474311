#include <doctest.h>

#include <cmath>
#include <random>

#include "balsplit/errors.hpp"
#include "balsplit/models.hpp"
#include "balsplit/presets.hpp"
#include "balsplit/source.hpp"

using namespace balsplit;

namespace {

State s1(double x) { return State::Constant(1, x); }

State vec3(double a, double b, double c) {
    State v(3);
    v << a, b, c;
    return v;
}

// theta^4 - 1 for base (rho, m, E) = (1, 0, 1) and unit heat capacity
double radiative_excess(const State& u) {
    double rho = 1.0 + u[0], v = u[1] / rho, e = (1.0 + u[2]) / rho - 0.5 * v * v;
    return std::pow(e, 4) - 1.0;
}

}  // namespace

TEST_CASE("step functions") {
    StepFunction a{{0.0, 1.0}, {2.0, -1.0, 0.5}};
    CHECK(a(-1.0) == 2.0);
    CHECK(a(0.5) == -1.0);
    CHECK(a(1.0) == 0.5);
    CHECK(a.sup_abs() == 2.0);
    CHECK(a.tv() == doctest::Approx(4.5));
}

TEST_CASE("scalar relaxation source conserves mass and has unit constants") {
    ModelBundle b = scalar_rosenau();
    SourceConstants c = b.source->constants();
    CHECK(c.L1 == doctest::Approx(2.0));
    CHECK(c.L2 == doctest::Approx(2.0));
    CHECK(c.L3 == 0.0);
    PCFn u = PCFn::box(0.0, 1.0, s1(1.0));
    SourceField g = b.source->apply(u);
    CHECK(std::abs(g.integral()[0]) < 1e-12);
    // -1 + (1 - e^{-1/2}) at the midpoint
    CHECK(g.value(0.5)[0] == doctest::Approx(-std::exp(-0.5)).epsilon(1e-12));
    CHECK(g.value(-1.0)[0] == doctest::Approx(0.5 * (std::exp(-1.0) - std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("radiative source on a constant energy bump") {
    RadiatingGasParams p;
    p.a = 4.0;
    p.b = 0.5;
    ModelBundle b = radiating_gas(p);
    State v = vec3(0.0, 0.0, 0.02);
    SourceField g = b.source->apply(bump_datum(v));
    double h = radiative_excess(v);
    // kernel sqrt(a)/2 exp(-sqrt(a)|x|) has unit mass; at the midpoint the bump covers |y| < 1/2
    double inside = 1.0 - std::exp(-0.5 * std::sqrt(p.a));
    CHECK(g.value(0.5)[2] == doctest::Approx(p.b * h * (inside - 1.0)).epsilon(1e-10));
    CHECK(g.value(0.5)[0] == 0.0);
    CHECK(g.value(0.5)[1] == 0.0);
    CHECK(std::abs(g.integral()[2]) < 1e-12);
}

TEST_CASE("declared constants bound the measured ones") {
    for (const char* id : {"scalar_rosenau", "radiating_gas", "rosenau", "local"}) {
        ModelBundle b = make_model(id);
        SourceProbe pr = probe_source(*b.model, *b.source, 40, 99);
        CAPTURE(id);
        CHECK(pr.lipschitz_ratio <= 1.0 + 1e-8);
        CHECK(pr.tv_ratio <= 1.0 + 1e-10);
        CHECK(pr.samples == 40);
    }
}

TEST_CASE("local source constants") {
    StepFunction a{{0.0}, {0.0, -2.0}};
    PCFn bb = PCFn::box(0.0, 1.0, s1(0.5));
    LocalSource src(a, bb);
    SourceConstants c = src.constants();
    CHECK(c.L1 == doctest::Approx(2.0));
    CHECK(c.L2 == doctest::Approx(4.0));
    CHECK(c.L3 == doctest::Approx(1.0));
    SourceField g = src.apply(PCFn::box(-1.0, 1.0, s1(1.0)));
    CHECK(g.value(-0.5)[0] == doctest::Approx(0.0));
    CHECK(g.value(0.5)[0] == doctest::Approx(-1.5));
}

TEST_CASE("projected Euler step and source flow") {
    auto lin = LocalSource::linear(1, -0.7);
    PCFn u = PCFn::box(0.0, 0.5, s1(1.0));
    PCFn step = euler_step(*lin, u, 0.1, 64);
    CHECK(step(0.25)[0] == doctest::Approx(0.93));
    OdeOptions opts;
    opts.N = 64;
    PCFn flow = ode_flow(*lin, u, 0.8, opts);
    CHECK(flow(0.25)[0] == doctest::Approx(std::exp(-0.56)).epsilon(1e-10));
    CHECK(ode_flow(*lin, u, 0.0, opts) == u);
}

TEST_CASE("admissible horizon") {
    SourceConstants c{1.0, 2.0, 0.5};
    CHECK(admissible_horizon(c, 0.5, 1.0) == doctest::Approx(0.2));
    CHECK(admissible_horizon(SourceConstants{1.0, 0.0, 0.5}, 0.0, 10.0) == doctest::Approx(0.5));
    auto lin = LocalSource::linear(1, 1.0);
    OdeOptions opts;
    opts.delta = 0.9;
    opts.delta0 = 1.0;
    CHECK_THROWS_AS(ode_flow(*lin, PCFn::box(0.0, 1.0, s1(0.1)), 0.2, opts), DomainError);
}

TEST_CASE("time-modulated source adds a clock") {
    ModelBundle base = scalar_rosenau();
    NonautonomousSource::Modulation mod{[](double t) { return 1.0 + 0.5 * std::sin(t); }, 1.5, 0.5};
    ModelBundle b = nonautonomous(base, mod);
    CHECK(b.model->dim() == 2);
    CHECK(b.source->dim() == 2);
    State v(2);
    v << 1.0, 0.3;
    PCFn u = PCFn::box(0.0, 1.0, v);
    CHECK(NonautonomousSource::clock(u) == doctest::Approx(0.3));
    SourceField g = b.source->apply(u);
    // the clock advances at unit rate on [0, 1[
    CHECK(g.value(0.5)[1] == doctest::Approx(1.0));
    double m = 1.0 + 0.5 * std::sin(0.3);
    CHECK(g.value(0.5)[0] == doctest::Approx(-m * std::exp(-0.5)).epsilon(1e-12));
    SourceConstants c = b.source->constants();
    CHECK(c.L3 >= 2.0);
}
