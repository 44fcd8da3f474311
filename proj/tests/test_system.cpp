#include <doctest.h>

#include <cmath>
#include <random>

#include "balsplit/errors.hpp"
#include "balsplit/flux_models.hpp"
#include "balsplit/system.hpp"

using namespace balsplit;

namespace {

State s1(double x) { return State::Constant(1, x); }

State vec3(double a, double b, double c) {
    State v(3);
    v << a, b, c;
    return v;
}

void check_eigensystem(const SystemModel& m, const State& u) {
    Eigensystem es = m.eig(u);
    Matrix J = m.jacobian(u);
    int n = m.dim();
    CHECK((es.L * es.R - Matrix::Identity(n, n)).norm() < 1e-10);
    for (int j = 0; j < n; ++j) {
        CHECK((J * es.R.col(j) - es.lambda[j] * es.R.col(j)).norm() < 1e-9);
        if (j > 0) CHECK(es.lambda[j] > es.lambda[j - 1]);
    }
}

}  // namespace

TEST_CASE("Burgers Riemann problems") {
    auto m = make_burgers();
    RiemannSolution shock = solve_riemann(*m, s1(1.0), s1(0.0));
    CHECK(shock.sigma[0] == doctest::Approx(-1.0));
    CHECK(m->shock_speed(0, s1(1.0), s1(0.0)) == doctest::Approx(0.5));
    RiemannSolution fan = solve_riemann(*m, s1(-0.5), s1(0.5));
    CHECK(fan.sigma[0] == doctest::Approx(1.0));
    CHECK(m->lax_curve(0, 0.3, s1(0.1))[0] == doctest::Approx(0.4));
    CHECK(m->lambda_hat() > 2.0);
}

TEST_CASE("Rankine-Hugoniot relation holds on every shock curve") {
    EulerModel euler(GasParams{});
    State u = vec3(0.01, -0.02, 0.015);
    for (int j : {0, 2}) {
        for (double sigma : {-0.02, -0.005}) {
            State v = euler.hugoniot_curve(j, sigma, u);
            double s = euler.shock_speed(j, u, v);
            CHECK((euler.flux(v) - euler.flux(u) - s * (v - u)).norm() < 1e-12);
            // the parametrization makes the speed change equal to sigma
            CHECK(euler.lambda(j, v) - euler.lambda(j, u) == doctest::Approx(euler.k(j) * sigma).epsilon(1e-9));
        }
    }
    // third-order contact of the two curves
    State r = euler.rarefaction_curve(0, -1e-3, u), h = euler.hugoniot_curve(0, -1e-3, u);
    CHECK((r - h).norm() < 1e-8);
    // tiny strengths go through the rarefaction branch instead of failing
    CHECK_NOTHROW(euler.hugoniot_curve(2, -2.2e-16, u));
}

TEST_CASE("eigensystems are biorthonormal and ordered") {
    EulerModel euler(GasParams{});
    check_eigensystem(euler, State::Zero(3));
    check_eigensystem(euler, vec3(0.03, 0.02, -0.04));
    Matrix A(2, 2);
    A << 0.0, 1.0, 4.0, 0.0;
    LinearModel lin("wave", A);
    check_eigensystem(lin, State::Zero(2));
    CHECK(lin.lambda(0, State::Zero(2)) == doctest::Approx(-2.0));
}

TEST_CASE("Euler closed-form inversion agrees with Newton on a flux-only model") {
    auto euler = std::make_shared<EulerModel>(GasParams{});
    GenericFluxModel generic(
        "euler_numeric", 3, [euler](const State& u) { return euler->flux(u); },
        {FieldKind::GenuinelyNonlinear, FieldKind::LinearlyDegenerate, FieldKind::GenuinelyNonlinear}, euler->omega());
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-0.02, 0.02);
    // finite-difference eigenvectors limit the numeric curves to about 1e-9
    NewtonOptions loose;
    loose.tolerance = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        State ul = vec3(d(rng), d(rng), d(rng)), ur = vec3(d(rng), d(rng), d(rng));
        State closed = *euler->closed_form_strengths(ul, ur);
        RiemannSolution numeric = newton_strengths(generic, ul, ur, CurveKind::Lax, loose);
        CHECK((wave_sequence(*euler, closed, ul) - ur).norm() < 1e-12);
        CHECK((wave_sequence(generic, numeric.sigma, ul) - ur).norm() < 1e-7);
        for (int j : {0, 2}) CHECK(closed[j] == doctest::Approx(numeric.sigma[j]).epsilon(1e-5));
        // contact strengths are arc lengths, orientation may differ
        CHECK(std::abs(closed[1]) == doctest::Approx(std::abs(numeric.sigma[1])).epsilon(1e-5));
    }
}

TEST_CASE("linear systems decompose in the eigenbasis") {
    Matrix A(2, 2);
    A << 1.0, 0.0, 0.0, -1.0;
    LinearModel lin("diag", A);
    State ul(2), ur(2);
    ul << 0.1, 0.2;
    ur << -0.3, 0.5;
    State sigma = riemann_strengths(lin, ul, ur);
    CHECK((wave_sequence(lin, sigma, ul) - ur).norm() < 1e-14);
    CHECK(std::abs(sigma[0]) == doctest::Approx(0.3));
    CHECK(std::abs(sigma[1]) == doctest::Approx(0.4));
}

TEST_CASE("Glimm functionals of a Burgers profile") {
    auto m = make_burgers();
    // fan of size 2 at -2, shocks of size 1 at -1 and 0: every pair approaches
    PCFn u = PCFn::scalar({-2.0, -1.0, 0.0}, {0.0, 2.0, 1.0, 0.0});
    GlimmValues g = glimm_functionals(*m, u, 3.0);
    CHECK(g.V == doctest::Approx(4.0));
    CHECK(g.Q == doctest::Approx(5.0));
    CHECK(g.Upsilon == doctest::Approx(19.0));
    // two fans never approach
    PCFn fans = PCFn::scalar({-2.0, -1.0, 0.0}, {0.0, 0.5, 1.0, 0.0});
    CHECK(glimm_functionals(*m, fans, 1.0).Q == doctest::Approx(0.5 * 1.0 + 0.5 * 1.0));
}

TEST_CASE("interaction constant calibration is at least one") {
    EulerModel euler(GasParams{});
    C0Calibration c = calibrate_c0(euler, 0.01, 50, 4);
    CHECK(c.c0 >= 1.0);
    CHECK(c.max_amplification >= 0.0);
}

TEST_CASE("states outside omega are rejected") {
    EulerModel euler(GasParams{});
    CHECK_THROWS_AS(euler.require_in_omega(vec3(0.5, 0.0, 0.0), "test"), DomainError);
}
