#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "balsplit/kernel.hpp"
#include "balsplit/presets.hpp"

using namespace balsplit;
using boost::math::quadrature::gauss_kronrod;

namespace {

State s1(double x) { return State::Constant(1, x); }

// Direct quadrature of (k * w)(x), split at the kernel peak and the breakpoints of w.
double direct_conv(const ExpKernel& k, const PCFn& w, double x) {
    auto br = w.breakpoints();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        double a = br[i], b = br[i + 1], v = w(0.5 * (a + b))[0];
        auto f = [&](double y) { return k(x - y) * v; };
        if (x > a && x < b) {
            total += gauss_kronrod<double, 31>::integrate(f, a, x, 10, 1e-14);
            total += gauss_kronrod<double, 31>::integrate(f, x, b, 10, 1e-14);
        } else {
            total += gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-14);
        }
    }
    return total;
}

}  // namespace

TEST_CASE("exp kernel norms") {
    ExpKernel k({{0.5, 1.0}, {-0.25, 3.0}});
    CHECK(k(0.0) == doctest::Approx(0.25));
    CHECK(k.mass() == doctest::Approx(1.0 - 0.5 / 3.0));
    CHECK(k.l1_norm() == doctest::Approx(1.0 + 0.5 / 3.0));
    CHECK(k.tail_width() == doctest::Approx(40.0));
    CHECK(k.scaled(2.0)(1.0) == doctest::Approx(2.0 * k(1.0)));
}

TEST_CASE("convolution of the unit indicator with the half exponential") {
    ExpConvolution c(MatrixKernel::scalar(ExpKernel::two_sided(0.5, 1.0)), PCFn::box(0.0, 1.0, s1(1.0)));
    CHECK(c.value(0.0)[0] == doctest::Approx(0.316060279414).epsilon(1e-12));
    CHECK(c.value(0.5)[0] == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));
    CHECK(c.value(-2.0)[0] == doctest::Approx(0.5 * (std::exp(-2.0) - std::exp(-3.0))).epsilon(1e-12));
}

TEST_CASE("sweep values, integrals and derivative match direct quadrature") {
    std::mt19937_64 rng(21);
    ExpKernel k({{0.7, 2.0}, {-0.2, 0.5}});
    for (int trial = 0; trial < 5; ++trial) {
        PCFn w = random_datum(rng, RandomDatumSpec{});
        ExpConvolution c(MatrixKernel::scalar(k), w);
        std::vector<double> xs{-2.0, -0.7, -0.1, 0.05, 0.4, 0.9, 3.0};
        auto vals = c.values(xs);
        for (std::size_t i = 0; i < xs.size(); ++i)
            CHECK(vals[i][0] == doctest::Approx(direct_conv(k, w, xs[i])).epsilon(1e-10));
        auto ints = c.integrals(xs);
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            double ref = gauss_kronrod<double, 15>::integrate(
                [&](double x) { return c.value(x)[0]; }, xs[i], xs[i + 1], 15, 1e-13);
            CHECK(ints[i][0] == doctest::Approx(ref).epsilon(1e-9));
        }
        double x = 0.3217, h = 1e-6;
        if (std::abs(w(x + h)[0] - w(x - h)[0]) == 0.0) {
            double fd = (c.value(x + h)[0] - c.value(x - h)[0]) / (2 * h);
            CHECK(c.derivative(x)[0] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("matrix kernel couples components and its L1 norm is by quadrature") {
    Matrix M(2, 2);
    M << 0.0, 1.0, 1.0, 0.0;
    MatrixKernel K({KernelBlock{M, ExpKernel::two_sided(0.5, 1.0)}});
    CHECK(K.l1_norm() == doctest::Approx(1.0));
    State v(2);
    v << 1.0, 0.0;
    ExpConvolution c(K, PCFn::box(0.0, 1.0, v));
    CHECK(c.value(0.0)[0] == doctest::Approx(0.0));
    CHECK(c.value(0.0)[1] == doctest::Approx(0.316060279414).epsilon(1e-12));

    Matrix I = Matrix::Identity(2, 2);
    MatrixKernel two({KernelBlock{I, ExpKernel::two_sided(1.0, 1.0)}, KernelBlock{M, ExpKernel::two_sided(1.0, 2.0)}});
    // the operator norm of [[a, b], [b, a]] is |a| + |b|
    double ref = 2.0 * gauss_kronrod<double, 31>::integrate(
                           [](double x) { return std::exp(-x) + std::exp(-2 * x); }, 0.0, 40.0, 20, 1e-14);
    CHECK(two.l1_norm() == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("projected convolution equals cell means of the exact field") {
    ExpConvolution c(MatrixKernel::scalar(ExpKernel::two_sided(0.5, 1.0)), PCFn::box(-0.3, 0.6, s1(2.0)));
    PCFn p = project(c, 8);
    for (double x : {-1.0, -0.2, 0.0, 0.55, 2.0}) {
        long long k = static_cast<long long>(std::ceil(x * 8)) - 1;
        double a = k / 8.0, b = (k + 1) / 8.0;
        double ref = gauss_kronrod<double, 31>::integrate([&](double y) { return c.value(y)[0]; }, a, b, 10, 1e-14) * 8;
        CHECK(p(0.5 * (a + b))[0] == doctest::Approx(ref).epsilon(1e-11));
    }
}
