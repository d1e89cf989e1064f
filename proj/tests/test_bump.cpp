#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mtforge/bump.hpp"
#include "mtforge/errors.hpp"

using namespace mtf;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson rule for the radial transform in dimension 2 or 3.
double simpson_radial(const std::function<double(double)>& f, double support, int n, double rho, int steps = 4000) {
    auto g = [&](double r) {
        if (n == 2) return 2.0 * kPi * r * f(r) * std::cyl_bessel_j(0.0, 2.0 * kPi * r * rho);
        const double x = 2.0 * kPi * r * rho;
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        return 4.0 * kPi * r * r * f(r) * sinc;
    };
    const double h = support / steps;
    double s = g(0.0) + g(support);
    for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("bump peaks at the origin and vanishes outside B_2") {
    for (int d : {1, 2, 3, 8}) {
        const BumpFunction& b = build_bump(d);
        CHECK(b(0.0) == doctest::Approx(1.0));
        CHECK(b(0.0) >= b.c_low());
        CHECK(b(2.01) == 0.0);
        CHECK(b(5.0) == 0.0);
        CHECK(b.c_high() == doctest::Approx(1.0));
        for (double r = 0.0; r <= 2.0; r += 0.01) {
            CHECK(b(r) >= -1e-12);
            CHECK(b(r) <= b.c_high() + 1e-12);
            if (r <= 1.0) CHECK(b(r) >= b.c_low() - 1e-9);
        }
    }
}

TEST_CASE("bump transform is nonnegative out to radius 1000") {
    for (int d : {1, 2, 3, 8}) {
        const BumpFunction& b = build_bump(d);
        double lo = 1e300;
        for (double rho = 0.0; rho <= 1000.0; rho += 0.37) lo = std::min(lo, b.fourier(rho));
        CHECK(lo >= -1e-10);
    }
}

TEST_CASE("closed-form transform matches an independent Simpson oracle") {
    for (int d : {2, 3}) {
        const BumpFunction& b = build_bump(d);
        for (double rho : {0.0, 0.1, 0.4, 1.3}) {
            const double want = simpson_radial([&](double r) { return b(r); }, 2.0, d, rho);
            CHECK(b.fourier(rho) == doctest::Approx(want).epsilon(1e-5).scale(1e-6));
        }
    }
}

TEST_CASE("one-dimensional derivatives match finite differences") {
    const BumpFunction& b = build_bump(1);
    const double h = 1e-4;
    for (double t : {0.2, 0.7, 1.4}) {
        CHECK(b.derivative1(t, 0) == doctest::Approx(b(t)));
        CHECK(b.derivative1(t, 1) == doctest::Approx((b(t + h) - b(t - h)) / (2 * h)).epsilon(1e-6));
        CHECK(b.derivative1(t, 2) == doctest::Approx((b(t + h) - 2 * b(t) + b(t - h)) / (h * h)).epsilon(1e-4));
    }
    for (int j = 0; j <= 4; ++j) {
        double sup = 0.0;
        for (double t = 0.0; t <= 2.0; t += 1e-3) sup = std::max(sup, std::abs(b.derivative1(t, j)));
        CHECK(sup <= b.derivative_sup1(j) * (1 + 1e-9));
    }
}

TEST_CASE("autocorrelation at zero is the L2 norm of the generator") {
    for (int d : {2, 3, 5}) CHECK(bump_autocorrelation(d, 0.0) == doctest::Approx(build_bump(d).psi_norm()).epsilon(1e-8));
    CHECK(bump_autocorrelation(3, 2.0) == 0.0);
    CHECK_THROWS_AS(build_bump(17), DimensionError);
}

TEST_CASE("plateau is a monotone cutoff") {
    double prev = 1.0;
    for (double r = 0.0; r <= 1.2; r += 0.01) {
        const double v = plateau(r, 0.5);
        if (r <= 0.5) CHECK(v == 1.0);
        if (r >= 1.0) CHECK(v == 0.0);
        CHECK(v <= prev + 1e-15);
        prev = v;
    }
}

TEST_CASE("radial table interpolates radial_fourier") {
    auto f = [](double r) { return plateau(r, 0.5); };
    const RadialTable t(f, 1.0, 2, 8.0, 1.0 / 64);
    for (double rho : {0.0, 0.3, 1.7, 5.2}) CHECK(t(rho) == doctest::Approx(radial_fourier(f, 1.0, 2, rho)).scale(1e-6));
    CHECK(t.at_zero() == doctest::Approx(simpson_radial(f, 1.0, 2, 0.0)).epsilon(1e-6));
    CHECK(t.tail_sup(7.0) <= t.tail_sup(1.0));
}
