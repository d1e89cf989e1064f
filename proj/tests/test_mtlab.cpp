#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mtforge/errors.hpp"
#include "mtforge/mtlab.hpp"

using namespace mtf;

namespace {

constexpr double kPi = std::numbers::pi;

Curve unit_circle() { return Curve::from(circle_surface(1.0, Eigen::Vector2d::Zero(), 2)); }

std::vector<double> ones(const SurfaceSamples& S) { return std::vector<double>(S.size(), 1.0); }

}  // namespace

TEST_CASE("surface samples carry the arc-length measure") {
    const SurfaceSamples S = sample_curve(unit_circle(), 0.01);
    CHECK(S.measure() == doctest::Approx(2 * kPi).epsilon(1e-6));
    CHECK(l2_norm_sq(S, ones(S)) == doctest::Approx(2 * kPi).epsilon(1e-3));
    CHECK(l2_norm_sq(S, std::vector<double>(S.size(), 0.0)) == 0.0);
    for (std::size_t i = 1; i < S.size(); ++i) {
        const double d = std::hypot(S.point(i)[0] - S.point(i - 1)[0], S.point(i)[1] - S.point(i - 1)[1]);
        CHECK(d <= 0.01 * (1 + 1e-9));
    }
}

TEST_CASE("adaptive L2 norm converges and reports failure") {
    const L2Result r = l2_surface_norm(unit_circle(), ones, 0.05);
    CHECK(r.value == doctest::Approx(2 * kPi).epsilon(1e-3));
    CHECK(std::abs(r.value - r.previous) <= 0.01 * r.value);
    auto unstable = [](const SurfaceSamples& S) { return std::vector<double>(S.size(), double(S.size())); };
    CHECK_THROWS_AS(l2_surface_norm(unit_circle(), unstable, 0.05, 0.01, 3), QuadratureError);
}

TEST_CASE("rank-2 weight on the parabola agrees with a 4x finer grid") {
    const double R = 256;
    const WeightPair p = build_weight_rank2(R);
    const Curve c = Curve::from(parabola_surface(-1.0, 1.0, 2));
    auto field = [&](const SurfaceSamples& S) { return fourier_on_surface(p.fw, S); };
    const double h = 0.1 / R;
    const double coarse = l2_surface_norm(c, field, h).value;
    const SurfaceSamples fine = sample_curve(c, h / 4);
    const double oracle = l2_norm_sq(fine, field(fine));
    CHECK(coarse == doctest::Approx(oracle).epsilon(0.01));
}

TEST_CASE("extension of the constant on the circle") {
    const SurfaceSamples S = sample_curve(unit_circle(), 0.002);
    const std::vector<std::complex<double>> f(S.size(), 1.0);
    const std::vector<Eigen::VectorXd> x0 = {Eigen::Vector2d::Zero()};
    CHECK(std::abs(extension_eval(S, f, x0)[0]) == doctest::Approx(2 * kPi).epsilon(1e-3));

    std::vector<Eigen::VectorXd> far;
    for (int i = 0; i < 64; ++i) {
        const double r = 50.0 + i / 64.0, t = 0.3 * i;
        far.push_back(Eigen::Vector2d(r * std::cos(t), r * std::sin(t)));
    }
    const auto E = extension_eval(S, f, far);
    const SurfaceSamples S4 = sample_curve(unit_circle(), 0.0005);
    const auto E4 = extension_eval(S4, std::vector<std::complex<double>>(S4.size(), 1.0), far);
    double peak = 0.0;
    for (std::size_t i = 0; i < far.size(); ++i) {
        CHECK(std::abs(E[i] - E4[i]) <= 1e-4);
        CHECK(std::abs(E[i]) <= S.measure() + 1e-12);
        const double exact = 2 * kPi * std::cyl_bessel_j(0.0, 2 * kPi * far[i].norm());
        CHECK(E[i].real() == doctest::Approx(exact).scale(1.0).epsilon(1e-4));
        peak = std::max(peak, std::abs(E[i]));
    }
    // stationary phase: |2 pi J_0(2 pi r)| <= 2 pi sqrt(2 / (pi * 2 pi r))
    const double envelope = 2 * kPi * std::sqrt(1.0 / (kPi * kPi * 50.0));
    CHECK(peak >= envelope / 2);
    CHECK(peak <= envelope * 2);
}

TEST_CASE("duality: single bump and a tiny cap") {
    const WeightPair p = build_weight_single(2);
    const Curve cap = Curve::from(circle_surface(0.05, Eigen::Vector2d(0.1, 0.0), 2));
    const DualityReport d = duality_check(p.fw, cap, 0.002);
    CHECK(d.ratio >= 0.95);
    CHECK(d.drift < 0.01);
}

TEST_CASE("duality: zero field gives zero on both sides") {
    const WeightPair p = build_weight_single(2);
    const Curve far = Curve::from(circle_surface(0.5, Eigen::Vector2d(50.0, 0.0), 2));
    const DualityReport d = duality_check(p.fw, far, 0.01);
    CHECK(d.l2sq == 0.0);
    CHECK(d.lhs == 0.0);
    CHECK(d.rhs == 0.0);
}

TEST_CASE("duality: rank-2 weight against the parabola") {
    const double R = 64;
    const WeightPair p = build_weight_rank2(R);
    const DualityReport d = duality_check(p.fw, Curve::from(parabola_surface(-1.0, 1.0, 2)), 0.1 / R);
    CHECK(d.ratio >= 0.95);
    CHECK(d.drift < 0.01);
}

TEST_CASE("control: indicator of the ball against the circle") {
    const ControlReport c = mt_control_ball(64);
    CHECK(c.ratio >= 1.0 / 16);
    CHECK(c.ratio <= 16.0);
    CHECK(c.f_norm_sq == doctest::Approx(2 * kPi).epsilon(1e-6));
}

TEST_CASE("warm-up counts satisfy the lattice comparison") {
    for (double R : {256.0, 4096.0}) {
        const WarmupPoint w = warmup_point(R);
        CHECK(w.near_curve >= 1);
        CHECK(w.holds);
        CHECK(w.tube_max >= std::floor(2 * R / std::sqrt(R)));
    }
    CHECK_THROWS_AS(warmup_point(4), PreconditionError);
}

TEST_CASE("heavy targets are normalised and inside the radius") {
    Rng rng = make_rng(0, 0);
    const WeightPair p = build_weight_rankN(2, 8, 1, 64, rng);
    const PointSet P = heavy_targets(p.fw, 0.05, 0.8);
    REQUIRE(P.size() > 0);
    double top = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        CHECK(P.point(i).norm() <= 0.8);
        CHECK(P.weight(i) >= 0.05);
        CHECK(P.weight(i) <= 1.0 + 1e-12);
        top = std::max(top, P.weight(i));
    }
    CHECK(top == doctest::Approx(1.0));
}

TEST_CASE("blowup point at small R is finite, certified and conservative") {
    BlowupOptions o;
    const MTReport r = blowup_point(64, 3, o);
    CHECK(std::isfinite(r.ratio));
    CHECK(r.ratio > 0.0);
    CHECK(r.l1 > 0.0);
    CHECK(r.l2_surface > 0.0);
    CHECK(r.maximal_lo <= r.maximal_hi);
    CHECK(r.ratio <= r.ratio_lower);
    CHECK(r.certified);
    CHECK(r.alpha == doctest::Approx(1.0 / 3));
    CHECK(mt_ratio(r.l2_surface, r.R, 2, 1, 1, r.l1, r.maximal_hi) == doctest::Approx(r.ratio));
    if (r.incident_count) CHECK(r.min_peak > 0.0);

    BlowupOptions bad;
    bad.n = 3;
    CHECK_THROWS_AS(blowup_point(64, 0, bad), UnsupportedError);
    CHECK_THROWS_AS(mt_ratio(1.0, 64, 2, 1, 1, 0.0, 1.0), PreconditionError);
}
