#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtforge/convex.hpp"
#include "mtforge/errors.hpp"

using namespace mtf;

namespace {

DyadicTuple T(std::vector<double> v) { return DyadicTuple::from_values(v); }

DyadicTuple random_tuple(Rng& rng, int d, int lo, int hi) {
    std::uniform_int_distribution<int> e(lo, hi);
    std::vector<int> ex(d);
    for (int& x : ex) x = e(rng);
    return DyadicTuple(ex);
}

// Brute-force double product in floating point.
double incidence_oracle(const DyadicTuple& a, const DyadicTuple& b) {
    double p = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) p *= std::min(b.value(j) / a.value(i), 1.0);
    return p;
}

double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return d;
}

}  // namespace

TEST_CASE("meet and join") {
    CHECK(dyadic_meet(T({1, 0.25}), T({0.5, 0.5})) == T({0.5, 0.25}));
    CHECK(dyadic_join(T({1, 0.25}), T({0.5, 0.5})) == T({1, 0.5}));
    CHECK(dyadic_meet(T({0.125, 0.125}), T({0.125, 0.125})) == T({0.125, 0.125}));
    CHECK(dyadic_join(T({0.125, 0.125}), T({0.125, 0.125})) == T({0.125, 0.125}));
    CHECK_THROWS_AS(dyadic_meet(T({1}), T({1, 1})), DimensionError);
    CHECK_THROWS_AS(T({0.3}), PreconditionError);
}

TEST_CASE("incidence factor examples") {
    CHECK(incidence_factor(T({1, 1}), T({1, 1})) == 1.0);
    CHECK(incidence_factor(T({1, 1.0 / 64, 1.0 / 64}), T({1, 1, 1.0 / 64})) == 1.0 / 64);
    CHECK(incidence_factor(T({1, 0.25}), T({0.5, 0.5})) == 0.25);
    CHECK_THROWS_AS(incidence_factor(T({1}), T({1, 1})), DimensionError);
}

TEST_CASE("partial order laws on random tuples") {
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        const int d = 1 + trial % 6;
        auto a = random_tuple(rng, d, -5, 5), b = random_tuple(rng, d, -5, 5), c = random_tuple(rng, d, -5, 5);
        CHECK(dyadic_meet(a, b) == dyadic_meet(b, a));
        CHECK(dyadic_join(a, b) == dyadic_join(b, a));
        CHECK(dyadic_meet(dyadic_meet(a, b), c) == dyadic_meet(a, dyadic_meet(b, c)));
        CHECK(dyadic_join(dyadic_join(a, b), c) == dyadic_join(a, dyadic_join(b, c)));
        CHECK(dyadic_meet(a, a) == a);
        CHECK(dyadic_meet(a, dyadic_join(a, b)) == a);
        CHECK(dyadic_join(a, dyadic_meet(a, b)) == a);
        CHECK(dyadic_leq(dyadic_meet(a, b), a));
        CHECK(dyadic_leq(a, dyadic_join(a, b)));
    }
}

TEST_CASE("incidence factor matches floating oracle and monotonicity") {
    Rng rng(11);
    for (int trial = 0; trial < 3000; ++trial) {
        const int d = 1 + trial % 5;
        auto a = random_tuple(rng, d, -6, 6), b = random_tuple(rng, d, -6, 6);
        const double I = incidence_factor(a, b);
        CHECK(I == incidence_oracle(a, b));
        CHECK(I <= 1.0);
        auto bigger_b = dyadic_join(b, random_tuple(rng, d, -6, 6));
        auto bigger_a = dyadic_join(a, random_tuple(rng, d, -6, 6));
        CHECK(incidence_factor(a, bigger_b) >= I);
        CHECK(incidence_factor(bigger_a, b) <= I);
    }
}

TEST_CASE("ratio identity, exhaustive for d <= 3") {
    // I(a,b)/I(b,a) = prod_{i,j} b_j/a_i = (|b|/|a|)^d.
    for (int d = 1; d <= 3; ++d) {
        std::vector<int> idx(d, -4);
        std::vector<DyadicTuple> all;
        while (true) {
            if (std::is_sorted(idx.begin(), idx.end(), std::greater<>())) all.emplace_back(idx);
            int k = 0;
            while (k < d && ++idx[k] > 4) idx[k++] = -4;
            if (k == d) break;
        }
        for (const auto& a : all)
            for (const auto& b : all) {
                const int lhs = incidence_log2(a, b) - incidence_log2(b, a);
                CHECK(lhs == d * (b.log2_volume() - a.log2_volume()));
            }
    }
}

TEST_CASE("cross-ratio bound on admissible quadruples") {
    Rng rng(3);
    int tested = 0;
    for (int trial = 0; tested < 10000 && trial < 2'000'000; ++trial) {
        const int d = 1 + trial % 4;
        auto al = random_tuple(rng, d, -6, 6), be = random_tuple(rng, d, -6, 6);
        auto ga = random_tuple(rng, d, -6, 6), et = random_tuple(rng, d, -6, 6);
        const auto lo = dyadic_join(al, ga), hi = dyadic_meet(be, et);
        if (!dyadic_leq(lo, hi)) continue;
        ++tested;
        const int lhs = incidence_log2(al, et) + incidence_log2(be, ga) - incidence_log2(al, ga) -
                        incidence_log2(be, et);
        CHECK(lhs <= lo.log2_volume() - hi.log2_volume());
    }
    CHECK(tested == 10000);
}

TEST_CASE("haar rotations are special orthogonal") {
    Rng rng(1);
    for (int d = 1; d <= 8; ++d)
        for (int k = 0; k < 50; ++k) {
            Rotation g = haar_rotation(rng, d);
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
            CHECK((g.matrix() * g.matrix().transpose() - I).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(std::abs(g.matrix().determinant() - 1.0) < 1e-12);
        }
}

TEST_CASE("haar first coordinate is uniform on [-1,1] in d=3") {
    Rng rng(2024);
    std::vector<double> xs;
    xs.reserve(100000);
    for (int k = 0; k < 100000; ++k) xs.push_back(haar_rotation(rng, 3).matrix()(0, 0));
    CHECK(ks_uniform(xs, -1.0, 1.0) < 0.01);
}

TEST_CASE("haar sampling is deterministic per stream") {
    Rng a(99), b(99);
    CHECK(haar_rotation(a, 5).matrix() == haar_rotation(b, 5).matrix());
}

TEST_CASE("random embedding") {
    Rng rng(5);
    std::vector<double> lens;
    for (int k = 0; k < 10000; ++k) {
        Embedding e = random_embedding(rng, 1, 4);
        lens.push_back(e.matrix.col(0).norm());
        CHECK(e.lambda >= 1.0);
        CHECK(e.lambda <= 2.0);
    }
    CHECK(ks_uniform(lens, 1.0, 2.0) < 0.02);
    for (int k = 0; k < 100; ++k) {
        Embedding e = random_embedding(rng, 2, 8);
        const Eigen::MatrixXd g = e.matrix.transpose() * e.matrix;
        CHECK((g - e.lambda * e.lambda * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS_AS(random_embedding(rng, 4, 4), DimensionError);
}

TEST_CASE("convex body membership and volume") {
    auto b = ConvexBody::axis_box({1.0, 0.5});
    CHECK(b.volume() == doctest::Approx(2.0));
    CHECK(b.contains(Eigen::Vector2d(1.0, 0.5)));
    CHECK_FALSE(b.contains(Eigen::Vector2d(1.01, 0.0)));
    auto ball = ConvexBody::ball(Eigen::Vector3d::Zero(), 2.0);
    CHECK(ball.volume() == doctest::Approx(4.0 / 3.0 * M_PI * 8));
    auto cyl = ConvexBody::cylinder(Eigen::Vector3d::Zero(), Rotation::identity(3),
                                    {BodyBlock{2, true, 1.0, {}}, BodyBlock{1, false, 0.0, {1.0 / 16}}});
    CHECK(cyl.volume() == doctest::Approx(M_PI / 8));
    CHECK(cyl.contains(Eigen::Vector3d(0.6, 0.6, 0.05)));
    CHECK_FALSE(cyl.contains(Eigen::Vector3d(0.8, 0.8, 0.0)));
    CHECK_THROWS_AS(ConvexBody::axis_box({1.0, 0.0}), DegenerateError);
}

TEST_CASE("john box examples") {
    auto jb = john_box(ConvexBody::axis_box({0.3, 0.1}));
    CHECK(jb.dims == T({0.5, 0.25}));
    CHECK((jb.orientation.matrix() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);

    auto jball = john_box(ConvexBody::ball(Eigen::Vector3d::Zero(), 1.0));
    CHECK(jball.dims == T({2, 2, 2}));

    auto cyl = ConvexBody::cylinder(Eigen::Vector3d::Zero(), Rotation::identity(3),
                                    {BodyBlock{2, true, 1.0, {}}, BodyBlock{1, false, 0.0, {1.0 / 16}}});
    CHECK(john_box(cyl).dims == T({2, 2, 0.125}));
}

TEST_CASE("john box containment for every kind") {
    Rng rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 2.0);
    std::vector<ConvexBody> bodies;
    for (int k = 0; k < 20; ++k) {
        const int d = 2 + k % 3;
        Eigen::VectorXd c(d);
        for (int i = 0; i < d; ++i) c[i] = u(rng);
        std::vector<double> h(d);
        for (double& x : h) x = pos(rng);
        bodies.push_back(ConvexBody::box(c, haar_rotation(rng, d), h));
        bodies.push_back(ConvexBody::slab(c, haar_rotation(rng, d), {pos(rng)}, std::vector<double>(d - 1, 0.1)));
        bodies.push_back(ConvexBody::ball(c, pos(rng)));
        bodies.push_back(ConvexBody::cylinder(
            c, haar_rotation(rng, d), {BodyBlock{d - 1, true, pos(rng), {}}, BodyBlock{1, false, 0.0, {pos(rng)}}}));
    }
    for (const auto& body : bodies) {
        const JohnBox jb = john_box(body);
        const int d = body.dim();
        CHECK(jb.c >= 1.0 / (2.0 * d));
        CHECK(std::abs(jb.orientation.matrix().determinant() - 1.0) < 1e-12);
        for (int i = 1; i < d; ++i) CHECK(jb.halfwidths[i - 1] >= jb.halfwidths[i]);
        // Sampled points of the body lie in the returned box.
        const Eigen::VectorXd ext = body.circumscribed_halfwidths();
        for (int s = 0; s < 500; ++s) {
            Eigen::VectorXd y(d);
            for (int i = 0; i < d; ++i) y[i] = ext[i] * u(rng);
            const Eigen::VectorXd x = body.center() + body.frame().matrix() * y;
            if (!body.contains(x)) continue;
            const Eigen::VectorXd yb = jb.orientation.matrix().transpose() * (x - jb.center);
            for (int i = 0; i < d; ++i) CHECK(std::abs(yb[i]) <= jb.halfwidths[i] + 1e-12);
        }
        // Vertices of the c-scaled box lie in the body.
        for (int mask = 0; mask < (1 << d); ++mask) {
            Eigen::VectorXd y(d);
            for (int i = 0; i < d; ++i) y[i] = ((mask >> i) & 1 ? 1.0 : -1.0) * jb.c * jb.halfwidths[i];
            CHECK(body.contains(jb.center + jb.orientation.matrix() * y, 1e-12));
        }
        // Dyadic dimensions are within a factor sqrt(2) of the true sides.
        for (int i = 0; i < d; ++i) {
            const double r = jb.dims.value(i) / (2.0 * jb.halfwidths[i]);
            CHECK(r <= std::sqrt(2.0) + 1e-12);
            CHECK(r >= 1.0 / std::sqrt(2.0) - 1e-12);
        }
    }
}

TEST_CASE("degenerate john box") {
    ConvexBody b = ConvexBody::axis_box({1.0, 1.0});
    CHECK_THROWS_AS(john_box(b.scaled(0.0)), DegenerateError);
}
