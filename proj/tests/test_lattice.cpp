#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "mtforge/errors.hpp"
#include "mtforge/lattice.hpp"

using namespace mtf;

namespace {

// Scan the integer bounding box of the body's circumscribed box.
std::uint64_t brute_count(const Lattice& L, const ConvexBody& body) {
    const int d = body.dim();
    const Eigen::MatrixXd Binv = L.basis().inverse();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, 1e300), hi = -lo;
    const Eigen::VectorXd ext = body.circumscribed_halfwidths();
    for (int mask = 0; mask < (1 << d); ++mask) {
        Eigen::VectorXd y(d);
        for (int i = 0; i < d; ++i) y[i] = ((mask >> i) & 1 ? 1.0 : -1.0) * ext[i];
        const Eigen::VectorXd z = Binv * (body.center() + body.frame().matrix() * y);
        lo = lo.cwiseMin(z);
        hi = hi.cwiseMax(z);
    }
    std::vector<std::int64_t> z(d);
    for (int i = 0; i < d; ++i) z[i] = static_cast<std::int64_t>(std::floor(lo[i])) - 1;
    std::uint64_t count = 0;
    while (true) {
        if (body.contains(L.point(z), 1e-9)) ++count;
        int k = 0;
        while (k < d && ++z[k] > static_cast<std::int64_t>(std::ceil(hi[k])) + 1) {
            z[k] = static_cast<std::int64_t>(std::floor(lo[k])) - 1;
            ++k;
        }
        if (k == d) break;
    }
    return count;
}

ConvexBody random_body(Rng& rng, int d) {
    std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.2, 3.0);
    Eigen::VectorXd c(d);
    for (int i = 0; i < d; ++i) c[i] = u(rng);
    switch (rng() % 4) {
        case 0: {
            std::vector<double> h(d);
            for (double& x : h) x = pos(rng);
            return ConvexBody::box(c, haar_rotation(rng, d), h);
        }
        case 1:
            return ConvexBody::ball(c, pos(rng));
        case 2:
            if (d >= 2)
                return ConvexBody::cylinder(c, haar_rotation(rng, d),
                                            {BodyBlock{d - 1, true, pos(rng), {}}, BodyBlock{1, false, 0.0, {pos(rng)}}});
            return ConvexBody::ball(c, pos(rng));
        default: {
            std::vector<double> tang(std::max(1, d - 1), pos(rng));
            std::vector<double> tr(d - tang.size(), 0.5 * pos(rng));
            if (tr.empty()) return ConvexBody::ball(c, pos(rng));
            return ConvexBody::slab(c, haar_rotation(rng, d), tang, tr);
        }
    }
}

PointSet from_points(const std::vector<Eigen::Vector2d>& pts) {
    PointSet P;
    P.dim = 2;
    for (const auto& p : pts) P.push(p.data());
    return P;
}

}  // namespace

TEST_CASE("dual lattice") {
    Lattice s = Lattice::scaled_integer(3, 0.25);
    CHECK((dual(s).basis() - 4.0 * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-15);
    Eigen::MatrixXd B(2, 2);
    B << 2, 1, 0, 1;
    Lattice L(B);
    const Eigen::MatrixXd Bs = dual(L).basis();
    CHECK((B.transpose() * Bs - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((dual(dual(L)).basis() - B).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(L.covolume() == doctest::Approx(2.0));
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2, 2);
    S(0, 0) = 1;
    CHECK_THROWS_AS(Lattice{S}, DegenerateError);
}

TEST_CASE("enumeration examples") {
    Lattice Z2 = Lattice::scaled_integer(2, 1.0);
    CHECK(enumerate_in_body(Z2, ConvexBody::axis_box({1.6, 1.6})).size() == 9);

    auto rot = ConvexBody::box(Eigen::Vector2d::Zero(), Rotation::planar(M_PI / 4), {2.0, 0.1});
    PointSet p = enumerate_in_body(Z2, rot);
    REQUIRE(p.size() == 3);
    CHECK(p.preimages == std::vector<std::int64_t>{-1, -1, 0, 0, 1, 1});

    CHECK(count_in_body(Lattice::scaled_integer(3, 1.0), ConvexBody::ball(Eigen::Vector3d::Zero(), 1.01)) == 7);
}

TEST_CASE("enumeration budget") {
    EnumerationOptions opt;
    opt.cap = 100;
    try {
        count_in_body(Lattice::scaled_integer(2, 1.0), ConvexBody::axis_box({20, 20}), opt);
        FAIL("expected a budget error");
    } catch (const BudgetError& e) {
        CHECK(e.lower_bound() > 100);
        CHECK(e.param() == "cap");
    }
}

TEST_CASE("boundary points are counted and flagged") {
    PointSet p = enumerate_in_body(Lattice::scaled_integer(2, 1.0), ConvexBody::axis_box({1.0, 1.0}));
    CHECK(p.size() == 9);
    CHECK(p.boundary_count() == 8);
}

TEST_CASE("enumeration agrees with bounding-box scan") {
    Rng rng(42);
    int compared = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 1 + trial % 4;
        ConvexBody body = d == 1 ? ConvexBody::axis_box({std::uniform_real_distribution<double>(0.1, 5)(rng)})
                                     .translated(Eigen::VectorXd::Constant(1, 0.37 * trial))
                                 : random_body(rng, d);
        Eigen::MatrixXd B = Eigen::MatrixXd::Identity(d, d);
        if (trial % 3 == 1) B *= 0.7;
        if (trial % 3 == 2) B(0, d - 1) += 0.5;
        Lattice L(B);
        const std::uint64_t expect = brute_count(L, body);
        if (expect > 10000) continue;
        ++compared;
        CHECK(count_in_body(L, body) == expect);
        CHECK(enumerate_in_body(L, body).size() == expect);
    }
    CHECK(compared > 900);
}

TEST_CASE("enumeration order is lexicographic and deterministic") {
    Rng rng(1);
    auto body = random_body(rng, 3);
    Lattice L = Lattice::scaled_integer(3, 0.5);
    PointSet a = enumerate_in_body(L, body), b = enumerate_in_body(L, body);
    CHECK(a.coords == b.coords);
    for (std::size_t i = 1; i < a.size(); ++i)
        CHECK(std::lexicographical_compare(a.preimages.begin() + 3 * (i - 1), a.preimages.begin() + 3 * i,
                                           a.preimages.begin() + 3 * i, a.preimages.begin() + 3 * (i + 1)));
}

TEST_CASE("rotation consistency") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + trial % 3;
        ConvexBody T = random_body(rng, d);
        Rotation g = haar_rotation(rng, d);
        const std::uint64_t a = count_in_body(Lattice::scaled_integer(d, 1.0), T.rotated(g));
        const std::uint64_t b = count_in_body(Lattice(g.inverse().matrix()), T);
        CHECK(a == b);
    }
}

TEST_CASE("tube examples") {
    std::vector<Eigen::Vector2d> line;
    for (int k = -10; k <= 10; ++k) line.emplace_back(10.0 * k, 0.0);
    TubeCount c = max_tube_count(from_points(line), 1, 1.0, std::numeric_limits<double>::infinity());
    CHECK(c.lower == 21);
    CHECK(c.upper == 21);

    const double R = 1e4;
    Lattice L = Lattice::scaled_integer(2, std::sqrt(R));
    PointSet P = enumerate_in_body(L, ConvexBody::ball(Eigen::Vector2d::Zero(), R));
    TubeSearchOptions opt;
    opt.upper = false;
    TubeCount t = max_tube_count(P, 1, 1.0, 2 * R, opt);
    CHECK(t.lower == 201);
    CHECK(t.lower <= t.upper);

    PointSet one = from_points({Eigen::Vector2d(3.0, -1.0)});
    TubeCount s = max_tube_count(one, 1, 0.5, 10.0);
    CHECK(s.lower == 1);
    CHECK(s.upper == 1);
    CHECK_THROWS_AS(max_tube_count(one, 2, 0.5, 10.0), UnsupportedError);
    CHECK_THROWS_AS(max_tube_count(PointSet{}, 1, 0.5, 10.0), PreconditionError);
}

TEST_CASE("tube witness contains the reported weight") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Eigen::Vector2d> pts;
        for (int k = 0; k < 60; ++k) pts.emplace_back(u(rng), u(rng));
        for (int k = 0; k < 8; ++k) pts.emplace_back(-15.0 + 4.0 * k, 0.3 * k - 5.0);
        PointSet P = from_points(pts);
        const double len = trial % 2 ? 25.0 : std::numeric_limits<double>::infinity();
        TubeCount tc = max_tube_count(P, 1, 1.0, len);
        CHECK(tc.lower <= tc.upper);
        CHECK(tc.lower >= 6);
        // Recount the witness.
        const Eigen::Vector2d dir = tc.witness.frame.col(0);
        int inside = 0;
        for (std::size_t i = 0; i < P.size(); ++i) {
            const Eigen::Vector2d x = P.point(i) - tc.witness.anchor;
            const double s = x.dot(dir);
            const double t = (x - s * dir).norm();
            if (t <= 1.0 + 1e-9 && (!std::isfinite(len) || std::abs(s) <= 0.5 * len + 1e-9)) ++inside;
        }
        CHECK(inside == tc.lower);
    }
}

TEST_CASE("tube upper bound dominates exhaustive pair search") {
    Rng rng(8);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::Vector2d> pts;
        for (int k = 0; k < 40; ++k) pts.emplace_back(u(rng), u(rng));
        PointSet P = from_points(pts);
        TubeCount tc = max_tube_count(P, 1, 0.7, std::numeric_limits<double>::infinity());
        // Fine direction scan as an independent lower estimate.
        double best = 0;
        for (int j = 0; j < 3600; ++j) {
            const double th = M_PI * j / 3600;
            Eigen::Vector2d dir(std::cos(th), std::sin(th));
            best = std::max(best, max_tube_count_direction(P, dir, 0.7, std::numeric_limits<double>::infinity()).lower);
        }
        CHECK(best <= tc.upper);
        CHECK(tc.lower >= best - 1e-9);
    }
}

TEST_CASE("three dimensional tube search") {
    PointSet P;
    P.dim = 3;
    for (int k = 0; k < 7; ++k) {
        Eigen::Vector3d x(0.5 * k, 0.25 * k, -0.1 * k);
        P.push(x.data());
    }
    Eigen::Vector3d off(5, 5, 5);
    P.push(off.data());
    TubeCount tc = max_tube_count(P, 1, 0.1, std::numeric_limits<double>::infinity());
    CHECK(tc.lower == 7);
    CHECK(tc.upper >= 7);
}

TEST_CASE("projection examples") {
    Embedding id = identity_embedding(1);
    PointSet p = project_points(id, Lattice::scaled_integer(1, 1.0), 2.5, 0.0);
    CHECK(p.size() == 5);
    std::vector<double> xs(p.coords.begin(), p.coords.end());
    CHECK(xs == std::vector<double>{-2, -1, 0, 1, 2});

    Embedding ax;
    ax.frame = Eigen::MatrixXd::Zero(2, 1);
    ax.frame(0, 0) = 1;
    ax.matrix = ax.frame;
    PointSet q = project_points(ax, Lattice::scaled_integer(2, 1.0), 1.0, 0.5);
    CHECK(q.size() == 3);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(q.preimages[2 * i + 1] == 0);
    CHECK_THROWS_AS(project_points(ax, Lattice::scaled_integer(2, 1.0), 0.0, 0.5), PreconditionError);
}

TEST_CASE("projected points have the claimed norms") {
    Rng rng(12);
    Embedding e = random_embedding(rng, 2, 4);
    const double R = 256;
    PointSet p = project_points(e, Lattice::scaled_integer(4, std::pow(R, -0.25)), 1.0, 1.0 / e.lambda);
    CHECK(p.size() > 0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.point(i).norm() <= 1.0 + 1e-9);
}
