#include "mtforge/convex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mtforge/errors.hpp"

namespace mtf {

namespace {

void require_same_length(const DyadicTuple& a, const DyadicTuple& b) {
    if (a.size() != b.size())
        throw DimensionError("dyadic tuples have lengths " + std::to_string(a.size()) + " and " +
                                 std::to_string(b.size()),
                             "d");
}

}  // namespace

DyadicTuple::DyadicTuple(std::vector<int> exponents) : exps_(std::move(exponents)) {
    std::sort(exps_.begin(), exps_.end(), std::greater<>());
}

DyadicTuple DyadicTuple::from_values(std::span<const double> values) {
    std::vector<int> e;
    e.reserve(values.size());
    for (double v : values) {
        if (!(v > 0.0)) throw DegenerateError("dyadic entry must be positive", "entries");
        int ex = 0;
        double m = std::frexp(v, &ex);
        if (m != 0.5) throw PreconditionError("entry " + std::to_string(v) + " is not a power of 2", "entries");
        e.push_back(ex - 1);
    }
    return DyadicTuple(std::move(e));
}

DyadicTuple DyadicTuple::nearest(std::span<const double> values) {
    std::vector<int> e;
    e.reserve(values.size());
    for (double v : values) {
        if (!(v > 0.0)) throw DegenerateError("dyadic entry must be positive", "entries");
        e.push_back(static_cast<int>(std::lround(std::log2(v))));
    }
    return DyadicTuple(std::move(e));
}

double DyadicTuple::value(std::size_t i) const { return std::ldexp(1.0, exps_[i]); }

int DyadicTuple::log2_volume() const { return std::accumulate(exps_.begin(), exps_.end(), 0); }

double DyadicTuple::volume() const { return std::ldexp(1.0, log2_volume()); }

std::string DyadicTuple::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < exps_.size(); ++i) {
        if (i) os << ',';
        if (exps_[i] >= 0)
            os << (1LL << exps_[i]);
        else
            os << "1/" << (1LL << -exps_[i]);
    }
    os << ')';
    return os.str();
}

DyadicTuple dyadic_meet(const DyadicTuple& s, const DyadicTuple& t) {
    require_same_length(s, t);
    std::vector<int> e(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) e[i] = std::min(s.exponent(i), t.exponent(i));
    return DyadicTuple(std::move(e));
}

DyadicTuple dyadic_join(const DyadicTuple& s, const DyadicTuple& t) {
    require_same_length(s, t);
    std::vector<int> e(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) e[i] = std::max(s.exponent(i), t.exponent(i));
    return DyadicTuple(std::move(e));
}

bool dyadic_leq(const DyadicTuple& a, const DyadicTuple& b) {
    require_same_length(a, b);
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.exponent(i) > b.exponent(i)) return false;
    return true;
}

int incidence_log2(const DyadicTuple& a, const DyadicTuple& b) {
    require_same_length(a, b);
    int acc = 0;
    for (int ai : a.exponents())
        for (int bj : b.exponents()) acc += std::min(bj - ai, 0);
    return acc;
}

double incidence_factor(const DyadicTuple& a, const DyadicTuple& b) {
    return std::ldexp(1.0, incidence_log2(a, b));
}

Rotation::Rotation(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionError("rotation matrix must be square", "d");
}

Rotation Rotation::identity(int d) { return Rotation(Eigen::MatrixXd::Identity(d, d)); }

Rotation Rotation::planar(double angle) {
    Eigen::MatrixXd m(2, 2);
    m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return Rotation(std::move(m));
}

Rotation haar_rotation(Rng& rng, int d) {
    if (d < 1) throw DimensionError("rotation dimension must be >= 1", "d");
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd a(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) a(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return Rotation(std::move(q));
}

const char* to_string(BodyKind k) {
    switch (k) {
        case BodyKind::box: return "box";
        case BodyKind::slab: return "slab";
        case BodyKind::cylinder: return "cylinder";
        case BodyKind::ball: return "ball";
    }
    return "?";
}

ConvexBody ConvexBody::box(Eigen::VectorXd center, Rotation frame, std::vector<double> halfwidths) {
    if (static_cast<int>(halfwidths.size()) != center.size() || frame.dim() != center.size())
        throw DimensionError("box halfwidths, center and frame disagree in dimension", "halfwidths");
    ConvexBody b;
    b.kind_ = BodyKind::box;
    b.center_ = std::move(center);
    b.frame_ = std::move(frame);
    for (double h : halfwidths) {
        if (!(h > 0.0)) throw DegenerateError("box halfwidth must be positive", "halfwidths");
        b.blocks_.push_back(BodyBlock{1, false, 0.0, {h}});
    }
    return b;
}

ConvexBody ConvexBody::axis_box(std::vector<double> halfwidths) {
    const int d = static_cast<int>(halfwidths.size());
    return box(Eigen::VectorXd::Zero(d), Rotation::identity(d), std::move(halfwidths));
}

ConvexBody ConvexBody::slab(Eigen::VectorXd center, Rotation frame, std::vector<double> tangential,
                            std::vector<double> transverse) {
    std::vector<double> h = tangential;
    h.insert(h.end(), transverse.begin(), transverse.end());
    ConvexBody b = box(std::move(center), std::move(frame), std::move(h));
    b.kind_ = BodyKind::slab;
    return b;
}

ConvexBody ConvexBody::ball(Eigen::VectorXd center, double radius) {
    if (!(radius > 0.0)) throw DegenerateError("ball radius must be positive", "radius");
    ConvexBody b;
    b.kind_ = BodyKind::ball;
    const int d = static_cast<int>(center.size());
    b.center_ = std::move(center);
    b.frame_ = Rotation::identity(d);
    b.blocks_.push_back(BodyBlock{d, true, radius, {}});
    return b;
}

ConvexBody ConvexBody::cylinder(Eigen::VectorXd center, Rotation frame, std::vector<BodyBlock> blocks) {
    int total = 0;
    for (auto& blk : blocks) {
        if (blk.round) {
            if (!(blk.radius > 0.0)) throw DegenerateError("cylinder factor radius must be positive", "radius");
        } else {
            if (static_cast<int>(blk.halfwidths.size()) != blk.dim)
                throw DimensionError("box factor halfwidth count must equal its dimension", "halfwidths");
            for (double h : blk.halfwidths)
                if (!(h > 0.0)) throw DegenerateError("cylinder factor halfwidth must be positive", "halfwidths");
        }
        total += blk.dim;
    }
    if (total != center.size() || frame.dim() != center.size())
        throw DimensionError("cylinder factors do not cover the ambient dimension", "blocks");
    ConvexBody b;
    b.kind_ = BodyKind::cylinder;
    b.center_ = std::move(center);
    b.frame_ = std::move(frame);
    // Split box factors into one block per coordinate.
    for (auto& blk : blocks) {
        if (blk.round) {
            b.blocks_.push_back(blk);
        } else {
            for (double h : blk.halfwidths) b.blocks_.push_back(BodyBlock{1, false, 0.0, {h}});
        }
    }
    return b;
}

double ConvexBody::volume() const {
    double v = 1.0;
    for (const auto& blk : blocks_) {
        if (blk.round) {
            const double k = blk.dim;
            v *= std::pow(M_PI, k / 2) / std::tgamma(k / 2 + 1) * std::pow(blk.radius, k);
        } else {
            v *= 2.0 * blk.halfwidths[0];
        }
    }
    return v;
}

double ConvexBody::slack(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd y = frame_.matrix().transpose() * (x - center_);
    double s = std::numeric_limits<double>::infinity();
    int off = 0;
    for (const auto& blk : blocks_) {
        if (blk.round) {
            s = std::min(s, blk.radius - y.segment(off, blk.dim).norm());
        } else {
            s = std::min(s, blk.halfwidths[0] - std::abs(y[off]));
        }
        off += blk.dim;
    }
    return s;
}

bool ConvexBody::contains(const Eigen::Ref<const Eigen::VectorXd>& x, double margin) const {
    return slack(x) >= -margin;
}

double ConvexBody::support(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    const Eigen::VectorXd v = frame_.matrix().transpose() * u;
    double h = u.dot(center_);
    int off = 0;
    for (const auto& blk : blocks_) {
        if (blk.round)
            h += blk.radius * v.segment(off, blk.dim).norm();
        else
            h += blk.halfwidths[0] * std::abs(v[off]);
        off += blk.dim;
    }
    return h;
}

Eigen::VectorXd ConvexBody::enclosing_ellipsoid_axes() const {
    // Sum of per-block quadratic forms is at most the block count.
    const double nb = static_cast<double>(blocks_.size());
    Eigen::VectorXd e(dim());
    int off = 0;
    for (const auto& blk : blocks_) {
        const double s = blk.round ? blk.radius : blk.halfwidths[0];
        for (int i = 0; i < blk.dim; ++i) e[off + i] = s * std::sqrt(nb);
        off += blk.dim;
    }
    return e;
}

Eigen::VectorXd ConvexBody::circumscribed_halfwidths() const {
    Eigen::VectorXd h(dim());
    int off = 0;
    for (const auto& blk : blocks_) {
        const double s = blk.round ? blk.radius : blk.halfwidths[0];
        for (int i = 0; i < blk.dim; ++i) h[off + i] = s;
        off += blk.dim;
    }
    return h;
}

ConvexBody ConvexBody::rotated(const Rotation& g) const {
    ConvexBody b = *this;
    b.center_ = g.matrix() * center_;
    b.frame_ = Rotation(g.matrix() * frame_.matrix());
    return b;
}

ConvexBody ConvexBody::translated(const Eigen::VectorXd& shift) const {
    ConvexBody b = *this;
    b.center_ += shift;
    return b;
}

ConvexBody ConvexBody::scaled(double factor) const {
    ConvexBody b = *this;
    b.center_ *= factor;
    for (auto& blk : b.blocks_) {
        blk.radius *= factor;
        for (double& h : blk.halfwidths) h *= factor;
    }
    return b;
}

JohnBox john_box(const ConvexBody& body) {
    const int d = body.dim();
    if (!(body.volume() > 0.0)) throw DegenerateError("body has zero volume", "halfwidths");
    const Eigen::VectorXd h = body.circumscribed_halfwidths();
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return h[a] > h[b]; });

    JohnBox jb;
    jb.center = body.center();
    jb.halfwidths.resize(d);
    Eigen::MatrixXd frame(d, d);
    std::vector<double> sides(d);
    for (int i = 0; i < d; ++i) {
        frame.col(i) = body.frame().matrix().col(order[i]);
        jb.halfwidths[i] = h[order[i]];
        sides[i] = 2.0 * h[order[i]];
    }
    if (frame.determinant() < 0) frame.col(d - 1) *= -1.0;
    jb.orientation = Rotation(std::move(frame));
    jb.dims = DyadicTuple::nearest(sides);

    // A ball factor of dimension k holds the cube of halfwidth r/sqrt(k).
    double c = 1.0;
    for (const auto& blk : body.blocks())
        if (blk.round) c = std::min(c, 1.0 / std::sqrt(static_cast<double>(blk.dim)));
    jb.c = c;
    return jb;
}

Embedding random_embedding(Rng& rng, int n, int N) {
    if (n < 1 || n >= N) throw DimensionError("embedding needs 1 <= n < N", "n");
    const Rotation g = haar_rotation(rng, N);
    std::uniform_real_distribution<double> unif(1.0, 2.0);
    Embedding e;
    e.lambda = unif(rng);
    e.frame = g.matrix().leftCols(n);
    e.matrix = e.lambda * e.frame;
    return e;
}

Embedding identity_embedding(int n) {
    Embedding e;
    e.lambda = 1.0;
    e.frame = Eigen::MatrixXd::Identity(n, n);
    e.matrix = e.frame;
    return e;
}

}  // namespace mtf
