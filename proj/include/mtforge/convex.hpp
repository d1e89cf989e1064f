#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "mtforge/rng.hpp"

namespace mtf {

// Nonincreasing tuple of powers of two, stored as exponents.
class DyadicTuple {
public:
    DyadicTuple() = default;
    explicit DyadicTuple(std::vector<int> exponents);

    // Every value must be an exact power of two.
    static DyadicTuple from_values(std::span<const double> values);
    // Rounds each log2 to the nearest integer.
    static DyadicTuple nearest(std::span<const double> values);

    std::size_t size() const { return exps_.size(); }
    int exponent(std::size_t i) const { return exps_[i]; }
    double value(std::size_t i) const;
    const std::vector<int>& exponents() const { return exps_; }
    int log2_volume() const;
    double volume() const;
    std::string str() const;

    bool operator==(const DyadicTuple&) const = default;

private:
    std::vector<int> exps_;
};

DyadicTuple dyadic_meet(const DyadicTuple& s, const DyadicTuple& t);
DyadicTuple dyadic_join(const DyadicTuple& s, const DyadicTuple& t);
// Entrywise a_i <= b_i.
bool dyadic_leq(const DyadicTuple& a, const DyadicTuple& b);

// log2 of I(a,b) = prod_{i,j} min(b_j / a_i, 1).
int incidence_log2(const DyadicTuple& a, const DyadicTuple& b);
double incidence_factor(const DyadicTuple& a, const DyadicTuple& b);

class Rotation {
public:
    Rotation() = default;
    explicit Rotation(Eigen::MatrixXd m);
    static Rotation identity(int d);
    static Rotation planar(double angle);

    const Eigen::MatrixXd& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }
    Rotation compose(const Rotation& other) const { return Rotation(m_ * other.m_); }
    Rotation inverse() const { return Rotation(m_.transpose()); }

private:
    Eigen::MatrixXd m_;
};

Rotation haar_rotation(Rng& rng, int d);

// A block of consecutive frame coordinates: either a ball of `radius` or a
// box with per-coordinate `halfwidths`.
struct BodyBlock {
    int dim = 1;
    bool round = false;
    double radius = 0.0;
    std::vector<double> halfwidths;
};

enum class BodyKind { box, slab, cylinder, ball };

const char* to_string(BodyKind k);

// Product of blocks in an orthonormal frame: y = F^T (x - c).
class ConvexBody {
public:
    static ConvexBody box(Eigen::VectorXd center, Rotation frame, std::vector<double> halfwidths);
    static ConvexBody axis_box(std::vector<double> halfwidths);
    // Frame columns: m tangent directions followed by n-m normals.
    static ConvexBody slab(Eigen::VectorXd center, Rotation frame, std::vector<double> tangential,
                           std::vector<double> transverse);
    static ConvexBody ball(Eigen::VectorXd center, double radius);
    static ConvexBody cylinder(Eigen::VectorXd center, Rotation frame, std::vector<BodyBlock> blocks);

    BodyKind kind() const { return kind_; }
    int dim() const { return static_cast<int>(center_.size()); }
    const Eigen::VectorXd& center() const { return center_; }
    const Rotation& frame() const { return frame_; }
    const std::vector<BodyBlock>& blocks() const { return blocks_; }

    double volume() const;
    // Signed slack of the tightest constraint in body units (>= 0 inside).
    double slack(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double margin = 0.0) const;
    // Support function h(u) = max_{x in K} <u, x>.
    double support(const Eigen::Ref<const Eigen::VectorXd>& u) const;
    // Per-frame-axis scale e_i with sum_i y_i^2/e_i^2 <= 1 on the body.
    Eigen::VectorXd enclosing_ellipsoid_axes() const;
    // Frame halfwidths of the circumscribed box.
    Eigen::VectorXd circumscribed_halfwidths() const;
    // Same body moved by x -> g x.
    ConvexBody rotated(const Rotation& g) const;
    ConvexBody translated(const Eigen::VectorXd& shift) const;
    ConvexBody scaled(double factor) const;

private:
    BodyKind kind_ = BodyKind::box;
    Eigen::VectorXd center_;
    Rotation frame_;
    std::vector<BodyBlock> blocks_;
};

struct JohnBox {
    DyadicTuple dims;           // nearest dyadic to each full side length
    Rotation orientation;       // columns ordered to match dims
    Eigen::VectorXd center;
    Eigen::VectorXd halfwidths;  // exact circumscribing box, same order
    double c = 1.0;             // translate of c*box lies in the body
};

JohnBox john_box(const ConvexBody& body);

struct Embedding {
    Eigen::MatrixXd matrix;  // N x n, equals lambda * frame
    Eigen::MatrixXd frame;   // N x n with orthonormal columns
    double lambda = 1.0;

    int N() const { return static_cast<int>(matrix.rows()); }
    int n() const { return static_cast<int>(matrix.cols()); }
    Eigen::VectorXd project(const Eigen::Ref<const Eigen::VectorXd>& v) const {
        return matrix.transpose() * v;
    }
};

Embedding random_embedding(Rng& rng, int n, int N);
Embedding identity_embedding(int n);

}  // namespace mtf
