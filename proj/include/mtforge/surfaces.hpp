#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mtforge/lattice.hpp"
#include "mtforge/rng.hpp"

namespace mtf {

// s: [0,1]^m -> R^n with declared bounds bound[j] >= sup |D^gamma s| over |gamma| = j
// (Euclidean norm of the vector-valued derivative), j = 0..k.
struct ParamSurface {
    std::string name;
    int m = 1, n = 2, k = 2;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
    std::vector<double> bound;
    bool periodic = false;  // m = 1 only: s(0) = s(1)

    Eigen::VectorXd operator()(const Eigen::VectorXd& u) const { return eval(u); }
    Eigen::VectorXd at(double u) const { return eval(Eigen::VectorXd::Constant(1, u)); }
    double derivative_bound(int j) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& u) const;  // central differences
};

// c + r (cos 2 pi u, sin 2 pi u).
ParamSurface circle_surface(double radius, const Eigen::Vector2d& center, int k);
// (x, x^2) with x = a + (b - a) u.
ParamSurface parabola_surface(double a, double b, int k);
// a + A u for an n x m matrix A.
ParamSurface affine_surface(const Eigen::VectorXd& a, const Eigen::MatrixXd& A, int k);
// Copy of s translated by v.
ParamSurface translated(const ParamSurface& s, const Eigen::VectorXd& v);

// Slab around s0(U): x = s0(c) + T t + nu with T = Ds0(c), nu orthogonal to
// range T, |t_i| <= tangential and |nu| <= transverse.
struct Cap {
    std::size_t index = 0;
    Eigen::VectorXd lo;      // parameter cell corner
    Eigen::VectorXd center;  // parameter cell centre
    Eigen::VectorXd point;   // s0(center)
    Eigen::MatrixXd tangent;
    Eigen::MatrixXd normal;  // orthonormal complement, n x (n - m)
    Eigen::MatrixXd frame_inverse;  // [tangent normal]^{-1}
    double smin = 1.0;              // least singular value of tangent
    double tangential = 0.0;
    double transverse = 0.0;
};

struct CapPartition {
    ParamSurface base;
    double beta = 0.0, R = 1.0;
    double side = 1.0;        // parameter side length
    std::size_t per_axis = 1;
    double thickening = 0.0;  // R^{-beta k}
    std::vector<Cap> cells;

    // Slab coordinates of x relative to cap i.
    void coordinates(std::size_t i, const Eigen::VectorXd& x, Eigen::VectorXd& t, Eigen::VectorXd& nu) const;
    bool in_slab(std::size_t i, const Eigen::VectorXd& x, double extra) const;
    bool in_thickened(std::size_t i, const Eigen::VectorXd& x) const { return in_slab(i, x, thickening); }
};

CapPartition partition_caps(const ParamSurface& s0, double R, double beta);

struct Assignment {
    std::size_t cap = 0;
    Eigen::VectorXd target;
    Eigen::VectorXd foot;  // parameter u* with s0(u*) closest to target
    double offset = 0.0;   // |target - s0(u*)|
    double weight = 1.0;
};

struct GoodCapOptions {
    double core = 0.25;  // foot must lie within core * side of the cell centre (sup norm)
    // When positive, candidates with offset at most this are ranked by point
    // weight first (heaviest wins), ahead of all farther candidates.
    double prefer_weight_within = 0.0;
};

// For each cap, the candidate inside the thickened slab with the smallest
// offset from s0 and foot in the core; ties by lexicographic order.
// JarnikOptions::good.prefer_weight_within switches to heaviest reachable.
std::vector<Assignment> find_good_caps(const CapPartition& part, const PointSet& P, const GoodCapOptions& opt = {});
// Same against the lattice spacing * Z^n, enumerated per slab.
std::vector<Assignment> find_good_caps_lattice(const CapPartition& part, double spacing,
                                               const GoodCapOptions& opt = {});

// Foot of the perpendicular from x to s0 near u0 (Gauss-Newton).
Eigen::VectorXd foot_point(const ParamSurface& s0, const Eigen::VectorXd& x, Eigen::VectorXd u0);

struct PerturbationOptions {
    double reach = 1.0;         // a_max = reach * R^{-beta k}
    double bump_radius = 0.125;  // bump radius in units of the cap side
};

struct CertReport {
    std::vector<double> measured;  // max finite difference per order 0..k
    std::vector<double> declared;
    std::vector<double> at;        // parameter location of each maximum (m = 1)
    bool pass = true;
    int worst_order = -1;
};

class RichSurface {
public:
    ParamSurface base;
    CapPartition partition;
    std::vector<Assignment> assignments;
    double a_max = 0.0;
    double radius = 0.0;  // bump radius in parameter units
    std::vector<Eigen::VectorXd> incident;  // targets, exactly on the surface
    CertReport certification;

    Eigen::VectorXd operator()(const Eigen::VectorXd& u) const;
    Eigen::VectorXd at(double u) const { return (*this)(Eigen::VectorXd::Constant(1, u)); }
    // Perturbation part only.
    Eigen::VectorXd perturbation(const Eigen::VectorXd& u) const;
    // Declared bound on order-j derivatives of s.
    double declared_bound(int j) const;

    std::vector<std::size_t> cap_lookup;  // cap index -> assignment index or npos
};

// Perturbs s0 by bumps centred at each foot so that s(u*) = target.
// Supports m = 1. Throws ReachError when an offset exceeds a_max.
RichSurface build_perturbation(const CapPartition& part, const std::vector<Assignment>& assignments,
                               const PerturbationOptions& opt = {});

// Central finite differences of order <= k on a grid of the given spacing.
CertReport certify_ck(const RichSurface& s, int k, double spacing);

struct JarnikOptions {
    double epsilon = 0.05;  // translation radius
    double beta = 0.0;      // 0 selects n / (m + k (n - m))
    PerturbationOptions perturbation;
    GoodCapOptions good;
};

struct JarnikResult {
    RichSurface surface;
    Eigen::VectorXd translation;
    double beta = 0.0;
    std::size_t caps = 0;
    std::size_t good = 0;
    std::vector<std::size_t> reach_failures;
    std::size_t incident_count() const { return surface.incident.size(); }
};

// Rich surface through points of (1/R) Z^n.
JarnikResult jarnik_surface(int n, int m, int k, double R, const ParamSurface& base, Rng& rng,
                            const JarnikOptions& opt = {});

// Same pipeline against an explicit point set.
JarnikResult rich_surface_for(const PointSet& P, int k, double R, double beta, const ParamSurface& base, Rng& rng,
                              const JarnikOptions& opt = {});

std::string to_json(const RichSurface& s, int indent = -1);

}  // namespace mtf
