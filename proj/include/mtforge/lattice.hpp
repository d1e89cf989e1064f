#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "mtforge/convex.hpp"

namespace mtf {

class Lattice {
public:
    explicit Lattice(Eigen::MatrixXd basis);
    static Lattice scaled_integer(int N, double scale);

    int dim() const { return static_cast<int>(basis_.rows()); }
    const Eigen::MatrixXd& basis() const { return basis_; }
    double covolume() const;
    bool is_diagonal() const;
    Eigen::VectorXd point(const std::vector<std::int64_t>& z) const;

private:
    Eigen::MatrixXd basis_;
};

Lattice dual(const Lattice& L);

// Flat storage: point i occupies coords[i*dim .. i*dim+dim).
struct PointSet {
    int dim = 0;
    std::vector<double> coords;
    std::vector<std::int64_t> preimages;  // integer coordinates, stride = preimage_dim
    int preimage_dim = 0;
    std::vector<double> weights;          // empty means unit weights
    std::vector<std::uint8_t> boundary;   // set when within the membership margin
    std::string provenance;

    std::size_t size() const { return dim ? coords.size() / dim : 0; }
    const double* at(std::size_t i) const { return coords.data() + i * dim; }
    Eigen::Map<const Eigen::VectorXd> point(std::size_t i) const {
        return Eigen::Map<const Eigen::VectorXd>(at(i), dim);
    }
    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
    double total_weight() const;
    std::size_t boundary_count() const;
    void push(const double* x, double w = 1.0);
};

struct EnumerationOptions {
    std::uint64_t cap = 10'000'000;
    double margin = 1e-9;
};

// Lattice points of the closed body, in lexicographic order of integer coordinates.
PointSet enumerate_in_body(const Lattice& L, const ConvexBody& body, const EnumerationOptions& opt = {});
std::uint64_t count_in_body(const Lattice& L, const ConvexBody& body, const EnumerationOptions& opt = {});

struct Tube {
    int l = 1;
    Eigen::VectorXd anchor;
    Eigen::MatrixXd frame;  // n x l, orthonormal columns
    double radius = 0.0;
    double length = 0.0;
};

struct TubeSearchOptions {
    int anchor_neighbors = 6;     // nearest neighbours used to generate pair directions
    std::size_t max_anchor_directions = 4096;
    double widen = 1.0;           // transverse slack allowed for the covering bound
    std::size_t max_grid_directions = 20000;
    double grid_budget = 4e8;     // point-direction visits allowed for the upper bound
    bool upper = true;
};

struct TubeCount {
    double lower = 0.0;  // weight of points in the witness tube
    double upper = 0.0;  // covering bound for the supremum
    Tube witness;
    std::size_t directions = 0;
    bool upper_trivial = false;  // upper fell back to the total weight
};

// Sup over tubes (radius, segment length) of the weight of P inside. Supports
// n = 2 with l = 1, and n = 3 with l = 1 for small sets.
TubeCount max_tube_count(const PointSet& P, int l, double radius, double length,
                         const TubeSearchOptions& opt = {});

// Best tube with a fixed axis direction (n >= 2, l = 1). Cost grows like
// |P|^n for n >= 4, so keep P small there.
TubeCount max_tube_count_direction(const PointSet& P, const Eigen::VectorXd& direction, double radius,
                                   double length);

// Projections iota^t v of lattice points with |iota^t v| <= r and transverse
// distance to V at most `thickness`.
PointSet project_points(const Embedding& iota, const Lattice& L, double r, double thickness,
                        const EnumerationOptions& opt = {});

}  // namespace mtf
