#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mtforge/bump.hpp"
#include "mtforge/convex.hpp"
#include "mtforge/rng.hpp"

namespace mtf {

struct WeightOptions {
    double r0 = 0.8;          // coefficient profile is plateau(|v|, r0), supported in B_1
    double tail_tol = 1e-10;  // envelope transform is cut where |G| < tail_tol * G(0)
    std::uint64_t cap = 10'000'000;
};

// w(y) = norm E(y)^2 |sum_v c_v e^{-2 pi i <iota^t v, y>}|^2 with
// E(y) = b_N(lambda |y| / R), v over R^{-l/N} Z^N ∩ B_1 and
// norm = (R^{-l} / int c)^2, so each dual bump has unit height.
class Weight {
public:
    std::string kind;
    int n = 0, N = 0, l = 0;
    double R = 1.0;
    double spacing = 1.0;  // lattice spacing R^{-l/N}
    double norm = 1.0;
    Embedding iota;
    std::vector<std::int64_t> keys;  // integer coordinates, stride N
    std::vector<double> proj;        // iota^t v, stride n
    std::vector<double> coef;        // c_v > 0

    std::size_t size() const { return coef.size(); }
    double envelope(const double* y) const;
    double value(const double* y) const;
    double value(const Eigen::VectorXd& y) const { return value(y.data()); }
    // supp w ⊆ B_{support_radius()}
    double support_radius() const { return 2.0 * R / iota.lambda; }
};

// w-hat(xi) = sum_u m_u Phi(xi - iota^t u), Phi(xi) = (R/lambda)^n G(R|xi|/lambda)
// with G the n-dimensional transform of b_N(|.|)^2.
class FourierWeight {
public:
    int n = 0;
    double R = 1.0, lambda = 1.0;
    std::vector<double> points;  // iota^t u, stride n
    std::vector<double> mass;    // m_u
    std::vector<std::int64_t> diff;  // integer u, stride N
    int N = 0;
    std::shared_ptr<const RadialTable> G;
    double cutoff = 0.0;  // Phi treated as 0 beyond this distance

    std::size_t size() const { return mass.size(); }
    double phi(double dist) const;
    double value(const double* xi) const;
    double value(const Eigen::VectorXd& xi) const { return value(xi.data()); }
    double l1() const;  // w-hat(0)
    double mass_at(const std::vector<std::int64_t>& u) const;
    double total_mass() const;

    void index();  // builds the cell lookup; called by the builders
    // Copy whose Phi is cut where |G| < tol * G(0).
    FourierWeight with_tolerance(double tol) const;

private:
    double cell_ = 1.0;
    std::vector<double> lo_;
    std::vector<std::int64_t> dims_;
    std::vector<std::int64_t> cell_key_;  // sorted
    std::vector<std::uint32_t> order_;    // point index per sorted slot
    std::int64_t cell_of(const double* x, int axis) const;
};

struct WeightPair {
    Weight w;
    FourierWeight fw;
};

// Envelope transform table for (N, n); cached.
std::shared_ptr<const RadialTable> envelope_table(int N, int n);

// Generic builder from explicit lattice data.
WeightPair build_weight(std::string kind, int n, int N, int l, double R, const Embedding& iota, double spacing,
                        double norm, std::vector<std::int64_t> keys, std::vector<double> coef,
                        const WeightOptions& opt = {});

// Integral of plateau(|x|, r0) over R^N.
double plateau_integral(int N, double r0);

// n = 2 warm-up weight over R^{-1/2} Z^2 ∩ B_1.
WeightPair build_weight_rank2(double R, const WeightOptions& opt = {});

// Projection of R^{-l/N} Z^N ∩ B_1 under a random embedding.
WeightPair build_weight_rankN(int n, int N, int l, double R, Rng& rng, const WeightOptions& opt = {});

// Same with a given embedding.
WeightPair build_weight_rankN(int n, int N, int l, double R, const Embedding& iota, const WeightOptions& opt = {});

// w = b_n(|y|)^2: one unit bump at the origin.
WeightPair build_weight_single(int n);

// Trapezoid rule for the integral of w over a cube grid of the given spacing (n <= 3).
double weight_l1_spatial(const Weight& w, double spacing);

}  // namespace mtf
