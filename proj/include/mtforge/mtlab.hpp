#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtforge/lattice.hpp"
#include "mtforge/maximal.hpp"
#include "mtforge/surfaces.hpp"
#include "mtforge/weight.hpp"

namespace mtf {

// A curve u in [0,1] -> R^n.
struct Curve {
    std::function<Eigen::VectorXd(double)> eval;
    int n = 2;
    bool periodic = false;
    double speed_bound = 1.0;  // sup |s'|, sets the parameter step

    static Curve from(const ParamSurface& s);
    static Curve from(const RichSurface& s);
};

// Trapezoid nodes with arc-length weights: integral of g dsigma ~ sum weight_i g(point_i).
struct SurfaceSamples {
    int n = 2;
    std::vector<double> param;
    std::vector<double> points;  // stride n
    std::vector<double> weight;  // du * |s'(u)| with trapezoid end factors
    double spacing = 0.0;        // ambient spacing bound

    std::size_t size() const { return param.size(); }
    const double* point(std::size_t i) const { return points.data() + i * n; }
    double measure() const;
};

// Samples with ambient spacing at most `spacing`.
SurfaceSamples sample_curve(const Curve& c, double spacing);

// w-hat at every sample.
std::vector<double> fourier_on_surface(const FourierWeight& fw, const SurfaceSamples& S, int threads = 1);

// Sum of weight_i |field_i|^2.
double l2_norm_sq(const SurfaceSamples& S, const std::vector<double>& field);

struct L2Result {
    double value = 0.0;     // squared L2(dsigma) norm
    double previous = 0.0;  // value at twice the spacing
    double spacing = 0.0;
    int halvings = 0;
};

// Squared L2 norm of a field on the curve, halving the spacing until the
// relative change is below tol; QuadratureError after max_halvings.
L2Result l2_surface_norm(const Curve& c, const std::function<std::vector<double>(const SurfaceSamples&)>& field,
                         double spacing, double tol = 0.01, int max_halvings = 6);

// E f(x) = sum_i weight_i f_i e^{2 pi i <x, sigma_i>}.
std::vector<std::complex<double>> extension_eval(const SurfaceSamples& S, const std::vector<std::complex<double>>& f,
                                                 const std::vector<Eigen::VectorXd>& x, int threads = 1);

struct DualityReport {
    double lhs = 0.0;   // integral of |E f|^2 w
    double rhs = 0.0;   // |w-hat|^2_{L2(Sigma)} / |w|_1
    double ratio = 0.0;
    double lhs_refined = 0.0;  // at half the spacing
    double drift = 0.0;        // relative change of lhs under refinement
    double l1 = 0.0;
    double l2sq = 0.0;
    std::size_t samples = 0;
};

// f = conj(w-hat)|_Sigma normalised in L2; the left side by the double sum
// sum_ij f_i conj(f_j) w-hat(sigma_j - sigma_i) weight_i weight_j.
DualityReport duality_check(const FourierWeight& fw, const Curve& c, double spacing, int threads = 1);

struct MTReport {
    double R = 0.0;
    int n = 2, m = 1, l = 1, k = 2, N = 8;
    std::uint64_t seed = 0;
    double l1 = 0.0;
    double maximal_lo = 0.0, maximal_hi = 0.0;
    double l2_surface = 0.0;  // squared norm of w-hat on Sigma
    double l2_base = 0.0;     // same on the translated, unperturbed circle
    std::size_t incident_count = 0;
    double ratio = 0.0;        // with the upper bracket
    double ratio_lower = 0.0;  // with the lower bracket
    double alpha = 0.0;
    double min_peak = 0.0;     // min over incident points of w-hat / R^{n-l} near them
    bool certified = false;
};

// C'^2 = l2 / (R^{n-l-m} l1 M).
double mt_ratio(double l2sq, double R, int n, int l, int m, double l1, double maximal);

struct BlowupOptions {
    int n = 2, m = 1, l = 1, k = 2, N = 8;
    double tau = 0.05;       // targets are iota^t u with m_u >= tau m_0
    double radius = 0.5;     // base circle radius
    double epsilon = 0.05;   // translation radius
    double beta = 0.0;       // 0 selects alpha / m
    double spacing = 0.1;    // surface spacing in units of 1/R
    double l2_tol = 0.01;
    WeightOptions weight;
    MaximalOptions maximal;
    int threads = 1;
};

// Weight, rich surface through heavy projected differences, and C'^2 at one (R, seed).
MTReport blowup_point(double R, std::uint64_t seed, const BlowupOptions& opt);

struct BlowupSweep {
    std::vector<MTReport> rows;
    double slope = 0.0;         // least squares of log ratio on log R over all rows
    double slope_median = 0.0;  // through per-R medians
    double intercept = 0.0;
};

BlowupSweep blowup_sweep(const std::vector<double>& Rs, std::uint64_t seed, int seeds, const BlowupOptions& opt);

// Heavy projected differences as a weighted point set (weights m_u / m_0).
PointSet heavy_targets(const FourierWeight& fw, double tau, double radius);

struct ControlReport {
    double R = 0.0;
    double lhs = 0.0;      // integral over B_R of |E 1|^2
    double f_norm_sq = 0.0;
    double maximal = 0.0;  // sup over unit-halfwidth strips of |B_R ∩ T|
    double ratio = 0.0;
};

// f = 1 on the unit circle against w = 1_{B_R} (n = 2, m = 1, l = 1).
ControlReport mt_control_ball(double R, int threads = 1);

struct WarmupPoint {
    double R = 0.0;
    std::uint64_t near_curve = 0;  // |S ∩ L_0|
    double tube_max = 0.0;         // sup_T |L_0' ∩ T|
    bool holds = false;
};

struct WarmupReport {
    std::vector<WarmupPoint> points;
    double slope_curve = 0.0;
    double slope_tube = 0.0;
};

// Parabola y = x^2 over [-1, 1]; L_0 = R^{-1/2} Z^2 ∩ B_1 within 1/R of it, and
// the best 1 x R tube count in R^{1/2} Z^2 ∩ B_R.
WarmupPoint warmup_point(double R);
WarmupReport warmup(const std::vector<double>& Rs);

}  // namespace mtf
