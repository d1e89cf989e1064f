#pragma once

#include <cstdint>
#include <vector>

#include "mtforge/convex.hpp"
#include "mtforge/stats.hpp"

namespace mtf {

struct TailRow {
    double K = 0.0;
    std::uint64_t hits = 0;
    double p = 0.0;
    Interval ci;
};

struct TailEstimate {
    std::vector<TailRow> rows;  // ascending K, p nonincreasing
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    LineFit fit;                // log p against log K on the accepted rows
    std::vector<double> fit_K;
};

struct TailOptions {
    double fit_min = 8.0;
    double fit_max = 32.0;
    double max_relative_width = 0.5;  // (ci_hi - ci_lo) / p for a row to enter the fit
    int threads = 1;
};

// Tail of |gT ∩ Z^N| over Haar-random g in SO(N).
TailEstimate tail_rotated_body(int N, const ConvexBody& T, std::uint64_t trials, const std::vector<double>& K_grid,
                               std::uint64_t seed, const TailOptions& opt = {});

struct FamilyTail {
    TailEstimate pooled;  // hits summed over the family, trials = members * trials
    std::vector<TailEstimate> members;
};

// Member b runs under seed derive_seed(seed, b).
FamilyTail tail_box_family(int N, const std::vector<ConvexBody>& family, std::uint64_t trials,
                           const std::vector<double>& K_grid, std::uint64_t seed, const TailOptions& opt = {});

// Axis boxes of volume 1: two-long slabs (x,x,1/4x,1/4x) for x in {4,8,16,32},
// a three-long slab (4,4,4,1/1024) and a needle (1024, y,y,y), as halfwidths.
std::vector<ConvexBody> eccentric_boxes4();

// Fills p, ci and the slope fit from per-row hit counts.
void finish_tail(TailEstimate& est, const TailOptions& opt);

struct ConstantSweep {
    double constant = 0.0;
    std::uint64_t hits = 0;
    double p = 0.0;
    Interval ci;
};

struct ContainmentEstimate {
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double constant = 4.0;
    std::uint64_t hits = 0;
    double p = 0.0;
    Interval ci;
    double incidence = 0.0;  // I(a, b)
    std::vector<ConstantSweep> sweep;
};

// Probability that every side vector a_i g e_i of g[a] lies in C[b].
ContainmentEstimate containment_probability(const DyadicTuple& a, const DyadicTuple& b, std::uint64_t trials,
                                            std::uint64_t seed, double constant = 4.0, int threads = 1);

struct ShellRow {
    double lambda = 0.0;
    std::uint64_t hits = 0;  // ratio in (1/(2 lambda), 1/lambda]
    double p = 0.0;
    Interval ci;
    double bound = 0.0;  // (lambda log lambda)^{-d} I(s meet t, s join t)
};

struct IntersectionEstimate {
    TailEstimate tail;              // K = 1/lambda, event |gS∩T| >= K |s meet t|
    std::vector<ShellRow> shells;
    std::vector<ConstantSweep> chi;  // event |gS∩T| >= |s meet t| / kappa
    double kappa = 4.0;
    double chi_p = 0.0;
    Interval chi_ci;
    double incidence = 0.0;  // I(s meet t, s join t)
    double mean_ratio = 0.0;
    std::size_t samples = 0;
};

struct IntersectionOptions {
    std::size_t samples = 10000;
    double kappa = 4.0;
    int threads = 1;
};

// |g[s] ∩ [t]| estimated by randomly shifted rank-1 lattice rules.
IntersectionEstimate intersection_shape_tail(const DyadicTuple& s, const DyadicTuple& t,
                                             const std::vector<double>& lambda_grid, std::uint64_t trials,
                                             std::uint64_t seed, const IntersectionOptions& opt = {});

// Volume of g[s] ∩ [t] with `samples` points of a shifted Kronecker sequence.
double intersection_volume(const DyadicTuple& s, const DyadicTuple& t, const Rotation& g, std::size_t samples,
                           Rng& rng);

struct DensitySweep {
    int n = 0, N = 0;
    double R = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    std::vector<double> densities;  // per trial
    std::vector<double> volumes;
    std::vector<std::uint64_t> counts;
    double max_density = 0.0;
    double log_max = 0.0;           // log_R(max density)
    double log_q90 = 0.0;           // log_R of the 90th percentile density
    double exponent_scale = 0.0;    // n^2/N
    double multiple = 1.0;
    bool within = false;            // log_max <= multiple * n^2/N
};

struct DensityOptions {
    double max_volume = 16384.0;
    double multiple = 1.0;
    int threads = 1;
};

// |S ∩ Z^N| / |S| for the cylinder over a box in the column span of `frame`
// (orthonormal N x n) with a round (N-n)-dimensional cross section.
double cylinder_density(const Eigen::MatrixXd& frame, const std::vector<double>& base_halfwidths, double height,
                        std::uint64_t* count = nullptr);

DensitySweep subspace_density_sweep(int n, int N, double R, std::uint64_t trials, std::uint64_t seed,
                                    const DensityOptions& opt = {});

struct KakeyaRow {
    double delta = 0.0;
    std::uint64_t centres = 0;
    double f0_norm = 0.0;     // ||F_0||_{L^N}
    double k_norm = 0.0;      // ||K_delta F_0||_{L^N} over the direction sample
    double mean_count = 0.0;  // mean best tube count in rescaled units
    std::uint64_t max_count = 0;
};

struct KakeyaSummary {
    int N = 0;
    std::size_t directions = 0;
    std::uint64_t seed = 0;
    std::vector<KakeyaRow> rows;
    LineFit k_fit;   // log ||K_delta F_0|| against log delta
    LineFit f0_fit;  // log ||F_0|| against log delta
};

// Exact |Z^N ∩ B_rho| by slicing.
std::uint64_t ball_lattice_count(int N, double rho);

KakeyaSummary kakeya_lattice_experiment(int N, const std::vector<double>& deltas, std::size_t directions,
                                        std::uint64_t seed, int threads = 1);

double unit_ball_volume(int d);

}  // namespace mtf
