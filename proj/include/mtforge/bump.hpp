#pragma once

#include <functional>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

namespace mtf {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

// Radial bump in dimension d: normalized autocorrelation of (1-|x|^2)^2_+,
// so b(0) = 1, supp b = B_2 and the Fourier transform is a squared modulus.
class BumpFunction {
public:
    explicit BumpFunction(int d);

    int dim() const { return d_; }
    double operator()(double r) const;
    // Radial Fourier transform (e^{-2 pi i x.xi} convention), closed form.
    double fourier(double rho) const;
    // j-th derivative of t -> b(|t|) in d = 1 (exact polynomial), j <= 9.
    double derivative1(double t, int j) const;
    // sup |b^{(j)}| for d = 1.
    double derivative_sup1(int j) const;
    double c_low() const { return c_low_; }    // min on B_1
    double c_high() const { return c_high_; }  // max, at the origin
    double psi_norm() const { return norm_; }  // integral of psi^2

private:
    int d_;
    double norm_ = 1.0;
    double c_low_ = 0.0, c_high_ = 1.0;
    Spline spline_;
};

// Cached per dimension; thread-safe.
const BumpFunction& build_bump(int d);

// Unnormalized autocorrelation A(t) of (1-|x|^2)^2_+ in dimension d >= 2, by quadrature.
double bump_autocorrelation(int d, double t);

// Smooth radial cutoff: 1 on [0, r0], 0 on [1, inf).
double plateau(double r, double r0 = 0.5);

// Tabulated radial Fourier transform in dimension n of a radial profile
// supported in [0, support], on [0, rho_max] with the given step.
class RadialTable {
public:
    RadialTable() = default;
    RadialTable(const std::function<double(double)>& profile, double support, int n, double rho_max,
                double step);
    double operator()(double rho) const;
    double rho_max() const { return rho_max_; }
    double at_zero() const { return values_.empty() ? 0.0 : values_[0]; }
    // sup |value| over [rho, rho_max]
    double tail_sup(double rho) const;
    // Smallest tabulated rho beyond which |value| <= tol * |value(0)|.
    double effective_support(double tol) const;

private:
    double rho_max_ = 0.0, step_ = 1.0;
    std::vector<double> values_;
    std::vector<double> tail_;  // running sup from the right
    Spline spline_;
};

// Hankel-type radial transform of a radial profile at one frequency, by
// composite Gauss-Legendre quadrature.
double radial_fourier(const std::function<double(double)>& profile, double support, int n, double rho,
                      int panels = 64);

}  // namespace mtf
