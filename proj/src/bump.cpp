#include "mtforge/bump.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mtforge/errors.hpp"

namespace mtf {

namespace {

constexpr double kPi = std::numbers::pi;

// b(t) for d = 1 on t >= 0: sum of kCoef[k] t^k.
constexpr std::array<double, 10> kCoef = {1.0, 0.0, -1.5, 0.0, 1.3125, -0.65625, 0.0, 0.046875, 0.0, -0.001953125};

double poly1(double t, int j) {
    double s = 0.0;
    for (int k = j; k < 10; ++k) {
        if (kCoef[k] == 0.0) continue;
        double c = kCoef[k];
        for (int i = 0; i < j; ++i) c *= (k - i);
        s += c * std::pow(t, k - j);
    }
    return s;
}

double sphere_area(int dim) {  // surface of the unit sphere in R^dim
    return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

constexpr int kTablePoints = 4097;

}  // namespace

double bump_autocorrelation(int d, double t) {
    if (d < 2) throw DimensionError("autocorrelation quadrature needs d >= 2", "d");
    t = std::abs(t);
    if (t >= 2.0) return 0.0;
    static thread_local boost::math::quadrature::tanh_sinh<double> ts;
    const double p = 0.5 * (d - 3);
    const double shell = sphere_area(d - 1);
    auto inner = [&](double x1) {
        double a = 1.0 - x1 * x1;
        double b = 1.0 - (x1 - t) * (x1 - t);
        if (a <= 0.0) return 0.0;
        const double q[5] = {a * a * b * b, -2.0 * a * a * b - 2.0 * a * b * b, a * a + 4.0 * a * b + b * b,
                             -2.0 * a - 2.0 * b, 1.0};
        double s = 0.0;
        for (int k = 0; k < 5; ++k) s += q[k] * std::pow(a, p + k + 1) / (p + k + 1);
        return 0.5 * shell * s;
    };
    return 2.0 * ts.integrate(inner, 0.5 * t, 1.0);
}

BumpFunction::BumpFunction(int d) : d_(d) {
    if (d < 1 || d > 16) throw DimensionError("bump dimension must be in [1,16]", "d");
    norm_ = std::pow(kPi, 0.5 * d) * 24.0 / std::tgamma(0.5 * d + 5.0);
    if (d == 1) {
        c_low_ = poly1(1.0, 0);
        return;
    }
    std::vector<double> table(kTablePoints);
    const double h = 2.0 / (kTablePoints - 1);
    for (int i = 0; i < kTablePoints; ++i) table[i] = bump_autocorrelation(d, i * h) / norm_;
    table.front() = 1.0;
    table.back() = 0.0;
    spline_ = Spline(table.data(), table.size(), 0.0, h, 0.0, 0.0);
    c_low_ = (*this)(1.0);
}

double BumpFunction::operator()(double r) const {
    r = std::abs(r);
    if (r >= 2.0) return 0.0;
    if (d_ == 1) return poly1(r, 0);
    return std::max(0.0, spline_(r));
}

double BumpFunction::fourier(double rho) const {
    rho = std::abs(rho);
    const double nu = 0.5 * d_ + 2.0;
    double psi_hat;
    if (rho < 1e-8)
        psi_hat = 2.0 * std::pow(kPi, 0.5 * d_) / std::tgamma(nu + 1.0);
    else
        psi_hat = 2.0 / (kPi * kPi) * std::pow(rho, -nu) * std::cyl_bessel_j(nu, 2.0 * kPi * rho);
    return psi_hat * psi_hat / norm_;
}

double BumpFunction::derivative1(double t, int j) const {
    if (d_ != 1) throw UnsupportedError("exact derivatives are available for d = 1 only", "d");
    if (j < 0 || j > 9) throw PreconditionError("derivative order must be in [0,9]", "j");
    const double a = std::abs(t);
    if (a >= 2.0) return 0.0;
    const double v = poly1(a, j);
    return (t < 0.0 && (j % 2 == 1)) ? -v : v;
}

double BumpFunction::derivative_sup1(int j) const {
    double best = 0.0;
    const int n = 20000;
    for (int i = 0; i <= n; ++i) best = std::max(best, std::abs(derivative1(2.0 * i / n, j)));
    return best;
}

const BumpFunction& build_bump(int d) {
    if (d < 1 || d > 16) throw DimensionError("bump dimension must be in [1,16]", "d");
    static std::mutex mu;
    static std::array<std::unique_ptr<BumpFunction>, 17> cache;
    std::lock_guard<std::mutex> lock(mu);
    if (!cache[d]) cache[d] = std::make_unique<BumpFunction>(d);
    return *cache[d];
}

double plateau(double r, double r0) {
    r = std::abs(r);
    if (r <= r0) return 1.0;
    if (r >= 1.0) return 0.0;
    auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
    const double x = (r - r0) / (1.0 - r0);
    return 1.0 - f(x) / (f(x) + f(1.0 - x));
}

double radial_fourier(const std::function<double(double)>& profile, double support, int n, double rho,
                      int panels) {
    using GL = boost::math::quadrature::gauss<double, 16>;
    rho = std::abs(rho);
    std::function<double(double)> g;
    double scale;
    if (rho == 0.0) {
        g = [&](double r) { return profile(r) * std::pow(r, n - 1); };
        scale = sphere_area(n);
    } else if (n == 1) {
        g = [&](double r) { return profile(r) * std::cos(2.0 * kPi * rho * r); };
        scale = 2.0;
    } else {
        const double nu = 0.5 * n - 1.0;
        g = [&, nu](double r) { return profile(r) * std::cyl_bessel_j(nu, 2.0 * kPi * rho * r) * std::pow(r, 0.5 * n); };
        scale = 2.0 * kPi * std::pow(rho, 1.0 - 0.5 * n);
    }
    double s = 0.0;
    const double w = support / panels;
    for (int p = 0; p < panels; ++p) s += GL::integrate(g, p * w, (p + 1) * w);
    return scale * s;
}

RadialTable::RadialTable(const std::function<double(double)>& profile, double support, int n, double rho_max,
                         double step)
    : rho_max_(rho_max), step_(step) {
    if (n < 1) throw DimensionError("radial transform needs n >= 1", "n");
    using GL = boost::math::quadrature::gauss<double, 16>;
    // Project onto one axis, P(x) = integral of f over the orthogonal hyperplane,
    // then take the cosine transform of P by the trapezoid rule.
    const int m = 1024;
    const double h = support / m;
    std::vector<double> proj(m + 1, 0.0);
    for (int j = 0; j < m; ++j) {
        const double x = j * h;
        if (n == 1) {
            proj[j] = profile(x);
            continue;
        }
        const double top = std::sqrt(std::max(0.0, support * support - x * x));
        auto g = [&](double s) { return profile(std::hypot(x, s)) * std::pow(s, n - 2); };
        const int panels = 16;
        double acc = 0.0;
        for (int p = 0; p < panels; ++p) acc += GL::integrate(g, top * p / panels, top * (p + 1) / panels);
        proj[j] = sphere_area(n - 1) * acc;
    }
    const std::size_t count = static_cast<std::size_t>(std::ceil(rho_max / step)) + 1;
    rho_max_ = (count - 1) * step;
    values_.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double w = 2.0 * kPi * i * step * h;
        double acc = 0.5 * proj[0];
        for (int j = 1; j <= m; ++j) acc += proj[j] * std::cos(w * j);
        values_[i] = 2.0 * h * acc;
    }
    tail_.resize(count);
    double mx = 0.0;
    for (std::size_t i = count; i-- > 0;) {
        mx = std::max(mx, std::abs(values_[i]));
        tail_[i] = mx;
    }
    spline_ = Spline(values_.data(), values_.size(), 0.0, step, 0.0);
}

double RadialTable::operator()(double rho) const {
    rho = std::abs(rho);
    if (rho >= rho_max_) return 0.0;
    return spline_(rho);
}

double RadialTable::tail_sup(double rho) const {
    rho = std::abs(rho);
    if (rho >= rho_max_) return 0.0;
    const auto i = static_cast<std::size_t>(rho / step_);
    return tail_[i];
}

double RadialTable::effective_support(double tol) const {
    const double bound = tol * std::abs(at_zero());
    for (std::size_t i = 0; i < tail_.size(); ++i)
        if (tail_[i] <= bound) return i * step_;
    return rho_max_;
}

}  // namespace mtf
