#pragma once

#include <cstdint>
#include <vector>

namespace mtf {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for k successes in n trials.
Interval wilson(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

// Ordinary least squares y = a + b x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
// Least squares on (log x, log y); nonpositive y are skipped.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> v, double q);
inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace mtf
