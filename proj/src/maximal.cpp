#include "mtforge/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "mtforge/errors.hpp"
#include "mtforge/parallel.hpp"

namespace mtf {

namespace {

constexpr double kPi = std::numbers::pi;

double kernel(double sigma, double h) {
    if (std::abs(sigma) < 1e-14) return 2.0 * h;
    return std::sin(2.0 * kPi * sigma * h) / (kPi * sigma);
}

double kernel_bound(double x, double h) {
    if (x <= 0.0) return 2.0 * h;
    return std::min(2.0 * h, 1.0 / (kPi * x));
}

std::size_t good_size(std::size_t n) {
    std::size_t best = 1;
    while (best < n) best *= 2;
    for (std::size_t a = 1; a <= best; a *= 2)
        for (std::size_t b = a; b <= best; b *= 3)
            for (std::size_t c = b; c <= best; c *= 5)
                if (c >= n && c < best) best = c;
    return best;
}

// Samples of w-hat along sigma -> sigma * nu, reused for several kernels.
struct Slice {
    double P = 1.0;
    std::vector<double> what;  // index j + J
    std::ptrdiff_t J = 0;
};

Slice sample_slice(const FourierWeight& fw, double support, double angle, double halfwidth) {
    double qmax = 0.0;
    for (std::size_t i = 0; i < fw.size(); ++i)
        qmax = std::max(qmax, std::hypot(fw.points[2 * i], fw.points[2 * i + 1]));
    Slice s;
    s.P = 2.0 * (support + halfwidth) + 1.0;
    s.J = static_cast<std::ptrdiff_t>(std::ceil((qmax + fw.cutoff) * s.P));
    s.what.resize(2 * s.J + 1);
    const double c = std::cos(angle), sn = std::sin(angle);
    for (std::ptrdiff_t j = 0; j <= s.J; ++j) {
        const double sig = j / s.P;
        const double xi[2] = {sig * c, sig * sn};
        const double v = fw.value(xi);
        s.what[s.J + j] = v;
        s.what[s.J - j] = v;  // w-hat is even
    }
    return s;
}

StripProfile profile_from(const Slice& s, double halfwidth, double oversample) {
    const std::size_t M = good_size(static_cast<std::size_t>(std::ceil(oversample * (2 * s.J + 1))));
    fftw_complex* buf = fftw_alloc_complex(M);
    for (std::size_t m = 0; m < M; ++m) buf[m][0] = buf[m][1] = 0.0;
    for (std::ptrdiff_t j = -s.J; j <= s.J; ++j) {
        const std::size_t m = static_cast<std::size_t>((j % static_cast<std::ptrdiff_t>(M) + M) % M);
        buf[m][0] += s.what[s.J + j] * kernel(j / s.P, halfwidth) / s.P;
    }
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(M), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    StripProfile out;
    out.offset.resize(M);
    out.value.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double idx = m <= M / 2 ? double(m) : double(m) - double(M);
        out.offset[m] = idx * s.P / M;
        out.value[m] = buf[m][0];
    }
    fftw_destroy_plan(plan);
    fftw_free(buf);
    return out;
}

// Line integral bound Lbar(a) = int_R Gbar(sqrt(x^2 + a^2)) dx with Gbar the
// nonincreasing majorant of |G| cut at rho_c, on a grid of a.
struct LineTable {
    double da = 1.0 / 64;
    std::vector<double> v;
    double operator()(double a) const {
        const auto i = static_cast<std::size_t>(a / da);
        return i < v.size() ? v[i] : 0.0;
    }
};

LineTable line_table(const RadialTable& G, double rho_c, double slack) {
    LineTable t;
    const double dx = 1.0 / 256;
    const std::size_t na = static_cast<std::size_t>(std::ceil(rho_c / t.da)) + 1;
    t.v.resize(na);
    for (std::size_t k = 0; k < na; ++k) {
        const double a = k * t.da;
        double s = 0.0;
        for (std::size_t j = 0;; ++j) {
            const double r = std::hypot(j * dx, a);
            if (r >= rho_c) break;
            s += G.tail_sup(r) + slack;
        }
        t.v[k] = 2.0 * s * dx;
    }
    return t;
}

// Bound on the line integral of |Phi| beyond the cutoff, in units of G.
double far_line_mass(const RadialTable& G, double rho_c) {
    const double step = 1.0 / 256;
    double s = rho_c * G.tail_sup(rho_c);
    for (double r = rho_c; r < G.rho_max(); r += step) s += G.tail_sup(r) * step;
    // Beyond the table the transform is extrapolated with a rho^{-6} envelope.
    const double rm = G.rho_max();
    s += G.tail_sup(rm - step) * rm / 5.0;
    return 2.0 * s;
}

}  // namespace

double StripProfile::max() const { return value.empty() ? 0.0 : *std::max_element(value.begin(), value.end()); }

StripProfile strip_integrals(const FourierWeight& fw, double support_radius, double angle, double halfwidth,
                             double oversample) {
    if (fw.n != 2) throw UnsupportedError("strip integrals are implemented for n = 2", "n");
    return profile_from(sample_slice(fw, support_radius, angle, halfwidth), halfwidth, oversample);
}

MaximalBracket maximal_l(const Weight& w, const FourierWeight& full, int l, const MaximalOptions& opt) {
    if (l < 1 || l > w.n - 1) throw UnsupportedError("l must be 1 or n-1", "l");
    if (w.n != 2) throw UnsupportedError("maximal brackets are implemented for n = 2", "n");
    const FourierWeight fw = full.with_tolerance(opt.slice_tol);
    const double h = opt.halfwidth;
    const double lam = fw.lambda;
    const double scale = fw.R / lam;
    const double rho_c = fw.cutoff * scale;
    const double support = w.support_radius();
    const RadialTable& G = *fw.G;
    const double slack = 1e-11 * std::abs(G.at_zero());
    const LineTable L = line_table(G, rho_c, slack);

    MaximalBracket out;
    out.tail = 2.0 * h * scale * fw.total_mass() * far_line_mass(G, rho_c);

    // Angular bins of the normal in [0, pi), narrow enough that a strip widened
    // by opt.widen covers every strip whose normal lies in the bin.
    const double dphi = 4.0 * std::asin(std::min(1.0, opt.widen / (2.0 * support)));
    const auto B = static_cast<std::size_t>(std::ceil(kPi / dphi));
    const double width = kPi / B;
    out.bins = B;
    std::vector<double> U(B, 0.0);
    double everywhere = 0.0;
    const double delta = fw.cutoff;
    for (std::size_t i = 0; i < fw.size(); ++i) {
        const double q0 = fw.points[2 * i], q1 = fw.points[2 * i + 1];
        const double r = std::hypot(q0, q1);
        const double m = fw.mass[i] * scale;
        if (r <= delta) {
            everywhere += m * L(0.0) * 2.0 * h;
            continue;
        }
        double th = std::atan2(q1, q0);
        th = std::fmod(th + 2.0 * kPi, kPi);
        const double ac = std::asin(std::min(1.0, delta / r));
        const auto b0 = static_cast<std::ptrdiff_t>(std::min<double>(std::floor(th / width), B - 1));
        auto add = [&](std::ptrdiff_t b, double amin, double amax) {
            const std::size_t bb = static_cast<std::size_t>(((b % (std::ptrdiff_t)B) + B) % B);
            const double t = amax >= kPi / 2 ? 0.0 : r * std::cos(amax);
            U[bb] += m * L(scale * r * std::sin(amin)) * kernel_bound(t - delta, h);
        };
        add(b0, 0.0, std::max(th - b0 * width, (b0 + 1) * width - th));
        for (std::ptrdiff_t k = 1; k <= static_cast<std::ptrdiff_t>(B / 2); ++k) {
            const double amin = (b0 + k) * width - th;
            if (amin > ac) break;
            add(b0 + k, amin, amin + width);
        }
        for (std::ptrdiff_t k = 1; k <= static_cast<std::ptrdiff_t>((B - 1) / 2); ++k) {
            const double amin = th - (b0 - k + 1) * width;
            if (amin > ac) break;
            add(b0 - k, amin, amin + width);
        }
    }
    for (double& u : U) u += everywhere + out.tail;

    std::vector<std::size_t> order(B);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return U[a] > U[b]; });

    // Branch and bound: exact widened strips on the most promising bins.
    double running = 0.0;
    std::size_t next = 0;
    while (next < B && out.slices < opt.max_slices && U[order[next]] > running) {
        const std::size_t count = std::min({opt.batch, B - next, opt.max_slices - out.slices});
        std::vector<double> lo(count), hi(count), off(count);
        parallel_for(count, opt.threads, [&](std::size_t k) {
            const double angle = (order[next + k] + 0.5) * width;
            const Slice s = sample_slice(fw, support, angle, h);
            const StripProfile exact = profile_from(s, h, opt.oversample);
            const double grid = exact.offset.size() > 1 ? std::abs(exact.offset[1] - exact.offset[0]) : 0.0;
            const double wide = h + support * 2.0 * std::sin(width / 4.0) + 0.5 * grid;
            const StripProfile covered = profile_from(s, wide, opt.oversample);
            auto it = std::max_element(exact.value.begin(), exact.value.end());
            lo[k] = *it - out.tail;
            off[k] = exact.offset[it - exact.value.begin()];
            hi[k] = covered.max() + out.tail;
        });
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t b = order[next + k];
            if (lo[k] > out.lower) {
                out.lower = lo[k];
                out.angle = (b + 0.5) * width;
                out.offset = off[k];
            }
            running = std::max(running, std::min(U[b], hi[k]));
        }
        next += count;
        out.slices += count;
    }
    out.refined = next >= B || U[order[next]] <= running;
    out.upper = out.refined ? running : std::max(running, U[order[next]]);
    out.lower = std::max(0.0, std::min(out.lower, out.upper));
    return out;
}

}  // namespace mtf
