#include "mtforge/weight.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include <boost/math/quadrature/gauss.hpp>
#include <fftw3.h>

#include "mtforge/errors.hpp"
#include "mtforge/lattice.hpp"

namespace mtf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMassFloor = 1e-13;  // relative to m_0

// Autocorrelation sum_k c(k) c(k+u) over integer points, as (u, value) pairs.
std::vector<std::pair<std::vector<std::int64_t>, double>> autocorrelate(int N, const std::vector<std::int64_t>& keys,
                                                                        const std::vector<double>& coef) {
    const std::size_t P = coef.size();
    std::int64_t K = 0;
    for (auto k : keys) K = std::max<std::int64_t>(K, std::abs(k));
    const std::int64_t M = 4 * K + 1;
    double cells = std::pow(static_cast<double>(M), N);
    std::vector<std::pair<std::vector<std::int64_t>, double>> out;

    if (cells <= double(1 << 22)) {
        const std::size_t total = static_cast<std::size_t>(cells);
        std::vector<int> dims(N, static_cast<int>(M));
        const std::size_t half = total / M * (M / 2 + 1);
        double* in = fftw_alloc_real(total);
        fftw_complex* spec = fftw_alloc_complex(half);
        fftw_plan fwd = fftw_plan_dft_r2c(N, dims.data(), in, spec, FFTW_ESTIMATE);
        fftw_plan bwd = fftw_plan_dft_c2r(N, dims.data(), spec, in, FFTW_ESTIMATE);
        std::fill(in, in + total, 0.0);
        for (std::size_t i = 0; i < P; ++i) {
            std::size_t idx = 0;
            for (int a = 0; a < N; ++a) idx = idx * M + static_cast<std::size_t>(keys[i * N + a] + K);
            in[idx] = coef[i];
        }
        fftw_execute(fwd);
        for (std::size_t i = 0; i < half; ++i) {
            spec[i][0] = spec[i][0] * spec[i][0] + spec[i][1] * spec[i][1];
            spec[i][1] = 0.0;
        }
        fftw_execute(bwd);
        const double scale = 1.0 / static_cast<double>(total);
        const double floor = kMassFloor * in[0] * scale;
        std::vector<std::int64_t> u(N);
        for (std::size_t idx = 0; idx < total; ++idx) {
            const double v = in[idx] * scale;
            if (v <= floor) continue;
            std::size_t r = idx;
            for (int a = N - 1; a >= 0; --a) {
                std::int64_t d = static_cast<std::int64_t>(r % M);
                r /= M;
                u[a] = d <= 2 * K ? d : d - M;
            }
            out.emplace_back(u, v);
        }
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(in);
        fftw_free(spec);
    } else {
        auto pack = [&](std::size_t i, std::size_t j) {
            std::uint64_t key = 0;
            for (int a = 0; a < N; ++a)
                key = key * static_cast<std::uint64_t>(M) +
                      static_cast<std::uint64_t>(keys[i * N + a] - keys[j * N + a] + 2 * K);
            return key;
        };
        std::unordered_map<std::uint64_t, double> acc;
        acc.reserve(P * 64);
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = 0; j < P; ++j) acc[pack(i, j)] += coef[i] * coef[j];
        std::vector<std::pair<std::uint64_t, double>> items(acc.begin(), acc.end());
        std::sort(items.begin(), items.end());
        double m0 = 0.0;
        for (double c : coef) m0 += c * c;
        std::vector<std::int64_t> u(N);
        for (const auto& [key, v] : items) {
            if (v <= kMassFloor * m0) continue;
            std::uint64_t r = key;
            for (int a = N - 1; a >= 0; --a) {
                u[a] = static_cast<std::int64_t>(r % M) - 2 * K;
                r /= M;
            }
            out.emplace_back(u, v);
        }
    }
    return out;
}

}  // namespace

double Weight::envelope(const double* y) const {
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) r2 += y[a] * y[a];
    return build_bump(N)(iota.lambda * std::sqrt(r2) / R);
}

double Weight::value(const double* y) const {
    const double e = envelope(y);
    if (e == 0.0) return 0.0;
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < coef.size(); ++i) {
        double ph = 0.0;
        for (int a = 0; a < n; ++a) ph += proj[i * n + a] * y[a];
        ph *= -2.0 * kPi;
        re += coef[i] * std::cos(ph);
        im += coef[i] * std::sin(ph);
    }
    return norm * e * e * (re * re + im * im);
}

double FourierWeight::phi(double dist) const {
    if (dist >= cutoff) return 0.0;
    return std::pow(R / lambda, n) * (*G)(R * dist / lambda);
}

std::int64_t FourierWeight::cell_of(const double* x, int axis) const {
    return static_cast<std::int64_t>(std::floor((x[axis] - lo_[axis]) / cell_));
}

void FourierWeight::index() {
    cell_ = std::max(cutoff, 1e-12);
    lo_.assign(n, 0.0);
    dims_.assign(n, 1);
    const std::size_t P = size();
    if (P == 0) return;
    std::vector<double> hi(n);
    for (int a = 0; a < n; ++a) {
        lo_[a] = hi[a] = points[a];
        for (std::size_t i = 1; i < P; ++i) {
            lo_[a] = std::min(lo_[a], points[i * n + a]);
            hi[a] = std::max(hi[a], points[i * n + a]);
        }
        dims_[a] = static_cast<std::int64_t>(std::floor((hi[a] - lo_[a]) / cell_)) + 1;
    }
    std::vector<std::int64_t> key(P);
    for (std::size_t i = 0; i < P; ++i) {
        std::int64_t k = 0;
        for (int a = n - 1; a >= 0; --a) k = k * dims_[a] + cell_of(&points[i * n], a);
        key[i] = k;
    }
    order_.resize(P);
    std::iota(order_.begin(), order_.end(), 0u);
    std::stable_sort(order_.begin(), order_.end(), [&](auto x, auto y) { return key[x] < key[y]; });
    cell_key_.resize(P);
    for (std::size_t i = 0; i < P; ++i) cell_key_[i] = key[order_[i]];
}

double FourierWeight::value(const double* xi) const {
    if (size() == 0) return 0.0;
    std::vector<std::int64_t> c(n);
    for (int a = 0; a < n; ++a) {
        c[a] = cell_of(xi, a);
        if (c[a] < -1 || c[a] > dims_[a]) return 0.0;
    }
    // Rows along axis 0 are contiguous in key order; loop over the 3^{n-1} rows.
    int rows = 1;
    for (int a = 1; a < n; ++a) rows *= 3;
    const double c2 = cutoff * cutoff;
    double s = 0.0;
    for (int r = 0; r < rows; ++r) {
        std::int64_t base = 0;
        bool ok = true;
        int rr = r;
        std::int64_t stride = dims_[0];
        for (int a = 1; a < n; ++a) {
            const std::int64_t ca = c[a] + (rr % 3) - 1;
            rr /= 3;
            if (ca < 0 || ca >= dims_[a]) ok = false;
            base += ca * stride;
            stride *= dims_[a];
        }
        if (!ok) continue;
        const std::int64_t x0 = std::max<std::int64_t>(c[0] - 1, 0);
        const std::int64_t x1 = std::min<std::int64_t>(c[0] + 1, dims_[0] - 1);
        if (x0 > x1) continue;
        auto first = std::lower_bound(cell_key_.begin(), cell_key_.end(), base + x0);
        auto last = std::upper_bound(first, cell_key_.end(), base + x1);
        for (auto it = first; it != last; ++it) {
            const std::size_t i = order_[it - cell_key_.begin()];
            double d2 = 0.0;
            for (int a = 0; a < n; ++a) {
                const double d = xi[a] - points[i * n + a];
                d2 += d * d;
            }
            if (d2 < c2) s += mass[i] * phi(std::sqrt(d2));
        }
    }
    return s;
}

double FourierWeight::l1() const {
    std::vector<double> zero(n, 0.0);
    return value(zero.data());
}

double FourierWeight::mass_at(const std::vector<std::int64_t>& u) const {
    for (std::size_t i = 0; i < size(); ++i)
        if (std::equal(u.begin(), u.end(), diff.begin() + i * N)) return mass[i];
    return 0.0;
}

FourierWeight FourierWeight::with_tolerance(double tol) const {
    FourierWeight out = *this;
    out.cutoff = G->effective_support(tol) * lambda / R;
    out.index();
    return out;
}

double plateau_integral(int N, double r0) {
    using GL = boost::math::quadrature::gauss<double, 16>;
    auto f = [&](double r) { return plateau(r, r0) * std::pow(r, N - 1); };
    double s = 0.0;
    const int panels = 64;
    for (int p = 0; p < panels; ++p) s += GL::integrate(f, double(p) / panels, double(p + 1) / panels);
    return 2.0 * std::pow(kPi, 0.5 * N) / std::tgamma(0.5 * N) * s;
}

double FourierWeight::total_mass() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

std::shared_ptr<const RadialTable> envelope_table(int N, int n) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const RadialTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{N, n}];
    if (!slot) {
        const BumpFunction& b = build_bump(N);
        slot = std::make_shared<RadialTable>(
            [&b](double r) {
                const double v = b(r);
                return v * v;
            },
            2.0, n, 24.0, 1.0 / 256);
    }
    return slot;
}

WeightPair build_weight(std::string kind, int n, int N, int l, double R, const Embedding& iota, double spacing,
                        double norm, std::vector<std::int64_t> keys, std::vector<double> coef,
                        const WeightOptions& opt) {
    if (iota.N() != N || iota.n() != n) throw DimensionError("embedding does not map R^n into R^N", "N");
    if (keys.size() != coef.size() * N) throw DimensionError("key stride differs from N", "N");
    WeightPair out;
    Weight& w = out.w;
    w.kind = std::move(kind);
    w.n = n;
    w.N = N;
    w.l = l;
    w.R = R;
    w.spacing = spacing;
    w.norm = norm;
    w.iota = iota;
    w.keys = std::move(keys);
    w.coef = std::move(coef);
    const Eigen::MatrixXd A = spacing * iota.matrix.transpose();  // n x N
    w.proj.resize(w.size() * n);
    for (std::size_t i = 0; i < w.size(); ++i)
        for (int a = 0; a < n; ++a) {
            double s = 0.0;
            for (int b = 0; b < N; ++b) s += A(a, b) * static_cast<double>(w.keys[i * N + b]);
            w.proj[i * n + a] = s;
        }

    FourierWeight& fw = out.fw;
    fw.n = n;
    fw.N = N;
    fw.R = R;
    fw.lambda = iota.lambda;
    fw.G = envelope_table(N, n);
    fw.cutoff = fw.G->effective_support(opt.tail_tol) * iota.lambda / R;
    for (auto& [u, m] : autocorrelate(N, w.keys, w.coef)) {
        fw.diff.insert(fw.diff.end(), u.begin(), u.end());
        fw.mass.push_back(norm * m);
        for (int a = 0; a < n; ++a) {
            double s = 0.0;
            for (int b = 0; b < N; ++b) s += A(a, b) * static_cast<double>(u[b]);
            fw.points.push_back(s);
        }
    }
    fw.index();
    return out;
}

namespace {

WeightPair lattice_weight(std::string kind, int n, int N, int l, double R, const Embedding& iota,
                          const WeightOptions& opt) {
    const double spacing = std::pow(R, -static_cast<double>(l) / N);
    EnumerationOptions eo;
    eo.cap = opt.cap;
    PointSet P = enumerate_in_body(Lattice::scaled_integer(N, spacing), ConvexBody::ball(Eigen::VectorXd::Zero(N), 1.0),
                                   eo);
    std::vector<std::int64_t> keys;
    std::vector<double> coef;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double c = plateau(P.point(i).norm(), opt.r0);
        if (c <= 0.0) continue;
        keys.insert(keys.end(), P.preimages.begin() + i * N, P.preimages.begin() + (i + 1) * N);
        coef.push_back(c);
    }
    const double norm = std::pow(std::pow(R, -static_cast<double>(l)) / plateau_integral(N, opt.r0), 2);
    return build_weight(std::move(kind), n, N, l, R, iota, spacing, norm, std::move(keys), std::move(coef), opt);
}

}  // namespace

WeightPair build_weight_rank2(double R, const WeightOptions& opt) {
    if (!(R >= 16.0)) throw PreconditionError("rank-2 weight needs R >= 16", "R");
    return lattice_weight("rank2", 2, 2, 1, R, identity_embedding(2), opt);
}

WeightPair build_weight_rankN(int n, int N, int l, double R, const Embedding& iota, const WeightOptions& opt) {
    if (!(n < N && N <= 12)) throw DimensionError("rank-N weight needs n < N <= 12", "N");
    if (l < 1 || l > n - 1) throw PreconditionError("l must lie in [1, n-1]", "l");
    if (!(R >= 2.0)) throw PreconditionError("R must be >= 2", "R");
    return lattice_weight("rankN", n, N, l, R, iota, opt);
}

WeightPair build_weight_rankN(int n, int N, int l, double R, Rng& rng, const WeightOptions& opt) {
    if (!(n < N && N <= 12)) throw DimensionError("rank-N weight needs n < N <= 12", "N");
    return build_weight_rankN(n, N, l, R, random_embedding(rng, n, N), opt);
}

WeightPair build_weight_single(int n) {
    return build_weight("single", n, n, 0, 1.0, identity_embedding(n), 1.0, 1.0, std::vector<std::int64_t>(n, 0),
                        {1.0});
}

double weight_l1_spatial(const Weight& w, double spacing) {
    if (w.n > 3) throw UnsupportedError("spatial quadrature supports n <= 3", "n");
    const double rho = w.support_radius();
    const auto m = static_cast<std::int64_t>(std::ceil(rho / spacing));
    const std::int64_t side = 2 * m + 1;
    std::int64_t total = 1;
    for (int a = 0; a < w.n; ++a) total *= side;
    double s = 0.0;
    std::vector<double> y(w.n);
    for (std::int64_t idx = 0; idx < total; ++idx) {
        std::int64_t r = idx;
        double r2 = 0.0;
        for (int a = 0; a < w.n; ++a) {
            y[a] = (static_cast<double>(r % side) - m) * spacing;
            r /= side;
            r2 += y[a] * y[a];
        }
        if (r2 >= rho * rho) continue;
        s += w.value(y.data());
    }
    return s * std::pow(spacing, w.n);
}

}  // namespace mtf
