#include "mtforge/mtlab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <numbers>

#include "mtforge/bump.hpp"
#include "mtforge/errors.hpp"
#include "mtforge/parallel.hpp"
#include "mtforge/stats.hpp"

namespace mtf {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

Curve Curve::from(const ParamSurface& s) {
    if (s.m != 1) throw UnsupportedError("curves need m = 1", "m");
    Curve c;
    c.n = s.n;
    c.periodic = s.periodic;
    c.speed_bound = s.derivative_bound(1);
    c.eval = [s](double u) { return s.at(u); };
    return c;
}

Curve Curve::from(const RichSurface& s) {
    Curve c;
    c.n = s.base.n;
    c.periodic = s.base.periodic;
    c.speed_bound = s.declared_bound(1);
    c.eval = [&s](double u) { return s.at(u); };
    return c;
}

double SurfaceSamples::measure() const {
    double t = 0.0;
    for (double w : weight) t += w;
    return t;
}

SurfaceSamples sample_curve(const Curve& c, double spacing) {
    if (!(spacing > 0.0)) throw PreconditionError("sample spacing must be positive", "spacing");
    const auto M = static_cast<std::size_t>(std::ceil(c.speed_bound / spacing));
    const double du = 1.0 / M;
    const std::size_t count = c.periodic ? M : M + 1;
    SurfaceSamples S;
    S.n = c.n;
    S.spacing = c.speed_bound * du;
    S.param.resize(count);
    S.points.resize(count * c.n);
    S.weight.resize(count);
    const double h = du * 1e-3;
    for (std::size_t i = 0; i < count; ++i) {
        const double u = i * du;
        const Eigen::VectorXd x = c.eval(u);
        const double speed = (c.eval(u + h) - c.eval(u - h)).norm() / (2.0 * h);
        S.param[i] = u;
        for (int a = 0; a < c.n; ++a) S.points[i * c.n + a] = x[a];
        const double end = (!c.periodic && (i == 0 || i == M)) ? 0.5 : 1.0;
        S.weight[i] = end * du * speed;
    }
    return S;
}

std::vector<double> fourier_on_surface(const FourierWeight& fw, const SurfaceSamples& S, int threads) {
    if (fw.n != S.n) throw DimensionError("weight and surface dimensions differ", "n");
    std::vector<double> out(S.size());
    parallel_for(S.size(), threads, [&](std::size_t i) { out[i] = fw.value(S.point(i)); });
    return out;
}

double l2_norm_sq(const SurfaceSamples& S, const std::vector<double>& field) {
    if (field.size() != S.size()) throw DimensionError("field and samples differ in length", "field");
    double s = 0.0;
    for (std::size_t i = 0; i < S.size(); ++i) s += S.weight[i] * field[i] * field[i];
    return s;
}

L2Result l2_surface_norm(const Curve& c, const std::function<std::vector<double>(const SurfaceSamples&)>& field,
                         double spacing, double tol, int max_halvings) {
    L2Result r;
    SurfaceSamples S = sample_curve(c, spacing);
    r.previous = l2_norm_sq(S, field(S));
    for (int h = 1; h <= max_halvings; ++h) {
        spacing *= 0.5;
        S = sample_curve(c, spacing);
        r.value = l2_norm_sq(S, field(S));
        r.spacing = spacing;
        r.halvings = h;
        const double scale = std::max(std::abs(r.value), std::abs(r.previous));
        if (scale == 0.0 || std::abs(r.value - r.previous) <= tol * scale) return r;
        r.previous = r.value;
    }
    throw QuadratureError("surface L2 norm did not settle under refinement", "spacing");
}

std::vector<std::complex<double>> extension_eval(const SurfaceSamples& S, const std::vector<std::complex<double>>& f,
                                                 const std::vector<Eigen::VectorXd>& x, int threads) {
    if (f.size() != S.size()) throw DimensionError("density and samples differ in length", "f");
    std::vector<std::complex<double>> out(x.size());
    parallel_for(x.size(), threads, [&](std::size_t k) {
        if (x[k].size() != S.n) throw DimensionError("evaluation point dimension differs", "x");
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < S.size(); ++i) {
            double ph = 0.0;
            for (int a = 0; a < S.n; ++a) ph += x[k][a] * S.point(i)[a];
            ph *= 2.0 * kPi;
            acc += S.weight[i] * f[i] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        out[k] = acc;
    });
    return out;
}

namespace {

// sum_ij f_i f_j w-hat(sigma_j - sigma_i) W_i W_j for real f; w-hat is even.
double parseval_lhs(const FourierWeight& fw, const SurfaceSamples& S, const std::vector<double>& f, int threads) {
    const std::size_t M = S.size();
    std::vector<double> row(M, 0.0);
    parallel_for(M, threads, [&](std::size_t i) {
        std::vector<double> d(S.n);
        double acc = 0.0;
        for (std::size_t j = i + 1; j < M; ++j) {
            for (int a = 0; a < S.n; ++a) d[a] = S.point(j)[a] - S.point(i)[a];
            acc += f[j] * S.weight[j] * fw.value(d.data());
        }
        row[i] = f[i] * S.weight[i] * (2.0 * acc + f[i] * S.weight[i] * fw.l1());
    });
    double s = 0.0;
    for (double v : row) s += v;
    return s;
}

}  // namespace

DualityReport duality_check(const FourierWeight& fw, const Curve& c, double spacing, int threads) {
    DualityReport rep;
    rep.l1 = fw.l1();
    auto lhs_at = [&](double h, double* l2sq, std::size_t* count) {
        const SurfaceSamples S = sample_curve(c, h);
        std::vector<double> f = fourier_on_surface(fw, S, threads);
        const double norm = l2_norm_sq(S, f);
        if (l2sq) *l2sq = norm;
        if (count) *count = S.size();
        if (norm == 0.0) return 0.0;
        for (double& v : f) v /= std::sqrt(norm);
        return parseval_lhs(fw, S, f, threads);
    };
    rep.lhs = lhs_at(spacing, &rep.l2sq, &rep.samples);
    rep.lhs_refined = lhs_at(0.5 * spacing, nullptr, nullptr);
    rep.rhs = rep.l1 > 0.0 ? rep.l2sq / rep.l1 : 0.0;
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    rep.drift = rep.lhs != 0.0 ? std::abs(rep.lhs_refined - rep.lhs) / std::abs(rep.lhs) : 0.0;
    return rep;
}

double mt_ratio(double l2sq, double R, int n, int l, int m, double l1, double maximal) {
    if (!(l1 > 0.0)) throw PreconditionError("weight must have positive mass", "l1");
    if (!(maximal > 0.0)) throw PreconditionError("maximal value must be positive", "maximal");
    return l2sq / (std::pow(R, n - l - m) * l1 * maximal);
}

PointSet heavy_targets(const FourierWeight& fw, double tau, double radius) {
    double m0 = 0.0;
    for (double m : fw.mass) m0 = std::max(m0, m);
    PointSet P;
    P.dim = fw.n;
    P.provenance = "heavy projected differences";
    for (std::size_t i = 0; i < fw.size(); ++i) {
        if (fw.mass[i] < tau * m0) continue;
        const double* q = &fw.points[i * fw.n];
        double r2 = 0.0;
        for (int a = 0; a < fw.n; ++a) r2 += q[a] * q[a];
        if (r2 > radius * radius) continue;
        P.push(q, fw.mass[i] / m0);
    }
    return P;
}

MTReport blowup_point(double R, std::uint64_t seed, const BlowupOptions& opt) {
    if (opt.n != 2 || opt.l != 1 || opt.m != 1)
        throw UnsupportedError("the blowup pipeline is implemented for n = 2, m = 1, l = 1", "n");
    MTReport rep;
    rep.R = R;
    rep.n = opt.n;
    rep.m = opt.m;
    rep.l = opt.l;
    rep.k = opt.k;
    rep.N = opt.N;
    rep.seed = seed;
    rep.alpha = double(opt.l * opt.m) / (opt.m + opt.k * (opt.n - opt.m));

    // The embedding and translation depend on the seed only, so a sweep follows one configuration in R.
    Rng rng = make_rng(seed, 0);
    const WeightPair pair = build_weight_rankN(opt.n, opt.N, opt.l, R, rng, opt.weight);
    rep.l1 = pair.fw.l1();
    MaximalOptions mo = opt.maximal;
    mo.threads = opt.threads;
    const MaximalBracket br = maximal_l(pair.w, pair.fw, opt.l, mo);
    rep.maximal_lo = br.lower;
    rep.maximal_hi = br.upper;

    const PointSet P = heavy_targets(pair.fw, opt.tau, opt.radius + opt.epsilon + 0.25);
    const double beta = opt.beta > 0.0 ? opt.beta : rep.alpha / opt.m;
    JarnikOptions jo;
    jo.epsilon = opt.epsilon;
    jo.good.prefer_weight_within = jo.perturbation.reach * std::pow(R, -beta * opt.k);
    const ParamSurface base = circle_surface(opt.radius, Eigen::Vector2d::Zero(), opt.k);
    const JarnikResult rich = P.size() ? rich_surface_for(P, opt.k, R, beta, base, rng, jo)
                                       : JarnikResult{};
    rep.incident_count = rich.incident_count();
    rep.certified = rich.surface.certification.pass;

    const Curve curve = P.size() ? Curve::from(rich.surface) : Curve::from(translated(base, Eigen::Vector2d::Zero()));
    auto field = [&](const SurfaceSamples& S) { return fourier_on_surface(pair.fw, S, opt.threads); };
    rep.l2_surface = l2_surface_norm(curve, field, opt.spacing / R, opt.l2_tol).value;
    const Curve plain = Curve::from(translated(base, P.size() ? rich.translation : Eigen::VectorXd(Eigen::VectorXd::Zero(2))));
    rep.l2_base = l2_surface_norm(plain, field, opt.spacing / R, opt.l2_tol).value;

    const double unit = std::pow(R, opt.n - opt.l);
    rep.min_peak = rep.incident_count ? 1e300 : 0.0;
    for (const auto& p : rich.surface.incident) {
        for (int t = 0; t <= 8; ++t) {
            const double r = t == 0 ? 0.0 : 0.5 / R;
            const double a = 2.0 * kPi * t / 8.0;
            const double xi[2] = {p[0] + r * std::cos(a), p[1] + r * std::sin(a)};
            rep.min_peak = std::min(rep.min_peak, pair.fw.value(xi) / unit);
        }
    }
    rep.ratio = mt_ratio(rep.l2_surface, R, opt.n, opt.l, opt.m, rep.l1, rep.maximal_hi);
    rep.ratio_lower = rep.maximal_lo > 0.0 ? mt_ratio(rep.l2_surface, R, opt.n, opt.l, opt.m, rep.l1, rep.maximal_lo)
                                           : rep.ratio;
    return rep;
}

BlowupSweep blowup_sweep(const std::vector<double>& Rs, std::uint64_t seed, int seeds, const BlowupOptions& opt) {
    BlowupSweep out;
    std::vector<double> x, y, xm, ym;
    for (double R : Rs) {
        std::vector<double> logs;
        for (int s = 0; s < seeds; ++s) {
            MTReport r = blowup_point(R, derive_seed(seed, s), opt);
            r.seed = s;
            x.push_back(std::log(R));
            y.push_back(std::log(r.ratio));
            logs.push_back(std::log(r.ratio));
            out.rows.push_back(r);
        }
        xm.push_back(std::log(R));
        ym.push_back(median(logs));
    }
    if (Rs.size() >= 2) {
        const LineFit f = fit_line(x, y);
        out.slope = f.slope;
        out.intercept = f.intercept;
        out.slope_median = fit_line(xm, ym).slope;
    }
    return out;
}

ControlReport mt_control_ball(double R, int threads) {
    if (!(R >= 2.0)) throw PreconditionError("control needs R >= 2", "R");
    ControlReport rep;
    rep.R = R;
    const Curve circle = Curve::from(circle_surface(1.0, Eigen::Vector2d::Zero(), 2));
    const SurfaceSamples S = sample_curve(circle, 0.25 / R);
    rep.f_norm_sq = S.measure();
    const std::vector<std::complex<double>> f(S.size(), 1.0);
    // |E1| is radial; integrate along a ray.
    const double dr = 1.0 / 64.0;
    const auto steps = static_cast<std::size_t>(std::ceil(R / dr));
    std::vector<Eigen::VectorXd> xs(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) xs[i] = Eigen::Vector2d(std::min(R, i * dr), 0.0);
    const auto E = extension_eval(S, f, xs, threads);
    double acc = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double r = xs[i][0];
        const double end = (i == 0 || i == steps) ? 0.5 : 1.0;
        acc += end * std::norm(E[i]) * 2.0 * kPi * r;
    }
    rep.lhs = acc * (R / steps);
    rep.maximal = 2.0 * (std::sqrt(R * R - 1.0) + R * R * std::asin(1.0 / R));
    rep.ratio = rep.lhs / (std::pow(R, 0) * rep.f_norm_sq * rep.maximal);
    return rep;
}

WarmupPoint warmup_point(double R) {
    if (!(R >= 16.0)) throw PreconditionError("warm-up needs R >= 16", "R");
    WarmupPoint p;
    p.R = R;
    const double g = 1.0 / std::sqrt(R);
    const auto A = static_cast<std::int64_t>(std::floor(std::sqrt(R)));
    for (std::int64_t a = -A; a <= A; ++a) {
        const double x = a * g;
        const auto b0 = static_cast<std::int64_t>(std::floor(x * x / g));
        for (std::int64_t b = b0 - 2; b <= b0 + 2; ++b) {
            const double y = b * g;
            if (x * x + y * y > 1.0) continue;
            // Nearest point of the parabola: 2t^3 + (1 - 2y) t - x = 0.
            double t = x;
            for (int it = 0; it < 50; ++it) {
                const double f = 2.0 * t * t * t + (1.0 - 2.0 * y) * t - x;
                const double df = 6.0 * t * t + 1.0 - 2.0 * y;
                if (df <= 0.0) break;
                const double step = f / df;
                t -= step;
                if (std::abs(step) < 1e-17) break;
            }
            const double d = std::min(std::hypot(t - x, t * t - y), std::abs(y - x * x));
            if (d <= 1.0 / R) ++p.near_curve;
        }
    }
    const Lattice dual_grid = Lattice::scaled_integer(2, std::sqrt(R));
    const PointSet Lp = enumerate_in_body(dual_grid, ConvexBody::ball(Eigen::Vector2d::Zero(), R));
    for (int q = 0; q <= 7; ++q)
        for (int pp = -7; pp <= 7; ++pp) {
            if (std::gcd(std::abs(pp), q) != 1 || (q == 0 && pp != 1)) continue;
            const Eigen::Vector2d dir = Eigen::Vector2d(pp, q).normalized();
            p.tube_max = std::max(p.tube_max, max_tube_count_direction(Lp, dir, 1.0, 2.0 * R).lower);
        }
    p.holds = static_cast<double>(p.near_curve) <= p.tube_max;
    return p;
}

WarmupReport warmup(const std::vector<double>& Rs) {
    WarmupReport rep;
    std::vector<double> x, yc, yt;
    for (double R : Rs) {
        rep.points.push_back(warmup_point(R));
        x.push_back(R);
        yc.push_back(static_cast<double>(rep.points.back().near_curve));
        yt.push_back(rep.points.back().tube_max);
    }
    if (Rs.size() >= 2) {
        rep.slope_curve = fit_loglog(x, yc).slope;
        rep.slope_tube = fit_loglog(x, yt).slope;
    }
    return rep;
}

}  // namespace mtf
