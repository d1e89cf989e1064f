#include "mtforge/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "mtforge/errors.hpp"
#include "mtforge/lattice.hpp"
#include "mtforge/parallel.hpp"

namespace mtf {

namespace {

constexpr std::uint64_t kMinTrials = 1000;

void require_trials(std::uint64_t trials) {
    if (trials < kMinTrials)
        throw PreconditionError("at least " + std::to_string(kMinTrials) + " trials are required", "trials");
}

std::vector<double> sweep_constants(double c) {
    std::set<double> s{2.0, 4.0, 8.0, c};
    return {s.begin(), s.end()};
}

// Rotation whose first column is u (unit).
Rotation frame_from(const Eigen::VectorXd& u) {
    const int d = static_cast<int>(u.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    m.col(0) = u;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    if (q.col(0).dot(u) < 0) q.col(0) *= -1.0;
    if (q.determinant() < 0) q.col(d - 1) *= -1.0;
    return Rotation(std::move(q));
}

}  // namespace

double unit_ball_volume(int d) { return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

void finish_tail(TailEstimate& est, const TailOptions& opt) {
    std::vector<double> xs, ys;
    est.fit_K.clear();
    for (auto& row : est.rows) {
        row.p = static_cast<double>(row.hits) / static_cast<double>(est.trials);
        row.ci = wilson(row.hits, est.trials);
        if (row.K < opt.fit_min || row.K > opt.fit_max || row.hits == 0) continue;
        if ((row.ci.hi - row.ci.lo) / row.p >= opt.max_relative_width) continue;
        xs.push_back(row.K);
        ys.push_back(row.p);
        est.fit_K.push_back(row.K);
    }
    est.fit = fit_loglog(xs, ys);
}

TailEstimate tail_rotated_body(int N, const ConvexBody& T, std::uint64_t trials, const std::vector<double>& K_grid,
                               std::uint64_t seed, const TailOptions& opt) {
    if (T.dim() != N) throw DimensionError("body dimension differs from N", "N");
    if (T.volume() > 1.0 + 1e-9)
        throw PreconditionError("body volume " + std::to_string(T.volume()) + " exceeds 1", "body");
    require_trials(trials);
    if (K_grid.empty()) throw PreconditionError("K grid is empty", "K_grid");

    const Lattice Z = Lattice::scaled_integer(N, 1.0);
    std::vector<std::uint64_t> counts(trials);
    parallel_for(trials, opt.threads, [&](std::size_t i) {
        Rng rng = make_rng(seed, i);
        counts[i] = count_in_body(Z, T.rotated(haar_rotation(rng, N)));
    });

    TailEstimate est;
    est.trials = trials;
    est.seed = seed;
    std::vector<double> ks = K_grid;
    std::sort(ks.begin(), ks.end());
    for (double K : ks) {
        TailRow row;
        row.K = K;
        for (auto c : counts)
            if (static_cast<double>(c) >= K) ++row.hits;
        est.rows.push_back(row);
    }
    finish_tail(est, opt);
    return est;
}

FamilyTail tail_box_family(int N, const std::vector<ConvexBody>& family, std::uint64_t trials,
                           const std::vector<double>& K_grid, std::uint64_t seed, const TailOptions& opt) {
    if (family.empty()) throw PreconditionError("box family is empty", "family");
    FamilyTail out;
    for (std::size_t b = 0; b < family.size(); ++b) {
        out.members.push_back(tail_rotated_body(N, family[b], trials, K_grid, derive_seed(seed, b), opt));
        finish_tail(out.members.back(), opt);
    }
    out.pooled = out.members.front();
    out.pooled.seed = seed;
    out.pooled.trials = trials * family.size();
    for (std::size_t b = 1; b < family.size(); ++b)
        for (std::size_t r = 0; r < out.pooled.rows.size(); ++r) out.pooled.rows[r].hits += out.members[b].rows[r].hits;
    finish_tail(out.pooled, opt);
    return out;
}

std::vector<ConvexBody> eccentric_boxes4() {
    std::vector<ConvexBody> out;
    for (double x : {4.0, 8.0, 16.0, 32.0}) out.push_back(ConvexBody::axis_box({x, x, 0.25 / x, 0.25 / x}));
    out.push_back(ConvexBody::axis_box({4.0, 4.0, 4.0, 1.0 / 1024}));
    const double y = std::cbrt(1.0 / (16.0 * 1024));
    out.push_back(ConvexBody::axis_box({1024.0, y, y, y}));
    return out;
}

ContainmentEstimate containment_probability(const DyadicTuple& a, const DyadicTuple& b, std::uint64_t trials,
                                            std::uint64_t seed, double constant, int threads) {
    if (a.size() != b.size()) throw DimensionError("tuples differ in length", "b");
    if (!(constant > 0.0)) throw PreconditionError("containment constant must be positive", "constant");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.value(i) > constant * b.value(i))
            throw PreconditionError("a is not below b up to the constant at entry " + std::to_string(i), "a");
    require_trials(trials);

    const int d = static_cast<int>(a.size());
    const std::vector<double> cs = sweep_constants(constant);
    // Smallest constant for which the trial's event holds.
    std::vector<double> needed(trials);
    parallel_for(trials, threads, [&](std::size_t k) {
        Rng rng = make_rng(seed, k);
        const Eigen::MatrixXd g = haar_rotation(rng, d).matrix();
        double need = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) need = std::max(need, 2.0 * std::abs(g(j, i)) * a.value(i) / b.value(j));
        needed[k] = need;
    });

    ContainmentEstimate est;
    est.trials = trials;
    est.seed = seed;
    est.constant = constant;
    est.incidence = incidence_factor(a, b);
    for (double c : cs) {
        ConstantSweep sw;
        sw.constant = c;
        for (double v : needed)
            if (v <= c) ++sw.hits;
        sw.p = static_cast<double>(sw.hits) / trials;
        sw.ci = wilson(sw.hits, trials);
        if (c == constant) {
            est.hits = sw.hits;
            est.p = sw.p;
            est.ci = sw.ci;
        }
        est.sweep.push_back(sw);
    }
    return est;
}

double intersection_volume(const DyadicTuple& s, const DyadicTuple& t, const Rotation& g, std::size_t samples,
                           Rng& rng) {
    const int d = static_cast<int>(s.size());
    if (static_cast<int>(t.size()) != d || g.dim() != d) throw DimensionError("dimensions differ", "t");
    if (samples == 0) throw PreconditionError("sample count must be positive", "samples");
    // Sample in the smaller box, test membership in the other.
    const bool in_s = s.log2_volume() <= t.log2_volume();
    const DyadicTuple& base = in_s ? s : t;
    const DyadicTuple& other = in_s ? t : s;
    const Eigen::MatrixXd M = in_s ? g.matrix() : g.matrix().transpose();

    // Kronecker sequence with the generalized golden ratio.
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
    std::vector<double> alpha(d), shift(d), half_base(d), half_other(d);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int j = 0; j < d; ++j) {
        alpha[j] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);
        shift[j] = u01(rng);
        half_base[j] = 0.5 * base.value(j);
        half_other[j] = 0.5 * other.value(j);
    }
    std::vector<double> y(d);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        for (int j = 0; j < d; ++j) {
            double u = shift[j] + static_cast<double>(k) * alpha[j];
            u -= std::floor(u);
            y[j] = (2.0 * u - 1.0) * half_base[j];
        }
        bool inside = true;
        for (int i = 0; i < d && inside; ++i) {
            double xi = 0.0;
            for (int j = 0; j < d; ++j) xi += M(i, j) * y[j];
            inside = std::abs(xi) <= half_other[i];
        }
        hits += inside;
    }
    return base.volume() * static_cast<double>(hits) / static_cast<double>(samples);
}

IntersectionEstimate intersection_shape_tail(const DyadicTuple& s, const DyadicTuple& t,
                                             const std::vector<double>& lambda_grid, std::uint64_t trials,
                                             std::uint64_t seed, const IntersectionOptions& opt) {
    if (s.size() != t.size()) throw DimensionError("tuples differ in length", "t");
    require_trials(trials);
    for (double l : lambda_grid)
        if (!(l >= 1.0)) throw PreconditionError("lambda values must be >= 1", "lambda_grid");
    if (!(opt.kappa > 0.0)) throw PreconditionError("kappa must be positive", "kappa");

    const int d = static_cast<int>(s.size());
    const DyadicTuple meet = dyadic_meet(s, t), join = dyadic_join(s, t);
    const double meet_vol = meet.volume();
    std::vector<double> ratio(trials);
    parallel_for(trials, opt.threads, [&](std::size_t k) {
        Rng rng = make_rng(seed, k);
        const Rotation g = haar_rotation(rng, d);
        ratio[k] = intersection_volume(s, t, g, opt.samples, rng) / meet_vol;
    });

    IntersectionEstimate est;
    est.kappa = opt.kappa;
    est.samples = opt.samples;
    est.incidence = incidence_factor(meet, join);
    double sum = 0.0;
    for (double r : ratio) sum += r;
    est.mean_ratio = sum / trials;

    std::vector<double> lambdas = lambda_grid;
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    est.tail.trials = trials;
    est.tail.seed = seed;
    for (double l : lambdas) {
        TailRow row;
        row.K = 1.0 / l;
        for (double r : ratio)
            if (r >= row.K) ++row.hits;
        est.tail.rows.push_back(row);
    }
    TailOptions topt;
    topt.fit_min = 0.0;
    topt.fit_max = 1.0;
    finish_tail(est.tail, topt);

    std::sort(lambdas.begin(), lambdas.end());
    for (double l : lambdas) {
        ShellRow sh;
        sh.lambda = l;
        for (double r : ratio)
            if (r > 0.5 / l && r <= 1.0 / l) ++sh.hits;
        sh.p = static_cast<double>(sh.hits) / trials;
        sh.ci = wilson(sh.hits, trials);
        sh.bound = l >= 2.0 ? std::pow(l * std::log(l), -d) * est.incidence : 1.0;
        est.shells.push_back(sh);
    }

    for (double kap : sweep_constants(opt.kappa)) {
        ConstantSweep sw;
        sw.constant = kap;
        for (double r : ratio)
            if (r >= 1.0 / kap) ++sw.hits;
        sw.p = static_cast<double>(sw.hits) / trials;
        sw.ci = wilson(sw.hits, trials);
        if (kap == opt.kappa) {
            est.chi_p = sw.p;
            est.chi_ci = sw.ci;
        }
        est.chi.push_back(sw);
    }
    return est;
}

double cylinder_density(const Eigen::MatrixXd& frame, const std::vector<double>& base_halfwidths, double height,
                        std::uint64_t* count) {
    const int N = static_cast<int>(frame.rows());
    const int n = static_cast<int>(frame.cols());
    if (static_cast<int>(base_halfwidths.size()) != n)
        throw DimensionError("one base halfwidth per subspace dimension", "base_halfwidths");
    if (n >= N) throw DimensionError("subspace must be proper", "n");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
    Eigen::MatrixXd full = qr.householderQ();
    full.leftCols(n) = frame;
    if (full.determinant() < 0) full.col(N - 1) *= -1.0;
    const ConvexBody S = ConvexBody::cylinder(Eigen::VectorXd::Zero(N), Rotation(full),
                                              {BodyBlock{n, false, 0.0, base_halfwidths},
                                               BodyBlock{N - n, true, height, {}}});
    const std::uint64_t c = count_in_body(Lattice::scaled_integer(N, 1.0), S);
    if (count) *count = c;
    return static_cast<double>(c) / S.volume();
}

DensitySweep subspace_density_sweep(int n, int N, double R, std::uint64_t trials, std::uint64_t seed,
                                    const DensityOptions& opt) {
    if (!(n >= 1 && n < N)) throw DimensionError("need 1 <= n < N", "n");
    if (!(R >= 2.0)) throw PreconditionError("R must be at least 2", "R");
    if (trials == 0) throw PreconditionError("trials must be positive", "trials");

    const int e = static_cast<int>(std::floor(std::log2(R)));
    DensitySweep out;
    out.n = n;
    out.N = N;
    out.R = R;
    out.trials = trials;
    out.seed = seed;
    out.multiple = opt.multiple;
    out.exponent_scale = static_cast<double>(n) * n / N;
    out.densities.resize(trials);
    out.volumes.resize(trials);
    out.counts.resize(trials);
    const double ball_k = unit_ball_volume(N - n);

    parallel_for(trials, opt.threads, [&](std::size_t k) {
        Rng rng = make_rng(seed, k);
        std::uniform_int_distribution<int> ex(-e, e);
        std::vector<double> h(n);
        double rho = 0.0, vol = 0.0;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000) throw PreconditionError("no admissible cylinder for this R", "R");
            double r2 = 0.0, v = 1.0;
            for (double& x : h) {
                x = std::ldexp(1.0, ex(rng));
                r2 += x * x;
                v *= 2.0 * x;
            }
            rho = std::ldexp(1.0, ex(rng));
            r2 += rho * rho;
            v *= ball_k * std::pow(rho, N - n);
            if (std::sqrt(r2) > R || v < 1.0 || v > opt.max_volume) continue;
            vol = v;
            break;
        }
        const Embedding V = random_embedding(rng, n, N);
        const Eigen::MatrixXd frame = V.frame * haar_rotation(rng, n).matrix();
        std::uint64_t c = 0;
        out.densities[k] = cylinder_density(frame, h, rho, &c);
        out.volumes[k] = vol;
        out.counts[k] = c;
    });

    out.max_density = *std::max_element(out.densities.begin(), out.densities.end());
    const double q90 = quantile(out.densities, 0.9);
    const double lr = std::log(R);
    out.log_max = out.max_density > 0 ? std::log(out.max_density) / lr : -INFINITY;
    out.log_q90 = q90 > 0 ? std::log(q90) / lr : -INFINITY;
    out.within = out.log_max <= out.multiple * out.exponent_scale;
    return out;
}

std::uint64_t ball_lattice_count(int N, double rho) {
    if (N < 1) throw DimensionError("dimension must be >= 1", "N");
    if (rho < 0) return 0;
    const double r2 = rho * rho * (1.0 + 1e-12);
    std::function<std::uint64_t(int, double)> rec = [&](int k, double rem) -> std::uint64_t {
        if (rem < 0) return 0;
        const auto m = static_cast<std::int64_t>(std::floor(std::sqrt(rem)));
        if (k == 1) return static_cast<std::uint64_t>(2 * m + 1);
        std::uint64_t total = rec(k - 1, rem);
        for (std::int64_t z = 1; z <= m; ++z) total += 2 * rec(k - 1, rem - static_cast<double>(z * z));
        return total;
    };
    return rec(N, r2);
}

KakeyaSummary kakeya_lattice_experiment(int N, const std::vector<double>& deltas, std::size_t directions,
                                        std::uint64_t seed, int threads) {
    if (N < 2 || N > 4) throw DimensionError("Kakeya experiment supports N in {2,3,4}", "N");
    if (directions == 0) throw PreconditionError("direction sample is empty", "directions");
    for (double d : deltas) {
        int ex = 0;
        const double m = std::frexp(d, &ex);
        if (m != 0.5 || d > 0.25 || d < std::ldexp(1.0, -10))
            throw PreconditionError("delta must be dyadic in [2^-10, 2^-2]", "delta");
    }

    std::vector<Eigen::VectorXd> dirs(directions);
    for (std::size_t j = 0; j < directions; ++j) {
        Rng rng = make_rng(seed, j);
        std::normal_distribution<double> g;
        Eigen::VectorXd v(N);
        do {
            for (int i = 0; i < N; ++i) v[i] = g(rng);
        } while (v.norm() == 0.0);
        dirs[j] = v.normalized();
    }

    KakeyaSummary out;
    out.N = N;
    out.directions = directions;
    out.seed = seed;
    const Lattice Z = Lattice::scaled_integer(N, 1.0);
    const double vn = unit_ball_volume(N), vn1 = unit_ball_volume(N - 1);
    std::vector<double> ds = deltas;
    std::sort(ds.begin(), ds.end(), std::greater<>());
    std::vector<double> xs, kn, fn;
    for (double delta : ds) {
        // Rescaled by delta^{-(N-1)/N}: centres on Z^N, tubes of radius
        // delta^{1/N} and length delta^{-(N-1)/N}.
        const double r = std::pow(delta, 1.0 / N);
        const double len = std::pow(delta, -(N - 1.0) / N);
        KakeyaRow row;
        row.delta = delta;
        row.centres = ball_lattice_count(N, len);
        row.f0_norm = std::pow(static_cast<double>(row.centres) * vn * std::pow(delta, N), 1.0 / N);

        std::vector<std::uint64_t> best(directions);
        parallel_for(directions, threads, [&](std::size_t j) {
            // A lattice translate puts one point of the best tube at the
            // origin, so its points lie within 2r of the axis through 0.
            const ConvexBody cand = ConvexBody::cylinder(
                Eigen::VectorXd::Zero(N), frame_from(dirs[j]),
                {BodyBlock{1, false, 0.0, {len}}, BodyBlock{N - 1, true, 2.0 * r, {}}});
            const PointSet P = enumerate_in_body(Z, cand);
            best[j] = static_cast<std::uint64_t>(std::llround(max_tube_count_direction(P, dirs[j], r, len).lower));
        });
        double acc = 0.0, sum = 0.0;
        for (auto c : best) {
            const double K = vn / vn1 * delta * static_cast<double>(c);
            acc += std::pow(K, N);
            sum += static_cast<double>(c);
            row.max_count = std::max(row.max_count, c);
        }
        row.k_norm = std::pow(acc / directions, 1.0 / N);
        row.mean_count = sum / directions;
        out.rows.push_back(row);
        xs.push_back(delta);
        kn.push_back(row.k_norm);
        fn.push_back(row.f0_norm);
    }
    out.k_fit = fit_loglog(xs, kn);
    out.f0_fit = fit_loglog(xs, fn);
    return out;
}

}  // namespace mtf
