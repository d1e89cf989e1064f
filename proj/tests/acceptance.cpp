// One line per acceptance criterion; exit status is the number of failures.
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "mtforge/cli.hpp"
#include "mtforge/incidence.hpp"
#include "mtforge/lattice.hpp"
#include "mtforge/mtlab.hpp"
#include "mtforge/stats.hpp"
#include "mtforge/weight.hpp"

using namespace mtf;
using nlohmann::json;

namespace {

// Tolerances.
constexpr double kTailSlopeMax = -3.0;
constexpr double kFactor = 8.0;
constexpr double kWarmCurve = 0.25, kWarmTube = 0.5, kWarmTol = 0.08;
constexpr double kJarnikK2Slope = 0.6, kJarnikK4Slope = 0.4, kJarnikK4Tol = 0.1;
constexpr double kL1Lo = 1.0 / 8, kL1Hi = 8.0, kMaximalExp = 0.3;
constexpr double kBlowupSlope = 0.15;
constexpr double kDualityRatio = 0.95, kDualityDrift = 0.01;
constexpr double kMassTol = 1e-6, kHermTol = 1e-10, kGramTol = 1e-8;
constexpr double kKakeyaLo = 0.7, kKakeyaHi = 1.3, kF0 = 1.0 / 3, kF0Tol = 0.1;

int failures = 0;
int threads = 1;

void report(int id, const std::string& title, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] %2d %-14s %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string num(double v) { return cli::format_number(v); }

json run(const std::string& experiment, json params) {
    auto cfg = cli::ExperimentConfig::parse(experiment, params);
    cfg.threads = threads;
    cli::validate(cfg);
    return cli::execute(cfg).summary;
}

template <class F>
void timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f([&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); });
}

void tail() {
    timed([](auto elapsed) {
        const json s = run("tail", json::object());
        const double slope = s["pooled_fit"]["slope"];
        report(1, "tail", slope <= kTailSlopeMax, "pooled slope " + num(slope) + " <= " + num(kTailSlopeMax),
               elapsed());
    });
}

void containment() {
    timed([](auto elapsed) {
        const json s = run("containment", json::object());
        const double p = s["p"], I = s["incidence"];
        report(2, "containment", p >= I / kFactor && p <= I * kFactor,
               "p " + num(p) + " vs I 1/64, factor " + num(p / (1.0 / 64)), elapsed());
    });
}

void intersection() {
    timed([](auto elapsed) {
        const json s = run("intersection", json::object());
        const double p = s["chi_p"], target = 1.0 / 16;
        report(3, "intersection", p >= target / kFactor && p <= target * kFactor,
               "P[chi] " + num(p) + " vs 1/16 (computed I(meet, join) " + num(s["incidence"]) + ")", elapsed());
    });
}

void warm() {
    timed([](auto elapsed) {
        const json s = run("warmup", json::object());
        const double a = s["slope_curve"], b = s["slope_tube"];
        const bool holds = s["holds_everywhere"];
        const bool pass = std::abs(a - kWarmCurve) <= kWarmTol && std::abs(b - kWarmTube) <= kWarmTol && holds;
        report(4, "warm-up", pass,
               "curve slope " + num(a) + ", tube slope " + num(b) + ", inequality " + (holds ? "holds" : "fails"),
               elapsed());
    });
}

void jarnik() {
    timed([](auto elapsed) {
        const json k2 = run("jarnik", json::object());
        const json k4 = run("jarnik", {{"k", 4}});
        const double s2 = k2["fit"]["slope"], s4 = k4["fit"]["slope"];
        bool counts = true;
        for (const auto& r : k2["per_R"])
            counts = counts && r["median_incident"].get<double>() >= std::pow(r["R"].get<double>(), 2.0 / 3) / 16;
        const bool cert = k2["all_certified"].get<bool>() && k4["all_certified"].get<bool>();
        const bool pass = counts && s2 >= kJarnikK2Slope && std::abs(s4 - kJarnikK4Slope) <= kJarnikK4Tol && cert;
        report(5, "Jarnik", pass,
               "k=2 slope " + num(s2) + (counts ? ", counts >= R^(2/3)/16" : ", counts low") + ", k=4 slope " +
                   num(s4) + (cert ? ", certified" : ", certification failed"),
               elapsed());
    });
}

void blowup() {
    BlowupSweep sw;
    std::vector<double> Rs;
    for (int e = 6; e <= 10; ++e) Rs.push_back(std::ldexp(1.0, e));
    double seconds = 0.0;
    timed([&](auto elapsed) {
        BlowupOptions o;
        o.threads = threads;
        sw = blowup_sweep(Rs, 0, 20, o);
        seconds = elapsed();
    });

    bool l1_ok = true, m_ok = true;
    double min_peak = 1e300;
    std::string l1s, ms;
    for (double R : Rs) {
        std::vector<double> l1, M;
        for (const auto& r : sw.rows)
            if (r.R == R) {
                l1.push_back(r.l1 / R);
                M.push_back(r.maximal_hi);
                if (r.incident_count) min_peak = std::min(min_peak, r.min_peak);
            }
        const double ml = median(l1), q = quantile(M, 0.9);
        l1_ok = l1_ok && ml >= kL1Lo && ml <= kL1Hi;
        m_ok = m_ok && q <= std::pow(R, kMaximalExp);
        l1s += (l1s.empty() ? "" : " ") + num(ml);
        ms += (ms.empty() ? "" : " ") + num(q);
    }
    report(6, "weight stats", l1_ok && m_ok && min_peak > 0,
           "median l1/R [" + l1s + "], p90 M [" + ms + "], c " + num(min_peak), seconds);
    report(7, "blowup", sw.slope >= kBlowupSlope,
           "slope " + num(sw.slope) + " (median slope " + num(sw.slope_median) + ") vs " + num(kBlowupSlope) +
               ", same sweep",
           seconds);
}

void duality() {
    timed([](auto elapsed) {
        const json s = run("duality", json::object());
        const double ratio = s["ratio"], drift = s["drift"];
        report(8, "duality", ratio >= kDualityRatio && drift < kDualityDrift,
               "lhs/rhs " + num(ratio) + ", drift " + num(drift), elapsed());
    });
}

std::uint64_t brute_count(const Lattice& L, const ConvexBody& body) {
    const int d = body.dim();
    const Eigen::MatrixXd Binv = L.basis().inverse();
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, 1e300), hi = -lo;
    const Eigen::VectorXd ext = body.circumscribed_halfwidths();
    for (int mask = 0; mask < (1 << d); ++mask) {
        Eigen::VectorXd y(d);
        for (int i = 0; i < d; ++i) y[i] = ((mask >> i) & 1 ? 1.0 : -1.0) * ext[i];
        const Eigen::VectorXd z = Binv * (body.center() + body.frame().matrix() * y);
        lo = lo.cwiseMin(z);
        hi = hi.cwiseMax(z);
    }
    std::vector<std::int64_t> z(d), zlo(d), zhi(d);
    for (int i = 0; i < d; ++i) {
        zlo[i] = z[i] = static_cast<std::int64_t>(std::floor(lo[i])) - 1;
        zhi[i] = static_cast<std::int64_t>(std::ceil(hi[i])) + 1;
    }
    std::uint64_t count = 0;
    while (true) {
        if (body.contains(L.point(z), 1e-9)) ++count;
        int k = 0;
        while (k < d && ++z[k] > zhi[k]) {
            z[k] = zlo[k];
            ++k;
        }
        if (k == d) break;
    }
    return count;
}

void identities(const FourierWeight& fw, const Weight& w, Rng& rng, double& worst_mass, double& worst_herm,
                double& worst_gram) {
    worst_mass = std::max(worst_mass, std::abs(fw.l1() - weight_l1_spatial(w, 0.125)) / fw.l1());
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 200; ++i) {
        const double a[2] = {u(rng), u(rng)}, b[2] = {-a[0], -a[1]};
        worst_herm = std::max(worst_herm, std::abs(fw.value(a) - fw.value(b)) / std::max(1.0, fw.value(a)));
    }
    for (double scale : {0.5, 2.0 / fw.R}) {
        std::normal_distribution<double> g(0.0, scale);
        std::vector<Eigen::Vector2d> xi(8);
        for (auto& x : xi) x = Eigen::Vector2d(g(rng), g(rng));
        Eigen::MatrixXd G(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) G(i, j) = fw.value(Eigen::VectorXd(xi[i] - xi[j]));
        const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff();
        worst_gram = std::min(worst_gram, lo / G.trace());
    }
}

void fourier_suite() {
    timed([](auto elapsed) {
        double mass = 0.0, herm = 0.0, gram = 1.0;
        Rng rng(9);
        {
            const WeightPair p = build_weight_rank2(64.0);
            identities(p.fw, p.w, rng, mass, herm, gram);
        }
        {
            Rng er = make_rng(0, 0);
            const WeightPair p = build_weight_rankN(2, 8, 1, 64.0, er);
            identities(p.fw, p.w, rng, mass, herm, gram);
        }
        int compared = 0, mismatched = 0;
        std::uniform_real_distribution<double> pos(0.2, 3.0), u(-2.0, 2.0);
        while (compared < 1000) {
            const int d = 2 + compared % 3;
            Eigen::VectorXd c(d);
            for (int i = 0; i < d; ++i) c[i] = u(rng);
            std::vector<double> h(d);
            for (double& x : h) x = pos(rng);
            const ConvexBody body = rng() % 2 ? ConvexBody::box(c, haar_rotation(rng, d), h)
                                               : ConvexBody::ball(c, pos(rng));
            Eigen::MatrixXd B = Eigen::MatrixXd::Identity(d, d);
            B(0, d - 1) += 0.5 * u(rng);
            const Lattice L(B);
            const std::uint64_t expect = brute_count(L, body);
            if (expect > 20000) continue;
            ++compared;
            if (count_in_body(L, body) != expect || enumerate_in_body(L, body).size() != expect) ++mismatched;
        }
        const bool pass = mass <= kMassTol && herm <= kHermTol && gram >= -kGramTol && mismatched == 0;
        report(9, "Fourier suite", pass,
               "mass rel " + num(mass) + ", hermitian " + num(herm) + ", gram min/trace " + num(gram) + ", " +
                   std::to_string(mismatched) + "/1000 enumeration mismatches",
               elapsed());
    });
}

void kakeya() {
    timed([](auto elapsed) {
        const json s = run("kakeya", json::object());
        const double k = s["k_fit"]["slope"], f = s["f0_fit"]["slope"];
        report(10, "Kakeya", k >= kKakeyaLo && k <= kKakeyaHi && std::abs(f - kF0) <= kF0Tol,
               "K slope " + num(k) + ", F0 slope " + num(f), elapsed());
    });
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) threads = std::max(1, std::atoi(argv[1]));
    std::printf("mtforge %s acceptance\n", cli::version());
    tail();
    containment();
    intersection();
    warm();
    jarnik();
    blowup();
    duality();
    fourier_suite();
    kakeya();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}
