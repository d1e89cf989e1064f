#include "mtforge/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "mtforge/errors.hpp"
#include "mtforge/incidence.hpp"
#include "mtforge/mtlab.hpp"
#include "mtforge/parallel.hpp"
#include "mtforge/stats.hpp"
#include "mtforge/surfaces.hpp"
#include "mtforge/weight.hpp"

#ifndef MTFORGE_VERSION
#define MTFORGE_VERSION "0.0.0"
#endif

namespace mtf::cli {

using nlohmann::json;

namespace {

std::vector<double> powers(double base, int lo, int hi) {
    std::vector<double> v;
    for (int e = lo; e <= hi; ++e) v.push_back(std::pow(base, e));
    return v;
}

const std::map<std::string, json>& table() {
    static const std::map<std::string, json> t = {
        {"tail",
         {{"N", 4}, {"trials", 100000}, {"K", {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}}, {"fit_min", 8.0}, {"fit_max", 32.0},
          {"max_relative_width", 0.5}}},
        {"containment",
         {{"a", {1.0, 1.0 / 64, 1.0 / 64}}, {"b", {1.0, 1.0, 1.0 / 64}}, {"trials", 100000}, {"constant", 4.0}}},
        {"intersection",
         {{"s", {1.0, 1.0 / 16}},
          {"t", {1.0 / 16, 1.0 / 16}},
          {"lambda", {1.0, 2.0, 4.0, 8.0, 16.0}},
          {"trials", 100000},
          {"samples", 10000},
          {"kappa", 4.0}}},
        {"density", {{"n", 2}, {"N", 8}, {"R", 256.0}, {"trials", 200}, {"max_volume", 16384.0}, {"multiple", 1.0}}},
        {"kakeya", {{"N", 3}, {"delta", powers(2.0, -9, -3)}, {"directions", 256}}},
        {"warmup", {{"R", powers(4.0, 4, 9)}}},
        {"jarnik",
         {{"n", 2},
          {"m", 1},
          {"k", 2},
          {"R", powers(2.0, 6, 12)},
          {"seeds", 20},
          {"radius", 0.5},
          {"epsilon", 0.05},
          {"beta", 0.0},
          {"reach", 1.0}}},
        {"blowup",
         {{"n", 2},
          {"m", 1},
          {"l", 1},
          {"k", 2},
          {"N", 8},
          {"R", powers(2.0, 6, 10)},
          {"seeds", 20},
          {"tau", 0.05},
          {"radius", 0.5},
          {"epsilon", 0.05},
          {"beta", 0.0},
          {"spacing", 0.1},
          {"l2_tol", 0.01}}},
        {"duality", {{"R", 128.0}, {"a", -1.0}, {"b", 1.0}, {"spacing", 0.1}}},
    };
    return t;
}

bool is_integer(const json& v) { return v.is_number_integer() || v.is_number_unsigned(); }

void check_type(const std::string& key, const json& want, const json& got) {
    auto bad = [&](const char* what) { throw PreconditionError("config key '" + key + "' must be " + what, key); };
    if (is_integer(want)) {
        if (!is_integer(got)) bad("an integer");
    } else if (want.is_number()) {
        if (!got.is_number()) bad("a number");
    } else if (want.is_array()) {
        if (!got.is_array() || got.empty()) bad("a nonempty array of numbers");
        for (const auto& x : got)
            if (!x.is_number()) bad("a nonempty array of numbers");
    } else if (want.is_string()) {
        if (!got.is_string()) bad("a string");
    }
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int geti(const ExperimentConfig& c, const char* k) { return c.params.at(k).get<int>(); }
std::uint64_t getu(const ExperimentConfig& c, const char* k) { return c.params.at(k).get<std::uint64_t>(); }
double getd(const ExperimentConfig& c, const char* k) { return c.params.at(k).get<double>(); }
std::vector<double> getv(const ExperimentConfig& c, const char* k) { return c.params.at(k).get<std::vector<double>>(); }

void require(bool ok, const std::string& what, const std::string& key) {
    if (!ok) throw PreconditionError(what, key);
}

void require_positive(const ExperimentConfig& c, const char* k) {
    const json& v = c.params.at(k);
    if (v.is_array()) {
        for (const auto& x : v) require(x.get<double>() > 0.0, std::string(k) + " entries must be positive", k);
    } else {
        require(v.get<double>() > 0.0, std::string(k) + " must be positive", k);
    }
}

void require_ascending(const ExperimentConfig& c, const char* k) {
    const auto v = getv(c, k);
    for (std::size_t i = 1; i < v.size(); ++i)
        require(v[i] > v[i - 1], std::string(k) + " must be strictly increasing", k);
}

json interval(const Interval& i) { return {i.lo, i.hi}; }

json fit(const LineFit& f) { return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.points}}; }

DyadicTuple tuple(const ExperimentConfig& c, const char* k) {
    const auto v = getv(c, k);
    try {
        return DyadicTuple::from_values(v);
    } catch (const Error& e) {
        throw PreconditionError(std::string(k) + ": " + e.what(), k);
    }
}

Artifacts run_tail(const ExperimentConfig& c) {
    TailOptions o;
    o.fit_min = getd(c, "fit_min");
    o.fit_max = getd(c, "fit_max");
    o.max_relative_width = getd(c, "max_relative_width");
    o.threads = c.threads;
    const FamilyTail f = tail_box_family(geti(c, "N"), eccentric_boxes4(), getu(c, "trials"), getv(c, "K"), c.seed, o);
    Artifacts a{{}, CsvTable({"scope", "K", "p_hat", "ci_lo", "ci_hi", "trials", "hits"}), {}};
    auto emit = [&](const std::string& scope, const TailEstimate& e) {
        for (const auto& r : e.rows)
            a.table.row().add(scope).add(r.K).add(r.p).add(r.ci.lo).add(r.ci.hi).add(e.trials).add(r.hits);
    };
    emit("pooled", f.pooled);
    json members = json::array();
    for (std::size_t i = 0; i < f.members.size(); ++i) {
        emit("member" + std::to_string(i), f.members[i]);
        members.push_back(fit(f.members[i].fit));
    }
    a.summary = {{"pooled_fit", fit(f.pooled.fit)}, {"fit_K", f.pooled.fit_K}, {"members", members}};
    a.headline = "pooled tail slope " + format_number(f.pooled.fit.slope);
    return a;
}

Artifacts run_containment(const ExperimentConfig& c) {
    const ContainmentEstimate e = containment_probability(tuple(c, "a"), tuple(c, "b"), getu(c, "trials"), c.seed,
                                                          getd(c, "constant"), c.threads);
    Artifacts a{{}, CsvTable({"constant", "trials", "hits", "p", "ci_lo", "ci_hi"}), {}};
    for (const auto& s : e.sweep) a.table.row().add(s.constant).add(e.trials).add(s.hits).add(s.p).add(s.ci.lo).add(s.ci.hi);
    a.summary = {{"p", e.p},
                 {"ci", interval(e.ci)},
                 {"hits", e.hits},
                 {"incidence", e.incidence},
                 {"ratio", e.incidence > 0 ? e.p / e.incidence : 0.0}};
    a.headline = "p " + format_number(e.p) + " CI [" + format_number(e.ci.lo) + ", " + format_number(e.ci.hi) +
                 "] vs I " + format_number(e.incidence);
    return a;
}

Artifacts run_intersection(const ExperimentConfig& c) {
    IntersectionOptions o;
    o.samples = getu(c, "samples");
    o.kappa = getd(c, "kappa");
    o.threads = c.threads;
    const IntersectionEstimate e =
        intersection_shape_tail(tuple(c, "s"), tuple(c, "t"), getv(c, "lambda"), getu(c, "trials"), c.seed, o);
    Artifacts a{{}, CsvTable({"lambda", "hits", "p", "ci_lo", "ci_hi", "bound"}), {}};
    for (const auto& s : e.shells) a.table.row().add(s.lambda).add(s.hits).add(s.p).add(s.ci.lo).add(s.ci.hi).add(s.bound);
    a.summary = {{"chi_p", e.chi_p},
                 {"chi_ci", interval(e.chi_ci)},
                 {"incidence", e.incidence},
                 {"ratio", e.incidence > 0 ? e.chi_p / e.incidence : 0.0},
                 {"mean_ratio", e.mean_ratio},
                 {"tail_fit", fit(e.tail.fit)}};
    a.headline = "P[chi] " + format_number(e.chi_p) + " vs I " + format_number(e.incidence);
    return a;
}

Artifacts run_density(const ExperimentConfig& c) {
    DensityOptions o;
    o.max_volume = getd(c, "max_volume");
    o.multiple = getd(c, "multiple");
    o.threads = c.threads;
    const DensitySweep d =
        subspace_density_sweep(geti(c, "n"), geti(c, "N"), getd(c, "R"), getu(c, "trials"), c.seed, o);
    Artifacts a{{}, CsvTable({"trial", "volume", "count", "density"}), {}};
    for (std::size_t i = 0; i < d.densities.size(); ++i)
        a.table.row().add(static_cast<std::uint64_t>(i)).add(d.volumes[i]).add(d.counts[i]).add(d.densities[i]);
    a.summary = {{"max_density", d.max_density},   {"log_max", d.log_max},   {"log_q90", d.log_q90},
                 {"exponent_scale", d.exponent_scale}, {"multiple", d.multiple}, {"within", d.within}};
    a.headline = "log_R max density " + format_number(d.log_max) + " vs n^2/N " + format_number(d.exponent_scale);
    return a;
}

Artifacts run_kakeya(const ExperimentConfig& c) {
    const KakeyaSummary k = kakeya_lattice_experiment(geti(c, "N"), getv(c, "delta"), getu(c, "directions"), c.seed,
                                                      c.threads);
    Artifacts a{{}, CsvTable({"delta", "centres", "f0_norm", "k_norm", "mean_count", "max_count"}), {}};
    for (const auto& r : k.rows)
        a.table.row().add(r.delta).add(r.centres).add(r.f0_norm).add(r.k_norm).add(r.mean_count).add(r.max_count);
    a.summary = {{"k_fit", fit(k.k_fit)}, {"f0_fit", fit(k.f0_fit)}};
    a.headline = "slopes K " + format_number(k.k_fit.slope) + " F0 " + format_number(k.f0_fit.slope);
    return a;
}

Artifacts run_warmup(const ExperimentConfig& c) {
    const WarmupReport w = warmup(getv(c, "R"));
    Artifacts a{{}, CsvTable({"R", "near_curve", "tube_max", "holds"}), {}};
    bool all = true;
    for (const auto& p : w.points) {
        a.table.row().add(p.R).add(p.near_curve).add(p.tube_max).add(p.holds);
        all = all && p.holds;
    }
    a.summary = {{"slope_curve", w.slope_curve}, {"slope_tube", w.slope_tube}, {"holds_everywhere", all}};
    a.headline = "slopes curve " + format_number(w.slope_curve) + " tube " + format_number(w.slope_tube);
    return a;
}

Artifacts run_jarnik(const ExperimentConfig& c) {
    const int n = geti(c, "n"), m = geti(c, "m"), k = geti(c, "k"), seeds = geti(c, "seeds");
    const std::vector<double> Rs = getv(c, "R");
    JarnikOptions o;
    o.epsilon = getd(c, "epsilon");
    o.beta = getd(c, "beta");
    o.perturbation.reach = getd(c, "reach");
    const ParamSurface base = circle_surface(getd(c, "radius"), Eigen::Vector2d::Zero(), k);
    std::vector<JarnikResult> res(Rs.size() * seeds);
    parallel_for(res.size(), c.threads, [&](std::size_t i) {
        Rng rng = make_rng(c.seed, i % seeds);
        res[i] = jarnik_surface(n, m, k, Rs[i / seeds], base, rng, o);
    });
    Artifacts a{{}, CsvTable({"R", "seed", "beta", "caps", "good", "reach_failures", "incident_count", "certified"}), {}};
    std::vector<double> meds;
    json per_R = json::array();
    bool certified = true;
    for (std::size_t ri = 0; ri < Rs.size(); ++ri) {
        std::vector<double> counts;
        for (int s = 0; s < seeds; ++s) {
            const JarnikResult& r = res[ri * seeds + s];
            a.table.row()
                .add(Rs[ri])
                .add(s)
                .add(r.beta)
                .add(static_cast<std::uint64_t>(r.caps))
                .add(static_cast<std::uint64_t>(r.good))
                .add(static_cast<std::uint64_t>(r.reach_failures.size()))
                .add(static_cast<std::uint64_t>(r.incident_count()))
                .add(r.surface.certification.pass);
            counts.push_back(static_cast<double>(r.incident_count()));
            certified = certified && r.surface.certification.pass;
        }
        meds.push_back(median(counts));
        per_R.push_back({{"R", Rs[ri]}, {"median_incident", meds.back()}});
    }
    const LineFit f = Rs.size() >= 2 ? fit_loglog(Rs, meds) : LineFit{};
    a.summary = {{"per_R", per_R},
                 {"fit", fit(f)},
                 {"exponent", double(n) / (m + k * (n - m))},
                 {"all_certified", certified}};
    a.headline = "median incidence slope " + format_number(f.slope);
    return a;
}

BlowupOptions blowup_options(const ExperimentConfig& c) {
    BlowupOptions o;
    o.n = geti(c, "n");
    o.m = geti(c, "m");
    o.l = geti(c, "l");
    o.k = geti(c, "k");
    o.N = geti(c, "N");
    o.tau = getd(c, "tau");
    o.radius = getd(c, "radius");
    o.epsilon = getd(c, "epsilon");
    o.beta = getd(c, "beta");
    o.spacing = getd(c, "spacing");
    o.l2_tol = getd(c, "l2_tol");
    o.threads = c.threads;
    return o;
}

Artifacts run_blowup(const ExperimentConfig& c) {
    const BlowupSweep sw = blowup_sweep(getv(c, "R"), c.seed, geti(c, "seeds"), blowup_options(c));
    Artifacts a{{},
                CsvTable({"R", "seed", "l1", "maximal_lo", "maximal_hi", "l2_surface", "incident_count", "ratio"}),
                {}};
    for (const auto& r : sw.rows)
        a.table.row()
            .add(r.R)
            .add(r.seed)
            .add(r.l1)
            .add(r.maximal_lo)
            .add(r.maximal_hi)
            .add(r.l2_surface)
            .add(static_cast<std::uint64_t>(r.incident_count))
            .add(r.ratio);
    a.summary = {{"slope", sw.slope},
                 {"slope_median", sw.slope_median},
                 {"intercept", sw.intercept},
                 {"alpha", sw.rows.empty() ? 0.0 : sw.rows.front().alpha},
                 {"rows", sw.rows.size()}};
    a.headline = "fitted slope " + format_number(sw.slope) + " (alpha " + format_number(a.summary["alpha"]) + ")";
    return a;
}

Artifacts run_duality(const ExperimentConfig& c) {
    const double R = getd(c, "R");
    const WeightPair p = build_weight_rank2(R);
    const Curve curve = Curve::from(parabola_surface(getd(c, "a"), getd(c, "b"), 2));
    const DualityReport d = duality_check(p.fw, curve, getd(c, "spacing") / R, c.threads);
    Artifacts a{{}, CsvTable({"R", "samples", "l1", "l2_surface", "lhs", "rhs", "ratio", "lhs_refined", "drift"}), {}};
    a.table.row()
        .add(R)
        .add(static_cast<std::uint64_t>(d.samples))
        .add(d.l1)
        .add(d.l2sq)
        .add(d.lhs)
        .add(d.rhs)
        .add(d.ratio)
        .add(d.lhs_refined)
        .add(d.drift);
    a.summary = {{"ratio", d.ratio}, {"drift", d.drift}, {"lhs", d.lhs}, {"rhs", d.rhs}};
    a.headline = "lhs/rhs " + format_number(d.ratio) + " drift " + format_number(d.drift);
    return a;
}

}  // namespace

const char* version() { return MTFORGE_VERSION; }

const std::vector<std::string>& experiments() {
    static const std::vector<std::string> names = {"tail",   "containment", "intersection", "density", "kakeya",
                                                   "warmup", "jarnik",      "blowup",       "duality"};
    return names;
}

json defaults(const std::string& experiment) {
    const auto it = table().find(experiment);
    if (it == table().end()) throw PreconditionError("unknown experiment '" + experiment + "'", "experiment");
    return it->second;
}

ExperimentConfig ExperimentConfig::parse(const std::string& experiment, const json& doc) {
    ExperimentConfig c;
    c.experiment = experiment;
    c.name = experiment;
    c.params = defaults(experiment);
    if (!doc.is_object()) throw PreconditionError("config must be a JSON object", "config");
    for (const auto& [key, value] : doc.items()) {
        if (key == "experiment") {
            if (!value.is_string() || value.get<std::string>() != experiment)
                throw PreconditionError("config is for a different experiment", "experiment");
        } else if (key == "name") {
            if (!value.is_string() || value.get<std::string>().empty())
                throw PreconditionError("name must be a nonempty string", "name");
            c.name = value.get<std::string>();
            if (c.name.find('/') != std::string::npos) throw PreconditionError("name must not contain '/'", "name");
        } else if (key == "seed") {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
                throw PreconditionError("seed must be a nonnegative integer", "seed");
            c.seed = value.get<std::uint64_t>();
        } else if (key == "threads") {
            if (!is_integer(value) || value.get<std::int64_t>() < 1)
                throw PreconditionError("threads must be a positive integer", "threads");
            c.threads = value.get<int>();
        } else if (c.params.contains(key)) {
            check_type(key, c.params[key], value);
            c.params[key] = value;
        } else {
            throw PreconditionError("unknown config key '" + key + "'", key);
        }
    }
    return c;
}

json ExperimentConfig::to_json() const {
    json j = params;
    j["experiment"] = experiment;
    j["name"] = name;
    j["seed"] = seed;
    j["threads"] = threads;
    return j;
}

std::string ExperimentConfig::hash() const {
    json j = to_json();
    j.erase("threads");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return hex64(h);
}

void validate(const ExperimentConfig& c) {
    const std::string& e = c.experiment;
    auto positive_int = [&](const char* k) { require(getd(c, k) >= 1, std::string(k) + " must be at least 1", k); };
    if (e == "tail") {
        require(geti(c, "N") == 4, "the eccentric box family lives in dimension 4", "N");
        positive_int("trials");
        require_positive(c, "K");
        require_ascending(c, "K");
        require(getd(c, "fit_min") < getd(c, "fit_max"), "fit_min must be below fit_max", "fit_min");
    } else if (e == "containment") {
        const DyadicTuple a = tuple(c, "a"), b = tuple(c, "b");
        require(a.size() == b.size(), "a and b must have equal length", "b");
        positive_int("trials");
        require_positive(c, "constant");
    } else if (e == "intersection") {
        const DyadicTuple s = tuple(c, "s"), t = tuple(c, "t");
        require(s.size() == t.size(), "s and t must have equal length", "t");
        require(s.size() >= 2 && s.size() <= 4, "s must have 2 to 4 entries", "s");
        positive_int("trials");
        positive_int("samples");
        require_positive(c, "lambda");
        require_positive(c, "kappa");
    } else if (e == "density") {
        const int n = geti(c, "n"), N = geti(c, "N");
        require(n >= 1, "n must be at least 1", "n");
        require(N > n && N <= 12, "N must satisfy n < N <= 12", "N");
        require(getd(c, "R") >= 2.0, "R must be at least 2", "R");
        positive_int("trials");
        require_positive(c, "max_volume");
        require_positive(c, "multiple");
    } else if (e == "kakeya") {
        const int N = geti(c, "N");
        require(N >= 2 && N <= 4, "N must lie in {2, 3, 4}", "N");
        require_positive(c, "delta");
        for (double d : getv(c, "delta")) require(d < 1.0, "delta entries must be below 1", "delta");
        positive_int("directions");
    } else if (e == "warmup") {
        for (double R : getv(c, "R")) require(R >= 16.0, "R entries must be at least 16", "R");
    } else if (e == "jarnik") {
        require(geti(c, "n") == 2, "the circle base needs n = 2", "n");
        require(geti(c, "m") == 1, "perturbations are implemented for m = 1", "m");
        require(geti(c, "k") >= 1 && geti(c, "k") <= 8, "k must lie in [1, 8]", "k");
        for (double R : getv(c, "R")) require(R >= 4.0, "R entries must be at least 4", "R");
        positive_int("seeds");
        require_positive(c, "radius");
        require(getd(c, "epsilon") >= 0.0, "epsilon must be nonnegative", "epsilon");
        require(getd(c, "beta") >= 0.0 && getd(c, "beta") < 1.0, "beta must lie in [0, 1); 0 selects the default",
                "beta");
        require_positive(c, "reach");
    } else if (e == "blowup") {
        const int n = geti(c, "n"), m = geti(c, "m"), l = geti(c, "l"), N = geti(c, "N");
        require(n >= 2, "n must be at least 2", "n");
        require(l >= 1 && l <= n - 1, "l must lie in [1, n-1]", "l");
        require(m >= 1 && m < n, "m must lie in [1, n-1]", "m");
        require(N > n && N <= 12, "N must satisfy n < N <= 12", "N");
        require(n == 2 && m == 1 && l == 1, "the blowup pipeline supports n = 2, m = 1, l = 1", "n");
        require(geti(c, "k") >= 1 && geti(c, "k") <= 8, "k must lie in [1, 8]", "k");
        for (double R : getv(c, "R")) {
            require(R >= 16.0, "R entries must be at least 16", "R");
            const double est = std::pow(R, l) * unit_ball_volume(N);
            if (est > static_cast<double>(WeightOptions{}.cap))
                throw BudgetError("R = " + format_number(R) + " needs about " + format_number(est) +
                                      " lattice points, above the enumeration cap",
                                  static_cast<std::uint64_t>(est), "R");
        }
        positive_int("seeds");
        require(getd(c, "tau") > 0.0 && getd(c, "tau") <= 1.0, "tau must lie in (0, 1]", "tau");
        require_positive(c, "radius");
        require(getd(c, "epsilon") >= 0.0, "epsilon must be nonnegative", "epsilon");
        require(getd(c, "beta") >= 0.0 && getd(c, "beta") < 1.0, "beta must lie in [0, 1); 0 selects alpha/m", "beta");
        require(getd(c, "spacing") > 0.0 && getd(c, "spacing") <= 0.1, "spacing must lie in (0, 0.1] (units of 1/R)",
                "spacing");
        require_positive(c, "l2_tol");
    } else if (e == "duality") {
        require(getd(c, "R") >= 16.0, "R must be at least 16", "R");
        require(getd(c, "a") < getd(c, "b"), "a must be below b", "a");
        require(getd(c, "spacing") > 0.0 && getd(c, "spacing") <= 0.1, "spacing must lie in (0, 0.1] (units of 1/R)",
                "spacing");
    } else {
        throw PreconditionError("unknown experiment '" + e + "'", "experiment");
    }
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

CsvTable& CsvTable::row() {
    cells_.emplace_back();
    return *this;
}

CsvTable& CsvTable::add(double v) { return add(format_number(v)); }

CsvTable& CsvTable::add(std::int64_t v) { return add(std::to_string(v)); }

CsvTable& CsvTable::add(std::uint64_t v) { return add(std::to_string(v)); }

CsvTable& CsvTable::add(const std::string& v) {
    cells_.back().push_back(v);
    return *this;
}

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

void write_line(std::string& out, const std::vector<std::string>& cells,
                const std::vector<std::string>& extra) {
    bool first = true;
    for (const auto* part : {&cells, &extra})
        for (const auto& c : *part) {
            if (!first) out += ',';
            out += quote(c);
            first = false;
        }
    out += '\n';
}

}  // namespace

std::string CsvTable::str(const std::vector<std::pair<std::string, std::string>>& extra) const {
    std::vector<std::string> head = header_, tail;
    for (const auto& [k, v] : extra) {
        head.push_back(k);
        tail.push_back(v);
    }
    std::string out;
    write_line(out, head, {});
    for (const auto& r : cells_) write_line(out, r, tail);
    return out;
}

Artifacts execute(const ExperimentConfig& c) {
    validate(c);
    const std::string& e = c.experiment;
    if (e == "tail") return run_tail(c);
    if (e == "containment") return run_containment(c);
    if (e == "intersection") return run_intersection(c);
    if (e == "density") return run_density(c);
    if (e == "kakeya") return run_kakeya(c);
    if (e == "warmup") return run_warmup(c);
    if (e == "jarnik") return run_jarnik(c);
    if (e == "blowup") return run_blowup(c);
    return run_duality(c);
}

namespace {

int fail(int code, const std::string& what, const std::string& param) {
    std::cerr << "mtforge: error: " << what;
    if (!param.empty()) std::cerr << " [parameter: " << param << "]";
    std::cerr << "\n";
    return code;
}

void write_file(const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw PreconditionError("cannot write " + p.string(), "out");
    f << body;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seeded experiments for lattice weights, incidences and Mizohata-Takeuchi constants"};
    std::string experiment, config_path, out_dir = ".";
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("experiment", experiment, "Experiment name")->required()->check(CLI::IsMember(experiments()));
    app.add_option("--config", config_path, "JSON config path")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config and MTFORGE_SEED)");
    app.add_option("--out", out_dir, "Output directory");
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        std::ifstream in(config_path);
        if (!in) return fail(2, "cannot read config " + config_path, "config");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            return fail(2, std::string("config is not valid JSON: ") + e.what(), "config");
        }
        ExperimentConfig cfg = ExperimentConfig::parse(experiment, doc);
        if (const char* env = std::getenv("MTFORGE_SEED"); env && *env) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (*end != '\0' || env[0] == '-') return fail(2, "MTFORGE_SEED must be a nonnegative integer", "seed");
            cfg.seed = v;
        }
        if (*seed_opt) cfg.seed = seed;
        if (*threads_opt) cfg.threads = threads;
        validate(cfg);

        const auto t0 = std::chrono::steady_clock::now();
        Artifacts art = execute(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const std::filesystem::path dir(out_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) return fail(2, "cannot create output directory " + out_dir, "out");
        const std::string hash = cfg.hash();
        json summary = {{"experiment", cfg.experiment}, {"version", version()},      {"config_hash", hash},
                        {"config", cfg.to_json()},      {"seed", cfg.seed},          {"wall_seconds", wall},
                        {"headline", art.headline},     {"results", art.summary}};
        write_file(dir / (cfg.name + ".summary.json"), summary.dump(2) + "\n");
        write_file(dir / (cfg.name + ".table.csv"), art.table.str({{"config_hash", hash}, {"version", version()}}));
        std::printf("%s seed=%llu %s wall=%.1fs\n", cfg.experiment.c_str(), static_cast<unsigned long long>(cfg.seed),
                    art.headline.c_str(), wall);
        return 0;
    } catch (const BudgetError& e) {
        return fail(3, e.what(), e.param());
    } catch (const PreconditionError& e) {
        return fail(2, e.what(), e.param());
    } catch (const DimensionError& e) {
        return fail(2, e.what(), e.param());
    } catch (const DegenerateError& e) {
        return fail(2, e.what(), e.param());
    } catch (const UnsupportedError& e) {
        return fail(2, e.what(), e.param());
    } catch (const Error& e) {
        return fail(1, e.what(), e.param());
    } catch (const std::exception& e) {
        return fail(1, e.what(), {});
    }
}

}  // namespace mtf::cli
