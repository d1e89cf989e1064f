#include "mtforge/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "mtforge/bump.hpp"
#include "mtforge/errors.hpp"

namespace mtf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

double binomial(int j, int i) {
    double c = 1.0;
    for (int t = 0; t < i; ++t) c = c * (j - t) / (t + 1);
    return c;
}

}  // namespace

double ParamSurface::derivative_bound(int j) const {
    if (j < 0 || j >= static_cast<int>(bound.size()))
        throw CertificationError("no declared bound for derivatives of order " + std::to_string(j) + " of " + name,
                                 "k");
    return bound[j];
}

Eigen::MatrixXd ParamSurface::jacobian(const Eigen::VectorXd& u) const {
    const double h = 1e-6;
    Eigen::MatrixXd J(n, m);
    for (int a = 0; a < m; ++a) {
        Eigen::VectorXd up = u, dn = u;
        up[a] += h;
        dn[a] -= h;
        J.col(a) = (eval(up) - eval(dn)) / (2.0 * h);
    }
    return J;
}

ParamSurface circle_surface(double radius, const Eigen::Vector2d& center, int k) {
    if (!(radius > 0.0)) throw PreconditionError("circle radius must be positive", "radius");
    ParamSurface s;
    s.name = "circle";
    s.m = 1;
    s.n = 2;
    s.k = k;
    s.periodic = true;
    const Eigen::Vector2d c = center;
    s.eval = [radius, c](const Eigen::VectorXd& u) {
        Eigen::VectorXd x(2);
        x << c[0] + radius * std::cos(2.0 * kPi * u[0]), c[1] + radius * std::sin(2.0 * kPi * u[0]);
        return x;
    };
    s.bound.resize(k + 1);
    s.bound[0] = c.norm() + radius;
    for (int j = 1; j <= k; ++j) s.bound[j] = radius * std::pow(2.0 * kPi, j);
    return s;
}

ParamSurface parabola_surface(double a, double b, int k) {
    if (!(b > a)) throw PreconditionError("parabola interval must satisfy a < b", "b");
    ParamSurface s;
    s.name = "parabola";
    s.m = 1;
    s.n = 2;
    s.k = k;
    const double L = b - a;
    s.eval = [a, L](const Eigen::VectorXd& u) {
        const double x = a + L * u[0];
        Eigen::VectorXd y(2);
        y << x, x * x;
        return y;
    };
    const double xm = std::max(std::abs(a), std::abs(b));
    s.bound.assign(k + 1, 0.0);
    s.bound[0] = std::hypot(xm, xm * xm);
    if (k >= 1) s.bound[1] = L * std::sqrt(1.0 + 4.0 * xm * xm);
    if (k >= 2) s.bound[2] = 2.0 * L * L;
    return s;
}

ParamSurface affine_surface(const Eigen::VectorXd& a, const Eigen::MatrixXd& A, int k) {
    if (A.rows() != a.size()) throw DimensionError("affine surface: A and a disagree", "A");
    ParamSurface s;
    s.name = "affine";
    s.m = static_cast<int>(A.cols());
    s.n = static_cast<int>(A.rows());
    s.k = k;
    s.eval = [a, A](const Eigen::VectorXd& u) -> Eigen::VectorXd { return a + A * u; };
    s.bound.assign(k + 1, 0.0);
    s.bound[0] = a.norm() + A.colwise().norm().sum();
    if (k >= 1) s.bound[1] = A.colwise().norm().maxCoeff();
    return s;
}

ParamSurface translated(const ParamSurface& s, const Eigen::VectorXd& v) {
    ParamSurface t = s;
    auto f = s.eval;
    t.eval = [f, v](const Eigen::VectorXd& u) -> Eigen::VectorXd { return f(u) + v; };
    if (!t.bound.empty()) t.bound[0] += v.norm();
    return t;
}

void CapPartition::coordinates(std::size_t i, const Eigen::VectorXd& x, Eigen::VectorXd& t,
                               Eigen::VectorXd& nu) const {
    const Cap& c = cells[i];
    const Eigen::VectorXd z = c.frame_inverse * (x - c.point);
    const auto m = c.tangent.cols();
    t = z.head(m);
    nu = z.tail(z.size() - m);
}

bool CapPartition::in_slab(std::size_t i, const Eigen::VectorXd& x, double extra) const {
    const Cap& c = cells[i];
    Eigen::VectorXd t, nu;
    coordinates(i, x, t, nu);
    return t.cwiseAbs().maxCoeff() <= c.tangential + extra / c.smin && nu.norm() <= c.transverse + extra;
}

CapPartition partition_caps(const ParamSurface& s0, double R, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw PreconditionError("beta must lie in (0, 1)", "beta");
    if (std::pow(R, beta) < 2.0) throw PreconditionError("R^beta must be at least 2", "R");
    const double D2 = s0.derivative_bound(2);
    CapPartition part;
    part.base = s0;
    part.beta = beta;
    part.R = R;
    part.per_axis = static_cast<std::size_t>(std::llround(std::pow(R, beta)));
    part.side = 1.0 / part.per_axis;
    part.thickening = std::pow(R, -beta * s0.k);
    const int m = s0.m, n = s0.n;
    std::size_t total = 1;
    for (int a = 0; a < m; ++a) total *= part.per_axis;
    const double rho1 = m * part.side / 2.0;  // l1 radius of a cell
    part.cells.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        Cap& c = part.cells[i];
        c.index = i;
        c.lo.resize(m);
        std::size_t r = i;
        for (int a = 0; a < m; ++a) {
            c.lo[a] = static_cast<double>(r % part.per_axis) * part.side;
            r /= part.per_axis;
        }
        c.center = c.lo.array() + part.side / 2.0;
        c.point = s0(c.center);
        c.tangent = s0.jacobian(c.center);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(c.tangent);
        const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
        c.normal = Q.rightCols(n - m);
        c.smin = Eigen::JacobiSVD<Eigen::MatrixXd>(c.tangent).singularValues().minCoeff();
        if (!(c.smin > 0.0)) throw DegenerateError("surface is singular at a cap centre", "base");
        Eigen::MatrixXd F(n, n);
        F << c.tangent, c.normal;
        c.frame_inverse = F.inverse();
        const double remainder = 0.5 * D2 * rho1 * rho1;
        c.tangential = part.side / 2.0 + remainder / c.smin;
        c.transverse = remainder;
    }
    return part;
}

Eigen::VectorXd foot_point(const ParamSurface& s0, const Eigen::VectorXd& x, Eigen::VectorXd u) {
    for (int it = 0; it < 30; ++it) {
        const Eigen::MatrixXd J = s0.jacobian(u);
        const Eigen::VectorXd r = x - s0(u);
        const Eigen::VectorXd step = (J.transpose() * J).ldlt().solve(J.transpose() * r);
        u += step;
        if (step.norm() < 1e-15) break;
    }
    return u;
}

namespace {

// Offers candidate x to cap i; keeps the best in `best`.
void offer(const CapPartition& part, std::size_t i, const Eigen::VectorXd& x, double weight,
           const GoodCapOptions& opt, Assignment& best, bool& found) {
    if (!part.in_thickened(i, x)) return;
    const Cap& c = part.cells[i];
    Eigen::VectorXd t, nu;
    part.coordinates(i, x, t, nu);
    // |t - (u* - c)| is at most the Taylor slack, so far feet are discarded early.
    const double slack = 2.0 * (c.tangential - part.side / 2.0 + part.thickening / c.smin);
    if (t.cwiseAbs().maxCoeff() > opt.core * part.side + slack) return;
    const Eigen::VectorXd u = foot_point(part.base, x, c.center + t);
    if ((u - c.center).cwiseAbs().maxCoeff() > opt.core * part.side) return;
    const double off = (x - part.base(u)).norm();
    bool better;
    const double within = opt.prefer_weight_within;
    if (!found) {
        better = true;
    } else if (within > 0.0 && (off <= within) != (best.offset <= within)) {
        better = off <= within;
    } else if (within > 0.0 && off <= within && weight != best.weight) {
        better = weight > best.weight;
    } else {
        better = off < best.offset || (off == best.offset && lex_less(x, best.target));
    }
    if (better) {
        best.cap = i;
        best.target = x;
        best.foot = u;
        best.offset = off;
        best.weight = weight;
        found = true;
    }
}

// Ambient bounding box of the thickened slab of cap i.
void slab_box(const CapPartition& part, std::size_t i, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
    const Cap& c = part.cells[i];
    const double tw = c.tangential + part.thickening / c.smin;
    const double nw = c.transverse + part.thickening;
    const Eigen::VectorXd ext = c.tangent.cwiseAbs().rowwise().sum() * tw + Eigen::VectorXd::Constant(c.point.size(), nw);
    lo = c.point - ext;
    hi = c.point + ext;
}

}  // namespace

std::vector<Assignment> find_good_caps(const CapPartition& part, const PointSet& P, const GoodCapOptions& opt) {
    if (P.dim != part.base.n) throw DimensionError("point set dimension differs from the surface", "P");
    std::vector<std::size_t> order(P.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return P.at(a)[0] < P.at(b)[0]; });
    std::vector<double> first(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) first[i] = P.at(order[i])[0];
    std::vector<Assignment> out;
    for (std::size_t i = 0; i < part.cells.size(); ++i) {
        Eigen::VectorXd lo, hi;
        slab_box(part, i, lo, hi);
        auto a = std::lower_bound(first.begin(), first.end(), lo[0]);
        auto b = std::upper_bound(a, first.end(), hi[0]);
        Assignment best;
        bool found = false;
        for (auto it = a; it != b; ++it) {
            const std::size_t j = order[it - first.begin()];
            const Eigen::VectorXd x = P.point(j);
            if (((x - lo).array() < 0.0).any() || ((hi - x).array() < 0.0).any()) continue;
            offer(part, i, x, P.weight(j), opt, best, found);
        }
        if (found) out.push_back(best);
    }
    return out;
}

std::vector<Assignment> find_good_caps_lattice(const CapPartition& part, double spacing, const GoodCapOptions& opt) {
    if (!(spacing > 0.0)) throw PreconditionError("lattice spacing must be positive", "spacing");
    const int n = part.base.n;
    std::vector<Assignment> out;
    for (std::size_t i = 0; i < part.cells.size(); ++i) {
        Eigen::VectorXd lo, hi;
        slab_box(part, i, lo, hi);
        std::vector<std::int64_t> zlo(n), zhi(n), z(n);
        for (int a = 0; a < n; ++a) {
            zlo[a] = static_cast<std::int64_t>(std::ceil(lo[a] / spacing));
            zhi[a] = static_cast<std::int64_t>(std::floor(hi[a] / spacing));
            if (zlo[a] > zhi[a]) goto next;
        }
        {
            Assignment best;
            bool found = false;
            z = zlo;
            Eigen::VectorXd x(n);
            while (true) {
                for (int a = 0; a < n; ++a) x[a] = z[a] * spacing;
                offer(part, i, x, 1.0, opt, best, found);
                int a = n - 1;
                while (a >= 0 && ++z[a] > zhi[a]) {
                    z[a] = zlo[a];
                    --a;
                }
                if (a < 0) break;
            }
            if (found) out.push_back(best);
        }
    next:;
    }
    return out;
}

Eigen::VectorXd RichSurface::perturbation(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(base.n);
    if (assignments.empty()) return out;
    double v = u[0];
    if (base.periodic) v -= std::floor(v);
    const double side = partition.side;
    auto cell = static_cast<std::ptrdiff_t>(std::floor(v / side));
    const BumpFunction& b = build_bump(1);
    // Supports stay inside the cell; neighbours are checked for points on a boundary.
    for (std::ptrdiff_t c = cell - 1; c <= cell + 1; ++c) {
        if (c < 0 || c >= static_cast<std::ptrdiff_t>(cap_lookup.size())) continue;
        const std::size_t k = cap_lookup[c];
        if (k == npos) continue;
        const Assignment& a = assignments[k];
        const double t = std::abs(v - a.foot[0]) / radius;
        if (t < 2.0) out += b(t) * (a.target - base(a.foot));
    }
    return out;
}

Eigen::VectorXd RichSurface::operator()(const Eigen::VectorXd& u) const { return base(u) + perturbation(u); }

double RichSurface::declared_bound(int j) const {
    const double bump = j == 0 ? 1.0 : build_bump(1).derivative_sup1(j);
    return base.derivative_bound(j) + a_max * std::pow(radius, -j) * bump;
}

RichSurface build_perturbation(const CapPartition& part, const std::vector<Assignment>& assignments,
                               const PerturbationOptions& opt) {
    if (part.base.m != 1) throw UnsupportedError("perturbations are implemented for curves (m = 1)", "m");
    RichSurface s;
    s.base = part.base;
    s.partition = part;
    s.a_max = opt.reach * std::pow(part.R, -part.beta * part.base.k);
    s.radius = opt.bump_radius * part.side;
    s.cap_lookup.assign(part.cells.size(), npos);
    for (const Assignment& a : assignments) {
        if (a.cap >= part.cells.size()) throw PreconditionError("assignment names a missing cap", "cap");
        if (s.cap_lookup[a.cap] != npos) throw PreconditionError("two assignments share a cap", "cap");
        const double off = (a.target - part.base(a.foot)).norm();
        if (off > s.a_max)
            throw ReachError("cap " + std::to_string(a.cap) + " target offset " + std::to_string(off) +
                                 " exceeds a_max " + std::to_string(s.a_max),
                             a.cap);
        const double lo = part.cells[a.cap].lo[0], hi = lo + part.side;
        if (a.foot[0] - 2.0 * s.radius < lo - 1e-12 || a.foot[0] + 2.0 * s.radius > hi + 1e-12)
            throw PreconditionError("bump around the foot of cap " + std::to_string(a.cap) + " leaves its cell",
                                    "cap");
        s.cap_lookup[a.cap] = s.assignments.size();
        s.assignments.push_back(a);
        s.assignments.back().offset = off;
    }
    for (const Assignment& a : s.assignments) s.incident.push_back(a.target);
    return s;
}

CertReport certify_ck(const RichSurface& s, int k, double spacing) {
    if (!(spacing > 0.0) || spacing > s.partition.side / 8.0 * (1.0 + 1e-12))
        throw PreconditionError("certification spacing must be positive and at most R^{-beta}/8", "spacing");
    CertReport rep;
    rep.measured.assign(k + 1, 0.0);
    rep.declared.resize(k + 1);
    rep.at.assign(k + 1, 0.0);
    for (int j = 0; j <= k; ++j) rep.declared[j] = s.declared_bound(j);
    const auto steps = static_cast<std::size_t>(std::ceil(1.0 / spacing));
    for (std::size_t g = 0; g <= steps; ++g) {
        const double u = g * spacing;
        for (int j = 0; j <= k; ++j) {
            const double half = 0.5 * j * spacing;
            if (!s.base.periodic && (u - half < 0.0 || u + half > 1.0)) continue;
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(s.base.n);
            for (int i = 0; i <= j; ++i)
                acc += ((i % 2) ? -1.0 : 1.0) * binomial(j, i) * s.at(u + half - i * spacing);
            const double v = acc.norm() / std::pow(spacing, j);
            if (v > rep.measured[j]) {
                rep.measured[j] = v;
                rep.at[j] = u;
            }
        }
    }
    for (int j = 0; j <= k; ++j)
        if (rep.measured[j] > 1.1 * rep.declared[j]) {
            rep.pass = false;
            if (rep.worst_order < 0) rep.worst_order = j;
        }
    return rep;
}

namespace {

JarnikResult finish(JarnikResult res, const CapPartition& part, std::vector<Assignment> good, int k,
                    const JarnikOptions& opt) {
    res.caps = part.cells.size();
    res.good = good.size();
    const double a_max = opt.perturbation.reach * std::pow(part.R, -part.beta * part.base.k);
    std::vector<Assignment> keep;
    for (auto& a : good) {
        if (a.offset > a_max)
            res.reach_failures.push_back(a.cap);
        else
            keep.push_back(std::move(a));
    }
    res.surface = build_perturbation(part, keep, opt.perturbation);
    res.surface.certification = certify_ck(res.surface, k, part.side / 16.0);
    return res;
}

Eigen::VectorXd ball_sample(Rng& rng, int n, double eps) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u;
    Eigen::VectorXd v(n);
    for (int a = 0; a < n; ++a) v[a] = g(rng);
    return v.normalized() * eps * std::pow(u(rng), 1.0 / n);
}

}  // namespace

JarnikResult jarnik_surface(int n, int m, int k, double R, const ParamSurface& base, Rng& rng,
                            const JarnikOptions& opt) {
    if (base.n != n) throw DimensionError("base surface ambient dimension differs from n", "n");
    if (base.m != m) throw DimensionError("base surface dimension differs from m", "m");
    if (base.k < k || static_cast<int>(base.bound.size()) <= k)
        throw CertificationError("base surface lacks derivative bounds up to order k", "k");
    JarnikResult res;
    res.beta = opt.beta > 0.0 ? opt.beta : double(n) / (m + k * (n - m));
    res.translation = ball_sample(rng, n, opt.epsilon);
    ParamSurface moved = translated(base, res.translation);
    moved.k = k;
    const CapPartition part = partition_caps(moved, R, res.beta);
    return finish(std::move(res), part, find_good_caps_lattice(part, 1.0 / R, opt.good), k, opt);
}

JarnikResult rich_surface_for(const PointSet& P, int k, double R, double beta, const ParamSurface& base, Rng& rng,
                              const JarnikOptions& opt) {
    if (base.k < k || static_cast<int>(base.bound.size()) <= k)
        throw CertificationError("base surface lacks derivative bounds up to order k", "k");
    JarnikResult res;
    res.beta = beta;
    res.translation = ball_sample(rng, base.n, opt.epsilon);
    ParamSurface moved = translated(base, res.translation);
    moved.k = k;
    const CapPartition part = partition_caps(moved, R, beta);
    return finish(std::move(res), part, find_good_caps(part, P, opt.good), k, opt);
}

std::string to_json(const RichSurface& s, int indent) {
    using nlohmann::json;
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json j;
    j["base"] = {{"name", s.base.name}, {"m", s.base.m}, {"n", s.base.n}, {"k", s.base.k}, {"bounds", s.base.bound}};
    j["beta"] = s.partition.beta;
    j["R"] = s.partition.R;
    j["caps"] = s.partition.cells.size();
    j["a_max"] = s.a_max;
    j["bump_radius"] = s.radius;
    json as = json::array();
    for (const auto& a : s.assignments)
        as.push_back({{"cap", a.cap},
                      {"amplitude", vec(a.target - s.base(a.foot))},
                      {"offset", a.offset},
                      {"foot", vec(a.foot)},
                      {"target", vec(a.target)}});
    j["assignments"] = as;
    json inc = json::array();
    for (const auto& p : s.incident) inc.push_back(vec(p));
    j["incident"] = inc;
    j["certification"] = {{"measured", s.certification.measured},
                          {"declared", s.certification.declared},
                          {"pass", s.certification.pass}};
    return j.dump(indent);
}

}  // namespace mtf
