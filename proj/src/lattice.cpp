#include "mtforge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <unordered_map>

#include "mtforge/errors.hpp"

namespace mtf {

Lattice::Lattice(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
    if (basis_.rows() != basis_.cols()) throw DimensionError("lattice basis must be square", "basis");
    if (!(std::abs(basis_.determinant()) > 0.0)) throw DegenerateError("lattice basis is singular", "basis");
}

Lattice Lattice::scaled_integer(int N, double scale) {
    if (N < 1) throw DimensionError("lattice dimension must be >= 1", "N");
    if (!(scale > 0.0)) throw DegenerateError("lattice scale must be positive", "scale");
    return Lattice(scale * Eigen::MatrixXd::Identity(N, N));
}

double Lattice::covolume() const { return std::abs(basis_.determinant()); }

bool Lattice::is_diagonal() const { return basis_.isDiagonal(0.0); }

Eigen::VectorXd Lattice::point(const std::vector<std::int64_t>& z) const {
    Eigen::VectorXd v(dim());
    for (int i = 0; i < dim(); ++i) v[i] = static_cast<double>(z[i]);
    return basis_ * v;
}

Lattice dual(const Lattice& L) {
    if (L.is_diagonal()) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(L.dim(), L.dim());
        for (int i = 0; i < L.dim(); ++i) b(i, i) = 1.0 / L.basis()(i, i);
        return Lattice(std::move(b));
    }
    return Lattice(L.basis().inverse().transpose());
}

double PointSet::total_weight() const {
    if (weights.empty()) return static_cast<double>(size());
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

std::size_t PointSet::boundary_count() const {
    return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), std::uint8_t{1}));
}

void PointSet::push(const double* x, double w) {
    coords.insert(coords.end(), x, x + dim);
    if (!weights.empty() || w != 1.0) {
        if (weights.empty()) weights.assign(size() - 1, 1.0);
        weights.push_back(w);
    }
}

namespace {

// Fincke-Pohst enumeration over an ellipsoid containing the body, filtered
// by exact membership at the leaves.
template <class Visit>
void enumerate_impl(const Lattice& L, const ConvexBody& body, double margin, Visit&& visit) {
    const int N = L.dim();
    if (body.dim() != N) throw DimensionError("body and lattice dimensions differ", "N");
    const Eigen::MatrixXd& B = L.basis();
    const Eigen::MatrixXd Binv = B.inverse();
    const Eigen::MatrixXd& F = body.frame().matrix();
    const Eigen::VectorXd e = body.enclosing_ellipsoid_axes();

    Eigen::MatrixXd G = F.transpose() * B;  // frame coordinates of basis vectors
    for (int i = 0; i < N; ++i) G.row(i) /= e[i];
    const Eigen::MatrixXd Q = G.transpose() * G;
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) throw DegenerateError("enumeration form is not positive definite", "body");
    const Eigen::MatrixXd U = llt.matrixU();
    const Eigen::VectorXd z0 = Binv * body.center();

    std::vector<double> glo(N), ghi(N);
    for (int j = 0; j < N; ++j) {
        const Eigen::VectorXd w = Binv.row(j).transpose();
        ghi[j] = std::floor(body.support(w) + 1e-9);
        glo[j] = std::ceil(-body.support(-w) - 1e-9);
    }

    const double budget = 1.0 + 1e-7;
    std::vector<std::int64_t> z(N, 0), hi(N, 0);
    std::vector<double> rem(N + 1, 0.0), dz(N, 0.0);
    rem[N] = budget;
    Eigen::VectorXd x(N);

    auto interval = [&](int i, std::int64_t& lo_out, std::int64_t& hi_out) {
        double shift = 0.0;
        for (int j = i + 1; j < N; ++j) shift += U(i, j) * dz[j];
        const double r = std::sqrt(std::max(rem[i + 1], 0.0));
        const double uii = U(i, i);
        double lo = z0[i] + (-r - shift) / uii;
        double up = z0[i] + (r - shift) / uii;
        lo = std::max(std::ceil(lo - 1e-9), glo[i]);
        up = std::min(std::floor(up + 1e-9), ghi[i]);
        lo_out = static_cast<std::int64_t>(lo);
        hi_out = static_cast<std::int64_t>(up);
        return shift;
    };

    std::vector<double> shifts(N, 0.0);
    int i = N - 1;
    {
        std::int64_t lo, up;
        shifts[i] = interval(i, lo, up);
        z[i] = lo;
        hi[i] = up;
    }
    while (true) {
        if (z[i] > hi[i]) {
            if (++i == N) break;
            ++z[i];
            continue;
        }
        dz[i] = static_cast<double>(z[i]) - z0[i];
        const double t = U(i, i) * dz[i] + shifts[i];
        rem[i] = rem[i + 1] - t * t;
        if (rem[i] < -1e-12) {
            ++z[i];
            continue;
        }
        if (i == 0) {
            for (int k = 0; k < N; ++k) x[k] = static_cast<double>(z[k]);
            const Eigen::VectorXd p = B * x;
            const double s = body.slack(p);
            if (s >= -margin) visit(z, p, s < margin);
            ++z[0];
            continue;
        }
        --i;
        std::int64_t lo, up;
        shifts[i] = interval(i, lo, up);
        z[i] = lo;
        hi[i] = up;
    }
}

}  // namespace

PointSet enumerate_in_body(const Lattice& L, const ConvexBody& body, const EnumerationOptions& opt) {
    PointSet ps;
    ps.dim = L.dim();
    ps.preimage_dim = L.dim();
    ps.provenance = std::string("lattice points in ") + to_string(body.kind());
    std::uint64_t count = 0;
    enumerate_impl(L, body, opt.margin, [&](const std::vector<std::int64_t>& z, const Eigen::VectorXd& p, bool edge) {
        if (++count > opt.cap)
            throw BudgetError("enumeration exceeded the cap of " + std::to_string(opt.cap) + " points", count, "cap");
        ps.coords.insert(ps.coords.end(), p.data(), p.data() + p.size());
        ps.preimages.insert(ps.preimages.end(), z.begin(), z.end());
        ps.boundary.push_back(edge ? 1 : 0);
    });
    // Canonical order: lexicographic in integer coordinates.
    const std::size_t n = ps.size();
    const int d = ps.dim;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(ps.preimages.begin() + a * d, ps.preimages.begin() + (a + 1) * d,
                                            ps.preimages.begin() + b * d, ps.preimages.begin() + (b + 1) * d);
    });
    PointSet out;
    out.dim = d;
    out.preimage_dim = d;
    out.provenance = ps.provenance;
    out.coords.reserve(ps.coords.size());
    out.preimages.reserve(ps.preimages.size());
    for (std::size_t k : idx) {
        out.coords.insert(out.coords.end(), ps.coords.begin() + k * d, ps.coords.begin() + (k + 1) * d);
        out.preimages.insert(out.preimages.end(), ps.preimages.begin() + k * d, ps.preimages.begin() + (k + 1) * d);
        out.boundary.push_back(ps.boundary[k]);
    }
    return out;
}

std::uint64_t count_in_body(const Lattice& L, const ConvexBody& body, const EnumerationOptions& opt) {
    std::uint64_t count = 0;
    enumerate_impl(L, body, opt.margin, [&](const std::vector<std::int64_t>&, const Eigen::VectorXd&, bool) {
        if (++count > opt.cap)
            throw BudgetError("enumeration exceeded the cap of " + std::to_string(opt.cap) + " points", count, "cap");
    });
    return count;
}

PointSet project_points(const Embedding& iota, const Lattice& L, double r, double thickness,
                        const EnumerationOptions& opt) {
    if (!(r > 0.0)) throw PreconditionError("projection radius must be positive", "r");
    const int N = iota.N();
    const int n = iota.n();
    if (L.dim() != N) throw DimensionError("lattice and embedding dimensions differ", "N");
    ConvexBody body = [&] {
        if (n == N) return ConvexBody::ball(Eigen::VectorXd::Zero(N), r / iota.lambda);
        if (!(thickness > 0.0)) throw PreconditionError("slab thickness must be positive", "thickness");
        // Complete the frame of V to an orthonormal basis of R^N.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(iota.frame);
        Eigen::MatrixXd full = qr.householderQ();
        full.leftCols(n) = iota.frame;
        if (full.determinant() < 0) full.col(N - 1) *= -1.0;
        return ConvexBody::cylinder(Eigen::VectorXd::Zero(N), Rotation(full),
                                    {BodyBlock{n, true, r / iota.lambda, {}},
                                     BodyBlock{N - n, true, thickness, {}}});
    }();
    PointSet pre = enumerate_in_body(L, body, opt);
    PointSet out;
    out.dim = n;
    out.preimage_dim = N;
    out.preimages = pre.preimages;
    out.boundary = pre.boundary;
    out.provenance = "projected lattice points";
    out.coords.reserve(pre.size() * n);
    for (std::size_t i = 0; i < pre.size(); ++i) {
        const Eigen::VectorXd y = iota.project(pre.point(i));
        out.coords.insert(out.coords.end(), y.data(), y.data() + n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tube search

namespace {

struct Best {
    double value = -1.0;
    double s0 = 0.0, t0 = 0.0;  // centre of the winning window
};

// Lazy segment tree: range add, global max with argmax.
class MaxTree {
public:
    explicit MaxTree(std::size_t n) : n_(n), mx_(4 * n + 4, 0.0), lz_(4 * n + 4, 0.0) {}
    void add(std::size_t l, std::size_t r, double v) { add(1, 0, n_ - 1, l, r, v); }
    double max() const { return mx_[1]; }
    std::size_t argmax() const {
        std::size_t node = 1, lo = 0, hi = n_ - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            const double target = mx_[node] - lz_[node];
            if (mx_[2 * node] >= target) {
                node = 2 * node;
                hi = mid;
            } else {
                node = 2 * node + 1;
                lo = mid + 1;
            }
        }
        return lo;
    }

private:
    void add(std::size_t node, std::size_t lo, std::size_t hi, std::size_t l, std::size_t r, double v) {
        if (r < lo || hi < l) return;
        if (l <= lo && hi <= r) {
            mx_[node] += v;
            lz_[node] += v;
            return;
        }
        const std::size_t mid = (lo + hi) / 2;
        add(2 * node, lo, mid, l, r, v);
        add(2 * node + 1, mid + 1, hi, l, r, v);
        mx_[node] = std::max(mx_[2 * node], mx_[2 * node + 1]) + lz_[node];
    }
    std::size_t n_;
    std::vector<double> mx_, lz_;
};

// Max weight in a window |s - s0| <= hs, |t - t0| <= ht over (s0, t0).
Best best_window(const std::vector<double>& s, const std::vector<double>& t, const PointSet& P, double hs,
                 double ht, bool infinite) {
    const std::size_t n = s.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    Best best;
    const double eps = 1e-9 * (1.0 + hs);
    if (infinite) {
        double acc = 0.0;
        std::size_t lo = 0;
        for (std::size_t hiIdx = 0; hiIdx < n; ++hiIdx) {
            acc += P.weight(order[hiIdx]);
            while (s[order[hiIdx]] - s[order[lo]] > 2 * hs + eps) acc -= P.weight(order[lo++]);
            if (acc > best.value) {
                best.value = acc;
                best.s0 = 0.5 * (s[order[hiIdx]] + s[order[lo]]);
            }
        }
        return best;
    }
    std::vector<double> ts(t);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    MaxTree tree(ts.size());
    const double epst = 1e-9 * (1.0 + ht);
    auto range_of = [&](double ti) {
        // Windows (tj - 2ht, tj] containing ti: ti <= tj <= ti + 2ht.
        const std::size_t l = std::lower_bound(ts.begin(), ts.end(), ti - epst) - ts.begin();
        const std::size_t r = std::upper_bound(ts.begin(), ts.end(), ti + 2 * ht + epst) - ts.begin();
        return std::pair<std::size_t, std::size_t>(l, r - 1);
    };
    std::size_t lo = 0;
    for (std::size_t hiIdx = 0; hiIdx < n; ++hiIdx) {
        const std::size_t k = order[hiIdx];
        auto [l, r] = range_of(t[k]);
        tree.add(l, r, P.weight(k));
        while (s[k] - s[order[lo]] > 2 * hs + eps) {
            auto [l2, r2] = range_of(t[order[lo]]);
            tree.add(l2, r2, -P.weight(order[lo]));
            ++lo;
        }
        if (tree.max() > best.value) {
            best.value = tree.max();
            best.s0 = 0.5 * (s[k] + s[order[lo]]);
            best.t0 = ts[tree.argmax()] - ht;
        }
    }
    return best;
}

struct Frame2 {
    double cx = 0, cy = 0, rho = 0;  // enclosing circle (centre, radius)
};

Frame2 enclosing(const PointSet& P) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (std::size_t i = 0; i < P.size(); ++i) {
        xmin = std::min(xmin, P.at(i)[0]);
        xmax = std::max(xmax, P.at(i)[0]);
        ymin = std::min(ymin, P.at(i)[1]);
        ymax = std::max(ymax, P.at(i)[1]);
    }
    Frame2 f;
    f.cx = 0.5 * (xmin + xmax);
    f.cy = 0.5 * (ymin + ymax);
    for (std::size_t i = 0; i < P.size(); ++i)
        f.rho = std::max(f.rho, std::hypot(P.at(i)[0] - f.cx, P.at(i)[1] - f.cy));
    return f;
}

// Canonical angles in [0, pi) from nearest-neighbour pairs, most frequent first.
std::vector<double> pair_directions(const PointSet& P, const TubeSearchOptions& opt) {
    const std::size_t n = P.size();
    std::map<long long, std::pair<double, std::size_t>> seen;
    auto add = [&](std::size_t a, std::size_t b) {
        double th = std::atan2(P.at(b)[1] - P.at(a)[1], P.at(b)[0] - P.at(a)[0]);
        if (th < 0) th += M_PI;
        if (th >= M_PI) th -= M_PI;
        const long long key = std::llround(th * 1e10);
        auto it = seen.find(key);
        if (it == seen.end())
            seen.emplace(key, std::make_pair(th, std::size_t{1}));
        else
            ++it->second.second;
    };
    if (n <= 400) {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) add(a, b);
    } else {
        // Grid hash with about two points per cell.
        const Frame2 f = enclosing(P);
        const double cell = std::max(2.0 * f.rho / std::sqrt(n / 2.0), 1e-12);
        const long long side = static_cast<long long>(std::ceil(2.0 * f.rho / cell)) + 3;
        std::unordered_map<long long, std::vector<std::size_t>> grid;
        auto key_of = [&](double x, double y, long long& gx, long long& gy) {
            gx = static_cast<long long>(std::floor((x - f.cx + f.rho) / cell)) + 1;
            gy = static_cast<long long>(std::floor((y - f.cy + f.rho) / cell)) + 1;
            return gx * side + gy;
        };
        for (std::size_t i = 0; i < n; ++i) {
            long long gx, gy;
            grid[key_of(P.at(i)[0], P.at(i)[1], gx, gy)].push_back(i);
        }
        const std::size_t K = static_cast<std::size_t>(opt.anchor_neighbors);
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t i = 0; i < n; ++i) {
            long long gx, gy;
            key_of(P.at(i)[0], P.at(i)[1], gx, gy);
            cand.clear();
            for (long long ring = 1; ring < side; ++ring) {
                cand.clear();
                for (long long dx = -ring; dx <= ring; ++dx)
                    for (long long dy = -ring; dy <= ring; ++dy) {
                        auto it = grid.find((gx + dx) * side + (gy + dy));
                        if (it == grid.end()) continue;
                        for (std::size_t j : it->second)
                            if (j != i)
                                cand.emplace_back(std::hypot(P.at(j)[0] - P.at(i)[0], P.at(j)[1] - P.at(i)[1]), j);
                    }
                if (cand.size() >= K) {
                    std::partial_sort(cand.begin(), cand.begin() + K, cand.end());
                    if (cand[K - 1].first <= ring * cell) break;
                }
            }
            std::sort(cand.begin(), cand.end());
            for (std::size_t q = 0; q < std::min(K, cand.size()); ++q) add(i, cand[q].second);
        }
    }
    std::vector<std::pair<std::size_t, double>> ranked;
    for (auto& [k, v] : seen) ranked.emplace_back(v.second, v.first);
    std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.first > b.first; });
    std::vector<double> out;
    for (std::size_t i = 0; i < std::min(ranked.size(), opt.max_anchor_directions); ++i)
        out.push_back(ranked[i].second);
    return out;
}

Best evaluate_direction(const PointSet& P, double th, double hs, double ht, bool infinite, std::vector<double>& s,
                        std::vector<double>& t) {
    const double ex = std::cos(th), ey = std::sin(th);
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double x = P.at(i)[0], y = P.at(i)[1];
        t[i] = ex * x + ey * y;
        s[i] = -ey * x + ex * y;
    }
    return best_window(s, t, P, hs, ht, infinite);
}

Tube make_tube2(double th, const Best& b, double radius, double length) {
    Tube tube;
    tube.l = 1;
    const double ex = std::cos(th), ey = std::sin(th);
    tube.frame = Eigen::MatrixXd(2, 1);
    tube.frame << ex, ey;
    tube.anchor = Eigen::VectorXd(2);
    tube.anchor << ex * b.t0 - ey * b.s0, ey * b.t0 + ex * b.s0;
    tube.radius = radius;
    tube.length = length;
    return tube;
}

// Max weight inside a disk of radius r (2D) with an axial window of length
// `len` on the third coordinate; exact via boundary-pair candidate centres.
double best_disk_window(const std::vector<Eigen::Vector3d>& q, const PointSet& P, double r, double len,
                        Eigen::Vector3d& centre) {
    const std::size_t n = q.size();
    std::vector<Eigen::Vector2d> cands;
    for (std::size_t i = 0; i < n; ++i) {
        cands.emplace_back(q[i].x(), q[i].y());
        for (std::size_t j = i + 1; j < n; ++j) {
            const Eigen::Vector2d a(q[i].x(), q[i].y()), b(q[j].x(), q[j].y());
            const double d = (b - a).norm();
            if (d > 2 * r || d == 0.0) continue;
            const Eigen::Vector2d mid = 0.5 * (a + b);
            const Eigen::Vector2d perp = Eigen::Vector2d(-(b - a).y(), (b - a).x()) / d;
            const double h = std::sqrt(std::max(r * r - 0.25 * d * d, 0.0));
            cands.push_back(mid + h * perp);
            cands.push_back(mid - h * perp);
        }
    }
    double best = 0.0;
    std::vector<std::pair<double, double>> inside;
    for (const auto& c : cands) {
        inside.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (std::hypot(q[i].x() - c.x(), q[i].y() - c.y()) <= r * (1 + 1e-9) + 1e-12)
                inside.emplace_back(q[i].z(), P.weight(i));
        std::sort(inside.begin(), inside.end());
        double acc = 0.0;
        std::size_t lo = 0;
        for (std::size_t hi = 0; hi < inside.size(); ++hi) {
            acc += inside[hi].second;
            while (inside[hi].first - inside[lo].first > len + 1e-9) acc -= inside[lo++].second;
            if (acc > best) {
                best = acc;
                centre = Eigen::Vector3d(c.x(), c.y(), 0.5 * (inside[hi].first + inside[lo].first));
            }
        }
    }
    return best;
}

TubeCount direction3(const PointSet& P, const Eigen::Vector3d& v, double radius, double length) {
    Eigen::Vector3d u = v.normalized();
    Eigen::Vector3d a = std::abs(u.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d e1 = (a - a.dot(u) * u).normalized();
    Eigen::Vector3d e2 = u.cross(e1);
    std::vector<Eigen::Vector3d> q(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) {
        Eigen::Map<const Eigen::Vector3d> x(P.at(i));
        q[i] = Eigen::Vector3d(x.dot(e1), x.dot(e2), x.dot(u));
    }
    Eigen::Vector3d c(0, 0, 0);
    TubeCount tc;
    tc.lower = best_disk_window(q, P, radius, std::isfinite(length) ? length : 1e300, c);
    tc.upper = tc.lower;
    tc.witness.l = 1;
    tc.witness.frame = u;
    tc.witness.anchor = c.x() * e1 + c.y() * e2 + c.z() * u;
    tc.witness.radius = radius;
    tc.witness.length = length;
    tc.directions = 1;
    return tc;
}

// Dimension >= 4: transverse centres are circumcentres of up to n point
// subsets (every minimal enclosing ball is one of these).
TubeCount direction_n(const PointSet& P, const Eigen::VectorXd& v, double radius, double length) {
    const int n = P.dim;
    const Eigen::VectorXd u = v.normalized();
    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(n, n);
    basis.col(0) = u;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    const Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd E = Q.rightCols(n - 1);
    const std::size_t m = P.size();
    std::vector<Eigen::VectorXd> q(m);
    std::vector<double> ax(m);
    for (std::size_t i = 0; i < m; ++i) {
        q[i] = E.transpose() * P.point(i);
        ax[i] = P.point(i).dot(u);
    }
    const double len = std::isfinite(length) ? length : 1e300;
    const double tol = radius * (1 + 1e-9) + 1e-12;
    double best = 0.0;
    Eigen::VectorXd best_c = Eigen::VectorXd::Zero(n - 1);
    double best_s = 0.0;
    std::vector<std::pair<double, double>> inside;
    auto evaluate = [&](const Eigen::VectorXd& c) {
        inside.clear();
        for (std::size_t i = 0; i < m; ++i)
            if ((q[i] - c).norm() <= tol) inside.emplace_back(ax[i], P.weight(i));
        std::sort(inside.begin(), inside.end());
        double acc = 0.0;
        std::size_t lo = 0;
        for (std::size_t hi = 0; hi < inside.size(); ++hi) {
            acc += inside[hi].second;
            while (inside[hi].first - inside[lo].first > len + 1e-9) acc -= inside[lo++].second;
            if (acc > best) {
                best = acc;
                best_c = c;
                best_s = 0.5 * (inside[hi].first + inside[lo].first);
            }
        }
    };
    std::vector<std::size_t> idx;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (!idx.empty()) {
            const std::size_t k = idx.size();
            Eigen::MatrixXd A(n - 1, k - 1);
            for (std::size_t j = 1; j < k; ++j) A.col(j - 1) = q[idx[j]] - q[idx[0]];
            Eigen::VectorXd c = q[idx[0]];
            bool ok = true;
            if (k > 1) {
                const Eigen::MatrixXd G = A.transpose() * A;
                Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
                ok = lu.isInvertible();
                if (ok) c += A * lu.solve(0.5 * G.diagonal());
            }
            if (ok && (c - q[idx[0]]).norm() <= tol) evaluate(c);
            else if (k > 1) return;
        }
        if (idx.size() == static_cast<std::size_t>(n)) return;
        for (std::size_t i = start; i < m; ++i) {
            idx.push_back(i);
            rec(i + 1);
            idx.pop_back();
        }
    };
    rec(0);
    TubeCount tc;
    tc.lower = tc.upper = best;
    tc.witness.l = 1;
    tc.witness.frame = u;
    tc.witness.anchor = E * best_c + best_s * u;
    tc.witness.radius = radius;
    tc.witness.length = length;
    tc.directions = 1;
    return tc;
}

}  // namespace

TubeCount max_tube_count_direction(const PointSet& P, const Eigen::VectorXd& direction, double radius,
                                   double length) {
    if (P.size() == 0) throw PreconditionError("point set is empty", "P");
    if (direction.size() != P.dim) throw DimensionError("direction and point dimensions differ", "direction");
    if (P.dim == 3) return direction3(P, direction, radius, length);
    if (P.dim >= 4) return direction_n(P, direction, radius, length);
    if (P.dim != 2) throw UnsupportedError("fixed-direction tube search needs n >= 2", "n");
    const double th0 = std::atan2(direction[1], direction[0]);
    const double th = th0 < 0 ? th0 + M_PI : th0;
    std::vector<double> s(P.size()), t(P.size());
    const bool infinite = !std::isfinite(length);
    Best b = evaluate_direction(P, th, radius, infinite ? 0.0 : 0.5 * length, infinite, s, t);
    TubeCount tc;
    tc.lower = tc.upper = b.value;
    tc.witness = make_tube2(th, b, radius, length);
    tc.directions = 1;
    return tc;
}

TubeCount max_tube_count(const PointSet& P, int l, double radius, double length, const TubeSearchOptions& opt) {
    if (P.size() == 0) throw PreconditionError("point set is empty", "P");
    const int n = P.dim;
    if (!(l == 1 && (n == 2 || n == 3)))
        throw UnsupportedError("tube search supports l = 1 in dimension 2 or 3", "l");
    if (!(radius > 0.0)) throw PreconditionError("tube radius must be positive", "radius");
    TubeCount out;
    const double total = P.total_weight();
    if (P.size() == 1) {
        out.lower = out.upper = P.weight(0);
        out.witness.l = 1;
        out.witness.anchor = P.point(0);
        out.witness.frame = Eigen::MatrixXd::Zero(n, 1);
        out.witness.frame(0, 0) = 1.0;
        out.witness.radius = radius;
        out.witness.length = length;
        out.directions = 1;
        return out;
    }

    if (n == 3) {
        // Pair directions only; the covering bound falls back to the total.
        std::vector<Eigen::Vector3d> dirs;
        const std::size_t m = P.size();
        for (std::size_t a = 0; a < m && dirs.size() < opt.max_anchor_directions; ++a)
            for (std::size_t b = a + 1; b < m && dirs.size() < opt.max_anchor_directions; ++b) {
                Eigen::Vector3d d = Eigen::Map<const Eigen::Vector3d>(P.at(b)) - Eigen::Map<const Eigen::Vector3d>(P.at(a));
                if (d.norm() > 0) dirs.push_back(d.normalized());
            }
        out.lower = -1;
        for (const auto& d : dirs) {
            TubeCount tc = direction3(P, d, radius, length);
            ++out.directions;
            if (tc.lower > out.lower) {
                out.lower = tc.lower;
                out.witness = tc.witness;
            }
        }
        out.upper = total;
        out.upper_trivial = true;
        return out;
    }

    const Frame2 fr = enclosing(P);
    const bool infinite = !std::isfinite(length) || 0.5 * length >= fr.rho + radius;
    const double ht = infinite ? 0.0 : 0.5 * length;
    std::vector<double> s(P.size()), t(P.size());

    out.lower = -1;
    double best_th = 0.0;
    Best best;
    for (double th : pair_directions(P, opt)) {
        Best b = evaluate_direction(P, th, radius, ht, infinite, s, t);
        ++out.directions;
        if (b.value > out.lower) {
            out.lower = b.value;
            best = b;
            best_th = th;
        }
    }

    // Covering bound: each direction cell of half-angle d is served by a
    // widened window at the cell centre.
    const double reach = infinite ? fr.rho : std::min(fr.rho, ht + radius);
    std::size_t M = 1;
    if (opt.widen > 0.0 && reach > 0.0) {
        const double ratio = std::min(1.0, opt.widen / reach);
        M = static_cast<std::size_t>(std::ceil(M_PI / (2.0 * std::asin(ratio))));
    }
    M = std::max<std::size_t>(M, 1);
    const bool do_upper =
        opt.upper && M <= opt.max_grid_directions && static_cast<double>(M) * P.size() <= opt.grid_budget;
    if (do_upper) {
        const double half = M_PI / (2.0 * M);
        const double hs_w = radius + reach * std::sin(half);
        const double ht_w = infinite ? 0.0 : ht + radius + radius * std::sin(half);
        double up = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
            const double th = (2.0 * j + 1.0) * half;
            Best bw = evaluate_direction(P, th, hs_w, ht_w, infinite, s, t);
            up = std::max(up, bw.value);
            Best b = evaluate_direction(P, th, radius, ht, infinite, s, t);
            ++out.directions;
            if (b.value > out.lower) {
                out.lower = b.value;
                best = b;
                best_th = th;
            }
        }
        out.upper = std::min(std::max(up, out.lower), total);
    } else {
        out.upper = total;
        out.upper_trivial = true;
    }
    out.witness = make_tube2(best_th, best, radius, length);
    return out;
}

}  // namespace mtf
