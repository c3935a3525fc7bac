#include "mfa/interval_maps.hpp"

#include <algorithm>
#include <cmath>

#include "mfa/potentials.hpp"

namespace mfa {

namespace {

// root of f on [lo,hi] given f(lo), f(hi) of opposite sign:
// bisection to 1e-13, then a few clamped Newton steps
double find_root(const std::function<double(double)>& f, const std::function<double(double)>& df,
                 double lo, double hi) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    if (f(hi) == 0.0) return hi;
    bool lo_neg = flo < 0.0;
    while (hi - lo > 1e-13) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == lo_neg) lo = mid; else hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 5; ++it) {
        double d = df(x);
        if (d == 0.0) break;
        double step = f(x) / d;
        double nx = x - step;
        if (nx < lo) nx = lo;
        if (nx > hi) nx = hi;
        x = nx;
        if (std::fabs(step) < 1e-16) break;
    }
    return x;
}

// unique fixed point of a full branch (T - id changes sign across the domain)
double branch_fixed_point(const Branch& b) {
    auto g = [&](double x) { return b.forward(x) - x; };
    double lo = b.domain.a, hi = b.domain.b;
    double glo = g(lo), ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo < 0.0) == (ghi < 0.0)) {
        // no sign change: fall back to the endpoint closest to fixed
        return std::fabs(glo) < std::fabs(ghi) ? lo : hi;
    }
    return find_root(g, [&](double x) { return b.derivative(x) - 1.0; }, lo, hi);
}

void finish_branch(Branch& b) {
    b.fixed_point = branch_fixed_point(b);
    b.parabolic = std::fabs(b.derivative(b.fixed_point)) < 1.0 + 1e-9;
}

}  // namespace

BranchMap::BranchMap(std::string kind, std::vector<Branch> branches, std::string caveat)
    : kind_(std::move(kind)), branches_(std::move(branches)), caveat_(std::move(caveat)) {
    if (branches_.size() < 2) throw validation_error("BranchMap: need at least two branches");
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const Interval& d = branches_[i].domain;
        if (!(0.0 <= d.a && d.a < d.b && d.b <= 1.0))
            throw validation_error("BranchMap: branch domain must be a nondegenerate subinterval of [0,1]");
        if (i > 0 && d.a < branches_[i - 1].domain.b - 1e-15)
            throw validation_error("BranchMap: branch domains overlap or are out of order");
    }
}

std::optional<int> BranchMap::branch_index_of(double x) const {
    for (std::size_t i = 0; i < branches_.size(); ++i)
        if (branches_[i].domain.contains(x)) return int(i);  // leftmost wins at shared endpoints
    return std::nullopt;
}

double BranchMap::apply(double x) const {
    auto i = branch_index_of(x);
    if (!i) throw escape_error("point outside all branch domains", 1);
    return branches_[std::size_t(*i)].forward(x);
}

std::vector<int> BranchMap::parabolic_branches() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < branches_.size(); ++i)
        if (branches_[i].parabolic) out.push_back(int(i));
    return out;
}

double BranchMap::sup_log_derivative() const {
    double s = 0.0;
    for (const Branch& b : branches_) {
        for (double x : {b.domain.a, b.domain.b}) {
            double v = std::fabs(std::log(std::fabs(b.derivative(x))));
            s = std::max(s, v);
        }
    }
    return s;
}

BranchMap make_linear_map(const std::vector<Interval>& domains) {
    if (domains.size() < 2) throw validation_error("make_linear_map: need at least two branches");
    std::vector<Branch> branches;
    for (const Interval& d : domains) {
        if (!(0.0 <= d.a && d.a < d.b && d.b <= 1.0))
            throw validation_error("make_linear_map: bad domain");
        if (d.length() >= 1.0)
            throw validation_error("make_linear_map: branch is not expanding");
        Branch b;
        b.domain = d;
        const double len = d.length(), a = d.a;
        b.forward = [a, len](double x) { return (x - a) / len; };
        b.derivative = [len](double) { return 1.0 / len; };
        b.inverse = [a, len](double y) { return a + y * len; };
        b.increasing = true;
        b.affine = true;
        b.log_slope = std::log(len);  // log of the inverse-branch contraction
        finish_branch(b);
        branches.push_back(std::move(b));
    }
    BranchMap m("linear", std::move(branches));
    for (const Interval& d : domains) { m.params.push_back(d.a); m.params.push_back(d.b); }
    return m;
}

Branch make_numeric_branch(Interval domain, std::function<double(double)> forward,
                           std::function<double(double)> derivative, bool increasing) {
    Branch b;
    b.domain = domain;
    b.forward = forward;
    b.derivative = derivative;
    b.increasing = increasing;
    const double lo = domain.a, hi = domain.b;
    b.inverse = [forward, derivative, lo, hi](double y) {
        return find_root([&](double x) { return forward(x) - y; }, derivative, lo, hi);
    };
    finish_branch(b);
    return b;
}

BranchMap make_manneville_pomeau(double s) {
    if (!(s > 0.0)) throw validation_error("make_manneville_pomeau: require s > 0");
    const double c = std::pow(2.0, s);
    Branch b1 = make_numeric_branch(
        {0.0, 0.5},
        [c, s](double x) { return x * (1.0 + c * std::pow(x, s)); },
        [c, s](double x) { return 1.0 + c * (1.0 + s) * std::pow(x, s); },
        true);
    Branch b2;
    b2.domain = {0.5, 1.0};
    b2.forward = [](double x) { return 2.0 * x - 1.0; };
    b2.derivative = [](double) { return 2.0; };
    b2.inverse = [](double y) { return 0.5 * (y + 1.0); };
    b2.increasing = true;
    b2.affine = true;
    b2.log_slope = std::log(0.5);
    finish_branch(b2);
    BranchMap m("manneville_pomeau", {std::move(b1), std::move(b2)});
    m.params.push_back(s);
    return m;
}

BranchMap make_farey() {
    Branch b1;
    b1.domain = {0.0, 0.5};
    b1.forward = [](double x) { return x / (1.0 - x); };
    b1.derivative = [](double x) { double u = 1.0 - x; return 1.0 / (u * u); };
    b1.inverse = [](double y) { return y / (1.0 + y); };
    b1.increasing = true;
    finish_branch(b1);
    Branch b2;
    b2.domain = {0.5, 1.0};
    b2.forward = [](double x) { return (1.0 - x) / x; };
    b2.derivative = [](double x) { return -1.0 / (x * x); };
    b2.inverse = [](double y) { return 1.0 / (1.0 + y); };
    b2.increasing = false;
    finish_branch(b2);
    return BranchMap("farey", {std::move(b1), std::move(b2)},
                     "|T'(1)| = 1 at the non-fixed endpoint x = 1; expansion fails there");
}

// ---- parabolic hull ---------------------------------------------------------

bool ConvexHull::contains(const std::vector<double>& alpha, double tol) const {
    if (vertices.empty()) return false;
    if (int(alpha.size()) != d) throw validation_error("ConvexHull: dimension mismatch");
    if (d == 1) {
        double lo = vertices.front()[0], hi = lo;
        for (const auto& v : vertices) { lo = std::min(lo, v[0]); hi = std::max(hi, v[0]); }
        return alpha[0] >= lo - tol && alpha[0] <= hi + tol;
    }
    if (d == 2) {
        // inside iff alpha is on the inner side of every hull edge (hull is CCW)
        const std::size_t n = vertices.size();
        if (n == 1)
            return std::hypot(alpha[0] - vertices[0][0], alpha[1] - vertices[0][1]) <= tol;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = vertices[i];
            const auto& q = vertices[(i + 1) % n];
            double cross = (q[0] - p[0]) * (alpha[1] - p[1]) - (q[1] - p[1]) * (alpha[0] - p[0]);
            double edge = std::hypot(q[0] - p[0], q[1] - p[1]);
            if (cross < -tol * std::max(edge, 1.0)) return false;
        }
        return true;
    }
    throw validation_error("ConvexHull: only d <= 2 supported");
}

double ConvexHull::boundary_distance(const std::vector<double>& alpha) const {
    if (vertices.empty()) return INFINITY;
    if (int(alpha.size()) != d) throw validation_error("ConvexHull: dimension mismatch");
    if (d == 1) {
        double lo = vertices.front()[0], hi = lo;
        for (const auto& v : vertices) { lo = std::min(lo, v[0]); hi = std::max(hi, v[0]); }
        return std::min(std::abs(alpha[0] - lo), std::abs(alpha[0] - hi));
    }
    if (d != 2) throw validation_error("ConvexHull: only d <= 2 supported");
    const std::size_t n = vertices.size();
    double best = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = vertices[i];
        const auto& q = vertices[(i + 1) % std::max<std::size_t>(n, 1)];
        const double dx = q[0] - p[0], dy = q[1] - p[1];
        const double len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? ((alpha[0] - p[0]) * dx + (alpha[1] - p[1]) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::hypot(alpha[0] - (p[0] + t * dx), alpha[1] - (p[1] + t * dy)));
    }
    return best;
}

ConvexHull hull_of_points(int d, const std::vector<std::vector<double>>& pts) {
    ConvexHull h;
    h.d = d;
    if (pts.empty()) return h;
    if (d == 1) {
        double lo = pts.front()[0], hi = lo;
        for (const auto& p : pts) { lo = std::min(lo, p[0]); hi = std::max(hi, p[0]); }
        h.vertices = {{lo}, {hi}};
        if (hi - lo < 1e-15) h.vertices = {{lo}};
        return h;
    }
    if (d != 2) throw validation_error("hull_of_points: only d <= 2 supported");
    // Andrew monotone chain
    std::vector<std::vector<double>> p = pts;
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() <= 2) { h.vertices = p; return h; }
    auto cross = [](const std::vector<double>& o, const std::vector<double>& a,
                    const std::vector<double>& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<std::vector<double>> hull(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
        hull[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
        hull[k++] = p[i];
    }
    hull.resize(k - 1);
    h.vertices = hull;
    return h;
}

ConvexHull parabolic_hull(const BranchMap& map, const AlmostAdditivePotential& pot,
                             int n_limit, double tol) {
    if (n_limit < 2) throw validation_error("parabolic_hull: n_limit too small");
    std::vector<std::vector<double>> limits;
    for (int j : map.parabolic_branches()) {
        // Fekete bracket of lim phi_m(j^m)/m along the constant word, with the
        // full n_limit context feeding each phi_m evaluation.
        std::vector<std::uint8_t> w(std::size_t(n_limit), std::uint8_t(j + 1));
        std::vector<double> lo(std::size_t(pot.d), -INFINITY), hi(std::size_t(pot.d), INFINITY);
        for (int m = 1; m <= n_limit; ++m) {
            std::vector<double> phi = pot.evaluate(w, m);
            for (int t = 0; t < pot.d; ++t) {
                lo[std::size_t(t)] = std::max(lo[std::size_t(t)], (phi[std::size_t(t)] - pot.C[std::size_t(t)]) / m);
                hi[std::size_t(t)] = std::min(hi[std::size_t(t)], (phi[std::size_t(t)] + pot.C[std::size_t(t)]) / m);
            }
        }
        std::vector<double> mid(std::size_t(pot.d));
        for (int t = 0; t < pot.d; ++t) {
            double width = hi[std::size_t(t)] - lo[std::size_t(t)];
            // A sound bracket always satisfies lo <= limit <= hi, so a material
            // inversion means C does not certify this orbit (per-m averages
            // drift more than the almost-additivity constant allows); refuse
            // rather than return the midpoint of a meaningless interval.
            if (width < -1e-9)
                throw nonconvergence_error(
                    "parabolic_hull: bracket inverted: the almost-additivity "
                    "constant does not certify this orbit",
                    hi[std::size_t(t)], lo[std::size_t(t)]);
            if (width > tol)
                throw nonconvergence_error("parabolic_hull: bracket wider than tolerance at n_limit",
                                           lo[std::size_t(t)], hi[std::size_t(t)]);
            mid[std::size_t(t)] = 0.5 * (lo[std::size_t(t)] + hi[std::size_t(t)]);
        }
        limits.push_back(std::move(mid));
    }
    return hull_of_points(pot.d, limits);
}

}  // namespace mfa
