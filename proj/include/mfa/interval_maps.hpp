// Piecewise expanding full-branch interval maps on [0,1] and their inverse branches.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfa/common.hpp"

namespace mfa {

struct AlmostAdditivePotential;  // potentials.hpp

struct Interval {
    double a = 0.0, b = 1.0;
    double length() const { return b - a; }
    double midpoint() const { return 0.5 * (a + b); }
    bool contains(double x) const { return a <= x && x <= b; }
};

// One full branch T|_[a,b] -> [0,1].  `forward` and `derivative` are defined on
// the branch domain; `inverse` maps [0,1] back onto the domain.  The derivative
// is signed (decreasing branches carry negative values).  Every builtin branch
// has a monotone derivative, which the oscillation brackets elsewhere rely on.
struct Branch {
    Interval domain;
    std::function<double(double)> forward;
    std::function<double(double)> derivative;
    std::function<double(double)> inverse;
    bool increasing = true;
    bool affine = false;
    double log_slope = 0.0;  // log of the inverse-branch contraction |I| when affine
    double fixed_point = 0.0;
    bool parabolic = false;  // |T'(fixed_point)| < 1 + 1e-9
};

class BranchMap {
  public:
    BranchMap(std::string kind, std::vector<Branch> branches, std::string caveat = "");

    int num_branches() const { return int(branches_.size()); }
    const Branch& branch(int i) const { return branches_.at(std::size_t(i)); }
    const std::string& kind() const { return kind_; }

    // non-empty when expansion fails somewhere harmless to the construction
    // (e.g. |T'(1)| = 1 at a non-fixed endpoint of the Farey map)
    const std::string& caveat() const { return caveat_; }

    // leftmost branch whose domain contains x; nullopt when x falls in a gap
    std::optional<int> branch_index_of(double x) const;

    // apply T once; escape_error when x lies outside every branch domain
    double apply(double x) const;

    std::vector<int> parabolic_branches() const;

    // sup of |log|T'|| over all branch domains (derivative endpoints; the
    // builtin branches have monotone derivatives so this is exact)
    double sup_log_derivative() const;

    // parameters recorded by the factories, for serialization
    std::vector<double> params;

  private:
    std::string kind_;
    std::vector<Branch> branches_;
    std::string caveat_;
};

// Affine full branches over the given pairwise-disjoint domains (shared
// endpoints allowed).  Domains must be ordered left to right inside [0,1].
BranchMap make_linear_map(const std::vector<Interval>& domains);

// Branch 1: x(1 + 2^s x^s) on [0,1/2] (parabolic fixed point at 0);
// branch 2: 2x - 1 on [1/2,1].  Requires s > 0.
BranchMap make_manneville_pomeau(double s);

// Branch 1: x/(1-x) on [0,1/2] (parabolic fixed point at 0);
// branch 2: (1-x)/x on [1/2,1], decreasing.  |T'(1)| = 1 at the non-fixed
// endpoint x = 1, recorded as a caveat.
BranchMap make_farey();

// Hand-rolled branch for tests and extensions: forward/derivative callables
// with the inverse recovered by bisection + Newton.
Branch make_numeric_branch(Interval domain, std::function<double(double)> forward,
                           std::function<double(double)> derivative, bool increasing);

// Convex hull of the Birkhoff limits along parabolic orbits.  d = 1 keeps an
// interval; d >= 2 keeps the hull vertices.
struct ConvexHull {
    int d = 1;
    std::vector<std::vector<double>> vertices;  // hull vertices, each of size d
    bool empty() const { return vertices.empty(); }
    bool contains(const std::vector<double>& alpha, double tol) const;
    // distance from alpha to the hull boundary (0 if the hull is a point)
    double boundary_distance(const std::vector<double>& alpha) const;
};

// Fekete bracket of lim phi_n(j^n)/n over each parabolic branch j, then the
// hull of the limits.  Throws nonconvergence_error when a bracket stays wider
// than tol at n_limit, and also when the bracket inverts, i.e. the potential's
// almost-additivity constant is too small to certify the limit along that
// orbit (the geometric potential of a parabolic map is the canonical case:
// its per-word averages drift like log(n)/n while C is essentially zero).
ConvexHull parabolic_hull(const BranchMap& map, const AlmostAdditivePotential& pot,
                             int n_limit, double tol = 1e-2);

// hull of explicit points (exposed for direct use and tests)
ConvexHull hull_of_points(int d, const std::vector<std::vector<double>>& pts);

}  // namespace mfa
