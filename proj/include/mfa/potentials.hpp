// Almost additive potentials: finite-range additive sums, the geometric
// potential log|T'|, matrix cocycles, variation norms, and limits of
// (1/n) integral phi_n dmu with certified brackets.
#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "mfa/interval_maps.hpp"
#include "mfa/measures.hpp"
#include "mfa/symbolic.hpp"

namespace mfa {

struct AlmostAdditivePotential {
    int d = 1;              // number of components
    std::vector<double> C;  // almost-additivity constant, one positive entry per component
    std::string kind;

    // phi_n restricted to the first n symbols of w; extra symbols are context
    // that sharpens the value but never changes it by more than variation(n)
    std::function<std::vector<double>(WordView, int)> evaluator;
    // bound on sup |phi_n(w) - phi_n(v)| over pairs sharing the first n symbols
    std::function<double(int)> variation_bound;
    // true when the evaluator reads only the first n symbols, making the
    // variation norm exactly zero
    bool prefix_determined = false;

    // set for additive potentials: f tabulated on all alphabet^range windows,
    // enabling exact integrals against Markov measures
    int alphabet = 0;
    int range = 0;
    std::vector<std::vector<double>> f_table;

    bool additive() const { return range > 0; }
    std::vector<double> evaluate(WordView w, int n) const;
    double variation(int n) const { return variation_bound(n); }
};

// phi_n(w) = sum of f over the windows lying inside the first n symbols;
// hoelder_constant adds declared slack for f that is not exactly finite-range
AlmostAdditivePotential from_additive(int alphabet, int range,
                                      const std::function<std::vector<double>(WordView)>& f,
                                      double hoelder_constant = 0.0);
AlmostAdditivePotential constant_potential(int alphabet, double c);

// additive potential with f = log|T'| at the coded point, so that the n-th
// Birkhoff sum is log|(T^n)'| and averages are Lyapunov exponents
AlmostAdditivePotential g_potential(const BranchMap& map);

// phi_n(w) = log of the entry sum of A_{w_1} ... A_{w_n} for positive 2x2
// matrices; the declared constant C must majorize the concatenation defect
AlmostAdditivePotential matrix_cocycle_potential(const std::vector<std::array<double, 4>>& mats,
                                                 double C = 1.0);

// component-wise concatenation of two potentials over the same alphabet
AlmostAdditivePotential stack_potentials(const AlmostAdditivePotential& p,
                                         const AlmostAdditivePotential& q);

// phi_n(w)/n with n = |w|; certified error is variation(n)/n
std::vector<double> birkhoff_average(const AlmostAdditivePotential& pot, WordView w);

// (1/n) log|(T^n)'| along the cylinder of the first n symbols of w
double birkhoff_log_derivative(const BranchMap& map, WordView w, int n);

// proxy for membership in the uniformly expanding set: A_n g(w) > c.  The
// genuine condition is a liminf over the infinite orbit and is undecidable
// from a prefix; callers choose the horizon n and the margin c.
bool expansion_exceeds(const BranchMap& map, WordView w, int n, double c);

struct VariationEstimate {
    double sampled_lower = 0.0;  // realized oscillation over enumerated or sampled pairs
    double declared_upper = 0.0; // the potential's own variation_bound(n)
    bool exact = false;          // sampled_lower is the exact sup (full enumeration)
    bool budget_exhausted = false;
};
VariationEstimate variation_norm(const AlmostAdditivePotential& pot, int n, long budget = 10000);

struct PhiStarBracket {
    std::vector<double> lower, upper;
    bool certified = true;  // false when integrals were sampled rather than enumerated
    std::vector<double> midpoint() const;
    double width() const;
};
// encloses lim (1/n) integral phi_n dmu between max_m (1/m) integral (phi_m - C)
// and min_m (1/m) integral (phi_m + C), m <= n_max, padded by the evaluator's
// declared variation when the integral is taken over finite words
PhiStarBracket phi_star_bracket(const AlmostAdditivePotential& pot, const MarkovMeasure& mu, int n_max);
std::vector<double> phi_star(const AlmostAdditivePotential& pot, const MarkovMeasure& mu, int n_max = 40);

}  // namespace mfa
