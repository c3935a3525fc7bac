// Bernoulli / finite-order Markov measures on the full shift, plus formal
// convex combinations: entropy, Lyapunov brackets, cylinder masses, sampling.
#pragma once

#include <memory>
#include <vector>

#include "mfa/symbolic.hpp"

namespace mfa {

class MarkovMeasure {
  public:
    static MarkovMeasure bernoulli(std::vector<double> probs);
    // kernel rows are indexed by the big-endian base-m index of the k-symbol
    // context; columns by the next symbol
    static MarkovMeasure markov(int order, int alphabet, std::vector<std::vector<double>> kernel);
    static MarkovMeasure mix(const MarkovMeasure& mu, const MarkovMeasure& nu, double s);
    // transition counts from w with add-eps smoothing (eps = 1e-9)
    static MarkovMeasure empirical(WordView w, int order, int alphabet);

    int alphabet() const { return alphabet_; }
    int order() const { return order_; }
    bool is_mix() const { return !atoms_.empty(); }

    const std::vector<std::vector<double>>& kernel() const;
    const std::vector<double>& stationary() const;
    const std::vector<std::pair<double, std::shared_ptr<const MarkovMeasure>>>& atoms() const { return atoms_; }

    // Shannon entropy rate; affine over mix atoms
    double entropy() const;

    double log_cylinder_mass(WordView w) const;  // log mu[w], -inf allowed
    double cylinder_mass(WordView w) const;

    // distribution equals the mu-marginal on n-cylinders; deterministic in seed
    Word sample_word(int n, std::uint64_t seed) const;

    struct LyapunovBracket {
        double lower = 0.0, upper = 0.0;
        bool certified = true;  // false when estimated by sampling past the enumeration budget
        double midpoint() const { return 0.5 * (lower + upper); }
    };
    // bracket for int g dmu over depth-cylinders; exact for linear maps
    LyapunovBracket lyapunov_bracket(const BranchMap& map, int depth) const;
    double lyapunov(const BranchMap& map, int depth = 10) const;

  private:
    MarkovMeasure() = default;
    void finalize();  // validate rows, compute stationary

    int alphabet_ = 0;
    int order_ = 0;
    std::vector<std::vector<double>> kernel_;  // m^k rows, m columns
    std::vector<double> stationary_;           // m^k entries
    std::vector<std::pair<double, std::shared_ptr<const MarkovMeasure>>> atoms_;
};

// order-k Markov measure with eps-positive kernel matching mu's k- and
// (k+1)-cylinder marginals; constructive stand-in for approximating a convex
// combination by ergodic measures
MarkovMeasure ergodic_approximation(const MarkovMeasure& mu, int order, double eps_positive = 1e-9);

}  // namespace mfa
