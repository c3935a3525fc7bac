// Symbolic coding: words over {1..m}, cylinder intervals, projection, itineraries.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfa/interval_maps.hpp"

namespace mfa {

// Finite word over the alphabet {1..m}; symbols are stored 1-based.
using Word = std::vector<std::uint8_t>;
using WordView = std::span<const std::uint8_t>;

// digit-string round trip ("12112"); alphabets up to m = 9
Word parse_word(const std::string& digits, int alphabet);
std::string format_word(WordView w);
void validate_word(WordView w, int alphabet);

// I_w = T_{w_1} o ... o T_{w_n} [0,1].  Endpoints carry absolute error from the
// inverse branches (~1e-13); log_diam stays meaningful long after b - a
// underflows, via exact log-slope sums on affine branches and a midpoint
// contraction factor elsewhere.
struct CylinderInterval {
    Word word;
    double a = 0.0, b = 1.0;
    double log_diam = 0.0;
    double diameter() const { return std::exp(log_diam); }
    double midpoint() const { return 0.5 * (a + b); }
};

inline constexpr int kDepthCap = 100000;

CylinderInterval cylinder(const BranchMap& map, WordView w);

// midpoint of cylinder(w) with certified error half the diameter
struct Projection {
    double value = 0.0;
    double error = 0.0;
};
Projection project(const BranchMap& map, WordView w);

// -log(diam I_{w|n}) / n
double lambda_tilde(const BranchMap& map, WordView w, int n);

// first n symbols of the orbit of x; escape_error (1-based time) when the
// orbit leaves the branch domains.  Shared endpoints go to the left branch.
Word itinerary(const BranchMap& map, double x, int n);

// |project(sigma w) - T(project(w))|; small because Pi conjugates shift and map
double conjugacy_residual(const BranchMap& map, WordView w);

}  // namespace mfa
