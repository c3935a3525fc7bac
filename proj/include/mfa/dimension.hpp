// Box-counting dimension of point samples and cylinder-midpoint attractor samples.
#pragma once

#include <vector>

#include "mfa/interval_maps.hpp"

namespace mfa {

struct DimensionEstimate {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double r2 = 1.0;
    double r_min = 0.0, r_max = 0.0;
    std::vector<double> scales;      // descending
    std::vector<long long> counts;   // occupied boxes per scale
};

// 12 scales, ratio 0.7, starting at 0.2: two decades clear of density noise
std::vector<double> default_scales();

// occupied grid-aligned eps-boxes per scale, then the slope of log N against
// log(1/eps); needs at least 1000 points and 4 scales
DimensionEstimate box_counting(const std::vector<double>& points, const std::vector<double>& scales);

// midpoints of all depth-level cylinders; errors past the enumeration budget
// (sample orbits stochastically instead of raising it)
std::vector<double> attractor_sample(const BranchMap& map, int depth, long long budget = 1000000);

}  // namespace mfa
