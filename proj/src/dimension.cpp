#include "mfa/dimension.hpp"

#include <algorithm>
#include <cmath>

#include "mfa/common.hpp"

namespace mfa {

std::vector<double> default_scales() {
    std::vector<double> s;
    double eps = 0.2;
    for (int i = 0; i < 12; ++i) {
        s.push_back(eps);
        eps *= 0.7;
    }
    return s;
}

DimensionEstimate box_counting(const std::vector<double>& points, const std::vector<double>& scales) {
    if (points.size() < 1000)
        throw validation_error("box_counting: at least 1000 points are required");
    if (scales.size() < 4)
        throw validation_error("box_counting: at least 4 scales are required");
    for (double x : points)
        if (!(x >= 0.0 && x <= 1.0))
            throw validation_error("box_counting: points must lie in [0,1]");

    DimensionEstimate est;
    est.scales = scales;
    std::sort(est.scales.begin(), est.scales.end(), std::greater<double>());
    for (double eps : est.scales)
        if (!(eps > 0.0 && eps < 1.0))
            throw validation_error("box_counting: scales must lie in (0,1)");
    est.r_max = est.scales.front();
    est.r_min = est.scales.back();

    std::vector<double> lx, ly;
    std::vector<long long> boxes;
    boxes.reserve(points.size());
    for (double eps : est.scales) {
        const long long grid = (long long)std::ceil(1.0 / eps);
        boxes.clear();
        for (double x : points) {
            long long b = (long long)std::floor(x / eps);
            b = std::min(std::max(b, 0LL), grid - 1);
            boxes.push_back(b);
        }
        std::sort(boxes.begin(), boxes.end());
        boxes.erase(std::unique(boxes.begin(), boxes.end()), boxes.end());
        est.counts.push_back((long long)boxes.size());
        lx.push_back(std::log(1.0 / eps));
        ly.push_back(std::log(double(boxes.size())));
    }

    const OlsFit fit = ols(lx, ly);
    est.slope = fit.slope;
    est.stderr_slope = fit.stderr_slope;
    est.r2 = fit.r2;
    return est;
}

std::vector<double> attractor_sample(const BranchMap& map, int depth, long long budget) {
    if (depth < 1) throw validation_error("attractor_sample: depth must be positive");
    if (budget < 1) throw validation_error("attractor_sample: budget must be positive");
    const int m = map.num_branches();
    double count = 1.0;
    for (int i = 0; i < depth; ++i) {
        count *= double(m);
        if (count > double(budget))
            throw harvest_error("attractor_sample: " + format_double(count) +
                                    " cylinders exceed the budget " + std::to_string(budget) +
                                    "; sample orbits stochastically instead",
                                count);
    }

    std::vector<double> out;
    out.reserve(std::size_t(count));
    // depth-first over branch chains; each step pulls the interval back
    // through one inverse branch, so prefixes are shared
    struct Node {
        int level;
        double a, b;
    };
    std::vector<Node> stack;
    stack.push_back({0, 0.0, 1.0});
    while (!stack.empty()) {
        const Node node = stack.back();
        stack.pop_back();
        if (node.level == depth) {
            out.push_back(0.5 * (node.a + node.b));
            continue;
        }
        // push in reverse so cylinders come out in word order
        for (int i = m - 1; i >= 0; --i) {
            const Branch& br = map.branch(i);
            double a = br.inverse(node.a), b = br.inverse(node.b);
            if (a > b) std::swap(a, b);
            stack.push_back({node.level + 1, a, b});
        }
    }
    return out;
}

}  // namespace mfa
