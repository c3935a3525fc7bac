// Variational dimension formulas: the attainable set of Birkhoff limits, the
// constrained sup of h/lambda over Markov kernels, and the hyperbolic
// dimension, all with recomputable witnesses.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfa/interval_maps.hpp"
#include "mfa/measures.hpp"
#include "mfa/potentials.hpp"

namespace mfa {

enum class SpectrumStatus { interior, endpoint, in_parabolic_hull, infeasible };
std::string to_string(SpectrumStatus status);

struct SpectrumPoint {
    std::vector<double> alpha;
    double dim_value = 0.0;
    std::optional<MarkovMeasure> witness;
    SpectrumStatus status = SpectrumStatus::infeasible;

    // witness functionals, recomputable via entropy(), spectrum_lambda() and
    // spectrum_phi() at the recorded depths
    double h = 0.0;
    double lambda = 0.0;
    std::vector<double> phi;
    double constraint_residual = 0.0;
    int phi_depth = 0;  // 0 = exact additive integral
    int lyapunov_depth = 1;
    std::string note;
};

struct SpectrumOptions {
    int order = 1;  // Markov kernel order; 0 = Bernoulli
    int starts = 16;
    std::uint64_t seed = 1;
    int threads = 1;
    double constraint_tol = 1e-6;
    double penalty_init = 10.0;
    double penalty_mult = 2.0;
    int penalty_rounds = 30;
};

// The value maximized as the constraint functional: the exact integral of f
// for additive potentials (depth ignored), (1/depth) integral phi_depth dmu by
// cylinder enumeration otherwise.
std::vector<double> spectrum_phi(const AlmostAdditivePotential& pot, const MarkovMeasure& mu,
                                 int depth = 0);
// Midpoint of the depth-cylinder Lyapunov bracket; exact for affine maps at depth 1.
double spectrum_lambda(const BranchMap& map, const MarkovMeasure& mu, int depth);
int default_phi_depth(const AlmostAdditivePotential& pot);
int default_lyapunov_depth(const BranchMap& map);

// attainable Birkhoff limits over order-k Markov measures: an interval for
// d = 1, a supporting-direction hull for d = 2
ConvexHull compute_L_phi(const BranchMap& map, const AlmostAdditivePotential& pot, int k,
                         int starts = 16, std::uint64_t seed = 1);

// sup h/lambda subject to |phi functional - alpha| <= tol, by multi-start
// simplex descent with an escalating quadratic penalty.  Alpha inside the
// parabolic limit hull short-circuits to the hyperbolic dimension.
SpectrumPoint dimension_spectrum(const BranchMap& map, const AlmostAdditivePotential& pot,
                                 const std::vector<double>& alpha, const SpectrumOptions& opts = {});

// unconstrained sup h/lambda over order-k kernels with lambda > 0
SpectrumPoint hyperbolic_dimension(const BranchMap& map, const SpectrumOptions& opts = {});

struct SpectrumCurve {
    std::vector<SpectrumPoint> points;
    // discrete concavity diagnostic per point (second difference <= 1e-4);
    // true at grid edges and wherever the check cannot run
    std::vector<bool> concave_ok;
};
// dimension_spectrum over a d = 1 grid; per-point failures land in the point's
// note instead of aborting the batch
SpectrumCurve spectrum_curve(const BranchMap& map, const AlmostAdditivePotential& pot,
                             const std::vector<double>& alphas, const SpectrumOptions& opts = {});

}  // namespace mfa
