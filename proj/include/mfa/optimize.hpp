// Derivative-free minimization plus the softmax parametrization of Markov
// kernels used by the variational solvers.
#pragma once

#include <functional>
#include <vector>

#include "mfa/common.hpp"
#include "mfa/measures.hpp"

namespace mfa {

struct NelderMeadOptions {
    int max_iters = 600;
    double init_step = 0.5;
    double ftol = 1e-12;  // stop when the simplex value spread falls below this
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts = {});

// Order-k kernels coordinatized by (m-1) free logits per row, last logit
// pinned to zero; order 0 means one shared row (a Bernoulli measure).
struct KernelShape {
    int alphabet = 2;
    int order = 1;
    std::size_t rows() const;
    std::size_t dims() const { return rows() * std::size_t(alphabet - 1); }
};

std::vector<std::vector<double>> logits_to_kernel(const KernelShape& shape,
                                                  const std::vector<double>& logits);
MarkovMeasure logits_to_measure(const KernelShape& shape, const std::vector<double>& logits);

// logits of a Dirichlet(1,...,1) draw per row: uniform over the simplex
std::vector<double> dirichlet_logits(const KernelShape& shape, Rng& rng);

}  // namespace mfa
