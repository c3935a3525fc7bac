#include "mfa/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace mfa {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0) throw validation_error("nelder_mead: empty starting point");

    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += opts.init_step;
    std::vector<double> val(n + 1);
    for (std::size_t i = 0; i <= n; ++i) val[i] = f(simplex[i]);

    std::vector<std::size_t> ord(n + 1);
    NelderMeadResult res;
    for (res.iterations = 0; res.iterations < opts.max_iters; ++res.iterations) {
        for (std::size_t i = 0; i <= n; ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(), [&val](std::size_t a, std::size_t b) { return val[a] < val[b]; });
        if (val[ord[n]] - val[ord[0]] < opts.ftol) {
            res.converged = true;
            break;
        }
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[ord[i]][j] / double(n);
        const std::size_t worst = ord[n];

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + t * (centroid[j] - simplex[worst][j]);
            return x;
        };
        const auto refl = blend(1.0);
        const double fr = f(refl);
        if (fr < val[ord[0]]) {
            const auto exp_pt = blend(2.0);
            const double fe = f(exp_pt);
            if (fe < fr) {
                simplex[worst] = exp_pt;
                val[worst] = fe;
            } else {
                simplex[worst] = refl;
                val[worst] = fr;
            }
        } else if (fr < val[ord[n - 1]]) {
            simplex[worst] = refl;
            val[worst] = fr;
        } else {
            const bool outside = fr < val[worst];
            const auto con = blend(outside ? 0.5 : -0.5);
            const double fc = f(con);
            if (fc < std::min(fr, val[worst])) {
                simplex[worst] = con;
                val[worst] = fc;
            } else {
                // shrink toward the best vertex
                for (std::size_t i = 1; i <= n; ++i) {
                    const std::size_t k = ord[i];
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[k][j] = simplex[ord[0]][j] + 0.5 * (simplex[k][j] - simplex[ord[0]][j]);
                    val[k] = f(simplex[k]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (val[i] < val[best]) best = i;
    res.x = simplex[best];
    res.value = val[best];
    return res;
}

std::size_t KernelShape::rows() const {
    if (alphabet < 2) throw validation_error("kernel shape: need an alphabet of at least two symbols");
    if (order < 0) throw validation_error("kernel shape: order must be nonnegative");
    std::size_t r = 1;
    for (int i = 0; i < order; ++i) {
        r *= std::size_t(alphabet);
        if (r > (std::size_t(1) << 20)) throw validation_error("kernel shape: alphabet^order too large");
    }
    return order == 0 ? 1 : r;
}

std::vector<std::vector<double>> logits_to_kernel(const KernelShape& shape,
                                                  const std::vector<double>& logits) {
    const std::size_t rows = shape.rows();
    const std::size_t m = std::size_t(shape.alphabet);
    if (logits.size() != shape.dims()) throw validation_error("logits_to_kernel: wrong logit count");
    std::vector<std::vector<double>> kernel(rows, std::vector<double>(m));
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = 0.0;  // pinned last logit
        for (std::size_t j = 0; j + 1 < m; ++j)
            mx = std::max(mx, std::clamp(logits[r * (m - 1) + j], -40.0, 40.0));
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double t = j + 1 < m ? std::clamp(logits[r * (m - 1) + j], -40.0, 40.0) : 0.0;
            kernel[r][j] = std::exp(t - mx);
            sum += kernel[r][j];
        }
        for (double& p : kernel[r]) p /= sum;
    }
    return kernel;
}

MarkovMeasure logits_to_measure(const KernelShape& shape, const std::vector<double>& logits) {
    auto kernel = logits_to_kernel(shape, logits);
    if (shape.order == 0) return MarkovMeasure::bernoulli(kernel[0]);
    return MarkovMeasure::markov(shape.order, shape.alphabet, std::move(kernel));
}

std::vector<double> dirichlet_logits(const KernelShape& shape, Rng& rng) {
    const std::size_t m = std::size_t(shape.alphabet);
    std::vector<double> logits(shape.dims());
    for (std::size_t r = 0; r < shape.rows(); ++r) {
        // -log U are Exp(1); normalizing gives Dirichlet(1) but logits only
        // need the log-ratios against the pinned last coordinate
        std::vector<double> e(m);
        for (double& v : e) v = -std::log(std::max(rng.uniform01(), 1e-300));
        for (std::size_t j = 0; j + 1 < m; ++j)
            logits[r * (m - 1) + j] = std::log(e[j]) - std::log(e[m - 1]);
    }
    return logits;
}

}  // namespace mfa
