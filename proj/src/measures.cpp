#include "mfa/measures.hpp"

#include <algorithm>
#include <cmath>

#include "mfa/interval_maps.hpp"

namespace mfa {
namespace {

constexpr std::size_t kKernelCap = std::size_t(1) << 20;   // max contexts m^k
constexpr std::size_t kEnumBudget = std::size_t(1) << 18;  // word enumeration cutoff
constexpr double kEmpiricalSmoothing = 1e-9;

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (r > kKernelCap * 64) throw validation_error("measure: alphabet^order overflows the context table");
        r *= base;
    }
    return r;
}

void check_symbol_range(WordView w, int alphabet) {
    for (std::uint8_t s : w)
        if (s < 1 || int(s) > alphabet)
            throw validation_error("measure: word symbol out of alphabet range");
}

}  // namespace

void MarkovMeasure::finalize() {
    const std::size_t contexts = ipow(std::size_t(alphabet_), order_);
    if (contexts > kKernelCap) throw validation_error("measure: alphabet^order exceeds the context cap");
    if (kernel_.size() != contexts) throw validation_error("measure: kernel must have alphabet^order rows");
    for (auto& row : kernel_) {
        if (row.size() != std::size_t(alphabet_))
            throw validation_error("measure: kernel row length must equal the alphabet size");
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw validation_error("measure: kernel entries must be finite and nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw validation_error("measure: kernel row does not sum to 1");
        for (double& p : row) p /= sum;
    }

    // stationary distribution of the context chain: direct solve of pi(P-I)=0
    // for small context sets, damped power iteration otherwise (the 1/2 mixing
    // step kills period-2 cycling on deterministic kernels)
    const std::size_t tail = contexts / std::size_t(alphabet_);
    if (contexts <= 64) {
        std::vector<std::vector<double>> A(contexts, std::vector<double>(contexts + 1, 0.0));
        for (std::size_t t = 0; t < contexts; ++t) {
            A[t][t] -= 1.0;
            const std::size_t shifted = (t % tail) * std::size_t(alphabet_);
            for (int b = 0; b < alphabet_; ++b)
                A[shifted + std::size_t(b)][t] += kernel_[t][std::size_t(b)];
        }
        for (std::size_t c = 0; c < contexts; ++c) A[contexts - 1][c] = 1.0;  // sum-to-one row
        A[contexts - 1][contexts] = 1.0;
        bool ok = true;
        for (std::size_t col = 0; col < contexts && ok; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < contexts; ++r)
                if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
            if (std::abs(A[piv][col]) < 1e-13) {
                ok = false;
                break;
            }
            std::swap(A[col], A[piv]);
            for (std::size_t r = 0; r < contexts; ++r) {
                if (r == col || A[r][col] == 0.0) continue;
                const double m = A[r][col] / A[col][col];
                for (std::size_t c = col; c <= contexts; ++c) A[r][c] -= m * A[col][c];
            }
        }
        if (ok) {
            std::vector<double> pi(contexts);
            double sum = 0.0;
            for (std::size_t t = 0; t < contexts; ++t) {
                pi[t] = std::max(0.0, A[t][contexts] / A[t][t]);
                sum += pi[t];
            }
            for (double& p : pi) p /= sum;
            // accept only if it genuinely fixes the chain (reducible kernels
            // can defeat the pivoting and fall through to iteration)
            double resid = 0.0;
            std::vector<double> img(contexts, 0.0);
            for (std::size_t t = 0; t < contexts; ++t) {
                const std::size_t shifted = (t % tail) * std::size_t(alphabet_);
                for (int b = 0; b < alphabet_; ++b)
                    img[shifted + std::size_t(b)] += pi[t] * kernel_[t][std::size_t(b)];
            }
            for (std::size_t t = 0; t < contexts; ++t) resid = std::max(resid, std::abs(img[t] - pi[t]));
            if (resid < 1e-12) {
                stationary_ = std::move(pi);
                return;
            }
        }
    }
    std::vector<double> pi(contexts, 1.0 / double(contexts)), next(contexts, 0.0);
    for (int iter = 0; iter < 200000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t t = 0; t < contexts; ++t) {
            if (pi[t] == 0.0) continue;
            const std::size_t shifted = (t % tail) * std::size_t(alphabet_);
            for (int b = 0; b < alphabet_; ++b)
                next[shifted + std::size_t(b)] += pi[t] * kernel_[t][std::size_t(b)];
        }
        double diff = 0.0, sum = 0.0;
        for (std::size_t t = 0; t < contexts; ++t) {
            next[t] = 0.5 * (next[t] + pi[t]);
            diff += std::abs(next[t] - pi[t]);
            sum += next[t];
        }
        for (double& p : next) p /= sum;
        pi.swap(next);
        if (diff < 1e-15) break;
    }
    stationary_ = std::move(pi);
}

MarkovMeasure MarkovMeasure::bernoulli(std::vector<double> probs) {
    if (probs.size() < 2) throw validation_error("bernoulli: need an alphabet of at least two symbols");
    MarkovMeasure mu;
    mu.alphabet_ = int(probs.size());
    mu.order_ = 1;
    mu.kernel_.assign(probs.size(), probs);
    mu.finalize();
    return mu;
}

MarkovMeasure MarkovMeasure::markov(int order, int alphabet, std::vector<std::vector<double>> kernel) {
    if (order < 1) throw validation_error("markov: order must be at least 1");
    if (alphabet < 2) throw validation_error("markov: need an alphabet of at least two symbols");
    MarkovMeasure mu;
    mu.alphabet_ = alphabet;
    mu.order_ = order;
    mu.kernel_ = std::move(kernel);
    mu.finalize();
    return mu;
}

MarkovMeasure MarkovMeasure::mix(const MarkovMeasure& mu, const MarkovMeasure& nu, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw validation_error("mix: weight must lie in [0, 1]");
    if (mu.alphabet_ != nu.alphabet_) throw validation_error("mix: alphabet sizes differ");
    if (s == 1.0) return mu;
    if (s == 0.0) return nu;
    MarkovMeasure out;
    out.alphabet_ = mu.alphabet_;
    out.order_ = std::max(mu.order_, nu.order_);
    auto absorb = [&out](const MarkovMeasure& m, double w) {
        if (m.is_mix()) {
            for (const auto& [aw, atom] : m.atoms_) out.atoms_.emplace_back(w * aw, atom);
        } else {
            out.atoms_.emplace_back(w, std::make_shared<const MarkovMeasure>(m));
        }
    };
    absorb(mu, s);
    absorb(nu, 1.0 - s);
    return out;
}

MarkovMeasure MarkovMeasure::empirical(WordView w, int order, int alphabet) {
    if (order < 1) throw validation_error("empirical: order must be at least 1");
    if (alphabet < 2) throw validation_error("empirical: need an alphabet of at least two symbols");
    if (w.size() <= std::size_t(order) + 1)
        throw validation_error("empirical: word must be longer than order + 1");
    check_symbol_range(w, alphabet);
    const std::size_t contexts = ipow(std::size_t(alphabet), order);
    std::vector<std::vector<double>> counts(contexts, std::vector<double>(std::size_t(alphabet), kEmpiricalSmoothing));
    std::size_t ctx = 0;
    const std::size_t tail = contexts / std::size_t(alphabet);
    for (std::size_t j = 0; j < std::size_t(order); ++j) ctx = ctx * std::size_t(alphabet) + (w[j] - 1);
    for (std::size_t j = std::size_t(order); j < w.size(); ++j) {
        counts[ctx][std::size_t(w[j] - 1)] += 1.0;
        ctx = (ctx % tail) * std::size_t(alphabet) + (w[j] - 1);
    }
    for (auto& row : counts) {
        double sum = 0.0;
        for (double c : row) sum += c;
        for (double& c : row) c /= sum;
    }
    return markov(order, alphabet, std::move(counts));
}

const std::vector<std::vector<double>>& MarkovMeasure::kernel() const {
    if (is_mix()) throw validation_error("measure: a convex combination has no single kernel");
    return kernel_;
}

const std::vector<double>& MarkovMeasure::stationary() const {
    if (is_mix()) throw validation_error("measure: a convex combination has no single stationary vector");
    return stationary_;
}

double MarkovMeasure::entropy() const {
    if (is_mix()) {
        double h = 0.0;
        for (const auto& [w, atom] : atoms_) h += w * atom->entropy();
        return h;
    }
    double h = 0.0;
    for (std::size_t t = 0; t < kernel_.size(); ++t) {
        if (stationary_[t] == 0.0) continue;
        double row = 0.0;
        for (double p : kernel_[t])
            if (p > 0.0) row -= p * std::log(p);
        h += stationary_[t] * row;
    }
    return std::max(0.0, h);
}

double MarkovMeasure::log_cylinder_mass(WordView w) const {
    check_symbol_range(w, alphabet_);
    if (w.empty()) return 0.0;
    if (is_mix()) {
        double acc = -INFINITY;
        for (const auto& [weight, atom] : atoms_)
            acc = logsumexp(acc, std::log(weight) + atom->log_cylinder_mass(w));
        return acc;
    }
    const std::size_t m = std::size_t(alphabet_);
    const std::size_t contexts = kernel_.size();
    const std::size_t tail = contexts / m;
    if (w.size() < std::size_t(order_)) {
        // marginal over completions: contexts sharing this prefix form one
        // contiguous index range because contexts are big-endian
        std::size_t p = 0;
        for (std::uint8_t s : w) p = p * m + (s - 1);
        std::size_t span = contexts;
        for (std::size_t j = 0; j < w.size(); ++j) span /= m;
        double mass = 0.0;
        for (std::size_t t = p * span; t < (p + 1) * span; ++t) mass += stationary_[t];
        return mass > 0.0 ? std::log(mass) : -INFINITY;
    }
    std::size_t ctx = 0;
    for (std::size_t j = 0; j < std::size_t(order_); ++j) ctx = ctx * m + (w[j] - 1);
    double acc = stationary_[ctx] > 0.0 ? std::log(stationary_[ctx]) : -INFINITY;
    for (std::size_t j = std::size_t(order_); j < w.size() && acc > -INFINITY; ++j) {
        const double p = kernel_[ctx][std::size_t(w[j] - 1)];
        acc += p > 0.0 ? std::log(p) : -INFINITY;
        ctx = (ctx % tail) * m + (w[j] - 1);
    }
    return acc;
}

double MarkovMeasure::cylinder_mass(WordView w) const { return std::exp(log_cylinder_mass(w)); }

Word MarkovMeasure::sample_word(int n, std::uint64_t seed) const {
    if (n < 0) throw validation_error("sample_word: length must be nonnegative");
    Rng rng(mix_seed(seed, 0x776f7264ULL));
    if (is_mix()) {
        std::vector<double> weights;
        weights.reserve(atoms_.size());
        for (const auto& [w, atom] : atoms_) weights.push_back(w);
        return atoms_[std::size_t(rng.pick(weights))].second->sample_word(n, rng.next_u64());
    }
    const std::size_t m = std::size_t(alphabet_);
    const std::size_t tail = kernel_.size() / m;
    std::size_t ctx = std::size_t(rng.pick(stationary_));
    Word out;
    out.reserve(std::size_t(n));
    // peel the sampled context big-endian so short words match the marginals
    std::size_t span = kernel_.size();
    for (int j = 0; j < order_ && int(out.size()) < n; ++j) {
        span /= m;
        out.push_back(std::uint8_t(1 + (ctx / span) % m));
    }
    while (int(out.size()) < n) {
        const int b = rng.pick(kernel_[ctx]);
        out.push_back(std::uint8_t(1 + b));
        ctx = (ctx % tail) * m + std::size_t(b);
    }
    return out;
}

MarkovMeasure::LyapunovBracket MarkovMeasure::lyapunov_bracket(const BranchMap& map, int depth) const {
    if (depth < 1) throw validation_error("lyapunov: depth must be at least 1");
    if (map.num_branches() != alphabet_)
        throw validation_error("lyapunov: alphabet size does not match the number of branches");
    if (is_mix()) {
        LyapunovBracket acc{0.0, 0.0, true};
        for (const auto& [w, atom] : atoms_) {
            const auto b = atom->lyapunov_bracket(map, depth);
            acc.lower += w * b.lower;
            acc.upper += w * b.upper;
            acc.certified = acc.certified && b.certified;
        }
        return acc;
    }

    // range of log|T'| over a depth-cylinder, from the branch derivative at the
    // cylinder endpoints (branch derivatives are monotone for the builtin maps)
    auto g_range = [&map](const CylinderInterval& cyl) {
        const Branch& br = map.branch(cyl.word.front() - 1);
        const double ga = std::log(std::abs(br.derivative(cyl.a)));
        const double gb = std::log(std::abs(br.derivative(cyl.b)));
        return std::pair<double, double>{std::min(ga, gb), std::max(ga, gb)};
    };

    double total = 1.0;
    for (int j = 0; j < depth; ++j) total *= double(alphabet_);
    LyapunovBracket out{0.0, 0.0, true};
    if (total <= double(kEnumBudget)) {
        Word w(std::size_t(depth), 1);
        bool done = false;
        while (!done) {
            const double mass = cylinder_mass(w);
            if (mass > 0.0) {
                const auto [lo, hi] = g_range(cylinder(map, w));
                out.lower += mass * lo;
                out.upper += mass * hi;
            }
            done = true;
            for (std::size_t j = w.size(); j-- > 0;) {
                if (int(w[j]) < alphabet_) {
                    ++w[j];
                    std::fill(w.begin() + std::ptrdiff_t(j) + 1, w.end(), std::uint8_t(1));
                    done = false;
                    break;
                }
            }
        }
    } else {
        constexpr int kSamples = 1 << 14;
        double lo_sum = 0.0, hi_sum = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            const Word w = sample_word(depth, mix_seed(0x4c594150ULL, std::uint64_t(i)));
            const auto [lo, hi] = g_range(cylinder(map, w));
            lo_sum += lo;
            hi_sum += hi;
        }
        out.lower = lo_sum / kSamples;
        out.upper = hi_sum / kSamples;
        out.certified = false;
    }
    return out;
}

double MarkovMeasure::lyapunov(const BranchMap& map, int depth) const {
    return lyapunov_bracket(map, depth).midpoint();
}

MarkovMeasure ergodic_approximation(const MarkovMeasure& mu, int order, double eps_positive) {
    if (order < 1) throw validation_error("ergodic_approximation: order must be at least 1");
    if (!(eps_positive > 0.0)) throw validation_error("ergodic_approximation: smoothing must be positive");
    const int m = mu.alphabet();
    const std::size_t contexts = ipow(std::size_t(m), order);
    std::vector<std::vector<double>> kernel(contexts, std::vector<double>(std::size_t(m), 0.0));
    Word w(std::size_t(order) + 1, 1);
    for (std::size_t t = 0; t < contexts; ++t) {
        std::size_t rem = t;
        for (std::size_t j = std::size_t(order); j-- > 0;) {
            w[j] = std::uint8_t(1 + rem % std::size_t(m));
            rem /= std::size_t(m);
        }
        double sum = 0.0;
        for (int b = 0; b < m; ++b) {
            w.back() = std::uint8_t(1 + b);
            kernel[t][std::size_t(b)] = mu.cylinder_mass(w) + eps_positive;
            sum += kernel[t][std::size_t(b)];
        }
        for (double& p : kernel[t]) p /= sum;
    }
    return MarkovMeasure::markov(order, m, std::move(kernel));
}

}  // namespace mfa
