// Shared plumbing: error types, seeded RNG helpers, small numeric utilities.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mfa {

// ---- errors ---------------------------------------------------------------

// Bad arguments, malformed configs, broken preconditions.  CLI exit code 2.
struct validation_error : std::invalid_argument {
    explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Optimizer could not produce a usable witness.  CLI exit code 3.
struct optimizer_error : std::runtime_error {
    explicit optimizer_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Typicality harvesting missed its mass target or ran out of budget.  CLI exit code 4.
struct harvest_error : std::runtime_error {
    double achieved_mass;
    harvest_error(const std::string& msg, double mass)
        : std::runtime_error(msg), achieved_mass(mass) {}
};

// Orbit left the union of branch domains.
struct escape_error : std::runtime_error {
    int escape_time;
    escape_error(const std::string& msg, int t) : std::runtime_error(msg), escape_time(t) {}
};

// A limit estimate whose bracket did not close below tolerance.
struct nonconvergence_error : std::runtime_error {
    double lower, upper;
    nonconvergence_error(const std::string& msg, double lo, double hi)
        : std::runtime_error(msg), lower(lo), upper(hi) {}
};

// ---- deterministic RNG ----------------------------------------------------
//
// All randomness flows through explicit 64-bit seeds.  Distributions are
// hand-rolled on top of the raw engine so that output streams are identical
// across platforms and thread counts.

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    // splitmix64 step over seed xor tag
    std::uint64_t z = seed ^ (tag + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bULL) {}

    std::uint64_t next_u64() {
        // xorshift64*: tiny, portable, plenty for sampling
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // index into a probability vector by CDF scan
    int pick(const std::vector<double>& probs) {
        double u = uniform01(), acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return int(i);
        }
        return int(probs.size()) - 1;
    }

  private:
    std::uint64_t state_;
};

// ---- small numerics ---------------------------------------------------------

inline constexpr double kLambdaFloor = 1e-6;  // hard floor on Lyapunov exponents in ratios

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r2 = 1.0;
};

// least squares of y on x; r2 := 1 for a perfect (or degenerate constant) fit
inline OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("ols: need at least two points");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
    }
    const double vx = sxx - sx * sx / n;
    if (vx <= 0.0) throw validation_error("ols: x values are all equal");
    OlsFit f;
    f.slope = (sxy - sx * sy / n) / vx;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0, ybar = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    if (x.size() > 2 && vx > 0.0)
        f.stderr_slope = std::sqrt(ss_res / (n - 2.0) / vx);
    return f;
}

inline double logsumexp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ---- indexed parallel loop --------------------------------------------------
//
// Tasks write into slot i only; the reduction order is the index order, so a
// run with threads=N is bit-identical to threads=1.

inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    const int nt = int(std::min<std::size_t>(std::size_t(threads), count));
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nt));
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t]() {
            for (std::size_t i = std::size_t(t); i < count; i += std::size_t(nt)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// deterministic double -> shortest round-trip text
std::string format_double(double v);

}  // namespace mfa
