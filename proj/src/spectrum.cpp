#include "mfa/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include "mfa/optimize.hpp"
#include "mfa/symbolic.hpp"

namespace mfa {
namespace {

constexpr double kDegenerateLambda = 1e-9;
constexpr std::size_t kEnumCap = 1024;

bool next_word(Word& w, int alphabet) {
    for (std::size_t j = w.size(); j-- > 0;) {
        if (int(w[j]) < alphabet) {
            ++w[j];
            std::fill(w.begin() + std::ptrdiff_t(j) + 1, w.end(), std::uint8_t(1));
            return true;
        }
    }
    return false;
}

std::vector<Word> all_words(int length, int alphabet) {
    std::vector<Word> out;
    Word w(std::size_t(length), 1);
    do {
        out.push_back(w);
    } while (next_word(w, alphabet));
    return out;
}

int max_depth_under_cap(int alphabet, std::size_t cap) {
    int depth = 1;
    std::size_t n = std::size_t(alphabet);
    while (n * std::size_t(alphabet) <= cap) {
        n *= std::size_t(alphabet);
        ++depth;
    }
    return depth;
}

bool all_affine(const BranchMap& map) {
    for (int i = 0; i < map.num_branches(); ++i)
        if (!map.branch(i).affine) return false;
    return true;
}

// precomputed word tables so one objective evaluation is only kernel algebra
struct FastEnv {
    KernelShape shape;
    int d = 0;  // 0 when no constraint functional is in play
    int lyap_depth = 1;
    std::vector<Word> lyap_words;
    std::vector<double> lyap_gmid;  // bracket midpoint of log|T'| per word
    int phi_depth = 0;              // 0 = exact additive integral
    std::vector<Word> phi_words;
    std::vector<std::vector<double>> phi_vals;
};

FastEnv make_env(const BranchMap& map, const AlmostAdditivePotential* pot, const KernelShape& shape) {
    FastEnv env;
    env.shape = shape;
    env.lyap_depth = default_lyapunov_depth(map);
    env.lyap_words = all_words(env.lyap_depth, map.num_branches());
    env.lyap_gmid.reserve(env.lyap_words.size());
    for (const Word& w : env.lyap_words) {
        const CylinderInterval cyl = cylinder(map, w);
        const Branch& br = map.branch(int(w.front()) - 1);
        const double ga = std::log(std::abs(br.derivative(cyl.a)));
        const double gb = std::log(std::abs(br.derivative(cyl.b)));
        env.lyap_gmid.push_back(0.5 * (ga + gb));
    }
    if (pot) {
        env.d = pot->d;
        if (pot->additive()) {
            env.phi_depth = 0;
            env.phi_words = all_words(pot->range, pot->alphabet);
            env.phi_vals = pot->f_table;
        } else {
            env.phi_depth = default_phi_depth(*pot);
            env.phi_words = all_words(env.phi_depth, shape.alphabet);
            env.phi_vals.reserve(env.phi_words.size());
            for (const Word& w : env.phi_words) {
                auto v = pot->evaluate(w, env.phi_depth);
                for (double& x : v) x /= double(env.phi_depth);
                env.phi_vals.push_back(std::move(v));
            }
        }
    }
    return env;
}

double lambda_fast(const FastEnv& env, const MarkovMeasure& mu) {
    double acc = 0.0;
    for (std::size_t i = 0; i < env.lyap_words.size(); ++i) {
        const double mass = mu.cylinder_mass(env.lyap_words[i]);
        if (mass > 0.0) acc += mass * env.lyap_gmid[i];
    }
    return acc;
}

std::vector<double> phi_fast(const FastEnv& env, const MarkovMeasure& mu) {
    std::vector<double> F(std::size_t(env.d), 0.0);
    for (std::size_t i = 0; i < env.phi_words.size(); ++i) {
        const double mass = mu.cylinder_mass(env.phi_words[i]);
        if (mass <= 0.0) continue;
        for (std::size_t c = 0; c < F.size(); ++c) F[c] += mass * env.phi_vals[i][c];
    }
    return F;
}

struct Candidate {
    std::vector<double> logits;
    double ratio = -INFINITY;
    double lambda = 0.0;
    double residual = INFINITY;
    bool feasible = false;
    bool valid = false;
};

Candidate assess(const FastEnv& env, const std::vector<double>& logits,
                 const std::vector<double>* alpha, double tol) {
    Candidate c;
    c.logits = logits;
    const MarkovMeasure mu = logits_to_measure(env.shape, logits);
    const double h = mu.entropy();
    c.lambda = lambda_fast(env, mu);
    c.ratio = h / std::max(c.lambda, kLambdaFloor);
    if (alpha) {
        const auto F = phi_fast(env, mu);
        c.residual = 0.0;
        for (std::size_t i = 0; i < F.size(); ++i)
            c.residual = std::max(c.residual, std::abs(F[i] - (*alpha)[i]));
        c.feasible = c.residual <= tol;
    } else {
        c.residual = 0.0;
        c.feasible = true;
    }
    c.valid = true;
    return c;
}

// deterministic preference: feasibility, then value, then lexicographically
// smaller kernel so parallel and serial merges agree
bool better(const Candidate& a, const Candidate& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    if (a.feasible != b.feasible) return a.feasible;
    if (std::abs(a.ratio - b.ratio) > 1e-12) return a.ratio > b.ratio;
    return a.logits < b.logits;
}

// p_a proportional to exp(theta f_a) matched to alpha by bisection; the
// entropy-maximizing row for a range-1 constraint and the natural warm start
std::vector<double> exp_family_logits(const KernelShape& shape, const std::vector<double>& f,
                                      double alpha) {
    double fmin = f[0], fmax = f[0];
    for (double v : f) {
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
    }
    if (!(alpha > fmin && alpha < fmax)) return {};
    auto mean = [&f](double theta) {
        double mx = -INFINITY;
        for (double v : f) mx = std::max(mx, theta * v);
        double z = 0.0, s = 0.0;
        for (double v : f) {
            const double w = std::exp(theta * v - mx);
            z += w;
            s += w * v;
        }
        return s / z;
    };
    double lo = -80.0, hi = 80.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean(mid) < alpha ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    const std::size_t m = f.size();
    std::vector<double> logits(shape.dims());
    for (std::size_t r = 0; r < shape.rows(); ++r)
        for (std::size_t j = 0; j + 1 < m; ++j)
            logits[r * (m - 1) + j] = std::clamp(theta * (f[j] - f[m - 1]), -40.0, 40.0);
    return logits;
}

std::vector<std::vector<double>> make_starts(const FastEnv& env, const AlmostAdditivePotential* pot,
                                             const std::vector<double>* alpha, int starts,
                                             std::uint64_t seed) {
    std::vector<std::vector<double>> out;
    out.emplace_back(env.shape.dims(), 0.0);  // uniform kernel
    if (pot && alpha && pot->d == 1 && pot->range == 1) {
        std::vector<double> f(pot->f_table.size());
        for (std::size_t a = 0; a < f.size(); ++a) f[a] = pot->f_table[a][0];
        auto warm = exp_family_logits(env.shape, f, (*alpha)[0]);
        if (!warm.empty()) out.push_back(std::move(warm));
    }
    Rng rng(mix_seed(seed, 0x73746172ULL));
    while (int(out.size()) < std::max(starts, 1)) out.push_back(dirichlet_logits(env.shape, rng));
    return out;
}

Candidate run_start(const FastEnv& env, const std::vector<double>& start,
                    const std::vector<double>* alpha, const SpectrumOptions& opts) {
    auto objective = [&env, alpha](const std::vector<double>& x, double W) {
        const MarkovMeasure mu = logits_to_measure(env.shape, x);
        const double h = mu.entropy();
        const double lam = lambda_fast(env, mu);
        double obj = -h / std::max(lam, kLambdaFloor);
        if (alpha && W > 0.0) {
            const auto F = phi_fast(env, mu);
            for (std::size_t c = 0; c < F.size(); ++c)
                obj += W * (F[c] - (*alpha)[c]) * (F[c] - (*alpha)[c]);
        }
        return obj;
    };

    std::vector<double> x = start;
    if (!alpha) {
        const auto res = nelder_mead([&](const std::vector<double>& v) { return objective(v, 0.0); }, x);
        return assess(env, res.x, nullptr, opts.constraint_tol);
    }
    double W = opts.penalty_init;
    Candidate cand;
    for (int round = 0; round < opts.penalty_rounds; ++round) {
        const double Wr = W;
        const auto res = nelder_mead([&](const std::vector<double>& v) { return objective(v, Wr); }, x);
        x = res.x;
        cand = assess(env, x, alpha, opts.constraint_tol);
        if (cand.feasible) break;
        W *= opts.penalty_mult;
    }
    return cand;
}

Candidate optimize_multistart(const FastEnv& env, const AlmostAdditivePotential* pot,
                              const std::vector<double>* alpha, const SpectrumOptions& opts) {
    const auto starts = make_starts(env, pot, alpha, opts.starts, opts.seed);
    std::vector<Candidate> slots(starts.size());
    parallel_for(starts.size(), opts.threads,
                 [&](std::size_t i) { slots[i] = run_start(env, starts[i], alpha, opts); });
    Candidate best;
    for (const auto& c : slots)
        if (better(c, best)) best = c;
    if (!best.valid) throw optimizer_error("spectrum: no optimizer start produced a candidate");

    // restart once from the winner: a fresh simplex often trims the last digits
    const auto polish = run_start(env, best.logits, alpha, opts);
    if (better(polish, best)) best = polish;
    return best;
}

SpectrumPoint finish_point(const BranchMap& map, const AlmostAdditivePotential* pot,
                           const std::vector<double>& alpha, const FastEnv& env,
                           const Candidate& best) {
    SpectrumPoint out;
    out.alpha = alpha;
    out.witness = logits_to_measure(env.shape, best.logits);
    out.lyapunov_depth = env.lyap_depth;
    out.phi_depth = env.phi_depth;
    out.h = out.witness->entropy();
    out.lambda = spectrum_lambda(map, *out.witness, env.lyap_depth);
    if (pot) {
        out.phi = spectrum_phi(*pot, *out.witness, env.phi_depth);
        out.constraint_residual = 0.0;
        for (std::size_t c = 0; c < out.phi.size(); ++c)
            out.constraint_residual = std::max(out.constraint_residual, std::abs(out.phi[c] - alpha[c]));
    }
    const double ratio = out.h / std::max(out.lambda, kLambdaFloor);
    out.dim_value = std::clamp(ratio, 0.0, 1.0);
    if (ratio > 1.0)
        out.note = "h/lambda = " + format_double(ratio) + " clamped to 1 (depth-truncated lambda)";
    return out;
}

}  // namespace

std::string to_string(SpectrumStatus status) {
    switch (status) {
        case SpectrumStatus::interior: return "interior";
        case SpectrumStatus::endpoint: return "endpoint";
        case SpectrumStatus::in_parabolic_hull: return "in_parabolic_hull";
        case SpectrumStatus::infeasible: return "infeasible";
    }
    return "infeasible";
}

int default_lyapunov_depth(const BranchMap& map) {
    return all_affine(map) ? 1 : max_depth_under_cap(map.num_branches(), kEnumCap);
}

int default_phi_depth(const AlmostAdditivePotential& pot) {
    if (pot.additive()) return 0;
    return max_depth_under_cap(std::max(2, pot.alphabet), kEnumCap);
}

double spectrum_lambda(const BranchMap& map, const MarkovMeasure& mu, int depth) {
    return mu.lyapunov_bracket(map, depth).midpoint();
}

std::vector<double> spectrum_phi(const AlmostAdditivePotential& pot, const MarkovMeasure& mu, int depth) {
    if (pot.additive()) {
        std::vector<double> F(std::size_t(pot.d), 0.0);
        Word w(std::size_t(pot.range), 1);
        std::size_t idx = 0;
        do {
            const double mass = mu.cylinder_mass(w);
            if (mass > 0.0)
                for (std::size_t c = 0; c < F.size(); ++c) F[c] += mass * pot.f_table[idx][c];
            ++idx;
        } while (next_word(w, pot.alphabet));
        return F;
    }
    if (depth < 1) depth = default_phi_depth(pot);
    double count = 1.0;
    for (int j = 0; j < depth; ++j) count *= double(std::max(2, pot.alphabet));
    if (count > double(std::size_t(1) << 18))
        throw validation_error("spectrum_phi: depth too large to enumerate");
    std::vector<double> F(std::size_t(pot.d), 0.0);
    Word w(std::size_t(depth), 1);
    do {
        const double mass = mu.cylinder_mass(w);
        if (mass <= 0.0) continue;
        const auto v = pot.evaluate(w, depth);
        for (std::size_t c = 0; c < F.size(); ++c) F[c] += mass * v[c] / double(depth);
    } while (next_word(w, std::max(2, pot.alphabet)));
    return F;
}

ConvexHull compute_L_phi(const BranchMap& map, const AlmostAdditivePotential& pot, int k,
                         int starts, std::uint64_t seed) {
    if (k < 0) throw validation_error("compute_L_phi: order must be nonnegative");
    if (pot.d > 2) throw validation_error("compute_L_phi: only d <= 2 supported");
    const KernelShape shape{pot.alphabet > 0 ? pot.alphabet : map.num_branches(), k};
    const FastEnv env = make_env(map, &pot, shape);

    SpectrumOptions opts;
    opts.starts = starts;
    opts.seed = seed;
    auto support = [&](const std::vector<double>& dir) {
        // maximize dot(dir, phi) over kernels; multistart simplex descent
        const auto start_list = make_starts(env, &pot, nullptr, starts, seed);
        std::vector<double> best_x;
        double best_val = -INFINITY;
        for (const auto& s : start_list) {
            const auto res = nelder_mead([&](const std::vector<double>& x) {
                const auto F = phi_fast(env, logits_to_measure(shape, x));
                double dot = 0.0;
                for (std::size_t c = 0; c < F.size(); ++c) dot += dir[c] * F[c];
                return -dot;
            }, s);
            if (-res.value > best_val || (-res.value == best_val && res.x < best_x)) {
                best_val = -res.value;
                best_x = res.x;
            }
        }
        return phi_fast(env, logits_to_measure(shape, best_x));
    };

    std::vector<std::vector<double>> pts;
    if (pot.d == 1) {
        pts.push_back(support({1.0}));
        pts.push_back(support({-1.0}));
    } else {
        constexpr int kDirections = 16;
        for (int i = 0; i < kDirections; ++i) {
            const double t = 2.0 * M_PI * double(i) / kDirections;
            pts.push_back(support({std::cos(t), std::sin(t)}));
        }
    }
    return hull_of_points(pot.d, pts);
}

SpectrumPoint hyperbolic_dimension(const BranchMap& map, const SpectrumOptions& opts) {
    const KernelShape shape{map.num_branches(), opts.order};
    const FastEnv env = make_env(map, nullptr, shape);
    const Candidate best = optimize_multistart(env, nullptr, nullptr, opts);
    if (best.lambda <= kDegenerateLambda)
        throw optimizer_error("hyperbolic_dimension: every start collapsed onto lambda <= 1e-9");
    SpectrumPoint out = finish_point(map, nullptr, {}, env, best);
    out.status = SpectrumStatus::interior;
    return out;
}

SpectrumPoint dimension_spectrum(const BranchMap& map, const AlmostAdditivePotential& pot,
                                 const std::vector<double>& alpha, const SpectrumOptions& opts) {
    if (int(alpha.size()) != pot.d)
        throw validation_error("dimension_spectrum: alpha dimension does not match the potential");
    const ConvexHull hull = compute_L_phi(map, pot, opts.order, opts.starts, opts.seed + 1000);

    SpectrumPoint out;
    out.alpha = alpha;
    if (!hull.contains(alpha, opts.constraint_tol)) {
        out.status = SpectrumStatus::infeasible;
        out.note = "alpha outside the attainable set of Birkhoff limits";
        return out;
    }

    if (!map.parabolic_branches().empty()) {
        std::string hull_note;
        try {
            const ConvexHull A = parabolic_hull(map, pot, 64);
            if (A.contains(alpha, 1e-9)) {
                SpectrumPoint hyp = hyperbolic_dimension(map, opts);
                hyp.alpha = alpha;
                hyp.status = SpectrumStatus::in_parabolic_hull;
                hyp.phi = spectrum_phi(pot, *hyp.witness, default_phi_depth(pot));
                hyp.phi_depth = default_phi_depth(pot);
                hyp.constraint_residual = 0.0;
                for (std::size_t c = 0; c < hyp.phi.size(); ++c)
                    hyp.constraint_residual = std::max(hyp.constraint_residual,
                                                       std::abs(hyp.phi[c] - alpha[c]));
                hyp.note = "alpha in the parabolic limit hull; value is the unconstrained sup";
                return hyp;
            }
        } catch (const nonconvergence_error&) {
            hull_note = "parabolic hull bracket did not close; membership untested";
        }
        out.note = hull_note;
    }

    const KernelShape shape{pot.alphabet > 0 ? pot.alphabet : map.num_branches(), opts.order};
    const FastEnv env = make_env(map, &pot, shape);
    const Candidate best = optimize_multistart(env, &pot, &alpha, opts);
    if (!best.feasible)
        throw optimizer_error("dimension_spectrum: constraint |phi - alpha| <= " +
                              format_double(opts.constraint_tol) + " not met; best residual " +
                              format_double(best.residual));
    if (best.lambda <= kDegenerateLambda)
        throw optimizer_error("dimension_spectrum: every feasible start collapsed onto lambda <= 1e-9");

    const std::string prior_note = out.note;
    out = finish_point(map, &pot, alpha, env, best);
    out.status = hull.boundary_distance(alpha) <= opts.constraint_tol ? SpectrumStatus::endpoint
                                                                      : SpectrumStatus::interior;
    if (!prior_note.empty()) out.note = out.note.empty() ? prior_note : out.note + "; " + prior_note;
    return out;
}

SpectrumCurve spectrum_curve(const BranchMap& map, const AlmostAdditivePotential& pot,
                             const std::vector<double>& alphas, const SpectrumOptions& opts) {
    if (pot.d != 1) throw validation_error("spectrum_curve: only d = 1 grids supported");
    SpectrumCurve curve;
    curve.points.resize(alphas.size());
    parallel_for(alphas.size(), opts.threads, [&](std::size_t i) {
        SpectrumOptions point_opts = opts;
        point_opts.threads = 1;
        try {
            curve.points[i] = dimension_spectrum(map, pot, {alphas[i]}, point_opts);
        } catch (const std::exception& e) {
            curve.points[i].alpha = {alphas[i]};
            curve.points[i].status = SpectrumStatus::infeasible;
            curve.points[i].note = e.what();
        }
    });

    curve.concave_ok.assign(alphas.size(), true);
    for (std::size_t i = 1; i + 1 < alphas.size(); ++i) {
        const auto& p0 = curve.points[i - 1];
        const auto& p1 = curve.points[i];
        const auto& p2 = curve.points[i + 1];
        const bool usable = p0.status != SpectrumStatus::infeasible &&
                            p1.status != SpectrumStatus::infeasible &&
                            p2.status != SpectrumStatus::infeasible;
        if (!usable) continue;
        const double dl = (p1.dim_value - p0.dim_value) / (alphas[i] - alphas[i - 1]);
        const double dr = (p2.dim_value - p1.dim_value) / (alphas[i + 1] - alphas[i]);
        curve.concave_ok[i] = dr - dl <= 1e-4;
    }
    return curve;
}

}  // namespace mfa
