#include "mfa/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace mfa {
namespace {

constexpr std::size_t kTableCap = std::size_t(1) << 18;
constexpr std::size_t kPhiStarEnumCutoff = std::size_t(1) << 14;
constexpr int kPhiStarSamples = 2048;
constexpr int kBeamLevels = 640;
constexpr std::size_t kBeamWidth = 64;

std::size_t checked_pow(std::size_t base, int exp, std::size_t cap, const char* what) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) {
        r *= base;
        if (r > cap) throw validation_error(std::string(what) + ": alphabet^length exceeds the enumeration cap");
    }
    return r;
}

// log|T'_{w_j}| at the midpoint of each suffix cylinder, computed right to
// left: before reading term j the interval [a,b] is the cylinder of the
// suffix starting at j, so the midpoint lies in the branch's own domain
std::vector<double> g_terms(const BranchMap& map, WordView w) {
    std::vector<double> terms(w.size());
    double a = 0.0, b = 1.0;
    for (std::size_t j = w.size(); j-- > 0;) {
        const Branch& br = map.branch(int(w[j]) - 1);
        double na = br.inverse(a), nb = br.inverse(b);
        if (na > nb) std::swap(na, nb);
        a = na;
        b = nb;
        const double deriv = std::abs(br.derivative(0.5 * (a + b)));
        if (!(deriv > 0.0) || !std::isfinite(deriv))
            throw std::runtime_error("g_potential: |T'| vanished or blew up inside a cylinder");
        terms[j] = std::log(deriv);
    }
    return terms;
}

// oscillation of log|T'| over [a,b] for one branch, from the endpoint values
// (builtin branch derivatives are monotone)
double branch_log_osc(const Branch& br, double a, double b) {
    return std::abs(std::log(std::abs(br.derivative(a))) - std::log(std::abs(br.derivative(b))));
}

Word index_to_word(std::size_t idx, int length, std::size_t alphabet) {
    Word w(std::size_t(length), 0);
    for (std::size_t j = w.size(); j-- > 0;) {
        w[j] = std::uint8_t(1 + idx % alphabet);
        idx /= alphabet;
    }
    return w;
}

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

}  // namespace

std::vector<double> AlmostAdditivePotential::evaluate(WordView w, int n) const {
    if (n < 1) throw validation_error("potential: n must be at least 1");
    if (std::size_t(n) > w.size()) throw validation_error("potential: n exceeds the word length");
    if (alphabet > 0)
        for (std::uint8_t s : w)
            if (s < 1 || int(s) > alphabet) throw validation_error("potential: word symbol out of alphabet range");
    return evaluator(w, n);
}

AlmostAdditivePotential from_additive(int alphabet, int range,
                                      const std::function<std::vector<double>(WordView)>& f,
                                      double hoelder_constant) {
    if (alphabet < 2) throw validation_error("from_additive: need an alphabet of at least two symbols");
    if (range < 1) throw validation_error("from_additive: range must be positive");
    if (hoelder_constant < 0.0) throw validation_error("from_additive: hoelder constant must be nonnegative");
    const std::size_t m = std::size_t(alphabet);
    const std::size_t windows = checked_pow(m, range, kTableCap, "from_additive");

    std::vector<std::vector<double>> table(windows);
    std::size_t d = 0;
    for (std::size_t idx = 0; idx < windows; ++idx) {
        const Word w = index_to_word(idx, range, m);
        table[idx] = f(w);
        if (idx == 0) d = table[idx].size();
        if (table[idx].size() != d || d == 0)
            throw validation_error("from_additive: f must return a fixed positive number of components");
        for (double v : table[idx])
            if (!std::isfinite(v)) throw validation_error("from_additive: f produced a non-finite value");
    }

    // the only concatenation defect is the (range-1) windows straddling the
    // split point, each bounded by the largest |f| entry
    std::vector<double> C(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        double max_abs = 0.0;
        for (const auto& row : table) max_abs = std::max(max_abs, std::abs(row[c]));
        C[c] = double(range - 1) * max_abs + hoelder_constant + 1e-12;
    }

    AlmostAdditivePotential pot;
    pot.d = int(d);
    pot.C = std::move(C);
    pot.kind = "additive";
    pot.alphabet = alphabet;
    pot.range = range;
    pot.f_table = std::move(table);
    pot.prefix_determined = true;
    const auto shared_table = std::make_shared<const std::vector<std::vector<double>>>(pot.f_table);
    pot.evaluator = [shared_table, m, range, d](WordView w, int n) {
        std::vector<double> out(d, 0.0);
        for (int j = 0; j + range <= n; ++j) {
            std::size_t idx = 0;
            for (int t = 0; t < range; ++t) idx = idx * m + std::size_t(w[std::size_t(j + t)] - 1);
            const auto& row = (*shared_table)[idx];
            for (std::size_t c = 0; c < d; ++c) out[c] += row[c];
        }
        return out;
    };
    pot.variation_bound = [hoelder_constant, range](int n) {
        return hoelder_constant > 0.0 ? hoelder_constant * std::pow(2.0, -double(std::max(0, n - range))) : 0.0;
    };
    return pot;
}

AlmostAdditivePotential constant_potential(int alphabet, double c) {
    auto pot = from_additive(alphabet, 1, [c](WordView) { return std::vector<double>{c}; });
    pot.kind = "constant";
    return pot;
}

AlmostAdditivePotential g_potential(const BranchMap& map) {
    const auto mp = std::make_shared<const BranchMap>(map);

    // beam over the widest cylinders, extended by prepending branches: V[k]
    // bounds the oscillation of the depth-(k+1) g-term, and the variation of
    // phi_n is at most V[0] + ... + V[n-1]
    struct Cyl {
        double a, b;
        int first;
    };
    std::vector<Cyl> beam;
    std::vector<double> V;
    V.reserve(kBeamLevels);
    for (int i = 0; i < mp->num_branches(); ++i)
        beam.push_back({mp->branch(i).domain.a, mp->branch(i).domain.b, i});
    for (int level = 0; level < kBeamLevels; ++level) {
        double osc = 0.0;
        for (const Cyl& c : beam) osc = std::max(osc, branch_log_osc(mp->branch(c.first), c.a, c.b));
        V.push_back(osc);
        std::vector<Cyl> next;
        next.reserve(beam.size() * std::size_t(mp->num_branches()));
        for (const Cyl& c : beam)
            for (int i = 0; i < mp->num_branches(); ++i) {
                const Branch& br = mp->branch(i);
                double na = br.inverse(c.a), nb = br.inverse(c.b);
                if (na > nb) std::swap(na, nb);
                next.push_back({na, nb, i});
            }
        if (next.size() > kBeamWidth) {
            std::nth_element(next.begin(), next.begin() + std::ptrdiff_t(kBeamWidth), next.end(),
                             [](const Cyl& x, const Cyl& y) { return x.b - x.a > y.b - y.a; });
            next.resize(kBeamWidth);
        }
        beam = std::move(next);
    }
    auto prefix = std::make_shared<std::vector<double>>(V.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < V.size(); ++k) {
        acc += V[k];
        (*prefix)[k] = acc;
    }
    const double tail_slope = V.back();

    AlmostAdditivePotential pot;
    pot.d = 1;
    pot.C = {1e-12};
    pot.kind = "geometric";
    pot.alphabet = mp->num_branches();
    pot.evaluator = [mp](WordView w, int n) {
        const auto terms = g_terms(*mp, w);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += terms[std::size_t(j)];
        return std::vector<double>{sum};
    };
    pot.variation_bound = [prefix, tail_slope](int n) {
        if (n <= 0) return 0.0;
        if (std::size_t(n) <= prefix->size()) return (*prefix)[std::size_t(n) - 1];
        return prefix->back() + tail_slope * double(std::size_t(n) - prefix->size());
    };
    return pot;
}

AlmostAdditivePotential matrix_cocycle_potential(const std::vector<std::array<double, 4>>& mats, double C) {
    if (mats.size() < 2) throw validation_error("matrix_cocycle: need at least two matrices");
    if (!(C > 0.0)) throw validation_error("matrix_cocycle: C must be positive");
    for (const auto& A : mats)
        for (double v : A)
            if (!(v > 0.0) || !std::isfinite(v))
                throw validation_error("matrix_cocycle: matrix entries must be positive and finite");

    AlmostAdditivePotential pot;
    pot.d = 1;
    pot.C = {C};
    pot.kind = "matrix-cocycle";
    pot.alphabet = int(mats.size());
    pot.prefix_determined = true;
    pot.evaluator = [mats](WordView w, int n) {
        // running product rescaled to unit entry sum; phi_n is the sum of logs
        std::array<double, 4> M = mats[std::size_t(w[0] - 1)];
        double acc = 0.0;
        auto rescale = [&M, &acc]() {
            const double s = M[0] + M[1] + M[2] + M[3];
            acc += std::log(s);
            for (double& v : M) v /= s;
        };
        rescale();
        for (int j = 1; j < n; ++j) {
            const auto& A = mats[std::size_t(w[std::size_t(j)] - 1)];
            const std::array<double, 4> P = {M[0] * A[0] + M[1] * A[2], M[0] * A[1] + M[1] * A[3],
                                             M[2] * A[0] + M[3] * A[2], M[2] * A[1] + M[3] * A[3]};
            M = P;
            rescale();
        }
        return std::vector<double>{acc};
    };
    pot.variation_bound = [](int) { return 0.0; };
    return pot;
}

AlmostAdditivePotential stack_potentials(const AlmostAdditivePotential& p, const AlmostAdditivePotential& q) {
    if (p.alphabet > 0 && q.alphabet > 0 && p.alphabet != q.alphabet)
        throw validation_error("stack_potentials: alphabet sizes differ");
    AlmostAdditivePotential pot;
    pot.d = p.d + q.d;
    pot.C = p.C;
    pot.C.insert(pot.C.end(), q.C.begin(), q.C.end());
    pot.kind = "stacked";
    pot.alphabet = std::max(p.alphabet, q.alphabet);
    pot.prefix_determined = p.prefix_determined && q.prefix_determined;
    const auto pe = p.evaluator, qe = q.evaluator;
    pot.evaluator = [pe, qe](WordView w, int n) {
        auto out = pe(w, n);
        const auto tail = qe(w, n);
        out.insert(out.end(), tail.begin(), tail.end());
        return out;
    };
    const auto pv = p.variation_bound, qv = q.variation_bound;
    pot.variation_bound = [pv, qv](int n) { return std::max(pv(n), qv(n)); };

    // both additive: tabulate the pair on the longer window so integrals stay exact
    if (p.additive() && q.additive() && p.alphabet == q.alphabet) {
        const int R = std::max(p.range, q.range);
        const std::size_t m = std::size_t(p.alphabet);
        const std::size_t windows = checked_pow(m, R, kTableCap, "stack_potentials");
        pot.range = R;
        pot.f_table.resize(windows);
        for (std::size_t idx = 0; idx < windows; ++idx) {
            const Word w = index_to_word(idx, R, m);
            std::size_t pi = 0, qi = 0;
            for (int t = 0; t < p.range; ++t) pi = pi * m + std::size_t(w[std::size_t(t)] - 1);
            for (int t = 0; t < q.range; ++t) qi = qi * m + std::size_t(w[std::size_t(t)] - 1);
            pot.f_table[idx] = p.f_table[pi];
            const auto& tail = q.f_table[qi];
            pot.f_table[idx].insert(pot.f_table[idx].end(), tail.begin(), tail.end());
        }
    }
    return pot;
}

std::vector<double> birkhoff_average(const AlmostAdditivePotential& pot, WordView w) {
    if (w.empty()) throw validation_error("birkhoff_average: empty word");
    auto out = pot.evaluate(w, int(w.size()));
    for (double& v : out) v /= double(w.size());
    return out;
}

double birkhoff_log_derivative(const BranchMap& map, WordView w, int n) {
    if (n < 1) throw validation_error("birkhoff_log_derivative: n must be at least 1");
    if (std::size_t(n) > w.size()) throw validation_error("birkhoff_log_derivative: n exceeds the word length");
    bool affine = true;
    for (int i = 0; i < map.num_branches() && affine; ++i) affine = map.branch(i).affine;
    if (affine) {
        // |T'| is constant per branch, so the average is a table lookup sum
        double table[16];
        std::vector<double> big;
        double* g = map.num_branches() <= 16 ? table : (big.resize(std::size_t(map.num_branches())), big.data());
        for (int i = 0; i < map.num_branches(); ++i) {
            const Branch& br = map.branch(i);
            g[i] = std::log(std::abs(br.derivative(br.domain.midpoint())));
        }
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += g[w[std::size_t(j)] - 1];
        return sum / double(n);
    }
    const auto terms = g_terms(map, w);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += terms[std::size_t(j)];
    return sum / double(n);
}

bool expansion_exceeds(const BranchMap& map, WordView w, int n, double c) {
    if (!(c > 0.0)) throw validation_error("expansion_exceeds: threshold must be positive");
    return birkhoff_log_derivative(map, w, n) > c;
}

VariationEstimate variation_norm(const AlmostAdditivePotential& pot, int n, long budget) {
    if (n < 1) throw validation_error("variation_norm: n must be at least 1");
    if (budget < 1) throw validation_error("variation_norm: budget must be positive");
    VariationEstimate est;
    est.declared_upper = pot.variation_bound(n);
    if (pot.prefix_determined) {
        est.exact = true;  // the evaluator never reads past the shared prefix
        return est;
    }
    const int m = std::max(2, pot.alphabet);

    // exhaustive over base words and extension pairs when it fits the budget
    int ext = 0;
    double work = 1.0;
    for (int j = 0; j < n; ++j) work *= double(m);
    while (ext < 6 && work * double(m) * double(m) <= double(budget)) {
        work *= double(m) * double(m);
        ++ext;
    }
    if (ext >= 1) {
        Word base(std::size_t(n), 1);
        Word full(std::size_t(n + ext));
        do {
            std::copy(base.begin(), base.end(), full.begin());
            Word suffix(std::size_t(ext), 1);
            std::vector<double> lo, hi;
            do {
                std::copy(suffix.begin(), suffix.end(), full.begin() + std::ptrdiff_t(n));
                const auto val = pot.evaluate(full, n);
                if (lo.empty()) {
                    lo = val;
                    hi = val;
                } else {
                    for (std::size_t c = 0; c < val.size(); ++c) {
                        lo[c] = std::min(lo[c], val[c]);
                        hi[c] = std::max(hi[c], val[c]);
                    }
                }
            } while (next_word(suffix, m));
            for (std::size_t c = 0; c < lo.size(); ++c)
                est.sampled_lower = std::max(est.sampled_lower, hi[c] - lo[c]);
        } while (next_word(base, m));
        return est;
    }

    // random base words with random deep extension pairs
    est.budget_exhausted = true;
    Rng rng(mix_seed(0x766172ULL, std::uint64_t(n)));
    const int ext_len = 48;
    const long trials = std::max(1L, budget / 4);
    Word u(std::size_t(n + ext_len)), v(std::size_t(n + ext_len));
    for (long t = 0; t < trials; ++t) {
        for (std::size_t j = 0; j < std::size_t(n); ++j)
            u[j] = v[j] = std::uint8_t(1 + int(rng.next_u64() % std::uint64_t(m)));
        for (std::size_t j = std::size_t(n); j < u.size(); ++j) {
            u[j] = std::uint8_t(1 + int(rng.next_u64() % std::uint64_t(m)));
            v[j] = std::uint8_t(1 + int(rng.next_u64() % std::uint64_t(m)));
        }
        const auto a = pot.evaluate(u, n);
        const auto b = pot.evaluate(v, n);
        for (std::size_t c = 0; c < a.size(); ++c)
            est.sampled_lower = std::max(est.sampled_lower, std::abs(a[c] - b[c]));
    }
    return est;
}

std::vector<double> PhiStarBracket::midpoint() const {
    std::vector<double> out(lower.size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = 0.5 * (lower[c] + upper[c]);
    return out;
}

double PhiStarBracket::width() const {
    double w = 0.0;
    for (std::size_t c = 0; c < lower.size(); ++c) w = std::max(w, upper[c] - lower[c]);
    return w;
}

PhiStarBracket phi_star_bracket(const AlmostAdditivePotential& pot, const MarkovMeasure& mu, int n_max) {
    if (n_max < 1) throw validation_error("phi_star_bracket: n_max must be at least 1");
    if (pot.alphabet > 0 && pot.alphabet != mu.alphabet())
        throw validation_error("phi_star_bracket: potential and measure alphabets differ");
    const std::size_t d = std::size_t(pot.d);
    PhiStarBracket out;
    out.lower.assign(d, -INFINITY);
    out.upper.assign(d, INFINITY);

    if (pot.additive()) {
        // exact: integral phi_m dmu = m * integral f dmu by shift invariance
        std::vector<double> F(d, 0.0);
        Word w(std::size_t(pot.range), 1);
        std::size_t idx = 0;
        do {
            const double mass = mu.cylinder_mass(w);
            if (mass > 0.0)
                for (std::size_t c = 0; c < d; ++c) F[c] += mass * pot.f_table[idx][c];
            ++idx;
        } while (next_word(w, pot.alphabet));
        for (int m = 1; m <= n_max; ++m)
            for (std::size_t c = 0; c < d; ++c) {
                out.lower[c] = std::max(out.lower[c], F[c] - pot.C[c] / m);
                out.upper[c] = std::min(out.upper[c], F[c] + pot.C[c] / m);
            }
    } else {
        const std::size_t alpha = std::size_t(std::max(2, pot.alphabet));
        for (int m = 1; m <= n_max; ++m) {
            std::vector<double> I(d, 0.0);
            double enum_size = 1.0;
            for (int j = 0; j < m; ++j) enum_size *= double(alpha);
            if (enum_size <= double(kPhiStarEnumCutoff)) {
                Word w(std::size_t(m), 1);
                do {
                    const double mass = mu.cylinder_mass(w);
                    if (mass <= 0.0) continue;
                    const auto val = pot.evaluate(w, m);
                    for (std::size_t c = 0; c < d; ++c) I[c] += mass * val[c];
                } while (next_word(w, int(alpha)));
            } else {
                out.certified = false;
                for (int i = 0; i < kPhiStarSamples; ++i) {
                    const Word w = mu.sample_word(m, mix_seed(0x70687374ULL, std::uint64_t(m) * 1000003ULL + std::uint64_t(i)));
                    const auto val = pot.evaluate(w, m);
                    for (std::size_t c = 0; c < d; ++c) I[c] += val[c] / double(kPhiStarSamples);
                }
            }
            const double pad = pot.variation(m);
            for (std::size_t c = 0; c < d; ++c) {
                out.lower[c] = std::max(out.lower[c], (I[c] - pot.C[c] - pad) / m);
                out.upper[c] = std::min(out.upper[c], (I[c] + pot.C[c] + pad) / m);
            }
        }
    }

    for (std::size_t c = 0; c < d; ++c) {
        if (out.lower[c] > out.upper[c] + 1e-9)
            throw nonconvergence_error("phi_star_bracket: bracket inverted past numeric tolerance",
                                       out.lower[c], out.upper[c]);
        if (out.lower[c] > out.upper[c]) {
            const double mid = 0.5 * (out.lower[c] + out.upper[c]);
            out.lower[c] = out.upper[c] = mid;
        }
    }
    return out;
}

std::vector<double> phi_star(const AlmostAdditivePotential& pot, const MarkovMeasure& mu, int n_max) {
    return phi_star_bracket(pot, mu, n_max).midpoint();
}

}  // namespace mfa
