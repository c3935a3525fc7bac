#include "mfa/moran.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "mfa/common.hpp"

namespace mfa {

namespace {

constexpr long long kFamilyEnumBudget = 1 << 18;  // full word enumeration cap
constexpr int kRejectionCap = 200000;             // sampling attempts per block
constexpr double kAbsoluteRadiusFloor = 1e-12;    // below this, masses live in log space
constexpr long long kPrefixKeepCap = 200000;      // symbols retained for interval descent
constexpr int kDescentLeafCap = 64;

bool is_constant(WordView w) {
    for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i] != w[0]) return false;
    return true;
}

double max_component(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

// ---- schedule ---------------------------------------------------------------

void MoranSchedule::finalize() {
    const std::size_t s = lengths.size();
    if (s == 0 || multiplicities.size() != s || epsilons.size() != s)
        throw validation_error("schedule: lengths, multiplicities, epsilons must align");
    if (!(delta > 0.0 && delta < 1.0))
        throw validation_error("schedule: delta must lie in (0,1)");
    for (std::size_t i = 0; i < s; ++i) {
        if (lengths[i] < 2)
            throw validation_error("schedule: block lengths must be at least 2");
        if (multiplicities[i] < 1)
            throw validation_error("schedule: multiplicities must be positive");
        if (!(epsilons[i] > 0.0))
            throw validation_error("schedule: filter widths must be positive");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
            throw validation_error("schedule: filter widths must strictly decrease");
    }
    blocks_through.assign(s, 0);
    length_through.assign(s, 0);
    long long blocks = 0, length = 0;
    for (std::size_t i = 0; i < s; ++i) {
        blocks += multiplicities[i];
        length += multiplicities[i] * (long long)lengths[i];
        if (length < 0 || length > (1LL << 62))
            throw validation_error("schedule: total length overflows");
        blocks_through[i] = blocks;
        length_through[i] = length;
    }
}

int MoranSchedule::stage_of_block(long long j) const {
    if (j < 1 || j > total_blocks())
        throw validation_error("schedule: block index out of range");
    const auto it = std::lower_bound(blocks_through.begin(), blocks_through.end(), j);
    return int(it - blocks_through.begin()) + 1;
}

int MoranSchedule::flat_length(long long j) const {
    return lengths[std::size_t(stage_of_block(j) - 1)];
}

long long MoranSchedule::block_start(long long j) const {
    const int s = stage_of_block(j);
    const long long blocks_before = s >= 2 ? blocks_through[std::size_t(s - 2)] : 0;
    const long long length_before = s >= 2 ? length_through[std::size_t(s - 2)] : 0;
    return length_before + (j - 1 - blocks_before) * (long long)lengths[std::size_t(s - 1)];
}

MoranSchedule build_schedule(int stages, int base_length, double growth, double eps0, double delta) {
    if (stages < 2)
        throw validation_error("build_schedule: at least two stages are required");
    if (base_length < 1)
        throw validation_error("build_schedule: base length must be positive");
    if (!(growth > 1.0))
        throw validation_error("build_schedule: growth must exceed 1");
    if (!(eps0 > 0.0))
        throw validation_error("build_schedule: eps0 must be positive");
    if (!(delta > 0.0 && delta < 1.0))
        throw validation_error("build_schedule: delta must lie in (0,1)");

    MoranSchedule sched;
    sched.delta = delta;
    double scale = 1.0;
    for (int i = 1; i <= stages; ++i) {
        scale *= growth;
        const double li = std::ceil(double(base_length) * scale);
        if (!(li <= 1e9))
            throw validation_error("build_schedule: block length overflows");
        sched.lengths.push_back(int(li));
        sched.epsilons.push_back(eps0 / std::pow(2.0, i));
    }

    // Multiplicities: the dominance invariant constrains the share of the
    // even stages at each odd boundary, so odd stages get tight margins
    // (halving stage over stage, ending under 0.05/0.6) while even stages
    // only need enough weight to register in the profile.  The final stage
    // gets at least 21 blocks so its own length is under 5% of the total.
    const int last_odd = (stages % 2 == 1) ? stages : stages - 1;
    sched.multiplicities.assign(std::size_t(stages), 1);
    long long total = sched.lengths[0];
    for (int i = 2; i <= stages; ++i) {
        double margin;
        if (i % 2 == 0)
            margin = 0.4;
        else
            margin = 0.08 * std::pow(2.0, -(i - 3) / 2);
        if (i == last_odd) margin = std::min(margin, 0.04);
        const double want = (1.0 / margin - 1.0) * double(total) / double(sched.lengths[std::size_t(i - 1)]);
        if (!(want < 9e17))
            throw validation_error("build_schedule: multiplicities overflow");
        long long ni = (long long)std::ceil(want);
        if (ni < 1) ni = 1;
        if (i == stages) ni = std::max(ni, 21LL);
        sched.multiplicities[std::size_t(i - 1)] = ni;
        total += ni * (long long)sched.lengths[std::size_t(i - 1)];
    }
    sched.finalize();

    // verify the dominance ratios (even-stage share at each odd boundary)
    double prev = 1.0;
    double last_ratio = 0.0;
    for (int j = 1; 2 * j + 1 <= stages; ++j) {
        double even = 0.0, all = 0.0;
        for (int i = 1; i <= 2 * j + 1; ++i) {
            const double part = double(sched.multiplicities[std::size_t(i - 1)]) * double(sched.lengths[std::size_t(i - 1)]);
            all += part;
            if (i % 2 == 0 && i <= 2 * j) even += part;
        }
        const double ratio = even / all;
        if (ratio >= prev)
            throw validation_error("build_schedule: dominance ratio fails to decrease at stage " +
                                   std::to_string(2 * j + 1) + " (" + format_double(ratio) + ")");
        prev = ratio;
        last_ratio = ratio;
    }
    if (last_ratio >= 0.05)
        throw validation_error("build_schedule: final dominance ratio " + format_double(last_ratio) +
                               " is not below 0.05");

    // final tail ratio: the last block against everything before it
    const double l_last = double(sched.lengths.back());
    const double tail_ratio = l_last / (double(sched.total_length()) - l_last);
    if (tail_ratio >= 0.05)
        throw validation_error("build_schedule: final tail ratio " + format_double(tail_ratio) +
                               " is not below 0.05");
    return sched;
}

long long paper_multiplicity_rule(const std::vector<long long>& lengths, int i) {
    if (i < 1)
        throw validation_error("paper_multiplicity_rule: stage index must be positive");
    if (lengths.size() < std::size_t(i) + 2)
        throw validation_error("paper_multiplicity_rule: needs the length two stages ahead");
    long long prev = 1;  // N_0
    for (int k = 1; k <= i; ++k) {
        const long long e = lengths[std::size_t(k + 1)] + prev;
        if (e >= 62)
            throw validation_error("paper_multiplicity_rule: exponent overflows at stage " + std::to_string(k));
        prev = 1LL << e;
    }
    return prev;
}

ScheduleIndex j_of_n(const MoranSchedule& sched, long long n) {
    if (n < 0 || n > sched.total_length())
        throw validation_error("j_of_n: position outside the schedule");
    long long J = sched.total_blocks();
    long long before_len = 0, before_blocks = 0;
    for (int s = 0; s < sched.stages(); ++s) {
        if (n >= sched.length_through[std::size_t(s)]) {
            before_len = sched.length_through[std::size_t(s)];
            before_blocks = sched.blocks_through[std::size_t(s)];
            continue;
        }
        J = before_blocks + (n - before_len) / sched.lengths[std::size_t(s)];
        break;
    }
    ScheduleIndex idx;
    idx.J = J;
    idx.r = 0;
    for (int s = 0; s < sched.stages(); ++s) {
        if (sched.blocks_through[std::size_t(s)] <= J)
            idx.r = s + 1;
        else
            break;
    }
    return idx;
}

// ---- block families ---------------------------------------------------------

bool BlockFamily::passes(const BranchMap& map, const AlmostAdditivePotential& pot, WordView w) const {
    if (int(w.size()) != length) return false;
    if (is_constant(w)) return false;
    const double lm = source.log_cylinder_mass(w);
    if (!std::isfinite(lm)) return false;
    if (std::abs(-lm / double(length) - h) >= eps) return false;
    if (std::abs(birkhoff_log_derivative(map, w, length) - lambda) >= eps) return false;
    const std::vector<double> avg = birkhoff_average(pot, w);
    if (avg.size() != phi.size()) return false;
    for (std::size_t c = 0; c < avg.size(); ++c)
        if (std::abs(avg[c] - phi[c]) >= eps) return false;
    return true;
}

double BlockFamily::log_weight(const BranchMap& map, const AlmostAdditivePotential& pot, WordView w) const {
    if (!passes(map, pot, w)) return -INFINITY;
    return source.log_cylinder_mass(w) - std::log(total_mass);
}

double BlockFamily::log_max_weight() const {
    // every kept word has -log mu[w]/l > h - eps
    return -double(length) * (h - eps) - std::log(total_mass);
}

BlockFamily harvest_blocks(const MarkovMeasure& mu, const AlmostAdditivePotential& pot,
                           const BranchMap& map, int l, double eps, double delta,
                           std::uint64_t seed, long budget) {
    if (l < 2) throw validation_error("harvest_blocks: block length must be at least 2");
    if (!(eps > 0.0)) throw validation_error("harvest_blocks: eps must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw validation_error("harvest_blocks: delta must lie in (0,1)");
    if (budget < 1) throw validation_error("harvest_blocks: budget must be positive");
    if (mu.alphabet() != map.num_branches())
        throw validation_error("harvest_blocks: measure alphabet must match the branch count");
    if (pot.alphabet > 0 && pot.alphabet != mu.alphabet())
        throw validation_error("harvest_blocks: potential alphabet must match the measure");

    BlockFamily fam(mu);
    fam.length = l;
    fam.eps = eps;
    fam.h = mu.entropy();
    fam.lambda = mu.lyapunov(map);
    fam.phi = phi_star(pot, mu);

    const int m = mu.alphabet();
    const double log_words = double(l) * std::log(double(m));
    if (log_words <= std::log(double(kFamilyEnumBudget)) + 1e-9) {
        fam.enumerated = true;
        fam.mass_exact = true;
        double total = 0.0;
        Word w(std::size_t(l), 1);
        while (true) {
            if (fam.passes(map, pot, w)) {
                fam.words.push_back(w);
                fam.log_masses.push_back(mu.log_cylinder_mass(w));
                total += std::exp(fam.log_masses.back());
            }
            int pos = l - 1;
            while (pos >= 0 && int(w[std::size_t(pos)]) == m) {
                w[std::size_t(pos)] = 1;
                --pos;
            }
            if (pos < 0) break;
            ++w[std::size_t(pos)];
        }
        fam.total_mass = total;
    } else {
        Rng rng(mix_seed(seed, 0x68617276ULL));
        long pass = 0;
        for (long t = 0; t < budget; ++t) {
            const Word w = mu.sample_word(l, rng.next_u64());
            if (fam.passes(map, pot, w)) ++pass;
        }
        fam.total_mass = double(pass) / double(budget);
    }

    if (fam.total_mass < 1.0 - delta)
        throw harvest_error("harvest_blocks: kept mass " + format_double(fam.total_mass) +
                                " is below the target " + format_double(1.0 - delta),
                            fam.total_mass);
    return fam;
}

// ---- concatenated measure ----------------------------------------------------

ConcatenatedMeasure::ConcatenatedMeasure(MoranSchedule sched, std::vector<BlockFamily> families,
                                         const BranchMap& map, const AlmostAdditivePotential& pot)
    : sched_(std::move(sched)),
      families_(std::move(families)),
      map_(std::make_shared<BranchMap>(map)),
      pot_(std::make_shared<AlmostAdditivePotential>(pot)) {
    sched_.finalize();
    if (int(families_.size()) != sched_.stages())
        throw validation_error("concatenated measure: one block family per stage is required");
    for (int i = 0; i < sched_.stages(); ++i) {
        const BlockFamily& f = families_[std::size_t(i)];
        if (f.length != sched_.lengths[std::size_t(i)])
            throw validation_error("concatenated measure: family block length mismatch at stage " +
                                   std::to_string(i + 1));
        if (std::abs(f.eps - sched_.epsilons[std::size_t(i)]) > 1e-12)
            throw validation_error("concatenated measure: family filter width mismatch at stage " +
                                   std::to_string(i + 1));
        if (!(f.total_mass > 0.0))
            throw validation_error("concatenated measure: stage " + std::to_string(i + 1) +
                                   " family carries no mass");
        if (f.phi.empty())
            throw validation_error("concatenated measure: stage " + std::to_string(i + 1) +
                                   " family is missing its phase target");
    }
    g_norm_ = map_->sup_log_derivative();
}

const BlockFamily& ConcatenatedMeasure::family(int stage) const {
    if (stage < 1 || stage > int(families_.size()))
        throw validation_error("concatenated measure: stage out of range");
    return families_[std::size_t(stage - 1)];
}

Word ConcatenatedMeasure::draw_block(int stage, Rng& rng) const {
    const BlockFamily& f = family(stage);
    for (int attempt = 0; attempt < kRejectionCap; ++attempt) {
        Word w = f.source.sample_word(f.length, rng.next_u64());
        if (f.passes(*map_, *pot_, w)) return w;
    }
    throw harvest_error("draw_block: rejection sampling starved at stage " + std::to_string(stage),
                        f.total_mass);
}

Word generate_point(const ConcatenatedMeasure& cm, std::uint64_t seed, long long n) {
    const MoranSchedule& sched = cm.schedule();
    if (n < 1 || n > sched.total_length())
        throw validation_error("generate_point: length outside the schedule");
    Word out;
    out.reserve(std::size_t(n));
    Rng rng(mix_seed(seed, 0x67656e70ULL));
    for (long long j = 1; (long long)out.size() < n; ++j) {
        const Word block = cm.draw_block(sched.stage_of_block(j), rng);
        for (std::size_t k = 0; k < block.size() && (long long)out.size() < n; ++k)
            out.push_back(block[k]);
    }
    return out;
}

double eta_mass(const ConcatenatedMeasure& cm, WordView w) {
    const MoranSchedule& sched = cm.schedule();
    if (w.empty()) return 0.0;
    if ((long long)w.size() > sched.total_length())
        throw validation_error("eta_mass: word is longer than the schedule");
    validate_word(w, cm.map().num_branches());

    double lm = 0.0;
    long long pos = 0;
    for (long long j = 1; pos < (long long)w.size(); ++j) {
        const BlockFamily& f = cm.family(sched.stage_of_block(j));
        const long long l = f.length;
        if ((long long)w.size() - pos >= l) {
            const double bw = f.log_weight(cm.map(), cm.potential(),
                                           w.subspan(std::size_t(pos), std::size_t(l)));
            if (bw == -INFINITY) return -INFINITY;
            lm += bw;
            pos += l;
        } else {
            const WordView prefix = w.subspan(std::size_t(pos));
            if (f.enumerated) {
                double acc = -INFINITY;
                for (std::size_t i = 0; i < f.words.size(); ++i) {
                    const Word& cand = f.words[i];
                    bool match = true;
                    for (std::size_t k = 0; k < prefix.size(); ++k)
                        if (cand[k] != prefix[k]) { match = false; break; }
                    if (match) acc = logsumexp(acc, f.log_masses[i]);
                }
                if (acc == -INFINITY) return -INFINITY;
                lm += acc - std::log(f.total_mass);
            } else {
                // conservative upper bound: source mass of the prefix over Z
                const double up = f.source.log_cylinder_mass(prefix) - std::log(f.total_mass);
                lm += std::min(0.0, up);
            }
            pos = (long long)w.size();
        }
    }
    return lm;
}

// ---- oscillation profiles ----------------------------------------------------

namespace {

double profile_budget(const MoranSchedule& sched, int stage_idx, double C, long long n) {
    double b = 0.0;
    for (int i = 0; i <= stage_idx; ++i)
        b += double(sched.multiplicities[std::size_t(i)]) *
             (3.0 * double(sched.lengths[std::size_t(i)]) * sched.epsilons[std::size_t(i)] + C);
    return b / double(n);
}

OscillationEntry make_entry(const ConcatenatedMeasure& cm, int stage_idx, long long n,
                            std::vector<double> average, double C) {
    OscillationEntry e;
    e.n = n;
    e.stage = stage_idx + 1;
    e.average = std::move(average);
    e.target = cm.family(e.stage).phi;
    if (e.target.size() != e.average.size())
        throw validation_error("oscillation_profile: potential dimension differs from the stored phase targets");
    e.deviation = 0.0;
    for (std::size_t c = 0; c < e.average.size(); ++c)
        e.deviation = std::max(e.deviation, std::abs(e.average[c] - e.target[c]));
    e.budget = profile_budget(cm.schedule(), stage_idx, C, n);
    return e;
}

}  // namespace

std::vector<OscillationEntry> oscillation_profile(const ConcatenatedMeasure& cm,
                                                  const AlmostAdditivePotential& pot, WordView w) {
    const MoranSchedule& sched = cm.schedule();
    const double C = max_component(pot.C);
    std::vector<OscillationEntry> out;
    for (int s = 0; s < sched.stages(); ++s) {
        const long long nj = sched.length_through[std::size_t(s)];
        if (nj > (long long)w.size()) break;
        if (nj > (long long)INT_MAX)
            throw validation_error("oscillation_profile: boundary too deep; use the streaming overload");
        std::vector<double> avg = pot.evaluate(w, int(nj));
        for (double& v : avg) v /= double(nj);
        out.push_back(make_entry(cm, s, nj, std::move(avg), C));
    }
    if (out.empty())
        throw validation_error("oscillation_profile: word ends before the first stage boundary");
    return out;
}

std::vector<OscillationEntry> oscillation_profile(const ConcatenatedMeasure& cm,
                                                  const AlmostAdditivePotential& pot,
                                                  std::uint64_t seed) {
    if (!pot.additive() || !pot.prefix_determined)
        throw validation_error("oscillation_profile: streaming needs a finite-range additive potential");
    if (pot.alphabet != cm.map().num_branches())
        throw validation_error("oscillation_profile: potential alphabet must match the map");
    const MoranSchedule& sched = cm.schedule();
    const double C = max_component(pot.C);
    const int m = pot.alphabet;
    const int r = pot.range;
    long long ctx_mod = 1;
    for (int i = 1; i < r; ++i) ctx_mod *= m;

    // identical block stream to generate_point with the same seed
    Rng rng(mix_seed(seed, 0x67656e70ULL));

    std::vector<double> sum(std::size_t(pot.d), 0.0);
    std::vector<OscillationEntry> out;
    long long idx = 0, seen = 0;
    int stage_cursor = 0;
    for (long long j = 1; j <= sched.total_blocks(); ++j) {
        const Word block = cm.draw_block(sched.stage_of_block(j), rng);
        for (std::uint8_t a : block) {
            idx = (idx % ctx_mod) * m + (a - 1);
            ++seen;
            if (seen >= r) {
                const std::vector<double>& f = pot.f_table[std::size_t(idx)];
                for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += f[c];
            }
            if (seen == sched.length_through[std::size_t(stage_cursor)]) {
                std::vector<double> avg(sum);
                for (double& v : avg) v /= double(seen);
                out.push_back(make_entry(cm, stage_cursor, seen, std::move(avg), C));
                ++stage_cursor;
            }
        }
    }
    return out;
}

// ---- diameter bound and local dimension ---------------------------------------

double rho_bound(const ConcatenatedMeasure& cm, long long n) {
    const MoranSchedule& sched = cm.schedule();
    if (n < 1 || n > sched.total_length())
        throw validation_error("rho_bound: position outside the schedule");
    const ScheduleIndex ji = j_of_n(sched, n);

    double acc = 0.0;
    long long done = ji.J;
    for (int s = 0; s < sched.stages() && done > 0; ++s) {
        const long long in_stage = std::min(done, sched.multiplicities[std::size_t(s)]);
        acc += double(in_stage) * double(sched.lengths[std::size_t(s)]) *
               (cm.family(s + 1).lambda + 4.0 * sched.epsilons[std::size_t(s)]);
        done -= in_stage;
    }
    const long long jtail = std::min(ji.J + 1, sched.total_blocks());
    const double eps_star = ji.J >= 1
                                ? sched.epsilons[std::size_t(sched.stage_of_block(ji.J) - 1)]
                                : sched.epsilons[0];
    acc += double(sched.flat_length(jtail)) * (cm.g_norm() + eps_star);
    return acc;
}

namespace {

// rho value on the band J(n) = k, plus the pieces the dimension floor needs
struct BandTable {
    // f[k] = rho on band k; entropy_num[k] = lower bound on -log of any
    // depth-(k blocks) cylinder mass under the concatenated measure
    std::map<long long, double> f;
    std::map<long long, double> entropy_num;
};

double band_tail(const ConcatenatedMeasure& cm, long long k, long long max_blocks) {
    const MoranSchedule& sched = cm.schedule();
    const long long jtail = std::min(k + 1, max_blocks);
    const double eps_star = k >= 1 ? sched.epsilons[std::size_t(sched.stage_of_block(k) - 1)]
                                   : sched.epsilons[0];
    return double(sched.flat_length(jtail)) * (cm.g_norm() + eps_star);
}

BandTable band_values(const ConcatenatedMeasure& cm, const std::set<long long>& wanted) {
    const MoranSchedule& sched = cm.schedule();
    const long long B = sched.total_blocks();
    BandTable t;
    double head = 0.0, num = 0.0;
    if (wanted.count(0)) {
        t.f[0] = band_tail(cm, 0, B);
        t.entropy_num[0] = 0.0;
    }
    const long long top = wanted.empty() ? 0 : *wanted.rbegin();
    for (long long j = 1; j <= top; ++j) {
        const int s = sched.stage_of_block(j);
        const BlockFamily& fam = cm.family(s);
        const double l = double(fam.length);
        const double eps = sched.epsilons[std::size_t(s - 1)];
        head += l * (fam.lambda + 4.0 * eps);
        num += l * (fam.h - eps) + std::log(fam.total_mass);
        if (wanted.count(j)) {
            t.f[j] = head + band_tail(cm, j, B);
            t.entropy_num[j] = num;
        }
    }
    return t;
}

struct DescentLeaf {
    Word word;
    double log_mass;
};

// all admissible depth-n words whose cylinder meets [lo, hi], by forward
// interval descent with the family filters applied at block boundaries
std::vector<DescentLeaf> descend(const ConcatenatedMeasure& cm, long long depth, double lo, double hi) {
    const MoranSchedule& sched = cm.schedule();
    const BranchMap& map = cm.map();
    struct Node {
        Word prefix;
        double lo, hi;
        long long block_done;  // completed blocks
        long long block_pos;   // symbols into the current block
        double log_rho;
    };
    std::vector<DescentLeaf> leaves;
    std::vector<Node> stack;
    stack.push_back({Word(), std::max(0.0, lo), std::min(1.0, hi), 0, 0, 0.0});
    while (!stack.empty()) {
        Node node = std::move(stack.back());
        stack.pop_back();
        if ((long long)node.prefix.size() == depth) {
            if (int(leaves.size()) >= kDescentLeafCap)
                throw validation_error("local_dimension: ball meets too many cylinders; radius is out of band");
            leaves.push_back({node.prefix, 0.0});
            continue;
        }
        for (int a = 0; a < map.num_branches(); ++a) {
            const Branch& br = map.branch(a);
            const double ca = std::max(node.lo, br.domain.a);
            const double cb = std::min(node.hi, br.domain.b);
            if (!(cb - ca > 0.0)) continue;
            double y1 = br.forward(ca), y2 = br.forward(cb);
            if (y1 > y2) std::swap(y1, y2);
            y1 = std::max(0.0, y1);
            y2 = std::min(1.0, y2);
            if (!(y2 - y1 > 0.0)) continue;
            Node child;
            child.prefix = node.prefix;
            child.prefix.push_back(std::uint8_t(a + 1));
            child.lo = y1;
            child.hi = y2;
            child.block_done = node.block_done;
            child.block_pos = node.block_pos + 1;
            child.log_rho = node.log_rho;
            const BlockFamily& fam = cm.family(sched.stage_of_block(child.block_done + 1));
            if (child.block_pos == fam.length) {
                const std::size_t start = child.prefix.size() - std::size_t(fam.length);
                const double bw = fam.log_weight(map, cm.potential(),
                                                 WordView(child.prefix).subspan(start, std::size_t(fam.length)));
                if (bw == -INFINITY) continue;
                child.log_rho += bw;
                child.block_pos = 0;
                child.block_done += 1;
            }
            stack.push_back(std::move(child));
        }
    }
    for (DescentLeaf& leaf : leaves) leaf.log_mass = eta_mass(cm, leaf.word);
    return leaves;
}

}  // namespace

LocalDimensionEstimate local_dimension(const ConcatenatedMeasure& cm, std::uint64_t seed,
                                       const LocalDimensionOptions& opts) {
    const MoranSchedule& sched = cm.schedule();
    const long long B = sched.total_blocks();
    const long long B_eff = opts.max_block_bands > 0 ? std::min(B, opts.max_block_bands) : B;
    if (B_eff < 5)
        throw validation_error("local_dimension: the schedule has too few blocks for a radius grid");

    // pick the radius bands: log r in band k resolves the depth to the last
    // position before block k+1 completes
    std::vector<long long> band_of;     // band index per radius
    std::vector<double> chosen_log_r;
    if (opts.log_radii.empty()) {
        const int want = std::max(4, std::min(opts.max_radii, int(std::min<long long>(B_eff - 1, 1 << 20))));
        std::set<long long> ks;
        for (int t = 0; t < want; ++t) {
            const long long k = 1 + (long long)std::llround(double(t) * double(B_eff - 2) / double(std::max(1, want - 1)));
            ks.insert(std::min<long long>(std::max<long long>(k, 1), B_eff - 1));
        }
        std::set<long long> wanted;
        for (long long k : ks) { wanted.insert(k); wanted.insert(k + 1); }
        const BandTable table = band_values(cm, wanted);
        for (long long k : ks) {
            band_of.push_back(k);
            chosen_log_r.push_back(-0.5 * (table.f.at(k) + table.f.at(k + 1)));
        }
        // stash the table pieces for the floor below
        // (recomputed there from the same wanted set)
    } else {
        if (B_eff > (1 << 20))
            throw validation_error("local_dimension: schedule too deep for explicit radii; use the band defaults");
        std::set<long long> all;
        for (long long k = 0; k <= B_eff; ++k) all.insert(k);
        const BandTable table = band_values(cm, all);
        std::vector<double> f(std::size_t(B_eff) + 1);
        for (long long k = 0; k <= B_eff; ++k) f[std::size_t(k)] = table.f.at(k);
        for (double lr : opts.log_radii) {
            if (!std::isfinite(lr) || lr >= 0.0) continue;
            const double L = -lr;
            if (L <= f[0] || L > f[std::size_t(B_eff)]) continue;  // outside the resolvable bands
            const auto it = std::lower_bound(f.begin(), f.end(), L);
            const long long k = (it - f.begin()) - 1;  // f[k] < L <= f[k+1]
            if (k < 0 || k >= B_eff) continue;
            band_of.push_back(k);
            chosen_log_r.push_back(lr);
        }
    }
    if (band_of.size() < 4)
        throw validation_error("local_dimension: fewer than four usable radii");

    std::set<long long> wanted;
    for (std::size_t i = 0; i < band_of.size(); ++i) {
        wanted.insert(band_of[i]);
        wanted.insert(band_of[i] + 1);
    }
    const BandTable table = band_values(cm, wanted);

    // one streaming pass: cumulative block weights of the generated word, plus
    // a retained prefix for the interval-descent radii
    long long k_gen = 0;
    for (long long k : band_of) k_gen = std::max(k_gen, k + 1);
    std::vector<double> log_rho_cum(std::size_t(k_gen) + 1, 0.0);
    std::vector<double> log_max_cum(std::size_t(k_gen) + 1, 0.0);
    Word prefix;
    Rng rng(mix_seed(seed, 0x67656e70ULL));
    for (long long j = 1; j <= k_gen; ++j) {
        const int s = sched.stage_of_block(j);
        const BlockFamily& fam = cm.family(s);
        const Word block = cm.draw_block(s, rng);
        log_rho_cum[std::size_t(j)] = log_rho_cum[std::size_t(j - 1)] +
                                      fam.source.log_cylinder_mass(block) - std::log(fam.total_mass);
        log_max_cum[std::size_t(j)] = log_max_cum[std::size_t(j - 1)] + fam.log_max_weight();
        if ((long long)prefix.size() < kPrefixKeepCap)
            for (std::uint8_t a : block) {
                prefix.push_back(a);
                if ((long long)prefix.size() >= kPrefixKeepCap) break;
            }
    }

    LocalDimensionEstimate est;
    const std::size_t x_depth = std::min<std::size_t>(prefix.size(), 4096);
    const Projection proj = project(cm.map(), WordView(prefix).subspan(0, x_depth));
    est.x = proj.value;

    for (std::size_t i = 0; i < band_of.size(); ++i) {
        const long long k = band_of[i];
        const double log_r = chosen_log_r[i];
        const double r = std::exp(log_r);
        const long long depth = sched.block_start(k + 1) + sched.flat_length(k + 1) - 1;
        const bool absolute = r >= kAbsoluteRadiusFloor && depth <= (long long)prefix.size() &&
                              proj.error <= 0.5 * r && x_depth >= std::size_t(depth);
        double log_mass;
        int count;
        bool uncertain;
        if (absolute) {
            const std::vector<DescentLeaf> leaves = descend(cm, depth, est.x - r, est.x + r);
            log_mass = -INFINITY;
            for (const DescentLeaf& leaf : leaves) log_mass = logsumexp(log_mass, leaf.log_mass);
            count = int(leaves.size());
            uncertain = false;
        } else {
            // the ball meets at most three depth-(k blocks) cylinders: the
            // point's own plus two neighbors bounded by the stage maxima
            const double own = log_rho_cum[std::size_t(k)];
            log_mass = logsumexp(own, std::log(2.0) + log_max_cum[std::size_t(k)]);
            count = 3;
            uncertain = true;
        }
        est.log_r.push_back(log_r);
        est.log_mass.push_back(log_mass);
        est.cylinder_count.push_back(count);
        est.edge_uncertain.push_back(uncertain);
    }

    const OlsFit fit = ols(est.log_r, est.log_mass);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.stderr_slope = fit.stderr_slope;
    est.r2 = fit.r2;

    est.min_phase_ratio = INFINITY;
    for (int s = 1; s <= sched.stages(); ++s) {
        const BlockFamily& fam = cm.family(s);
        est.min_phase_ratio = std::min(est.min_phase_ratio, fam.h / std::max(fam.lambda, kLambdaFloor));
    }
    est.floor_bound = INFINITY;
    for (long long k : band_of) {
        const double num = table.entropy_num.at(k) - std::log(3.0);
        est.floor_bound = std::min(est.floor_bound, num / table.f.at(k + 1));
    }
    return est;
}

}  // namespace mfa
