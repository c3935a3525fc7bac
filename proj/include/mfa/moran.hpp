// Concatenated Moran measures: typicality-filtered block families drawn from
// alternating ergodic measures, the block schedule, the product measure on the
// resulting set, oscillation profiles, and local dimension estimates.
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mfa/interval_maps.hpp"
#include "mfa/measures.hpp"
#include "mfa/potentials.hpp"
#include "mfa/symbolic.hpp"

namespace mfa {

struct MoranSchedule {
    std::vector<int> lengths;                 // block length per stage
    std::vector<long long> multiplicities;    // blocks per stage
    std::vector<double> epsilons;             // per-stage filter width
    double delta = 0.1;                       // kept-mass allowance: keep >= 1 - delta

    // prefix sums over stages (index i holds stages 1..i+1)
    std::vector<long long> blocks_through;    // sum of multiplicities
    std::vector<long long> length_through;    // sum of length x multiplicity

    int stages() const { return int(lengths.size()); }
    long long total_blocks() const { return blocks_through.back(); }
    long long total_length() const { return length_through.back(); }
    int stage_of_block(long long j) const;    // 1-based block index to 1-based stage
    int flat_length(long long j) const;       // length of the j-th block
    long long block_start(long long j) const; // symbols before block j
    void finalize();                          // validate and fill prefix sums
};

// l_i = ceil(base * growth^i), eps_i = eps0 / 2^i, multiplicities chosen so
// the even/odd dominance ratios decrease and end below 0.05 and the final
// tail ratio l_last / (total - l_last) is below 0.05; throws naming the
// violated ratio when the margins cannot be met
MoranSchedule build_schedule(int stages, int base_length, double growth, double eps0, double delta);

// the source text's multiplicity rule N_i = 2^(l_{i+2} + N_{i-1}), N_0 = 1;
// doubly exponential, usable only for tiny i (overflow throws)
long long paper_multiplicity_rule(const std::vector<long long>& lengths, int i);

struct ScheduleIndex {
    long long J = 0;  // completed blocks within the first n symbols
    long long r = 0;  // stage whose block range contains J (0 while J = 0)
};
ScheduleIndex j_of_n(const MoranSchedule& sched, long long n);

// Length-l words typical for one ergodic source: every kept word has Birkhoff
// average, expansion rate, and empirical entropy within eps of the recorded
// source values, and constant words are excluded.  Explicit word lists exist
// only when alphabet^l fits the enumeration budget; otherwise the family is
// the filter predicate plus a sampled pass-rate mass.
struct BlockFamily {
    explicit BlockFamily(MarkovMeasure src) : source(std::move(src)) {}

    int stage = 0;
    int length = 0;
    double eps = 0.0;
    MarkovMeasure source;
    double h = 0.0;            // source entropy
    double lambda = 0.0;       // recorded expansion of the source
    std::vector<double> phi;   // recorded Birkhoff limit of the source

    double total_mass = 0.0;   // source mass of the pass set
    bool enumerated = false;
    bool mass_exact = false;
    std::vector<Word> words;            // pass set, enumerated families only
    std::vector<double> log_masses;     // log source mass per word

    bool passes(const BranchMap& map, const AlmostAdditivePotential& pot, WordView w) const;
    // log of mu[w]/total_mass for a passing word, -inf otherwise
    double log_weight(const BranchMap& map, const AlmostAdditivePotential& pot, WordView w) const;
    // upper bound on any single block weight, from the entropy filter
    double log_max_weight() const;
};

BlockFamily harvest_blocks(const MarkovMeasure& mu, const AlmostAdditivePotential& pot,
                           const BranchMap& map, int l, double eps, double delta,
                           std::uint64_t seed, long budget = 200000);

class ConcatenatedMeasure {
  public:
    ConcatenatedMeasure(MoranSchedule sched, std::vector<BlockFamily> families,
                        const BranchMap& map, const AlmostAdditivePotential& pot);

    const MoranSchedule& schedule() const { return sched_; }
    const BlockFamily& family(int stage) const;  // 1-based
    const BranchMap& map() const { return *map_; }
    const AlmostAdditivePotential& potential() const { return *pot_; }
    double g_norm() const { return g_norm_; }  // sup |log|T'|| over branch domains

    // one typical block for the given stage by rejection sampling
    Word draw_block(int stage, Rng& rng) const;

  private:
    MoranSchedule sched_;
    std::vector<BlockFamily> families_;
    std::shared_ptr<const BranchMap> map_;
    std::shared_ptr<const AlmostAdditivePotential> pot_;
    double g_norm_ = 0.0;
};

// prefix of length n of a word whose blocks are drawn independently with the
// family weights; deterministic in seed
Word generate_point(const ConcatenatedMeasure& cm, std::uint64_t seed, long long n);

// log of the concatenated-measure mass of [w].  Full blocks multiply their
// family weights; a partial last block contributes the exact sum over
// completions for enumerated families and the conservative upper bound
// mu[prefix]/Z otherwise.  -inf for words outside the block structure.
double eta_mass(const ConcatenatedMeasure& cm, WordView w);

struct OscillationEntry {
    long long n = 0;               // stage boundary position
    int stage = 0;
    std::vector<double> average;   // phi_n(w)/n at the boundary
    std::vector<double> target;    // the stage source's recorded Birkhoff limit
    double deviation = 0.0;        // max-component |average - target|
    double budget = 0.0;           // sum over stages <= this one of N_i (3 l_i eps_i + C) / n
};

// Birkhoff averages at every stage boundary of an explicit word
std::vector<OscillationEntry> oscillation_profile(const ConcatenatedMeasure& cm,
                                                  const AlmostAdditivePotential& pot, WordView w);
// streaming variant for schedules too long to materialize; requires a
// prefix-determined potential so block sums can carry across boundaries
std::vector<OscillationEntry> oscillation_profile(const ConcatenatedMeasure& cm,
                                                  const AlmostAdditivePotential& pot,
                                                  std::uint64_t seed);

// the increasing step bound rho(n) with -log D_n(w) <= rho(n) for generated
// words: sum_{i <= J(n)} l*_i (lambda_i + 4 eps*_i) + l*_{J(n)+1} (||g|| + eps*_{J(n)})
double rho_bound(const ConcatenatedMeasure& cm, long long n);

struct LocalDimensionOptions {
    std::vector<double> log_radii;  // empty = band-aligned defaults
    int max_radii = 48;
    long long max_block_bands = -1; // cap the deepest band, -1 = schedule end
};

struct LocalDimensionEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double r2 = 0.0;
    double x = 0.0;                     // projected coordinate of the generated point
    std::vector<double> log_r;
    std::vector<double> log_mass;       // upper-bound ball masses
    std::vector<int> cylinder_count;    // covering cylinders per radius (<= 3)
    std::vector<bool> edge_uncertain;   // true when neighbors were bounded, not traced
    double floor_bound = 0.0;           // schedule-derived lower bound for the slope
    double min_phase_ratio = 0.0;       // min over stages of h_i / lambda_i
};

// mass-vs-radius regression at one generated point: each radius resolves to a
// block boundary via rho, the ball mass is the (at most three) covering
// cylinder masses, and the slope estimates the local dimension
LocalDimensionEstimate local_dimension(const ConcatenatedMeasure& cm, std::uint64_t seed,
                                       const LocalDimensionOptions& opts = {});

}  // namespace mfa
