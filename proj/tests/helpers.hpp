// Builders shared across test files: standard maps, digit potentials, and a
// small two-stage concatenated measure whose families can be enumerated by
// hand.
#pragma once

#include <memory>
#include <vector>

#include "mfa/interval_maps.hpp"
#include "mfa/moran.hpp"
#include "mfa/potentials.hpp"

namespace testutil {

inline mfa::BranchMap doubling_map() {
    return mfa::make_linear_map({{0.0, 0.5}, {0.5, 1.0}});
}

inline mfa::BranchMap cantor_map() {
    return mfa::make_linear_map({{0.0, 1.0 / 3.0}, {2.0 / 3.0, 1.0}});
}

// frequency of one symbol: f(window) = [w_0 == symbol]
inline mfa::AlmostAdditivePotential digit_potential(int alphabet, int symbol = 1) {
    return mfa::from_additive(alphabet, 1, [symbol](mfa::WordView w) {
        return std::vector<double>{w[0] == symbol ? 1.0 : 0.0};
    });
}

// Two stages over the doubling map with the symbol-1 frequency potential.
//   lengths (5, 6), multiplicities (1, 21), eps (0.2, 0.1), total length 131.
// Stage 1 draws from Bernoulli(1/2): the pass set is exactly the words with
// two or three 1s (20 words, mass 0.625).  Stage 2 draws from Bernoulli(0.8):
// the entropy filter keeps exactly the five-1s words (6 words, mass 0.393216).
struct ToyMoran {
    mfa::BranchMap map;
    mfa::AlmostAdditivePotential pot;
    mfa::MoranSchedule sched;
    std::unique_ptr<mfa::ConcatenatedMeasure> cm;
};

inline ToyMoran make_toy_moran() {
    ToyMoran t{doubling_map(), digit_potential(2), mfa::build_schedule(2, 3, 1.4, 0.4, 0.75), nullptr};
    const mfa::MarkovMeasure mu = mfa::MarkovMeasure::bernoulli({0.5, 0.5});
    const mfa::MarkovMeasure nu = mfa::MarkovMeasure::bernoulli({0.8, 0.2});
    mfa::BlockFamily f1 = mfa::harvest_blocks(mu, t.pot, t.map, t.sched.lengths[0],
                                              t.sched.epsilons[0], t.sched.delta, 1);
    mfa::BlockFamily f2 = mfa::harvest_blocks(nu, t.pot, t.map, t.sched.lengths[1],
                                              t.sched.epsilons[1], t.sched.delta, 1);
    f1.stage = 1;
    f2.stage = 2;
    t.cm = std::make_unique<mfa::ConcatenatedMeasure>(t.sched, std::vector<mfa::BlockFamily>{f1, f2},
                                                      t.map, t.pot);
    return t;
}

}  // namespace testutil
