#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mfa/symbolic.hpp"

using namespace mfa;

namespace {

Word random_word(Rng& rng, int len, int alphabet) {
    Word w(static_cast<std::size_t>(len));
    for (auto& a : w) a = std::uint8_t(1 + rng.next_u64() % std::uint64_t(alphabet));
    return w;
}

}  // namespace

TEST_CASE("word parsing and formatting round-trip") {
    CHECK(parse_word("12112", 2) == Word{1, 2, 1, 1, 2});
    CHECK(format_word(Word{1, 2, 1, 1, 2}) == "12112");
    CHECK(parse_word("", 2).empty());
    CHECK_THROWS_AS(parse_word("13", 2), validation_error);
    CHECK_THROWS_AS(parse_word("11", 1), validation_error);    // alphabet below 2
    CHECK_THROWS_AS(parse_word("11", 10), validation_error);   // digit strings stop at 9
    CHECK_THROWS_AS(validate_word(Word{1, 3}, 2), validation_error);
    CHECK_THROWS_AS(format_word(Word{0}), validation_error);
    CHECK_NOTHROW(validate_word(Word{2, 1, 2}, 2));
}

TEST_CASE("cylinders of the doubling map are dyadic intervals") {
    const BranchMap map = testutil::doubling_map();
    const CylinderInterval c = cylinder(map, parse_word("121", 2));
    CHECK(c.a == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(c.b == doctest::Approx(0.375).epsilon(1e-14));
    CHECK(c.log_diam == doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-14));
    CHECK(c.diameter() == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(c.midpoint() == doctest::Approx(0.3125).epsilon(1e-12));

    // the empty word codes the whole interval
    const CylinderInterval full = cylinder(map, Word{});
    CHECK(full.a == 0.0);
    CHECK(full.b == 1.0);
    CHECK(full.log_diam == 0.0);
}

TEST_CASE("cylinders of the middle-thirds map") {
    const BranchMap map = testutil::cantor_map();
    const CylinderInterval c12 = cylinder(map, parse_word("12", 2));
    CHECK(c12.a == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
    CHECK(c12.b == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(c12.log_diam == doctest::Approx(2.0 * std::log(1.0 / 3.0)).epsilon(1e-13));

    const CylinderInterval c21 = cylinder(map, parse_word("21", 2));
    CHECK(c21.a == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
    CHECK(c21.b == doctest::Approx(7.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("cylinders nest and children tile the parent") {
    const BranchMap maps[] = {testutil::doubling_map(), testutil::cantor_map(),
                              make_manneville_pomeau(0.5)};
    Rng rng(20240817);
    for (const BranchMap& map : maps) {
        for (int rep = 0; rep < 8; ++rep) {
            const Word w = random_word(rng, 12, 2);
            CylinderInterval parent = cylinder(map, Word{});
            for (int k = 1; k <= 12; ++k) {
                const CylinderInterval child = cylinder(map, WordView(w).first(std::size_t(k)));
                CHECK(child.a >= parent.a - 1e-12);
                CHECK(child.b <= parent.b + 1e-12);
                CHECK(child.b - child.a <= (parent.b - parent.a) + 1e-12);
                parent = child;
            }
            // children of a cylinder cover the fraction of it that the branch
            // domains cover: all of it for the gap-free maps, 2/3 for the
            // middle-third map (and exactly, since its branches are affine)
            double fill = 0.0;
            for (int j = 0; j < map.num_branches(); ++j)
                fill += map.branch(j).domain.length();
            const Word base(w.begin(), w.begin() + 6);
            const CylinderInterval outer = cylinder(map, base);
            double width_sum = 0.0;
            for (std::uint8_t a = 1; a <= 2; ++a) {
                Word ext = base;
                ext.push_back(a);
                const CylinderInterval inner = cylinder(map, ext);
                width_sum += inner.b - inner.a;
            }
            CHECK(width_sum == doctest::Approx(fill * (outer.b - outer.a)).epsilon(1e-9));
        }
    }
}

TEST_CASE("log_diam stays exact long after the interval width underflows") {
    const BranchMap map = testutil::doubling_map();
    const Word w(4000, 1);
    const CylinderInterval c = cylinder(map, w);
    CHECK(c.log_diam == doctest::Approx(4000.0 * std::log(0.5)).epsilon(1e-12));
    CHECK(c.b - c.a == 0.0);  // underflowed, as expected
    CHECK(lambda_tilde(map, w, 4000) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("projection returns the cylinder midpoint with certified error") {
    const BranchMap map = testutil::doubling_map();
    const Projection p = project(map, parse_word("11", 2));
    CHECK(p.value == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(p.error == doctest::Approx(0.125).epsilon(1e-12));

    const Projection whole = project(map, Word{});
    CHECK(whole.value == doctest::Approx(0.5));
    CHECK(whole.error == doctest::Approx(0.5));
}

TEST_CASE("itineraries follow orbits, stamp escape times, prefer the left branch") {
    const BranchMap doubling = testutil::doubling_map();
    CHECK(itinerary(doubling, 1.0 / 3.0, 6) == Word{1, 2, 1, 2, 1, 2});
    CHECK(itinerary(doubling, 0.5, 4) == Word{1, 2, 2, 2});  // 0.5 -> 1 -> 1 -> ...
    CHECK(itinerary(doubling, 1.0, 3) == Word{2, 2, 2});
    CHECK(itinerary(doubling, 0.3, 0).empty());
    CHECK_THROWS_AS(itinerary(doubling, 0.3, -1), validation_error);

    const BranchMap cantor = testutil::cantor_map();
    try {
        itinerary(cantor, 0.5, 5);
        FAIL("expected escape");
    } catch (const escape_error& e) {
        CHECK(e.escape_time == 1);
    }
    try {
        itinerary(cantor, 0.2, 5);  // 0.2 -> 0.6, a gap point
        FAIL("expected escape");
    } catch (const escape_error& e) {
        CHECK(e.escape_time == 2);
    }
}

TEST_CASE("itinerary then projection recovers the point within the certified error") {
    const BranchMap doubling = testutil::doubling_map();
    for (int i = 0; i <= 20; ++i) {
        const double x = i / 20.0;
        const Word w = itinerary(doubling, x, 20);
        const Projection p = project(doubling, w);
        CHECK(std::fabs(p.value - x) <= p.error + 1e-12);
    }
    const BranchMap mp = make_manneville_pomeau(0.5);
    for (int i = 0; i <= 10; ++i) {
        const double x = i / 10.0;
        const Word w = itinerary(mp, x, 30);
        const Projection p = project(mp, w);
        CHECK(std::fabs(p.value - x) <= p.error + 1e-9);
    }
    // a point of the middle-thirds attractor: 1/4 has the periodic orbit 1/4 -> 3/4
    const BranchMap cantor = testutil::cantor_map();
    const Word w = itinerary(cantor, 0.25, 20);
    CHECK(w[0] == 1);
    CHECK(w[1] == 2);
    const Projection p = project(cantor, w);
    CHECK(std::fabs(p.value - 0.25) <= p.error + 1e-12);
}

TEST_CASE("the projection conjugates shift and map") {
    Rng rng(7);
    const BranchMap linear[] = {testutil::doubling_map(), testutil::cantor_map(),
                                make_linear_map({{0.0, 0.2}, {0.3, 0.55}, {0.55, 1.0}})};
    for (const BranchMap& map : linear) {
        for (int rep = 0; rep < 50; ++rep) {
            const Word w = random_word(rng, 30, map.num_branches());
            CHECK(conjugacy_residual(map, w) < 1e-9);
        }
    }

    // nonlinear branches: the residual is controlled by the cylinder widths
    const BranchMap mp = make_manneville_pomeau(0.5);
    const double lip = std::exp(mp.sup_log_derivative());
    for (int rep = 0; rep < 20; ++rep) {
        const Word w = random_word(rng, 12, 2);
        const double bound = 0.5 * cylinder(mp, WordView(w).subspan(1)).diameter() +
                             0.5 * lip * cylinder(mp, w).diameter();
        CHECK(conjugacy_residual(mp, w) <= bound + 1e-9);
    }

    CHECK_THROWS_AS(conjugacy_residual(testutil::doubling_map(), Word{1}), validation_error);
}

TEST_CASE("lambda_tilde measures per-symbol contraction") {
    const BranchMap doubling = testutil::doubling_map();
    Rng rng(3);
    const Word w = random_word(rng, 24, 2);
    CHECK(lambda_tilde(doubling, w, 24) == doctest::Approx(std::log(2.0)).epsilon(1e-13));
    CHECK(lambda_tilde(testutil::cantor_map(), w, 10) == doctest::Approx(std::log(3.0)).epsilon(1e-13));

    const BranchMap mixed = make_linear_map({{0.0, 0.5}, {0.5, 0.75}});
    const Word v = parse_word("1221", 2);
    CHECK(lambda_tilde(mixed, v, 4) == doctest::Approx(std::log(64.0) / 4.0).epsilon(1e-13));

    CHECK_THROWS_AS(lambda_tilde(doubling, v, 0), validation_error);
    CHECK_THROWS_AS(lambda_tilde(doubling, v, 5), validation_error);
}

TEST_CASE("widest cylinder of an intermittent map hugs the parabolic point") {
    const BranchMap mp = make_manneville_pomeau(0.5);
    double prev_max = 2.0;
    for (int n : {4, 6, 8, 10}) {
        double best = -1.0;
        Word best_word;
        Word w(std::size_t(n), 1);
        // odometer enumeration of all 2^n words
        while (true) {
            const double d = cylinder(mp, w).diameter();
            if (d > best) {
                best = d;
                best_word = w;
            }
            int j = n - 1;
            while (j >= 0 && w[std::size_t(j)] == 2) w[std::size_t(j--)] = 1;
            if (j < 0) break;
            ++w[std::size_t(j)];
        }
        CHECK(best_word == Word(std::size_t(n), 1));
        CHECK(best < prev_max);
        prev_max = best;
    }
}

TEST_CASE("cylinder depth is capped") {
    const Word w(std::size_t(kDepthCap) + 1, 1);
    CHECK_THROWS_AS(cylinder(testutil::doubling_map(), w), validation_error);
}
