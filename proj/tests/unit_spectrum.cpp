#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mfa/spectrum.hpp"
#include "oracles.hpp"

using namespace mfa;

namespace {

SpectrumOptions fast_opts(int starts = 8, int seed = 1) {
    SpectrumOptions o;
    o.order = 0;
    o.starts = starts;
    o.seed = seed;
    return o;
}

}  // namespace

TEST_CASE("status labels") {
    CHECK(std::string(to_string(SpectrumStatus::interior)) == "interior");
    CHECK(std::string(to_string(SpectrumStatus::endpoint)) == "endpoint");
    CHECK(std::string(to_string(SpectrumStatus::in_parabolic_hull)) == "in_parabolic_hull");
    CHECK(std::string(to_string(SpectrumStatus::infeasible)) == "infeasible");
}

TEST_CASE("depth defaults: additive and affine inputs need no refinement") {
    const BranchMap doubling = testutil::doubling_map();
    const AlmostAdditivePotential digit = testutil::digit_potential(2);
    CHECK(default_phi_depth(digit) == 0);
    CHECK(default_lyapunov_depth(doubling) == 1);

    const BranchMap mp = make_manneville_pomeau(0.5);
    CHECK(default_phi_depth(g_potential(mp)) == 10);
    CHECK(default_lyapunov_depth(mp) == 10);
}

TEST_CASE("per-measure averages used by the optimizer") {
    const BranchMap doubling = testutil::doubling_map();
    const MarkovMeasure mu = MarkovMeasure::bernoulli({0.3, 0.7});
    CHECK(spectrum_phi(testutil::digit_potential(2), mu)[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(spectrum_lambda(doubling, mu, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // finite-depth phi of a non-additive potential matches the cylinder sum
    const BranchMap mp = make_manneville_pomeau(0.5);
    const AlmostAdditivePotential g = g_potential(mp);
    const MarkovMeasure half = MarkovMeasure::bernoulli({0.5, 0.5});
    double brute = 0.0;
    for (int bits = 0; bits < 8; ++bits) {
        Word w = {std::uint8_t(1 + (bits & 1)), std::uint8_t(1 + ((bits >> 1) & 1)),
                  std::uint8_t(1 + ((bits >> 2) & 1))};
        brute += half.cylinder_mass(w) * g.evaluate(w, 3)[0];
    }
    CHECK(spectrum_phi(g, half, 3)[0] == doctest::Approx(brute / 3.0).epsilon(1e-12));
}

TEST_CASE("the attainable-average hull spans the digit frequencies") {
    const BranchMap doubling = testutil::doubling_map();
    const AlmostAdditivePotential digit = testutil::digit_potential(2);
    const ConvexHull span = compute_L_phi(doubling, digit, 0, 8, 1);
    REQUIRE(span.d == 1);
    REQUIRE_FALSE(span.empty());
    double lo = 1e300, hi = -1e300;
    for (const auto& v : span.vertices) {
        lo = std::min(lo, v[0]);
        hi = std::max(hi, v[0]);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
    CHECK(span.contains({0.5}, 1e-9));

    const ConvexHull flat = compute_L_phi(doubling, constant_potential(2, 0.7), 0, 8, 1);
    REQUIRE_FALSE(flat.empty());
    double clo = 1e300, chi = -1e300;
    for (const auto& v : flat.vertices) {
        clo = std::min(clo, v[0]);
        chi = std::max(chi, v[0]);
    }
    CHECK(chi - clo < 1e-9);
    CHECK(clo == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("hyperbolic dimension of self-similar attractors") {
    const BranchMap doubling = testutil::doubling_map();
    const SpectrumPoint full = hyperbolic_dimension(doubling, fast_opts());
    CHECK(full.dim_value == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(full.status == SpectrumStatus::interior);

    const BranchMap cantor = testutil::cantor_map();
    const SpectrumPoint c = hyperbolic_dimension(cantor, fast_opts());
    CHECK(c.dim_value == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-4));

    // self-consistency of the reported witness data
    CHECK(c.lambda > 0.0);
    CHECK(c.dim_value == doctest::Approx(c.h / c.lambda).epsilon(1e-9));
    REQUIRE(c.witness.has_value());
    CHECK(c.witness->entropy() == doctest::Approx(c.h).epsilon(1e-9));

    // two unequal contractions: the similarity dimension solves sum r_i^t = 1
    const BranchMap uneven = make_linear_map({{0.0, 0.5}, {0.5, 0.75}});
    const double target = oracle::moran_root({0.5, 0.25});
    CHECK(hyperbolic_dimension(uneven, fast_opts(12)).dim_value ==
          doctest::Approx(target).epsilon(1e-3));

    // enlarging the optimization class cannot lose dimension
    SpectrumOptions o1 = fast_opts(12);
    o1.order = 1;
    CHECK(hyperbolic_dimension(uneven, o1).dim_value >=
          hyperbolic_dimension(uneven, fast_opts(12)).dim_value - 1e-6);
}

TEST_CASE("conditional dimension at a prescribed average") {
    const BranchMap doubling = testutil::doubling_map();
    const AlmostAdditivePotential digit = testutil::digit_potential(2);

    SpectrumPoint p = dimension_spectrum(doubling, digit, {0.5}, fast_opts(12));
    CHECK(p.status == SpectrumStatus::interior);
    CHECK(p.dim_value == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(p.constraint_residual <= 1e-6 + 1e-9);

    p = dimension_spectrum(doubling, digit, {0.2}, fast_opts(12));
    CHECK(p.dim_value == doctest::Approx(oracle::binary_entropy(0.2) / std::log(2.0)).epsilon(1e-3));
    CHECK(std::fabs(p.phi[0] - 0.2) <= 1e-6 + 1e-9);

    p = dimension_spectrum(doubling, digit, {0.97}, fast_opts(16));
    CHECK(p.dim_value == doctest::Approx(oracle::binary_entropy(0.97) / std::log(2.0)).epsilon(1e-3));

    // boundary of the attainable set: dimension collapses
    p = dimension_spectrum(doubling, digit, {1.0}, fast_opts(12));
    CHECK(p.status == SpectrumStatus::endpoint);
    CHECK(p.dim_value <= 0.01);

    // outside: flagged, never thrown
    p = dimension_spectrum(doubling, digit, {1.05}, fast_opts());
    CHECK(p.status == SpectrumStatus::infeasible);
    CHECK(p.note.find("outside the attainable set") != std::string::npos);

    CHECK_THROWS_AS(dimension_spectrum(doubling, digit, {0.5, 0.5}, fast_opts()),
                    validation_error);

    // scaling the potential rescales the constraint coordinate
    const AlmostAdditivePotential twice = from_additive(
        2, 1, [](WordView w) { return std::vector<double>{w[0] == 1 ? 2.0 : 0.0}; });
    const SpectrumPoint q = dimension_spectrum(doubling, twice, {0.4}, fast_opts(12));
    const SpectrumPoint base = dimension_spectrum(doubling, digit, {0.2}, fast_opts(12));
    CHECK(q.dim_value == doctest::Approx(base.dim_value).epsilon(2e-3));
}

TEST_CASE("parabolic maps route hull alphas through the unconstrained value") {
    const BranchMap mp = make_manneville_pomeau(0.5);
    const AlmostAdditivePotential digit = testutil::digit_potential(2);
    SpectrumOptions o = fast_opts(8, 3);

    const SpectrumPoint hull = dimension_spectrum(mp, digit, {1.0}, o);
    CHECK(hull.status == SpectrumStatus::in_parabolic_hull);
    CHECK(hull.note.find("parabolic") != std::string::npos);
    const SpectrumPoint sup = hyperbolic_dimension(mp, o);
    CHECK(hull.dim_value == sup.dim_value);

    const SpectrumPoint inside = dimension_spectrum(mp, digit, {0.4}, o);
    CHECK(inside.status == SpectrumStatus::interior);
}

TEST_CASE("spectrum curves over an alpha grid") {
    const BranchMap doubling = testutil::doubling_map();
    const AlmostAdditivePotential digit = testutil::digit_potential(2);
    SpectrumOptions o = fast_opts(6, 2);

    const std::vector<double> grid = {0.3, 0.4, 0.5, 0.6, 0.7};
    const SpectrumCurve curve = spectrum_curve(doubling, digit, grid, o);
    REQUIRE(curve.points.size() == 5);
    REQUIRE(curve.concave_ok.size() == 5);
    for (bool ok : curve.concave_ok) CHECK(ok);
    for (const SpectrumPoint& pt : curve.points) CHECK(pt.status == SpectrumStatus::interior);
    // symmetric potential, symmetric spectrum, peak at the balanced average
    CHECK(std::fabs(curve.points[0].dim_value - curve.points[4].dim_value) <= 2e-3);
    CHECK(curve.points[2].dim_value >= curve.points[0].dim_value);
    CHECK(curve.points[2].dim_value >= curve.points[4].dim_value);

    // threading changes the schedule, never the numbers
    SpectrumOptions o4 = o;
    o4.threads = 4;
    const SpectrumCurve par = spectrum_curve(doubling, digit, grid, o4);
    REQUIRE(par.points.size() == curve.points.size());
    for (std::size_t i = 0; i < curve.points.size(); ++i)
        CHECK(par.points[i].dim_value == curve.points[i].dim_value);

    // a bad grid point is recorded in place, the batch survives
    const SpectrumCurve mixed = spectrum_curve(doubling, digit, {0.4, 1.05, 0.6}, o);
    REQUIRE(mixed.points.size() == 3);
    CHECK(mixed.points[1].status == SpectrumStatus::infeasible);
    CHECK_FALSE(mixed.points[1].note.empty());
    CHECK(mixed.points[0].status == SpectrumStatus::interior);
    CHECK(mixed.points[2].status == SpectrumStatus::interior);

    // grid sweeps only make sense for scalar potentials
    const AlmostAdditivePotential stacked =
        stack_potentials(digit, constant_potential(2, 0.5));
    CHECK_THROWS_AS(spectrum_curve(doubling, stacked, grid, o), validation_error);
}
