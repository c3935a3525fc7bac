#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mfa/interval_maps.hpp"
#include "mfa/potentials.hpp"

using namespace mfa;

TEST_CASE("linear map: branch geometry, evaluation, symbol lookup") {
    const BranchMap map = testutil::doubling_map();
    CHECK(map.num_branches() == 2);
    CHECK(map.kind() == "linear");
    CHECK(map.caveat().empty());

    const Branch& b0 = map.branch(0);
    CHECK(b0.affine);
    CHECK(b0.increasing);
    CHECK(b0.log_slope == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(b0.domain.a == 0.0);
    CHECK(b0.domain.b == 0.5);
    CHECK(b0.fixed_point == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(b0.parabolic);  // slope 2 at the fixed point

    CHECK(map.apply(0.25) == doctest::Approx(0.5));
    CHECK(map.apply(0.75) == doctest::Approx(0.5));
    CHECK(map.branch_index_of(0.2) == std::optional<int>(0));
    CHECK(map.branch_index_of(0.5) == std::optional<int>(0));  // shared endpoint goes left
    CHECK(map.branch_index_of(0.9) == std::optional<int>(1));
    CHECK(map.branch_index_of(-0.1) == std::nullopt);
    CHECK(map.branch_index_of(1.1) == std::nullopt);

    // params record the domain endpoints in order
    CHECK(map.params == std::vector<double>{0.0, 0.5, 0.5, 1.0});

    CHECK(map.sup_log_derivative() == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    const BranchMap mixed = make_linear_map({{0.0, 0.5}, {0.5, 0.75}});
    CHECK(mixed.sup_log_derivative() == doctest::Approx(std::log(4.0)).epsilon(1e-15));
}

TEST_CASE("linear map with a gap: escapes carry a time stamp") {
    const BranchMap map = testutil::cantor_map();
    CHECK(map.branch(0).log_slope == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-15));
    CHECK(map.branch_index_of(0.5) == std::nullopt);
    CHECK_THROWS_AS(map.apply(0.5), escape_error);
    try {
        map.apply(0.5);
    } catch (const escape_error& e) {
        CHECK(e.escape_time == 1);
    }
}

TEST_CASE("linear map factory rejects malformed domain lists") {
    CHECK_THROWS_AS(make_linear_map({{0.0, 0.5}}), validation_error);
    CHECK_THROWS_AS(make_linear_map({{0.5, 1.0}, {0.0, 0.5}}), validation_error);   // out of order
    CHECK_THROWS_AS(make_linear_map({{0.0, 0.6}, {0.5, 1.0}}), validation_error);   // overlap
    CHECK_THROWS_AS(make_linear_map({{0.0, 1.0}, {0.0, 0.5}}), validation_error);   // not expanding
    CHECK_THROWS_AS(make_linear_map({{0.0, 0.0}, {0.5, 1.0}}), validation_error);   // degenerate
    CHECK_THROWS_AS(make_linear_map({{-0.1, 0.5}, {0.5, 1.0}}), validation_error);  // outside [0,1]
}

TEST_CASE("manneville-pomeau: parabolic fixed point and derivative extremes") {
    for (double s : {1.0, 0.5}) {
        const BranchMap map = make_manneville_pomeau(s);
        CHECK(map.kind() == "manneville_pomeau");
        CHECK(map.num_branches() == 2);
        CHECK(map.params == std::vector<double>{s});

        const Branch& b1 = map.branch(0);
        CHECK(std::fabs(b1.fixed_point) < 1e-9);
        CHECK(b1.parabolic);  // T'(0) = 1
        CHECK(b1.derivative(0.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b1.forward(0.5) == doctest::Approx(1.0).epsilon(1e-12));

        const Branch& b2 = map.branch(1);
        CHECK_FALSE(b2.parabolic);
        CHECK(b2.fixed_point == doctest::Approx(1.0).epsilon(1e-12));

        CHECK(map.parabolic_branches() == std::vector<int>{0});
        CHECK(map.sup_log_derivative() == doctest::Approx(std::log(2.0 + s)).epsilon(1e-12));

        // numeric inverse of the nonlinear branch round-trips
        for (double y : {0.05, 0.3, 0.62, 0.97}) {
            const double x = b1.inverse(y);
            CHECK(b1.domain.contains(x));
            CHECK(b1.forward(x) == doctest::Approx(y).epsilon(1e-11));
        }
    }
    CHECK_THROWS_AS(make_manneville_pomeau(0.0), validation_error);
    CHECK_THROWS_AS(make_manneville_pomeau(-1.0), validation_error);
}

TEST_CASE("farey map: decreasing second branch, neutral endpoint caveat") {
    const BranchMap map = make_farey();
    CHECK(map.kind() == "farey");
    CHECK_FALSE(map.caveat().empty());

    CHECK(map.branch(0).parabolic);
    CHECK(map.branch(0).fixed_point == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(map.parabolic_branches() == std::vector<int>{0});

    const Branch& b2 = map.branch(1);
    CHECK_FALSE(b2.increasing);
    CHECK(b2.derivative(0.75) < 0.0);
    // fixed point solves (1-x)/x = x, the reciprocal golden ratio
    CHECK(b2.fixed_point == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-9));
    CHECK_FALSE(b2.parabolic);  // |T'| = 1/x^2 = 2.618... there

    CHECK(map.apply(0.25) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(map.apply(2.0 / 3.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(map.sup_log_derivative() == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("numeric branch recovers the inverse of a hand-written formula") {
    // T(x) = 4x^2 on [0, 1/2]; inverse sqrt(y)/2
    Branch b = make_numeric_branch(
        {0.0, 0.5}, [](double x) { return 4.0 * x * x; }, [](double x) { return 8.0 * x; }, true);
    for (double y : {0.01, 0.2, 0.5, 0.81, 1.0}) {
        CHECK(b.inverse(y) == doctest::Approx(std::sqrt(y) / 2.0).epsilon(1e-10));
    }
    CHECK(b.parabolic);  // fixed point 0 with T'(0) = 0
    CHECK(std::fabs(b.fixed_point) < 1e-9);

    // decreasing numeric branch
    Branch d = make_numeric_branch(
        {0.0, 0.5}, [](double x) { return 1.0 - 2.0 * x; }, [](double) { return -2.0; }, false);
    CHECK(d.inverse(0.3) == doctest::Approx(0.35).epsilon(1e-10));
}

TEST_CASE("convex hull: interval and planar membership") {
    const ConvexHull none;
    CHECK(none.empty());
    CHECK_FALSE(none.contains({0.5}, 1e-9));
    CHECK(std::isinf(none.boundary_distance({0.5})));

    const ConvexHull h1 = hull_of_points(1, {{0.3}, {0.7}, {0.5}});
    CHECK_FALSE(h1.empty());
    CHECK(h1.contains({0.5}, 0.0));
    CHECK(h1.contains({0.701}, 1e-2));
    CHECK_FALSE(h1.contains({0.71}, 1e-3));
    CHECK(h1.boundary_distance({0.5}) == doctest::Approx(0.2));
    CHECK_THROWS_AS(h1.contains({0.5, 0.5}, 0.0), validation_error);

    const ConvexHull point = hull_of_points(1, {{0.4}, {0.4}});
    CHECK(point.vertices.size() == 1);
    CHECK(point.contains({0.4}, 0.0));

    const ConvexHull sq =
        hull_of_points(2, {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}});
    CHECK(sq.vertices.size() == 4);  // the interior point is not a vertex
    CHECK(sq.contains({0.5, 0.5}, 1e-12));
    CHECK_FALSE(sq.contains({1.1, 0.5}, 1e-3));
    CHECK(sq.boundary_distance({0.5, 0.5}) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("parabolic limit hull: exact for digit frequencies, divergent for log|T'|") {
    const AlmostAdditivePotential digit = testutil::digit_potential(2);

    // expanding map: no parabolic branches, empty hull
    CHECK(parabolic_hull(testutil::doubling_map(), digit, 64).empty());

    // along the constant word 1^n the symbol-1 frequency is exactly 1
    const BranchMap mp = make_manneville_pomeau(1.0);
    const ConvexHull hull = parabolic_hull(mp, digit, 64);
    REQUIRE_FALSE(hull.empty());
    CHECK(hull.contains({1.0}, 1e-9));
    CHECK_FALSE(hull.contains({0.9}, 1e-3));

    const ConvexHull fhull = parabolic_hull(make_farey(), digit, 64);
    CHECK(fhull.contains({1.0}, 1e-9));

    // the geometric potential is exactly additive along a shared word (C ~ 0)
    // but its averages along 1^n drift like log(n)/n, so no C-bracket can
    // certify the parabolic limit: the hull must refuse instead of guessing
    CHECK_THROWS_AS(parabolic_hull(mp, g_potential(mp), 64), nonconvergence_error);
    try {
        parabolic_hull(mp, g_potential(mp), 64);
    } catch (const nonconvergence_error& e) {
        CHECK(e.upper > e.lower);
        CHECK(e.upper - e.lower > 1e-2);
    }

    CHECK_THROWS_AS(parabolic_hull(mp, digit, 1), validation_error);
}
