#include "doctest.h"

#include <cmath>

#include "qlsv/lsv_map.hpp"

#include "support.hpp"

using namespace qlsv;

TEST_CASE("map parameter domain") {
    CHECK_THROWS_AS(MapParameter(1.0), DomainError);
    CHECK_THROWS_AS(MapParameter(-0.1), DomainError);
    CHECK_THROWS_AS(MapParameter(0.0), DomainError);
    CHECK_NOTHROW(MapParameter(0.0, true));
    CHECK_NOTHROW(MapParameter(0.999));
}

TEST_CASE("branch classification: 1/2 belongs to the right branch") {
    CHECK(classify_point(0.49999).branch == Branch::Left);
    CHECK(classify_point(0.5).branch == Branch::Right);
    CHECK(classify_point(1.0).branch == Branch::Right);
    CHECK_THROWS_AS(classify_point(-0.1), DomainError);
}

TEST_CASE("map_apply pinned values") {
    CHECK(map_apply(MapParameter(0.7), 0.0) == 0.0);
    // left-branch limit at 1/2 is exactly 1
    for (double g : {0.1, 0.3, 0.5, 0.9}) {
        CHECK(map_apply_left(MapParameter(g), 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(map_apply(MapParameter(0.5), 0.25) ==
          doctest::Approx(0.4267766953).epsilon(1e-9));
    // right branch
    CHECK(map_apply(MapParameter(0.5), 0.5) == 0.0);
    CHECK(map_apply(MapParameter(0.5), 0.8) == doctest::Approx(0.6));
    CHECK_THROWS_AS(map_apply(MapParameter(0.5), 1.5), DomainError);
}

TEST_CASE("map_derivative pinned values and singularity") {
    const MapParameter p(0.5);
    CHECK(map_derivative(MapParameter(0.3), 0.0, 1) == doctest::Approx(1.0));
    CHECK(map_derivative(p, 0.8, 1) == doctest::Approx(2.0));
    CHECK(map_derivative(p, 0.8, 2) == 0.0);
    CHECK(map_derivative(p, 0.25, 1) ==
          doctest::Approx(2.0606601718).epsilon(1e-9));
    CHECK_THROWS_AS(map_derivative(p, 0.0, 2), SingularityError);
    CHECK_THROWS_AS(map_derivative(p, 0.25, 3), DomainError);
}

TEST_CASE("left_inverse pinned values") {
    CHECK(left_inverse(MapParameter(0.4), 0.0) == 0.0);
    CHECK(left_inverse(MapParameter(0.4), 1.0) == 0.5);
    CHECK(left_inverse(MapParameter(0.5), 0.4267766953) ==
          doctest::Approx(0.25).epsilon(1e-9));
    // solve quality
    for (double g : {0.1, 0.45, 0.8}) {
        const MapParameter p(g);
        for (double y : {1e-8, 1e-3, 0.2, 0.7, 0.999}) {
            const double x = left_inverse(p, y);
            CHECK(std::abs(map_apply_left(p, x) - y) <= 1e-14);
        }
    }
}

TEST_CASE("inverse branch derivatives") {
    const MapParameter p(0.5);
    const auto [g1, g2] = inverse_branch_derivatives(p, 0.4267766953);
    CHECK(g1 == doctest::Approx(0.4852813742).epsilon(1e-9));
    CHECK(g2 <= 0.0);
    // g'(1) = 1/T'(1/2) = 1/(2+gamma)
    for (double g : {0.2, 0.5, 0.8}) {
        CHECK(inverse_branch_derivatives(MapParameter(g), 1.0).g1 ==
              doctest::Approx(1.0 / (2.0 + g)).epsilon(1e-12));
    }
    // doubling boundary: g' = 1/2 everywhere
    CHECK(inverse_branch_derivatives(MapParameter(0.0, true), 0.3).g1 ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(inverse_branch_derivatives(p, 0.0), SingularityError);
}

TEST_CASE("parameter velocity pinned values") {
    CHECK(parameter_velocity(MapParameter(0.6), 0.5) == doctest::Approx(0.0));
    CHECK(parameter_velocity(MapParameter(0.6), 0.0) == 0.0);
    CHECK(parameter_velocity(MapParameter(0.6), 1e-12) ==
          doctest::Approx(0.0).epsilon(1e-10));
    // closed form sqrt(2) * 0.25^1.5 * ln(0.5); cross-checked against the
    // finite-difference oracle below
    CHECK(parameter_velocity(MapParameter(0.5), 0.25) ==
          doctest::Approx(-0.1225322679335684).epsilon(1e-12));
    CHECK_THROWS_AS(parameter_velocity(MapParameter(0.5), 0.7), DomainError);
}

TEST_CASE("conjugated velocity pinned values") {
    CHECK(conjugated_velocity(MapParameter(0.3), 1.0) == doctest::Approx(0.0));
    CHECK(conjugated_velocity(MapParameter(0.3), 0.0) == 0.0);
    CHECK(conjugated_velocity(MapParameter(0.5), 0.4267766952966369) ==
          doctest::Approx(-0.1225322679335684).epsilon(1e-10));
    // X <= 0 on (0,1)
    for (int k = 1; k < 40; ++k) {
        CHECK(conjugated_velocity(MapParameter(0.35), k / 40.0) <= 0.0);
    }
}

TEST_CASE("round trip property on quasi-random pairs") {
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        auto [u, v] = testsupport::kronecker2(k);
        const MapParameter p(0.02 + 0.96 * u);
        const double x = 1e-9 + (0.5 - 1e-9) * v;  // (0, 1/2]
        const double back = left_inverse(p, map_apply(p, x));
        worst = std::max(worst, std::abs(back - x));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("derivatives agree with finite differences") {
    const double step = 1e-6;
    for (int k = 0; k < 200; ++k) {
        auto [u, v] = testsupport::kronecker2(k);
        const MapParameter p(0.05 + 0.9 * u);
        // stay away from the branch point
        const double x = 0.01 + 0.45 * v;
        const double fd =
            (map_apply(p, x + step) - map_apply(p, x - step)) / (2 * step);
        const double an = map_derivative(p, x, 1);
        CHECK(std::abs(fd - an) / an <= 1e-6);
    }
}

TEST_CASE("parameter velocity agrees with finite differences in gamma") {
    const double step = 1e-6;
    for (int k = 0; k < 200; ++k) {
        auto [u, v] = testsupport::kronecker2(k);
        const double g = 0.05 + 0.9 * u;
        const double x = 0.01 + 0.49 * v;
        const double fd = (map_apply(MapParameter(g + step), x) -
                           map_apply(MapParameter(g - step), x)) /
                          (2 * step);
        const double an = parameter_velocity(MapParameter(g), x);
        CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
    }
}

TEST_CASE("inverse derivative agrees with finite differences of the inverse") {
    const double step = 1e-6;
    for (int k = 0; k < 100; ++k) {
        auto [u, v] = testsupport::kronecker2(k);
        const MapParameter p(0.05 + 0.9 * u);
        const double y = 1e-3 + (1.0 - 2e-3 - 2 * step) * v;
        const double fd =
            (left_inverse(p, y + step) - left_inverse(p, y - step)) / (2 * step);
        const double an = inverse_branch_derivatives(p, y).g1;
        CHECK(std::abs(fd - an) / an <= 1e-6);
    }
}

TEST_CASE("monotonicity of the map and its inverse") {
    const MapParameter p(0.37);
    double prev_map = -1.0, prev_inv = -1.0;
    for (int i = 0; i <= 2000; ++i) {
        const double x = 0.5 * i / 2000.0;
        const double y = static_cast<double>(i) / 2000.0;
        const double tx = map_apply_left(p, x);
        const double gy = left_inverse(p, y);
        CHECK(tx > prev_map);
        CHECK(gy >= prev_inv);
        CHECK(gy <= y);
        prev_map = tx;
        prev_inv = gy;
    }
}
