#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rigidity/circle_map.hpp"

using namespace rigidity;

namespace {

TrigLift doubling() { return TrigLift(2, {}); }

TrigLift half_cos_slope_map() {
    // F'(x) = 2 + 0.5 cos(2 pi x)
    return TrigLift(2, {{1, 0.5 / two_pi, 0.0}});
}

double fd1(const auto& m, double x) {
    const double h = 1e-6;
    return (m.lift(x + h) - m.lift(x - h)) / (2 * h);
}

double fd2(const auto& m, double x) {
    const double h = 1e-5;
    return (m.lift(x + h) - 2 * m.lift(x) + m.lift(x - h)) / (h * h);
}

} // namespace

TEST_CASE("trig lift point evaluations", "[circle_map]") {
    TrigLift F(2, {{1, 0.3 / two_pi, 0.0}});
    CHECK(F.lift(0.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(F.lift_d1(0.0) == Catch::Approx(2.3).margin(1e-14));
}

TEST_CASE("lift commutes with deck translation", "[circle_map]") {
    TrigLift F(3, {{1, 0.05, 0.01}, {4, -0.003, 0.002}});
    std::mt19937_64 rng = make_rng(7);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = U(rng);
        CHECK(F.lift(x + 1.0) - (F.lift(x) + 3.0) == Catch::Approx(0.0).margin(1e-11));
    }
}

TEST_CASE("derivatives agree with finite differences", "[circle_map]") {
    TrigLift F(2, {{1, 0.04, -0.02}, {3, 0.007, 0.001}});
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.77, 0.93}) {
        CHECK(derivative(F, x, 1) == Catch::Approx(fd1(F, x)).margin(2e-8));
        CHECK(derivative(F, x, 2) == Catch::Approx(fd2(F, x)).margin(2e-4));
    }
    CHECK_THROWS_AS(derivative(F, 0.0, 3), std::invalid_argument);
}

TEST_CASE("expansivity certificate", "[circle_map]") {
    SECTION("linear map is exactly certified") {
        auto c = check_expanding(doubling(), 4096);
        CHECK(c.ok);
        CHECK(c.lambda_min == Catch::Approx(2.0).margin(1e-15));
        CHECK(c.lambda_max == Catch::Approx(2.0).margin(1e-15));
    }
    SECTION("cosine slope map certifies just below 1.5") {
        auto c = check_expanding(half_cos_slope_map(), 4096);
        CHECK(c.ok);
        CHECK(c.lambda_min >= 1.499);
        CHECK(c.lambda_min <= 1.5);
        CHECK(c.lambda_max >= 2.5);
        CHECK(c.lambda_max <= 2.501);
    }
    SECTION("slope dipping below 1 is rejected") {
        TrigLift bad(2, {{1, 1.2 / two_pi, 0.0}}); // F' = 2 + 1.2 cos
        auto c = check_expanding(bad, 4096);
        CHECK_FALSE(c.ok);
        CHECK_THROWS_AS(require_expanding(bad, 4096), NotExpandingError);
    }
}

TEST_CASE("distortion constant from certified bounds", "[circle_map]") {
    SECTION("linear maps have constant 1") {
        auto c = require_expanding(doubling());
        CHECK(distortion_constant(doubling(), c) == Catch::Approx(1.0).margin(1e-15));
    }
    SECTION("cosine slope map gives exp(2 pi) up to certification slack") {
        auto F = half_cos_slope_map();
        auto c = require_expanding(F);
        const double C = distortion_constant(F, c);
        const double exact = std::exp(two_pi);
        CHECK(C >= exact); // certified lambda is a lower bound, so C is an upper bound
        CHECK(C <= exact * 1.01);
    }
}

TEST_CASE("composed lifts and their derivatives", "[circle_map]") {
    auto F = half_cos_slope_map();
    const double x = 0.3125;
    double v = x;
    for (int i = 0; i < 5; ++i) v = F.lift(v);
    CHECK(lift_pow(F, x, 5) == Catch::Approx(v).margin(1e-9));
    // chain rule product vs finite difference of the composition
    const double h = 1e-7;
    const double fd = (lift_pow(F, x + h, 5) - lift_pow(F, x - h, 5)) / (2 * h);
    CHECK(lift_pow_d1(F, x, 5) == Catch::Approx(fd).epsilon(1e-5));
}

TEST_CASE("inverse branches", "[circle_map]") {
    SECTION("doubling preimages at dyadic points") {
        auto pre = inverse_branches(doubling(), 0.25);
        REQUIRE(pre.size() == 2);
        CHECK(pre[0] == Catch::Approx(0.125).margin(1e-12));
        CHECK(pre[1] == Catch::Approx(0.625).margin(1e-12));
    }
    SECTION("preimages of the fixed point include the fixed point") {
        auto pre = inverse_branches(doubling(), 0.0);
        REQUIRE(pre.size() == 2);
        CHECK(pre[0] == Catch::Approx(0.0).margin(1e-12));
        CHECK(pre[1] == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("branch preimages map back to the point") {
        TrigLift F(3, {{1, 0.03, 0.04}, {2, -0.01, 0.0}});
        for (double y : {0.0, 0.2, 0.55, 0.99}) {
            auto pre = inverse_branches(F, y);
            REQUIRE(pre.size() == 3);
            for (double p : pre) CHECK(circle_dist(frac(F.lift(p)), frac(y)) < 1e-11);
        }
    }
}

TEST_CASE("anchor fixed point", "[circle_map]") {
    CHECK(fixed_point_near_zero(doubling()) == Catch::Approx(0.0).margin(1e-12));
    TrigLift F(2, {{1, 0.02, 0.05}});
    const double p = fixed_point_near_zero(F);
    CHECK(circle_dist(frac(F.lift(p)), p) < 1e-12);
}

TEST_CASE("smooth-conjugate model lift", "[circle_map]") {
    TrigDiffeo H({{1, 0.1 / two_pi, 0.0}});
    ConjugatedLift g(TrigLift(2, {}), H);
    CHECK(g.degree() == 2);

    SECTION("inverse of the conjugator round-trips") {
        for (double x : {0.0, 0.21, 0.5, 0.83}) {
            CHECK(H.inverse(H.value(x)) == Catch::Approx(x).margin(1e-13));
        }
    }
    SECTION("semiconjugacy identity g(H(x)) = H(2x)") {
        std::mt19937_64 rng = make_rng(11);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int i = 0; i < 200; ++i) {
            const double x = U(rng);
            CHECK(g.lift(H.value(x)) == Catch::Approx(H.value(2 * x)).margin(1e-11));
        }
    }
    SECTION("derivatives of the conjugated lift match finite differences") {
        for (double x : {0.03, 0.31, 0.64, 0.98}) {
            CHECK(g.lift_d1(x) == Catch::Approx(fd1(g, x)).margin(2e-7));
            CHECK(g.lift_d2(x) == Catch::Approx(fd2(g, x)).margin(5e-4));
        }
    }
    SECTION("deck translation and expansivity") {
        CHECK(g.lift(1.25) - (g.lift(0.25) + 2.0) == Catch::Approx(0.0).margin(1e-12));
        auto c = require_expanding(g, 1L << 14);
        CHECK(c.lambda_min > 1.5); // analytic bound 2 * 0.9 / 1.1
    }
}

TEST_CASE("guarded bisection", "[circle_map]") {
    auto root = bisect_increasing([](double t) { return t * t * t - 0.5; }, 0.0, 1.0);
    CHECK(root == Catch::Approx(std::cbrt(0.5)).margin(1e-12));
    CHECK_THROWS_AS(bisect_increasing([](double t) { return t + 2.0; }, 0.0, 1.0),
                    RootBracketError);
}

TEST_CASE("invalid constructions are rejected", "[circle_map]") {
    CHECK_THROWS_AS(TrigLift(1, {}), std::invalid_argument);
    CHECK_THROWS_AS(TrigLift(2, {{0, 0.1, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(TrigDiffeo({{1, 0.2, 0.0}}), std::invalid_argument); // slope hits 0
}
