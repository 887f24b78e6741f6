#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "rigidity/toral_periodic.hpp"

using namespace rigidity;

namespace {

MatI cat_matrix() {
    MatI A(2, 2);
    A << 2, 1, 1, 1;
    return A;
}

MatI t3_matrix() {
    MatI A(3, 3);
    A << 2, 1, 0, 1, 2, 1, 0, 1, 1;
    return A;
}

TrigField cross_field() {
    Eigen::VectorXi k1(2), k2(2);
    k1 << 0, 1;
    k2 << 1, 0;
    Vec a1(2), a2(2), zero(2);
    a1 << 1, 0;
    a2 << 0, 1;
    zero << 0, 0;
    return TrigField(2, {{k1, a1, zero}, {k2, a2, zero}});
}

ToralMap cat_map(double eps) { return ToralMap(IntAutomorphism(cat_matrix()), eps, cross_field()); }

ConjugatedToralMap shear_model(double c) {
    Eigen::VectorXi k(2);
    k << 0, 1;
    Vec a(2), zero(2);
    a << c, 0;
    zero << 0, 0;
    return ConjugatedToralMap(IntAutomorphism(cat_matrix()), TrigField(2, {{k, a, zero}}));
}

long long period_count_oracle(const MatI& a, int n) {
    detail::MatLL M = detail::int_pow(a, n);
    for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, i) -= 1;
    return std::llabs(detail::int_det(M));
}

double torus_gap(const Vec& a, const Vec& b) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) d = std::max(d, circle_dist(a[i], b[i]));
    return d;
}

} // namespace

TEST_CASE("linear periodic points match the determinant count", "[toral_periodic]") {
    const IntAutomorphism A(cat_matrix());
    const long long expected[] = {1, 5, 16, 45, 121, 320, 841, 2205};
    const Mat Ad = A.matrix_real();
    for (int n = 1; n <= 8; ++n) {
        const auto pts = linear_periodic_points(A, n);
        CHECK(static_cast<long long>(pts.size()) == period_count_oracle(cat_matrix(), n));
        CHECK(static_cast<long long>(pts.size()) == expected[n - 1]);

        Mat An = Mat::Identity(2, 2);
        for (int t = 0; t < n; ++t) An = Ad * An;
        double worst = 0.0;
        for (const auto& x : pts) worst = std::max(worst, torus_gap(wrap_torus(An * x), x));
        // the residual floor scales with |A^n|, which reaches ~47 at n = 8
        CHECK(worst < (n <= 6 ? 1e-12 : 5e-11));
    }
    CHECK(linear_periodic_points(A, 1)[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear periodic points in dimension three", "[toral_periodic]") {
    const IntAutomorphism A(t3_matrix());
    const Mat Ad = A.matrix_real();
    for (int n = 1; n <= 4; ++n) {
        const auto pts = linear_periodic_points(A, n);
        CHECK(static_cast<long long>(pts.size()) == period_count_oracle(t3_matrix(), n));

        Mat An = Mat::Identity(3, 3);
        for (int t = 0; t < n; ++t) An = Ad * An;
        double worst = 0.0;
        for (const auto& x : pts) worst = std::max(worst, torus_gap(wrap_torus(An * x), x));
        CHECK(worst < 5e-12);
    }
}

TEST_CASE("periodic point budget is enforced", "[toral_periodic]") {
    const IntAutomorphism A(cat_matrix());
    CHECK_THROWS_AS(linear_periodic_points(A, 8, 100), BudgetExceededError);
    CHECK_THROWS_AS(linear_periodic_points(A, 11), BudgetExceededError);
    CHECK_THROWS_AS(linear_periodic_points(A, 0), std::invalid_argument);
}

TEST_CASE("newton continuation is exact on the linear model", "[toral_periodic]") {
    const auto f = cat_map(0.0);
    const auto seeds = linear_periodic_points(f.linear(), 3);
    const Mat A3 = f.linear().matrix_real() * f.linear().matrix_real() * f.linear().matrix_real();
    const double chi = std::log((3.0 + std::sqrt(5.0)) / 2.0);

    for (const auto& seed : seeds) {
        const auto orb = newton_continue(f, 3, seed);
        CHECK(torus_gap(orb.point, seed) < 1e-12);
        CHECK((orb.monodromy - A3).cwiseAbs().maxCoeff() < 1e-10);
        REQUIRE(orb.exponents.size() == 2);
        CHECK(orb.exponents[0] == Catch::Approx(-chi).margin(1e-12));
        CHECK(orb.exponents[1] == Catch::Approx(chi).margin(1e-12));
        CHECK(std::abs(orb.jac_log) < 1e-12);
        const Vec res = (detail::int_pow(cat_matrix(), 3).cast<double>() - Mat::Identity(2, 2)) * seed -
                        orb.translation.cast<double>();
        CHECK(res.cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("three dimensional linear exponents split by side", "[toral_periodic]") {
    ToralMap f(IntAutomorphism(t3_matrix()), 0.0, TrigField());
    const auto orbits = periodic_orbits(f, 2);
    CHECK(static_cast<long long>(orbits.size()) == period_count_oracle(t3_matrix(), 2));

    const auto& A = f.linear();
    for (const auto& o : orbits) {
        REQUIRE(o.exponents.size() == 3);
        for (int i = 0; i < 3; ++i)
            CHECK(o.exponents[static_cast<std::size_t>(i)] ==
                  Catch::Approx(std::log(std::abs(A.eigenvalues()[i]))).margin(1e-10));
        CHECK(std::abs(o.jac_log) < 1e-12);
    }

    const auto s1 = per_index_spread(A, orbits, 1, Side::stable);
    const auto u1 = per_index_spread(A, orbits, 1, Side::unstable);
    const auto u2 = per_index_spread(A, orbits, 2, Side::unstable);
    CHECK(s1.spread < 1e-12);
    CHECK(u1.spread < 1e-12);
    CHECK(s1.gap_to_linear < 1e-10);
    CHECK(u1.gap_to_linear < 1e-10);
    CHECK(u2.gap_to_linear < 1e-10);
    CHECK(u1.mean < u2.mean);
    CHECK(conservativity_indicator(orbits) < 1e-12);
}

TEST_CASE("smooth conjugate keeps constant periodic data", "[toral_periodic]") {
    const auto g = shear_model(0.05);
    const auto& A = g.linear();
    const double chi = std::log((3.0 + std::sqrt(5.0)) / 2.0);

    for (int n = 1; n <= 4; ++n) {
        const auto orbits = periodic_orbits(g, n);
        CHECK(static_cast<long long>(orbits.size()) == period_count_oracle(cat_matrix(), n));
        for (const auto& o : orbits) {
            CHECK(o.exponents[0] == Catch::Approx(-chi).margin(1e-8));
            CHECK(o.exponents[1] == Catch::Approx(chi).margin(1e-8));
        }
        const auto s1 = per_index_spread(A, orbits, 1, Side::stable);
        const auto u1 = per_index_spread(A, orbits, 1, Side::unstable);
        CHECK(s1.spread < 1e-8);
        CHECK(u1.spread < 1e-8);
        CHECK(s1.gap_to_linear < 1e-8);
        CHECK(u1.gap_to_linear < 1e-8);
        CHECK(conservativity_indicator(orbits) < 1e-8);
    }
}

TEST_CASE("generic perturbation breaks constant periodic data", "[toral_periodic]") {
    const auto f = cat_map(0.05);
    const auto& A = f.linear();
    const auto orbits = periodic_orbits(f, 4);
    CHECK(static_cast<long long>(orbits.size()) == period_count_oracle(cat_matrix(), 4));

    for (std::size_t i = 0; i < orbits.size(); ++i) {
        const auto& o = orbits[i];
        double sum = 0.0;
        for (double e : o.exponents) sum += e;
        CHECK(std::abs(sum - o.jac_log) < 1e-9);
        for (std::size_t j = i + 1; j < orbits.size(); ++j)
            CHECK(torus_gap(o.point, orbits[j].point) > 1e-6);
    }

    CHECK(per_index_spread(A, orbits, 1, Side::unstable).spread > 1e-3);
    CHECK(per_index_spread(A, orbits, 1, Side::stable).spread > 1e-3);
    CHECK(conservativity_indicator(orbits) > 1e-3);
}

TEST_CASE("exponents move continuously with the perturbation size", "[toral_periodic]") {
    // one-harmonic vertical field; the two-harmonic cross field already moves
    // the fixed-point multipliers faster than 10 * eps per step
    Eigen::VectorXi k(2);
    k << 0, 1;
    Vec a(2), zero(2);
    a << 1, 0;
    zero << 0, 0;
    const TrigField p(2, {{k, a, zero}});
    const auto at = [&](double eps) {
        return periodic_orbits(ToralMap(IntAutomorphism(cat_matrix()), eps, p), 2);
    };
    const auto runs = {at(0.0), at(0.01), at(0.02)};
    for (auto it = runs.begin(); std::next(it) != runs.end(); ++it) {
        const auto& lo = *it;
        const auto& hi = *std::next(it);
        REQUIRE(lo.size() == hi.size());
        for (std::size_t i = 0; i < lo.size(); ++i) {
            CHECK(torus_gap(lo[i].point, hi[i].point) < 0.1);
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(std::abs(lo[i].exponents[c] - hi[i].exponents[c]) < 10.0 * 0.01);
        }
    }
}

TEST_CASE("per index spread rejects bad input", "[toral_periodic]") {
    const auto f = cat_map(0.0);
    const auto orbits = periodic_orbits(f, 2);
    const auto& A = f.linear();
    CHECK_THROWS_AS(per_index_spread(A, orbits, 0, Side::stable), std::invalid_argument);
    CHECK_THROWS_AS(per_index_spread(A, orbits, 2, Side::unstable), std::invalid_argument);
    CHECK_THROWS_AS(per_index_spread(A, {}, 1, Side::stable), std::invalid_argument);

    auto broken = orbits;
    broken[2].exponents = {0.1, 0.9};
    CHECK_THROWS_AS(per_index_spread(A, broken, 1, Side::unstable), SignatureMismatchError);
    CHECK_THROWS_AS(newton_continue(f, 0, orbits[0].point), std::invalid_argument);
}
