#include "svph/errors.hpp"
#include "svph/hyperbolicity.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace svph;

namespace {

MapSpec skew(int ell, FourierSeries omega) { return make_map(MapKind::skew_linear, ell, {}, std::move(omega)); }

} // namespace

TEST_SUITE("hyperbolicity") {

TEST_CASE("zeta_r = 6 (r + 1)!") {
    CHECK(zeta(4) == 720.0);
    CHECK(zeta(0) == 6.0);
    CHECK(zeta(1) == 12.0);
    CHECK_THROWS_AS(zeta(-1), Error);
}

TEST_CASE("A5 margin for ell = 3, omega = 0.05 sin 2 pi x") {
    A15Report r = check_a1_a5(skew(3, FourierSeries::sine(0.05, {1, 0})), 64);
    CHECK(r.a1_ok);
    CHECK(r.sup_dx_omega == doctest::Approx(0.1 * std::numbers::pi).epsilon(1e-12));
    CHECK(r.a5_margin == doctest::Approx(3.0 - 2.0 * (1.0 + 0.1 * std::numbers::pi)).epsilon(1e-12));
    CHECK(r.a5_ok());
}

TEST_CASE("A5 boundary case ell = 2, omega = 0 fails the strict inequality") {
    A15Report r = check_a1_a5(skew(2, {}), 32);
    CHECK(r.a1_ok);
    CHECK(r.a5_margin == 0.0);
    CHECK(!r.a5_ok());
}

TEST_CASE("A5 margin for ell = 4 against a lattice oracle") {
    MapSpec m = skew(4, FourierSeries::cosine(0.1, {1, 0}));
    const int grid = 48;
    double sup = 0.0;
    for (int i = 0; i < grid; ++i)
        sup = std::max(sup, std::abs(0.2 * std::numbers::pi * std::sin(2.0 * std::numbers::pi * i / grid)));
    A15Report r = check_a1_a5(m, grid);
    CHECK(r.a5_margin == doctest::Approx(4.0 - 2.0 * (1.0 + sup)).epsilon(1e-12));
    CHECK(r.a5_ok());
    CHECK_THROWS_AS(check_a1_a5(m, 8), Error);
}

TEST_CASE("product doubling map: pinching margin log 2") {
    ConeReport r = check_cones(skew(2, {}), ConeParams{}, 32, 8);
    // central direction is exactly invariant
    CHECK(r.lambda_c_plus == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : r.lambda_c_plus_n) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    // fitted rates carry an O(4^-n) bias from the boundary of C_c
    CHECK(r.lambda == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(r.lambda_c_minus == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.zeta_r == 720.0);
    CHECK(r.pinching_margin == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    CHECK(r.pinching_margin == doctest::Approx(std::log(r.lambda) - 720.0 * std::log(r.lambda_c_plus)));
    CHECK(r.a4_ok());
    CHECK(r.iota_star < 1.0);
}

TEST_CASE("cone contraction of the doubling skew against slope arithmetic") {
    // DF(1, s) = (2, omega' + s): worst slope ratio (|omega'|_inf + chi) / (2 chi)
    const double chi = 0.8;
    ConeReport r = check_cones(skew(2, FourierSeries::cosine(0.1, {1, 0})), ConeParams{chi, 1.0}, 64, 8);
    const double oracle = (0.2 * std::numbers::pi + chi) / (2.0 * chi);
    CHECK(r.iota_u <= oracle + 1e-12);
    CHECK(r.iota_u == doctest::Approx(oracle).epsilon(1e-3));
    CHECK(r.iota_star < 1.0);
    CHECK(r.a2_ok());
}

TEST_CASE("cone check raises on a non-invariant cone") {
    // no expansion along x: the boundary slope grows by omega'
    CHECK_THROWS_AS(check_cones(skew(1, FourierSeries::cosine(0.1, {1, 0})), ConeParams{}, 16, 4), Error);
    try {
        check_cones(skew(1, FourierSeries::cosine(0.1, {1, 0})), ConeParams{}, 16, 4);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConeNotInvariant);
    }
    // too narrow a cone for the twist
    CHECK_THROWS_AS(check_cones(skew(2, FourierSeries::cosine(0.1, {1, 0})), ConeParams{0.2, 1.0}, 32, 4), Error);
    CHECK_THROWS_AS(check_cones(skew(2, {}), ConeParams{1.5, 1.0}, 16, 4), Error);
    CHECK_THROWS_AS(check_cones(skew(2, {}), ConeParams{}, 16, 31), Error);
}

TEST_CASE("n-step growth outside C_c for the product map") {
    // DF^n = diag(3^n, 1); the least expanded unit vector outside C_c sits on its boundary (1, 1) / sqrt 2
    ConeReport r = check_cones(skew(3, {}), ConeParams{}, 16, 6);
    REQUIRE(r.lambda_minus_n.size() == 6);
    for (std::size_t n = 0; n < 6; ++n) {
        double p = std::pow(3.0, static_cast<double>(n + 1));
        CHECK(r.lambda_minus_n[n] == doctest::Approx(std::sqrt((p * p + 1.0) / 2.0)).epsilon(1e-10));
        CHECK(r.lambda_plus_n[n] == doctest::Approx(p).epsilon(1e-10));
        CHECK(r.lambda_c_plus_n[n] == doctest::Approx(1.0).epsilon(1e-12));
        if (n > 0) CHECK(r.lambda_minus_n[n] > r.lambda_minus_n[n - 1]);
    }
    CHECK(r.lambda == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("image cone of the product map is diagonal") {
    MapSpec m = skew(2, {});
    AngleInterval a = image_cone_angles(m, {0.3, 0.6}, 3, 0.2);
    CHECK(a.lo == doctest::Approx(-std::atan(0.025)).epsilon(1e-12));
    CHECK(a.hi == doctest::Approx(std::atan(0.025)).epsilon(1e-12));
    CHECK(a.lo == doctest::Approx(-a.hi));
}

TEST_CASE("image cone: n = 1 equals one linear push and composition is consistent") {
    MapSpec m = skew(2, FourierSeries::cosine(0.1, {1, 0}) + FourierSeries::sine(0.05, {1, 1}));
    TorusPoint z{0.17, 0.42};
    AngleInterval one = image_cone_angles(m, z, 1, 0.8);
    AngleInterval direct = push_cone(jacobian(m, z), 0.8);
    CHECK(one.lo == doctest::Approx(direct.lo).epsilon(1e-10));
    CHECK(one.hi == doctest::Approx(direct.hi).epsilon(1e-10));
    AngleInterval two = image_cone_angles(m, z, 2, 0.8);
    AngleInterval composed = push_interval(jacobian(m, eval_map(m, z)), one);
    CHECK(two.lo == doctest::Approx(composed.lo).epsilon(1e-10));
    CHECK(two.hi == doctest::Approx(composed.hi).epsilon(1e-10));
    CHECK(two.width() < std::numbers::pi / 2);
}

TEST_CASE("line angle is taken mod pi") {
    CHECK(line_angle(1.0, 0.0) == 0.0);
    CHECK(line_angle(-1.0, 0.0) == doctest::Approx(0.0));
    CHECK(line_angle(0.0, 1.0) == doctest::Approx(std::numbers::pi / 2));
    CHECK(line_angle(-1.0, -1.0) == doctest::Approx(std::numbers::pi / 4));
}

TEST_CASE("product map: transversality sums equal one") {
    TransversalityReport r = a6_rate(skew(2, {}), {1, 2, 3, 4, 5, 6, 7, 8}, 8);
    for (const auto& row : r.rows) {
        CHECK(std::abs(row.N_tilde - 1.0) < 1e-10);
        CHECK(row.N_F >= 0.0);
    }
    CHECK(!r.a6_ok);
}

TEST_CASE("twisted doubling skew: rate below one and submultiplicative") {
    MapSpec m = skew(2, FourierSeries::cosine(0.1, {1, 0}));
    TransversalityReport r = a6_rate(m, {1, 2, 3, 4, 5, 6, 7, 8}, 32);
    CHECK(r.a6_ok);
    CHECK(r.rows.back().rate < 1.0);
    std::vector<double> N;
    for (const auto& row : r.rows) {
        CHECK(row.N_tilde >= 0.0);
        N.push_back(row.N_tilde);
    }
    // N(a + b) <= N(a) N(b) up to sampling noise of the sup estimate
    for (std::size_t a = 1; a <= 4; ++a)
        for (std::size_t b = a; a + b <= 8; ++b) CHECK(N[a + b - 1] <= N[a - 1] * N[b - 1] * 1.05 + 1e-12);
}

TEST_CASE("transversality budget") {
    TransversalityOptions o;
    o.budget = 1000;
    CHECK_THROWS_AS(transversality_sums(skew(2, {}), 10, 4, o), Error);
}

} // TEST_SUITE
