#include "svph/errors.hpp"
#include "svph/fourier.hpp"
#include "svph/io.hpp"
#include "svph/map.hpp"
#include "svph/observable.hpp"
#include "svph/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace svph;

namespace {

MapSpec doubling_skew() { return make_map(MapKind::skew_linear, 2, {}, FourierSeries::cosine(0.1, {1, 0})); }

MapSpec general_map() {
    return make_map(MapKind::skew_general, 3, FourierSeries::sine(0.05, {1, 1}),
                    FourierSeries::cosine(0.1, {0, 1}) + FourierSeries::sine(0.1, {1, 0}));
}

TorusPoint random_point(std::mt19937_64& g) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return {u(g), u(g)};
}

} // namespace

TEST_SUITE("torus_maps") {

TEST_CASE("fourier series evaluation matches closed forms") {
    FourierSeries c = FourierSeries::cosine(0.7, {2, -1});
    FourierSeries s = FourierSeries::sine(0.3, {0, 3});
    std::mt19937_64 g(3);
    for (int i = 0; i < 20; ++i) {
        TorusPoint p = random_point(g);
        double phase = 2.0 * std::numbers::pi * (2 * p.x - p.theta);
        CHECK(c.value(p) == doctest::Approx(0.7 * std::cos(phase)).epsilon(1e-13));
        CHECK(s.value(p) == doctest::Approx(0.3 * std::sin(2.0 * std::numbers::pi * 3 * p.theta)).epsilon(1e-13));
        CHECK(c.dx(p) == doctest::Approx(-0.7 * 2.0 * 2.0 * std::numbers::pi * std::sin(phase)).epsilon(1e-12));
    }
    CHECK(c.is_hermitian());
    CHECK(c.band() == 2);
    CHECK(c.depends_on_x());
    CHECK(!s.depends_on_x());
}

TEST_CASE("series product is pointwise") {
    FourierSeries a = FourierSeries::cosine(1.0, {1, 0}) + FourierSeries::constant(0.5);
    FourierSeries b = FourierSeries::sine(0.4, {1, 1});
    FourierSeries ab = a.times(b);
    std::mt19937_64 g(5);
    for (int i = 0; i < 20; ++i) {
        TorusPoint p = random_point(g);
        CHECK(ab.value(p) == doctest::Approx(a.value(p) * b.value(p)).epsilon(1e-13));
    }
}

TEST_CASE("box coefficients and lattice transforms round trip") {
    ModeBox box(4);
    FourierSeries f = FourierSeries::cosine(0.3, {1, -2}) + FourierSeries::sine(0.2, {4, 4}) +
                      FourierSeries::constant(1.0);
    CoeffVector v = to_coefficients(f, box);
    Grid grid = coefficients_to_grid(v, box, 16);
    CoeffVector back = grid_to_coefficients(grid, 16, box);
    CHECK((back - v).norm() < 1e-13);
    CHECK(lebesgue_mean(v, box).real() == doctest::Approx(1.0));
    TorusPoint p{0.123, 0.456};
    CHECK(synthesize(v, box, p).real() == doctest::Approx(f.value(p)).epsilon(1e-13));
}

TEST_CASE("rectangle integral of a mode") {
    // integral of exp(2 pi i x) over [0, 1/4) x [0, 1) is (i^1 - 1) / (2 pi i)
    complex r = rectangle_integral({1, 0}, 0.0, 0.25, 0.0, 1.0);
    complex expect = (complex{0.0, 1.0} - 1.0) / complex{0.0, 2.0 * std::numbers::pi};
    CHECK(std::abs(r - expect) < 1e-15);
    CHECK(std::abs(rectangle_integral({0, 0}, 0.1, 0.3, 0.2, 0.7) - 0.1) < 1e-15);
    CHECK(std::abs(rectangle_integral({0, 2}, 0.0, 1.0, 0.0, 1.0)) < 1e-15);
}

TEST_CASE("map validation") {
    CHECK_NOTHROW(doubling_skew());
    CHECK_THROWS_AS(make_map(MapKind::skew_linear, 0, {}, {}), Error);
    // f on a skew_linear map
    CHECK_THROWS_AS(make_map(MapKind::skew_linear, 2, FourierSeries::sine(0.01, {1, 0}), {}), Error);
    // non-Hermitian table
    FourierSeries bad(std::vector<FourierTerm>{{{1, 0}, complex{1.0, 0.0}}});
    CHECK_THROWS_AS(make_map(MapKind::skew_linear, 2, {}, bad), Error);
    // det DF <= 0: d_x f = 2 - 3 pi sin(...) changes sign
    try {
        make_map(MapKind::skew_general, 2, FourierSeries::cosine(1.5, {1, 0}), {});
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValidationError);
    }
}

TEST_CASE("map_kind names") {
    for (MapKind k : {MapKind::skew_linear, MapKind::skew_general, MapKind::fast_slow})
        CHECK(map_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(map_kind_from_string("henon"), Error);
}

TEST_CASE("degree integral equals ell") {
    CHECK(degree_integral(doubling_skew()) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(degree_integral(general_map()) == doctest::Approx(3.0).epsilon(1e-12));
    MapSpec fs = make_map(MapKind::fast_slow, 3, FourierSeries::sine(0.05 / std::numbers::pi, {1, 1}),
                          FourierSeries::sine(1.0, {1, 0}) + FourierSeries::sine(0.3, {0, 1}), 0.05);
    CHECK(fs.degree == 3);
    CHECK(fs.omega_scale() == 0.05);
}

TEST_CASE("jacobian matches finite differences") {
    MapSpec m = general_map();
    std::mt19937_64 g(11);
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i) {
        TorusPoint p = random_point(g);
        Jacobian2 J = jacobian(m, p);
        auto f0 = eval_lift(m, p);
        auto fx = eval_lift(m, {p.x + h, p.theta});
        auto ft = eval_lift(m, {p.x, p.theta + h});
        CHECK((fx.first - f0.first) / h == doctest::Approx(J.a11).epsilon(1e-5));
        CHECK((ft.first - f0.first) / h == doctest::Approx(J.a12).epsilon(1e-5));
        CHECK((fx.second - f0.second) / h == doctest::Approx(J.a21).epsilon(1e-5));
        CHECK((ft.second - f0.second) / h == doctest::Approx(J.a22).epsilon(1e-5));
        CHECK(J.det == doctest::Approx(J.a11 * J.a22 - J.a12 * J.a21));
    }
}

TEST_CASE("preimages: count, image and distinctness") {
    std::mt19937_64 g(2);
    for (const MapSpec& m : {doubling_skew(), general_map()}) {
        for (int i = 0; i < 25; ++i) {
            TorusPoint p = random_point(g);
            auto pre = preimages(m, p);
            REQUIRE(pre.size() == static_cast<std::size_t>(m.degree));
            for (std::size_t a = 0; a < pre.size(); ++a) {
                CHECK(toroidal_distance(eval_map(m, pre[a]), p) < 1e-10);
                for (std::size_t b = a + 1; b < pre.size(); ++b) CHECK(toroidal_distance(pre[a], pre[b]) > 1e-8);
            }
        }
    }
}

TEST_CASE("preimages of the product doubling map are (x + j) / 2") {
    MapSpec m = make_map(MapKind::skew_linear, 2, {}, {});
    auto pre = preimages(m, {0.3, 0.7});
    REQUIRE(pre.size() == 2);
    std::vector<double> xs{pre[0].x, pre[1].x};
    std::sort(xs.begin(), xs.end());
    CHECK(xs[0] == doctest::Approx(0.15));
    CHECK(xs[1] == doctest::Approx(0.65));
    CHECK(pre[0].theta == doctest::Approx(0.7));
}

TEST_CASE("orbit and jacobian_power follow the chain rule") {
    MapSpec m = general_map();
    TorusPoint p{0.21, 0.83};
    auto orb = orbit(m, p, 5);
    REQUIRE(orb.size() == 6);
    Jacobian2 J5 = jacobian_power(m, p, 5);
    Jacobian2 acc;
    for (int k = 0; k < 5; ++k) {
        Jacobian2 s = jacobian(m, orb[static_cast<std::size_t>(k)]);
        Jacobian2 n;
        n.a11 = s.a11 * acc.a11 + s.a12 * acc.a21;
        n.a12 = s.a11 * acc.a12 + s.a12 * acc.a22;
        n.a21 = s.a21 * acc.a11 + s.a22 * acc.a21;
        n.a22 = s.a21 * acc.a12 + s.a22 * acc.a22;
        acc = n;
    }
    CHECK(J5.a11 == doctest::Approx(acc.a11).epsilon(1e-12));
    CHECK(J5.a22 == doctest::Approx(acc.a22).epsilon(1e-12));
}

TEST_CASE("map and observable JSON round trip") {
    MapSpec m = general_map();
    MapSpec back = map_from_json(map_to_json(m));
    CHECK(digest(back) == digest(m));
    CHECK(back.kind == MapKind::skew_general);
    Observable o = make_observable(FourierSeries::cosine(1.0, {1, 0}));
    o.transform = ObservableTransform::sign;
    Observable ob = observable_from_json(observable_to_json(o));
    CHECK(ob.transform == ObservableTransform::sign);
    CHECK(digest(ob) == digest(o));
}

TEST_CASE("map JSON errors are aggregated") {
    Json j = {{"kind", "spiral"}, {"omega_coeffs", {{1, 0, 0.5, 0.0}}}};
    try {
        map_from_json(j);
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("kind") != std::string::npos);
        CHECK(msg.find("ell") != std::string::npos);
        CHECK(msg.find("Hermitian") != std::string::npos);
    }
}

TEST_CASE("birkhoff sums of a product map observable") {
    // tau depends on theta only and theta is fixed, so tau_n = n tau
    MapSpec m = make_map(MapKind::skew_linear, 2, {}, {});
    Observable o = make_observable(FourierSeries::cosine(1.0, {0, 1}));
    TorusPoint p{0.3, 0.1};
    CHECK(birkhoff_sum(m, o, p, 10) == doctest::Approx(10.0 * std::cos(0.2 * std::numbers::pi)));
}

TEST_CASE("fixed-point conversion") {
    for (double v : {0.0, 0.25, 0.5, 0.999, -0.25, 1.75, -3.5}) {
        double back = from_fixed(to_fixed(v));
        CHECK(std::abs(wrap_signed(back - v)) < 1e-15);
    }
}

TEST_CASE("phase table accuracy") {
    const PhaseTable& t = PhaseTable::instance();
    std::mt19937_64 g(9);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        std::uint64_t ph = g();
        double c, s;
        t.cos_sin(ph, c, s);
        double a = 2.0 * std::numbers::pi * from_fixed(ph);
        worst = std::max({worst, std::abs(c - std::cos(a)), std::abs(s - std::sin(a))});
    }
    CHECK(worst < 1e-14);
}

TEST_CASE("digit streams are uniform for power-of-two and other bases") {
    for (std::uint64_t ell : {2ULL, 3ULL, 4ULL, 5ULL}) {
        Rng rng(17);
        DigitStream d(ell, rng);
        std::vector<double> counts(ell, 0.0);
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            auto v = d.next();
            REQUIRE(v < ell);
            counts[v] += 1.0;
        }
        for (double c : counts) CHECK(std::abs(c / n - 1.0 / static_cast<double>(ell)) < 5.0 * std::sqrt(0.25 / n));
    }
}

TEST_CASE("stepper agrees with the double-precision map over a short horizon") {
    // the fixed-point stepper feeds fresh digits at the bottom; over a few
    // steps the top bits, and hence theta, follow F exactly
    MapSpec m = doubling_skew();
    OrbitStepper st(m);
    Rng rng(4);
    DigitStream d(2, rng);
    TorusPoint p{0.3141, 0.2718};
    FixedPoint s = st.init(p, rng);
    TorusPoint q = p;
    for (int k = 0; k < 10; ++k) {
        st.step(s, d);
        q = eval_map(m, q);
    }
    CHECK(toroidal_distance(to_point(s), q) < 1e-9);
}

TEST_CASE("substreams are reproducible and distinct") {
    Rng a = substream(7, 3), b = substream(7, 3), c = substream(7, 4), e = substream(8, 3);
    auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != e());
}

TEST_CASE("initial measure validation and sampling") {
    CHECK(InitialMeasure::uniform().is_uniform());
    FourierSeries f = FourierSeries::constant(1.0) + FourierSeries::cosine(0.5, {0, 1});
    InitialMeasure m = InitialMeasure::from_density(f, 1.5);
    CHECK(!m.is_uniform());
    CHECK_THROWS_AS(InitialMeasure::from_density(f, 1.2), Error);                      // bound too small
    CHECK_THROWS_AS(InitialMeasure::from_density(f * 2.0, 3.0), Error);                // mass 2
    CHECK_THROWS_AS(InitialMeasure::from_density(FourierSeries::constant(1.0) + FourierSeries::cosine(1.5, {1, 0}), 3.0),
                    Error); // negative
    SampleStats st;
    auto pts = sample_initial(m, 20000, 3, &st);
    double mean_cos = 0.0;
    for (auto p : pts) mean_cos += std::cos(2.0 * std::numbers::pi * p.theta);
    mean_cos /= static_cast<double>(pts.size());
    // E cos 2 pi theta under 1 + 0.5 cos 2 pi theta is 0.25
    CHECK(mean_cos == doctest::Approx(0.25).epsilon(0.1));
    CHECK(st.acceptance() == doctest::Approx(1.0 / 1.5).epsilon(0.03));
}

} // TEST_SUITE
