#include "svph/ergodic.hpp"
#include "svph/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace svph;

namespace {

struct Mixing {
    MapSpec map = make_map(MapKind::skew_linear, 2, {}, FourierSeries::cosine(0.1, {1, 0}));
    OperatorMatrix M = assemble(map, make_observable(FourierSeries::cosine(1.0, {1, 0})), 0.0, 8, 64);
    SpectralData s = spectrum(M, 6);
};

const Mixing& mixing() {
    static const Mixing m;
    return m;
}

DecomposeOptions quick() {
    DecomposeOptions o;
    o.grid = 24;
    o.orbit_len = 8000;
    return o;
}

const ErgodicDecomposition& mixing_dec() {
    static const ErgodicDecomposition d = decompose(mixing().map, mixing().M, mixing().s, quick());
    return d;
}

} // namespace

TEST_SUITE("ergodic_decomp") {

TEST_CASE("mixing map has a single acip, Lebesgue") {
    const auto& d = mixing_dec();
    CHECK(d.ell == 1);
    REQUIRE(d.mass.size() == 1);
    CHECK(d.mass[0] == doctest::Approx(1.0));
    CHECK(d.rho_mass(0) == doctest::Approx(1.0).epsilon(1e-10));
    const ModeBox box = d.box();
    CoeffVector e0 = CoeffVector::Zero(static_cast<Eigen::Index>(box.size()));
    e0[static_cast<Eigen::Index>(box.zero_index())] = 1.0;
    CHECK((d.rho[0] - e0).norm() < 1e-8);
    CHECK(d.unassigned_fraction == 0.0);
    CHECK(d.biorthogonality_error < 1e-10);
    CHECK(d.invariance_residual < 1e-10);
    CHECK(d.negativity_ok);
    CHECK(d.extras_roots_of_unity);
}

TEST_CASE("acip expectation of a mean-zero mode vanishes") {
    const auto& d = mixing_dec();
    CHECK(std::abs(d.acip_expectation(0, FourierSeries::cosine(1.0, {1, 0}))) < 1e-10);
    CHECK(d.acip_expectation(0, FourierSeries::constant(2.5)) == doctest::Approx(2.5));
}

TEST_CASE("spectral projector is idempotent and fixes rho") {
    const auto& d = mixing_dec();
    const ModeBox box = d.box();
    FourierSeries f = FourierSeries::constant(0.7) + FourierSeries::cosine(0.4, {1, 1}) + FourierSeries::sine(0.2, {0, 2});
    CoeffVector v = to_coefficients(f, box);
    CoeffVector P1 = spectral_project(v, d);
    CoeffVector P2 = spectral_project(P1, d);
    CHECK((P1 - P2).norm() < 1e-12);
    CHECK((spectral_project(d.rho[0], d) - d.rho[0]).norm() < 1e-12);
    // single acip: P f = Leb(f) rho
    CHECK((P1 - 0.7 * d.rho[0]).norm() < 1e-10);
    // basin quadrature projector agrees when the basin is the whole torus
    CHECK((project(v, d) - P1).norm() < 1e-10);
}

TEST_CASE("indicator of the full basin is the constant one") {
    const auto& d = mixing_dec();
    const ModeBox box = d.box();
    CoeffVector ind = indicator_coefficients(*d.basins, 0, box);
    CHECK(std::abs(ind[static_cast<Eigen::Index>(box.zero_index())] - 1.0) < 1e-12);
    CHECK(ind.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(basin_integral(to_coefficients(FourierSeries::constant(1.0), box), box, *d.basins, 0) - 1.0) < 1e-12);
}

TEST_CASE("weights: uniform and non-uniform initial laws on a mixing map") {
    const auto& d = mixing_dec();
    CltWeights w = clt_weights(d, FourierSeries::constant(1.0));
    CHECK(w.c[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(w.max_difference < 1e-10);
    CltWeights w2 = clt_weights(d, FourierSeries::constant(1.0) + FourierSeries::cosine(0.5, {0, 1}));
    CHECK(w2.c[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(w2.basin_mass[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("histograms") {
    const ModeBox box(4);
    Histogram h = density_histogram(to_coefficients(FourierSeries::constant(1.0), box), box);
    for (double v : h) CHECK(v == doctest::Approx(1.0 / 16.0));
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0));
    CHECK(l1_distance(h, h) == 0.0);
    Histogram a{}, b{};
    a[0] = 1.0;
    b[5] = 1.0;
    CHECK(l1_distance(a, b) == 2.0);
    CHECK(l1_distance(a, b) == l1_distance(b, a));

    OrbitStepper st(mixing().map);
    Rng rng(5);
    Histogram o = orbit_histogram(st, {0.37, 0.61}, 200, 20000, rng);
    CHECK(std::accumulate(o.begin(), o.end(), 0.0) == doctest::Approx(1.0));
    CHECK(l1_distance(o, h) < 0.3);
}

TEST_CASE("multiplicity without matching orbit clusters is inconsistent") {
    SpectralData fake = mixing().s;
    fake.eigenvalues[1] = complex{1.0, 0.0};
    try {
        decompose(mixing().map, mixing().M, fake, quick());
        FAIL("expected DecompositionInconsistent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DecompositionInconsistent);
    }
}

TEST_CASE("decomposition is reproducible for a fixed seed") {
    ErgodicDecomposition a = decompose(mixing().map, mixing().M, mixing().s, quick());
    CHECK(a.basins->labels == mixing_dec().basins->labels);
    CHECK(a.candidate_distance == mixing_dec().candidate_distance);
}

} // TEST_SUITE
