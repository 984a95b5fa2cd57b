#include "svph/errors.hpp"
#include "svph/spectrum.hpp"
#include "svph/transfer.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace svph;

namespace {

MapSpec doubling_skew() { return make_map(MapKind::skew_linear, 2, {}, FourierSeries::cosine(0.1, {1, 0})); }
Observable cos_x() { return make_observable(FourierSeries::cosine(1.0, {1, 0})); }

CoeffVector random_smooth(const ModeBox& box, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    CoeffVector v = CoeffVector::Zero(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) {
        Mode m = box.mode(i);
        double decay = std::exp(-0.5 * (std::abs(m.k1) + std::abs(m.k2)));
        v[static_cast<Eigen::Index>(i)] = complex{n(g), n(g)} * decay;
    }
    return v;
}

} // namespace

TEST_SUITE("transfer_spectral") {

TEST_CASE("product map: L e_(2m1, m2) = e_(m1, m2), odd x modes vanish") {
    MapSpec m = make_map(MapKind::skew_linear, 2, {}, {});
    OperatorMatrix M = assemble(m, cos_x(), 0.0, 6, 32);
    ModeBox box(6);
    double worst = 0.0;
    for (std::size_t c = 0; c < box.size(); ++c) {
        Mode k = box.mode(c);
        for (std::size_t r = 0; r < box.size(); ++r) {
            Mode j = box.mode(r);
            double expect = (k.k1 == 2 * j.k1 && k.k2 == j.k2) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(M.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) - expect));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("Galerkin action matches the preimage-sum oracle") {
    MapSpec m = doubling_skew();
    const int K = 12;
    ModeBox box(K);
    // input band 2 so that the image stays inside the box
    CoeffVector u = CoeffVector::Zero(static_cast<Eigen::Index>(box.size()));
    CoeffVector r = random_smooth(ModeBox(2), 3);
    for (std::size_t i = 0; i < ModeBox(2).size(); ++i) u[static_cast<Eigen::Index>(box.index(ModeBox(2).mode(i)))] = r[static_cast<Eigen::Index>(i)];
    std::mt19937_64 g(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (double nu : {0.0, 0.7}) {
        OperatorMatrix M = assemble(m, cos_x(), nu, K, 64);
        CoeffVector Lu = svph::apply(M, u);
        double worst = 0.0, scale = 0.0;
        for (int i = 0; i < 30; ++i) {
            TorusPoint p{U(g), U(g)};
            complex a = synthesize(Lu, box, p);
            complex b = pointwise_apply(m, cos_x(), nu, u, box, p);
            worst = std::max(worst, std::abs(a - b));
            scale = std::max(scale, std::abs(b));
        }
        // e^{i nu tau} and e^{-2 pi i k2 omega} are not band-limited; their tails are below 1e-12 at K = 12
        CHECK(worst < 1e-10 * scale);
    }
}

TEST_CASE("mass conservation: the (0,0) row is e_0") {
    for (const MapSpec& m : {doubling_skew(), make_map(MapKind::skew_general, 3, FourierSeries::sine(0.05, {1, 1}),
                                                       FourierSeries::cosine(0.1, {0, 1}))}) {
        OperatorMatrix M = assemble(m, cos_x(), 0.0, 6, 32);
        const auto z = static_cast<Eigen::Index>(M.box().zero_index());
        for (Eigen::Index k = 0; k < M.dim(); ++k) CHECK(std::abs(M.entries(z, k) - (k == z ? 1.0 : 0.0)) < 1e-12);
    }
}

TEST_CASE("quadrature requirements and the aliasing self-check") {
    CHECK_THROWS_AS(assemble(doubling_skew(), cos_x(), 0.0, 8, 24), Error);  // not a power of two
    CHECK_THROWS_AS(assemble(doubling_skew(), cos_x(), 0.0, 8, 32), Error);  // Q < 2 (2K + 1)
    AssembleOptions o;
    o.self_check = true;
    OperatorMatrix M = assemble(doubling_skew(), cos_x(), 0.0, 6, 32, o);
    CHECK(M.alias_delta < 1e-6);
}

TEST_CASE("spectral radius at nu = 0 is one and eigenvalue 1 is simple for the mixing map") {
    OperatorMatrix M = assemble(doubling_skew(), cos_x(), 0.0, 8, 64);
    SpectralData s = spectrum(M, 6);
    CHECK(std::abs(s.eigenvalues.front() - 1.0) < 1e-10);
    for (auto lam : s.eigenvalues) CHECK(std::abs(lam) <= 1.0 + 1e-6);
    CHECK(s.peripheral_count == 1);
    CHECK(s.gap < 1.0);
    for (std::size_t i = 1; i < s.eigenvalues.size(); ++i) CHECK(std::abs(s.eigenvalues[i - 1]) >= std::abs(s.eigenvalues[i]) - 1e-12);
    // left/right normalization
    for (Eigen::Index i = 0; i < s.right.cols(); ++i)
        CHECK(std::abs(s.left.col(i).dot(s.right.col(i)) - 1.0) < 1e-8);
}

TEST_CASE("Krylov-Schur agrees with the dense solver") {
    OperatorMatrix M = assemble(doubling_skew(), cos_x(), 0.3, 8, 64);
    SpectrumOptions d, k;
    d.method = EigenMethod::dense;
    k.method = EigenMethod::krylov;
    SpectralData sd = spectrum(M, 5, d), sk = spectrum(M, 5, k);
    for (std::size_t i = 0; i < 5; ++i) {
        double best = INFINITY;
        for (auto mu : sd.eigenvalues) best = std::min(best, std::abs(sk.eigenvalues[i] - mu));
        CHECK(best < 1e-9);
    }
}

TEST_CASE("eigenpairs satisfy their residual bound") {
    OperatorMatrix M = assemble(doubling_skew(), cos_x(), 0.0, 8, 64);
    SpectralData s = spectrum(M, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        Eigen::VectorXcd r = M.entries * s.right.col(i) - s.eigenvalues[static_cast<std::size_t>(i)] * s.right.col(i);
        CHECK(r.norm() < 1e-8 * s.matrix_norm);
    }
}

TEST_CASE("twisted curve of cos 2 pi x recovers sigma^2 = 1/2") {
    TwistedCurveOptions o;
    o.spectrum.method = EigenMethod::krylov;
    TwistedCurve tc = twisted_curve(doubling_skew(), cos_x(), symmetric_grid(0.05, 4), 10, 64, 1, o);
    REQUIRE(tc.sigma2.size() == 1);
    CHECK(tc.sigma2[0] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(std::abs(tc.mu_tau[0]) < 1e-6);
    CHECK(tc.matched);
    CHECK(tc.richardson_ok);
    // lambda(nu) is real-symmetric: lambda(-nu) = conj(lambda(nu))
    const auto& b = tc.branches[0];
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(b[i] - std::conj(b[b.size() - 1 - i])) < 1e-9);
}

TEST_CASE("twisted curve grid validation") {
    CHECK_THROWS_AS(twisted_curve(doubling_skew(), cos_x(), {-0.2, -0.1, 0.0, 0.1, 0.2}, 6, 32, 1), Error);
    CHECK_THROWS_AS(twisted_curve(doubling_skew(), cos_x(), {-0.1, 0.0, 0.05, 0.1, 0.15}, 6, 32, 1), Error);
}

TEST_CASE("unit disk diagnostic away from nu = 0") {
    auto d = unit_disk_diagnostic(doubling_skew(), cos_x(), {1.0, 2.0}, 8, 64);
    for (const auto& r : d) {
        CHECK(r.max_modulus < 1.0 - 1e-3);
        CHECK(!r.flagged);
    }
    CHECK_THROWS_AS(unit_disk_diagnostic(doubling_skew(), cos_x(), {0.0}, 8, 64), Error);
}

TEST_CASE("unit disk diagnostic flags the resonance omega = tau / 10 at nu = pi") {
    // on the theta-mode k2 = 5 the twist e^{i nu tau} cancels e^{-2 pi i k2 omega} exactly
    auto d = unit_disk_diagnostic(doubling_skew(), cos_x(), {std::numbers::pi}, 8, 64);
    CHECK(d[0].max_modulus == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d[0].flagged);
}

TEST_CASE("sign observables are rejected by the spectral route") {
    Observable o = cos_x();
    o.transform = ObservableTransform::sign;
    CHECK_THROWS_AS(assemble(doubling_skew(), o, 0.5, 6, 32), Error);
}

} // TEST_SUITE
