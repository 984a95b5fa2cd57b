#include "svph/transfer.hpp"

#include "fft.hpp"
#include "svph/errors.hpp"
#include "svph/io.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <vector>

namespace svph {

FourierSeries twist_series(const Observable& obs) {
    if (obs.centered_offsets.size() == 1) return obs.coeffs - FourierSeries::constant(obs.centered_offsets.front());
    return obs.coeffs;
}

namespace {

Eigen::MatrixXcd galerkin(const MapSpec& spec, const FourierSeries& tau, double nu, int K, int Q) {
    const ModeBox box(K);
    const auto dim = static_cast<Eigen::Index>(box.size());
    const std::size_t cells = static_cast<std::size_t>(Q) * static_cast<std::size_t>(Q);

    // lifted image phases and twist factor at every lattice point
    std::vector<double> phi1(cells), phi2(cells);
    std::vector<complex> twist(cells, complex{1.0, 0.0});
    for (int i = 0; i < Q; ++i)
        for (int j = 0; j < Q; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * static_cast<std::size_t>(Q) + static_cast<std::size_t>(j);
            TorusPoint y{static_cast<double>(i) / Q, static_cast<double>(j) / Q};
            auto [a, b] = eval_lift(spec, y);
            phi1[c] = wrap_unit(a);
            phi2[c] = wrap_unit(b);
            if (nu != 0.0 && !tau.empty()) twist[c] = std::polar(1.0, nu * tau.value(y));
        }

    Eigen::MatrixXcd M(dim, dim);
    const double scale = 1.0 / static_cast<double>(cells);
    auto wrap_index = [Q](int k) { return ((k % Q) + Q) % Q; };

#pragma omp parallel
    {
        detail::Fft2 fft(Q, detail::Fft2::Direction::forward);
        Grid g(cells);
#pragma omp for schedule(static)
        for (Eigen::Index row = 0; row < dim; ++row) {
            const Mode m = box.mode(static_cast<std::size_t>(row));
            for (std::size_t c = 0; c < cells; ++c) {
                double phase = wrap_unit(m.k1 * phi1[c] + m.k2 * phi2[c]);
                g[c] = std::polar(1.0, -two_pi * phase) * twist[c];
            }
            fft.execute(g);
            // the (-k) coefficient of g is the k-th column
            for (Eigen::Index col = 0; col < dim; ++col) {
                const Mode k = box.mode(static_cast<std::size_t>(col));
                M(row, col) = g[static_cast<std::size_t>(wrap_index(-k.k1) * Q + wrap_index(-k.k2))] * scale;
            }
        }
    }
    return M;
}

} // namespace

OperatorMatrix assemble(const MapSpec& spec, const Observable& obs, double nu, int K, int Q, const AssembleOptions& opts) {
    require(K >= 0, "assemble needs K >= 0");
    require(Q >= 2 * (2 * K + 1), "assemble needs Q >= 2(2K+1)");
    require(std::has_single_bit(static_cast<unsigned>(Q)), "assemble needs Q to be a power of two");
    if (nu != 0.0 && !obs.spectral_compatible())
        throw Error(ErrorCode::ValidationError, "the twisted operator needs an observable without pointwise transform");

    const FourierSeries tau = twist_series(obs);
    OperatorMatrix M;
    M.K = K;
    M.Q = Q;
    M.nu = nu;
    M.entries = galerkin(spec, tau, nu, K, Q);
    M.map_hash = digest(spec);
    M.obs_hash = digest(obs);

    if (opts.self_check) {
        Eigen::MatrixXcd fine = galerkin(spec, tau, nu, K, 2 * Q);
        M.alias_delta = (fine - M.entries).cwiseAbs().maxCoeff();
        if (M.alias_delta > opts.alias_tol) {
            std::ostringstream msg;
            msg << "doubling Q = " << Q << " moved an entry by " << M.alias_delta;
            throw Error(ErrorCode::AliasingSuspected, msg.str());
        }
    }
    return M;
}

CoeffVector apply(const OperatorMatrix& M, const CoeffVector& u) {
    require(u.size() == M.dim(), "coefficient vector does not match the operator dimension");
    return M.entries * u;
}

complex pointwise_apply(const MapSpec& spec, const Observable& obs, double nu, const CoeffVector& u,
                        const ModeBox& box, TorusPoint p) {
    const FourierSeries tau = twist_series(obs);
    complex acc{};
    for (TorusPoint y : preimages(spec, p)) {
        complex w = synthesize(u, box, y) / jacobian(spec, y).det;
        if (nu != 0.0) w *= std::polar(1.0, nu * tau.value(y));
        acc += w;
    }
    return acc;
}

} // namespace svph
