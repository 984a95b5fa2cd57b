#pragma once

#include "svph/fourier.hpp"
#include "svph/map.hpp"
#include "svph/observable.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>

namespace svph {

/// Truncated Fourier-Galerkin matrix of the twisted transfer operator
/// L_nu u(x) = sum_{F y = x} e^{i nu tau(y)} u(y) / det DF(y).
///
/// entries(m, k) = int e^{-2 pi i m.F(y)} e^{i nu tau(y)} e^{2 pi i k.y} dy,
/// rows and columns indexed by ModeBox(K).
struct OperatorMatrix {
    int K = 0;
    int Q = 0;
    double nu = 0.0;
    Eigen::MatrixXcd entries;
    std::uint64_t map_hash = 0;
    std::uint64_t obs_hash = 0;
    /// max |entry(Q) - entry(2Q)| when the aliasing self-check ran, NaN otherwise.
    double alias_delta = std::numeric_limits<double>::quiet_NaN();

    [[nodiscard]] ModeBox box() const noexcept { return ModeBox(K); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return entries.rows(); }
};

struct AssembleOptions {
    bool self_check = false;
    double alias_tol = 1e-6;
};

/// Fourier table used for the twist: tau minus its offset when the observable
/// carries a single global offset. Per-basin offsets are not band-limited and
/// are left out; they shift each branch lambda_k(nu) by e^{-i nu c_k}.
FourierSeries twist_series(const Observable& obs);

/// Requires Q a power of two with Q >= 2(2K+1). Throws AliasingSuspected when
/// self_check is on and doubling Q moves an entry by more than alias_tol.
OperatorMatrix assemble(const MapSpec& spec, const Observable& obs, double nu, int K, int Q,
                        const AssembleOptions& opts = {});

CoeffVector apply(const OperatorMatrix& M, const CoeffVector& u);

/// Matrix-free oracle: sum over preimages y of p of u(y) e^{i nu tau(y)} / det DF(y).
complex pointwise_apply(const MapSpec& spec, const Observable& obs, double nu, const CoeffVector& u,
                        const ModeBox& box, TorusPoint p);

} // namespace svph
