#pragma once

#include "svph/map.hpp"
#include "svph/observable.hpp"
#include "svph/transfer.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace svph {

enum class EigenMethod { automatic, dense, krylov };

struct SpectrumOptions {
    EigenMethod method = EigenMethod::automatic;
    /// automatic switches from the dense solver to Krylov-Schur above this dimension.
    Eigen::Index dense_limit = 5000;
    /// |lambda| > 1 - gap_tol counts as peripheral.
    double gap_tol = 5e-3;
    /// residual acceptance: |M v - lambda v| < residual_factor * |M|
    double residual_factor = 1e-8;
    bool left_vectors = true;
    int krylov_dim = 0; // 0: max(2 count + 20, 60)
    int max_restarts = 400;
};

/// Leading part of the spectrum, sorted by modulus (descending, ties by
/// argument). Right vectors have unit 2-norm; left vectors are scaled so that
/// left(:, i)^H right(:, i) = 1.
struct SpectralData {
    std::vector<complex> eigenvalues;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    int peripheral_count = 0;
    double gap = 0.0; // modulus of the first sub-peripheral eigenvalue (0 if none computed)
    std::vector<double> residuals;
    std::vector<double> left_residuals;
    double matrix_norm = 0.0; // Frobenius norm of M
    std::string method;
};

/// Throws EigenSolverDiverged if the solver fails or a residual exceeds the
/// acceptance level.
SpectralData spectrum(const Eigen::MatrixXcd& M, int count, const SpectrumOptions& opts = {});
SpectralData spectrum(const OperatorMatrix& M, int count, const SpectrumOptions& opts = {});

/// Restarted Krylov-Schur iteration for the `count` eigenvalues of largest
/// modulus of the operator y = A x (dimension n). Returns eigenvalues and
/// unit right eigenvectors; throws EigenSolverDiverged without convergence.
struct KrylovResult {
    std::vector<complex> eigenvalues;
    Eigen::MatrixXcd vectors;
    int restarts = 0;
    int matvecs = 0;
};
using LinearOperator = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;
KrylovResult krylov_schur(const LinearOperator& A, Eigen::Index n, int count, double tol, int basis_dim,
                          int max_restarts);

struct TwistedCurveOptions {
    SpectrumOptions spectrum;
    double overlap_threshold = 0.9;
    /// Stencil spacing for the 5-point differences; 0 means twice the grid spacing.
    double h = 0.0;
    double richardson_tol = 1e-4;
    int extra_candidates = 6;
};

struct TwistedCurve {
    std::vector<double> nu_grid;
    std::vector<std::vector<complex>> branches; // branches[k][i] = lambda_k(nu_grid[i])
    bool matched = false;
    double min_overlap = 1.0;
    std::vector<double> mu_tau;        // Re of (log lambda_k)'(0) / i
    std::vector<double> sigma2;        // -(log lambda_k)''(0), stencil spacing h
    std::vector<double> sigma2_half;   // same with spacing h / 2
    std::vector<double> richardson_delta;
    bool richardson_ok = false;
    double h = 0.0;
};

/// Continues the `ell` leading eigenvalues of L_nu across nu_grid (which must
/// be symmetric about 0, evenly spaced with spacing <= 0.05, and contain
/// +-h/2, +-h, +-2h). Throws BranchMatchingFailed when the eigenvector overlap
/// between neighbouring grid points drops below the threshold.
TwistedCurve twisted_curve(const MapSpec& spec, const Observable& obs, const std::vector<double>& nu_grid, int K,
                           int Q, int ell, const TwistedCurveOptions& opts = {});

/// nu_grid = {-m d, ..., m d}
std::vector<double> symmetric_grid(double spacing, int half_count);

struct DiskDiagnostic {
    double nu = 0.0;
    double max_modulus = 0.0;
    bool flagged = false; // max_modulus >= 1 - 1e-4
};

std::vector<DiskDiagnostic> unit_disk_diagnostic(const MapSpec& spec, const Observable& obs,
                                                 const std::vector<double>& nu_list, int K, int Q,
                                                 const SpectrumOptions& opts = {});

} // namespace svph
