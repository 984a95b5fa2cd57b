#pragma once

#include "svph/fourier.hpp"
#include "svph/map.hpp"
#include "svph/observable.hpp"
#include "svph/sampling.hpp"
#include "svph/spectrum.hpp"
#include "svph/transfer.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace svph {

struct DecomposeOptions {
    int grid = 64;
    int burn = 500;
    int orbit_len = 8000;
    double threshold = 0.2; // L1 distance for histogram matching
    double gap_tol = 5e-3;  // |lambda - 1| <= gap_tol counts as eigenvalue 1
    double min_cluster_fraction = 0.01;
    int eval_grid = 128; // lattice for the non-negativity diagnostic
    bool strict_negativity = false;
    std::uint64_t seed = 1;
};

/// Finitely many acips of F as seen by the Galerkin matrix.
///
/// rho[k] is normalized so that Leb(rho[k]) equals the basin mass; the acip
/// itself is rho[k] / Leb(rho[k]). dual[k] is the functional f -> dual[k]^H f
/// obtained from the left eigenvectors, with dual[k]^H rho[m] = delta_{km}.
struct ErgodicDecomposition {
    int ell = 0;
    int K = 0;
    std::vector<complex> eigenvalues; // the ell eigenvalues near 1
    std::vector<CoeffVector> rho;
    std::vector<CoeffVector> dual;
    std::shared_ptr<const BasinGrid> basins;
    std::vector<double> mass;
    std::vector<complex> peripheral_extras;
    bool extras_roots_of_unity = true;
    std::vector<Histogram> candidate_histograms;
    std::vector<double> candidate_distance; // L1 from candidate k to the mean of orbit cluster k
    std::vector<bool> empirical_reference;  // cells of basin k were matched against the cluster mean
    std::vector<Histogram> reference_histograms; // what cells (and Monte-Carlo samples) are matched against
    int orbit_clusters = 0;
    std::vector<double> min_density;      // min of rho_k / Leb(rho_k) on the evaluation lattice
    std::vector<double> scale_factors;    // normalization applied to P(1_{D_k})
    double biorthogonality_error = 0.0;   // max |dual_k(rho_m) - delta_km|
    double unassigned_fraction = 0.0;
    double invariance_residual = 0.0;     // max_k |M rho_k - rho_k| / |rho_k|
    double support_overlap = 0.0;         // max_{k != m} Leb(|rho_k| |rho_m|) of the normalized densities
    bool negativity_ok = true;            // min_density >= -1e-6 for every k

    [[nodiscard]] ModeBox box() const noexcept { return ModeBox(K); }
    /// Leb(rho_k)
    [[nodiscard]] double rho_mass(int k) const;
    /// dual_k(f)
    [[nodiscard]] complex dual_apply(int k, const CoeffVector& f) const;
    /// Expectation of phi under the acip rho_k / Leb(rho_k).
    [[nodiscard]] double acip_expectation(int k, const FourierSeries& phi) const;
};

/// Orbit statistics over the 4 x 4 histogram partition.
Histogram orbit_histogram(const OrbitStepper& stepper, TorusPoint start, int burn, int len, Rng& rng);
/// Exact histogram of a density given by Fourier coefficients (normalized to mass 1).
Histogram density_histogram(const CoeffVector& v, const ModeBox& box);
double l1_distance(const Histogram& a, const Histogram& b) noexcept;

/// Counts eigenvalue-1 multiplicity, clusters orbit histograms of the grid
/// cells, builds rho_k as the spectral projection of the basin indicators and
/// relabels the cells against the candidate acip histograms. Throws
/// DecompositionInconsistent when the multiplicity and the cluster count differ.
ErgodicDecomposition decompose(const MapSpec& spec, const OperatorMatrix& M, const SpectralData& spectral,
                               const DecomposeOptions& opts = {});

/// Fourier coefficients of the indicator of the cells labelled k.
CoeffVector indicator_coefficients(const BasinGrid& basins, int k, const ModeBox& box);

/// Lebesgue integral of f over the cells labelled k, normalized by the
/// assigned fraction.
complex basin_integral(const CoeffVector& f, const ModeBox& box, const BasinGrid& basins, int k);

/// sum_j Leb(f 1_{D_j}) rho_j / mass_j (basin quadrature).
CoeffVector project(const CoeffVector& f, const ErgodicDecomposition& dec);
/// sum_k dual_k(f) rho_k, the spectral projector onto the eigenvalue-1 space.
CoeffVector spectral_project(const CoeffVector& f, const ErgodicDecomposition& dec);

struct CltWeights {
    std::vector<double> c;          // Leb(rho_k) dual_k(f_m)
    std::vector<double> basin_mass; // Leb(f_m 1_{D_k})
    double max_difference = 0.0;
};

/// Throws WeightMismatch when c_k and the basin masses differ by more than tol.
CltWeights clt_weights(const ErgodicDecomposition& dec, const FourierSeries& f_m, double tol = 1e-3);

} // namespace svph
