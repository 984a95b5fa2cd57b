#pragma once

#include "svph/map.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace svph {

/// Unstable cone |eta| <= chi_u |xi| and central cone |xi| <= chi_c |eta|.
struct ConeParams {
    double chi_u = 0.8;
    double chi_c = 1.0;

    void validate() const;
};

/// 6 (r + 1)!
double zeta(int r);

struct A15Report {
    bool a1_ok = false;
    double min_det = 0.0;
    double a5_margin = 0.0; // min over the lattice of d_x f - max{2(1 + |d_x omega|_inf), |d_theta f|}
    double sup_dx_omega = 0.0;
    [[nodiscard]] bool a5_ok() const noexcept { return a5_margin > 0.0; }
};

/// (A1) and (A5) on the grid x grid lattice {(i/grid, j/grid)}.
A15Report check_a1_a5(const MapSpec& spec, int grid);

struct ConeReport {
    bool a1_ok = false;
    double iota_u = 0.0;    // worst slope contraction of C_u under DF
    double iota_c = 0.0;    // worst contraction of C_c under DF^{-1}
    double iota_star = 0.0; // max of the two
    std::vector<double> lambda_minus_n, lambda_plus_n;     // index n - 1
    std::vector<double> lambda_c_minus_n, lambda_c_plus_n; // index n - 1
    double lambda = 0.0, Lambda = 0.0;
    double lambda_c_minus = 0.0, lambda_c_plus = 0.0;
    double C_star = 1.0;
    double lambda_c = 1.0;
    int r = 4;
    double zeta_r = 0.0;
    double pinching_margin = 0.0;
    double a5_margin = 0.0;
    std::size_t fit_from = 0; // first n of the tail window used for the rate fits

    /// Cone invariance plus domination of the fitted rates (lambda > max(1, lambda_c^+)).
    [[nodiscard]] bool a2_ok() const noexcept;
    [[nodiscard]] bool a4_ok() const noexcept { return pinching_margin > 0.0; }
};

struct ConeOptions {
    int r = 4;
};

/// Samples the cone conditions and growth rates on a grid x grid lattice
/// (shifted off the dyadic points). Throws ConeNotInvariant if some lattice
/// point maps a boundary vector of C_u outside C_u.
ConeReport check_cones(const MapSpec& spec, const ConeParams& cones, int grid, int n_max,
                       const ConeOptions& opts = {});

/// Closed interval [lo, hi] of directions mod pi, represented in (-pi/2, pi/2].
struct AngleInterval {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] double width() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains(double a) const noexcept { return lo <= a && a <= hi; }
    [[nodiscard]] bool overlaps(const AngleInterval& o) const noexcept { return lo <= o.hi && o.lo <= hi; }
};

/// Direction of the vector in (-pi/2, pi/2].
double line_angle(double xi, double eta) noexcept;

/// Image of the boundary rays (1, +-chi_u) under the linear map J.
AngleInterval push_cone(const Jacobian2& J, double chi_u) noexcept;
/// Pushes an interval through one more linear step.
AngleInterval push_interval(const Jacobian2& J, const AngleInterval& a) noexcept;

/// D_z F^n C_u as an angle interval.
AngleInterval image_cone_angles(const MapSpec& spec, TorusPoint z, int n, double chi_u);

struct TransversalityRow {
    int n = 0;
    double N_F = 0.0;
    double N_tilde = 0.0;      // exact sup over lines (endpoint sweep)
    double N_tilde_grid = 0.0; // sup over the 256-angle line grid
    double N_tilde_fine = 0.0; // sup over the nested 511-angle grid
    double rate = 0.0;         // N_tilde^{1/n}
    std::size_t preimages_per_sample = 0;
};

struct TransversalityReport {
    std::vector<int> n_values;
    std::vector<TransversalityRow> rows;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double chi_u = 0.0;
    bool a6_ok = false;
};

struct TransversalityOptions {
    double chi_u = 0.8;
    std::uint64_t seed = 1;
    int line_grid = 256;
    std::size_t budget = 10'000'000;
};

/// Enumerates F^{-n}(y) for `samples` uniform random y and returns the sample
/// maxima of N_F(n, y, z_1) and N~_F(n, y, L). Throws BudgetExceeded when
/// degree^n * samples exceeds the budget.
TransversalityRow transversality_sums(const MapSpec& spec, int n, std::size_t samples,
                                      const TransversalityOptions& opts = {});

/// One row per n; a6_ok iff the final rate is below 1 - 1e-3.
TransversalityReport a6_rate(const MapSpec& spec, const std::vector<int>& n_range, std::size_t samples,
                             const TransversalityOptions& opts = {});

} // namespace svph
