#pragma once

#include "svph/fourier.hpp"
#include "svph/torus.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace svph {

enum class MapKind { skew_linear, skew_general, fast_slow };

std::string_view to_string(MapKind kind) noexcept;
MapKind map_kind_from_string(std::string_view name);

/// F(x, theta) = (ell x + f(x, theta), theta + s omega(x, theta)) mod Z^2 with
/// s = epsilon for fast-slow maps and s = 1 otherwise.
///
/// `f_coeffs` holds only the periodic part of the first component. Build
/// instances through `make_map`, which validates the tables and caches the
/// degree.
struct MapSpec {
    MapKind kind = MapKind::skew_linear;
    int ell = 2;
    FourierSeries f_coeffs;
    FourierSeries omega_coeffs;
    double epsilon = 0.0;
    int degree = 0;

    [[nodiscard]] double omega_scale() const noexcept { return kind == MapKind::fast_slow ? epsilon : 1.0; }
    /// First component is exactly ell * x (closed-form preimage branches).
    [[nodiscard]] bool linear_base() const noexcept { return f_coeffs.empty(); }
};

/// Validates and returns a map. Throws ValidationError when a table is not
/// Hermitian, det DF <= 0 on the check lattice, or the degree integral is not
/// within 1e-8 of an integer equal to ell.
MapSpec make_map(MapKind kind, int ell, FourierSeries f_coeffs, FourierSeries omega_coeffs,
                 double epsilon = 0.0);

struct Jacobian2 {
    double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
    double det = 1.0;
};

/// Unreduced image (ell x + f, theta + s omega); used by the Galerkin phases.
std::pair<double, double> eval_lift(const MapSpec& spec, TorusPoint p) noexcept;
TorusPoint eval_map(const MapSpec& spec, TorusPoint p) noexcept;

/// Analytic derivative; throws NonPositiveDeterminant when det <= 0.
Jacobian2 jacobian(const MapSpec& spec, TorusPoint p);
Jacobian2 jacobian_unchecked(const MapSpec& spec, TorusPoint p) noexcept;

/// Lattice quadrature of det DF (exact for trigonometric polynomials once the
/// lattice resolves twice the band).
double degree_integral(const MapSpec& spec);

struct PreimageOptions {
    /// Seed lattice side for the Newton search; 0 means 8 * degree.
    int seed_grid = 0;
    /// Try one Newton seed per branch (p.x + j) / ell first; fall back to the
    /// lattice if that does not yield `degree` distinct roots.
    bool branch_seeds = true;
    double residual_tol = 1e-10;
    double dedupe_tol = 1e-8;
};

/// All `degree` points y with F(y) = p. Uses closed-form x branches when the
/// base is linear, otherwise damped Newton from branch seeds and, if needed, a
/// seed lattice. Throws
/// RootCountMismatch when the count differs from the degree.
std::vector<TorusPoint> preimages(const MapSpec& spec, TorusPoint p, const PreimageOptions& opts = {});

/// [p, F p, ..., F^n p]
std::vector<TorusPoint> orbit(const MapSpec& spec, TorusPoint p, std::size_t n);

/// D_p F^n as the ordered product of one-step Jacobians along the orbit.
Jacobian2 jacobian_power(const MapSpec& spec, TorusPoint p, std::size_t n);

Jacobian2 operator*(const Jacobian2& a, const Jacobian2& b) noexcept;

} // namespace svph
