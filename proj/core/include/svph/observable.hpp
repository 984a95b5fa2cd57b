#pragma once

#include "svph/fourier.hpp"
#include "svph/map.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace svph {

/// Basin labels on a G x G lattice of cells [i/G, (i+1)/G) x [j/G, (j+1)/G).
struct BasinGrid {
    static constexpr int unassigned = -1;

    int size = 0;
    std::vector<int> labels; // row-major, x index first
    std::vector<double> mass; // Lebesgue mass per basin, normalized over assigned cells

    [[nodiscard]] int label_at(TorusPoint p) const noexcept;
    [[nodiscard]] double unassigned_fraction() const noexcept;
};

/// Pointwise post-processing applied after Fourier synthesis. `sign` produces
/// a {-1, 0, 1}-valued (lattice) observable; spectral routes reject it.
enum class ObservableTransform { none, sign };

/// Real observable tau given by a Hermitian Fourier table, optionally centred
/// per basin: value(p) = tau(p) - offset[basin(p)].
struct Observable {
    FourierSeries coeffs;
    std::vector<double> centered_offsets;
    std::shared_ptr<const BasinGrid> basins;
    ObservableTransform transform = ObservableTransform::none;

    [[nodiscard]] double raw(TorusPoint p) const noexcept;
    [[nodiscard]] double offset_for(TorusPoint p) const noexcept;
    [[nodiscard]] double value(TorusPoint p) const noexcept { return raw(p) - offset_for(p); }
    [[nodiscard]] bool spectral_compatible() const noexcept { return transform == ObservableTransform::none; }
};

Observable make_observable(FourierSeries coeffs);

/// tau_n(p) = sum_{k<n} tau(F^k p), with per-basin offsets when present.
double birkhoff_sum(const MapSpec& spec, const Observable& obs, TorusPoint p, std::size_t n);

} // namespace svph
