#include "svph/observable.hpp"

#include "svph/errors.hpp"

#include <algorithm>
#include <numeric>

namespace svph {

int BasinGrid::label_at(TorusPoint p) const noexcept {
    if (size <= 0) return unassigned;
    int i = std::min(size - 1, static_cast<int>(p.x * size));
    int j = std::min(size - 1, static_cast<int>(p.theta * size));
    return labels[static_cast<std::size_t>(i) * static_cast<std::size_t>(size) + static_cast<std::size_t>(j)];
}

double BasinGrid::unassigned_fraction() const noexcept {
    if (labels.empty()) return 0.0;
    auto n = std::count(labels.begin(), labels.end(), unassigned);
    return static_cast<double>(n) / static_cast<double>(labels.size());
}

double Observable::raw(TorusPoint p) const noexcept {
    double v = coeffs.value(p);
    if (transform == ObservableTransform::sign) return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    return v;
}

double Observable::offset_for(TorusPoint p) const noexcept {
    if (centered_offsets.empty()) return 0.0;
    if (centered_offsets.size() == 1) return centered_offsets.front();
    int label = basins ? basins->label_at(p) : BasinGrid::unassigned;
    if (label >= 0 && static_cast<std::size_t>(label) < centered_offsets.size())
        return centered_offsets[static_cast<std::size_t>(label)];
    // unassigned cell: mass-weighted offset
    if (basins && basins->mass.size() == centered_offsets.size())
        return std::inner_product(basins->mass.begin(), basins->mass.end(), centered_offsets.begin(), 0.0);
    return 0.0;
}

Observable make_observable(FourierSeries coeffs) {
    if (!coeffs.is_hermitian(1e-12))
        throw Error(ErrorCode::ValidationError, "observable table is not Hermitian-symmetric");
    Observable obs;
    obs.coeffs = std::move(coeffs);
    return obs;
}

double birkhoff_sum(const MapSpec& spec, const Observable& obs, TorusPoint p, std::size_t n) {
    require(n >= 1, "birkhoff_sum needs n >= 1");
    // basins are invariant, so the start point's basin fixes the offset
    const double offset = obs.offset_for(p);
    double sum = 0.0;
    TorusPoint z = p;
    for (std::size_t k = 0; k < n; ++k) {
        sum += obs.raw(z);
        if (k + 1 < n) z = eval_map(spec, z);
    }
    return sum - static_cast<double>(n) * offset;
}

} // namespace svph
