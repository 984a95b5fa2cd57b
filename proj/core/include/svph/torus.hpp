#pragma once

#include <cmath>

namespace svph {

/// Representative of a real number modulo 1, always in [0, 1).
inline double wrap_unit(double v) noexcept {
    double r = v - std::floor(v);
    // floor can round v - floor(v) up to exactly 1 for tiny negative v
    return r >= 1.0 ? 0.0 : r;
}

/// Signed representative of a real number modulo 1, in [-1/2, 1/2).
inline double wrap_signed(double v) noexcept {
    double r = wrap_unit(v);
    return r >= 0.5 ? r - 1.0 : r;
}

struct TorusPoint {
    double x = 0.0;
    double theta = 0.0;
};

inline TorusPoint make_point(double x, double theta) noexcept {
    return {wrap_unit(x), wrap_unit(theta)};
}

/// Per-coordinate circle distance min(|d|, 1 - |d|), combined in the Euclidean norm.
inline double toroidal_distance(TorusPoint a, TorusPoint b) noexcept {
    double dx = std::abs(wrap_signed(a.x - b.x));
    double dt = std::abs(wrap_signed(a.theta - b.theta));
    return std::hypot(dx, dt);
}

inline constexpr double two_pi = 6.283185307179586476925286766559;

} // namespace svph
