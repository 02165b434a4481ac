#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace heatlab {

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
    if (d == 1) return 2.0;
    if (d == 2) return std::numbers::pi;
    if (d == 3) return 4.0 * std::numbers::pi / 3.0;
    return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface area of the unit sphere S^{d-1} in R^d (so sphere_area(1) = 2).
inline double sphere_area(int d) { return d * unit_ball_volume(d); }

inline void require_dimension(int d) {
    if (d < 1) throw std::invalid_argument("dimension must be at least 1");
}

} // namespace heatlab
