#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "mmdhd/errors.hpp"

namespace mmdhd {

/// Standard normal CDF, Phi(z) = erfc(-z / sqrt 2) / 2.
[[nodiscard]] inline double normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Upper tail 1 - Phi(z), accurate for large z.
[[nodiscard]] inline double normal_sf(double z) noexcept {
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

/// Inverse of normal_cdf on (0, 1).
[[nodiscard]] inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile: p must lie in (0, 1)");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// One-sided critical value z_alpha with P(Z > z_alpha) = alpha.
[[nodiscard]] inline double upper_critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("alpha must lie in (0, 1)");
    }
    return -normal_quantile(alpha);
}

}  // namespace mmdhd
