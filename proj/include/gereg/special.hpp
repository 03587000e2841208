#pragma once

// Digamma, trigamma and tetragamma for positive real arguments.
//
// All three shift the argument upward with the recurrence until z >= 10 and
// then apply the Bernoulli-number asymptotic series, which at z = 10 is
// truncated below 1e-16 relative.

#include <cmath>
#include <stdexcept>
#include <string>

namespace gereg {

namespace detail {
inline constexpr double kAsymptoticThreshold = 10.0;

inline void require_positive_arg(double z, const char* fn) {
    if (!(z > 0.0) || !std::isfinite(z))
        throw std::domain_error(std::string(fn) + ": argument must be positive and finite");
}
}  // namespace detail

/// psi(z) = d/dz log Gamma(z).
inline double digamma(double z) {
    detail::require_positive_arg(z, "digamma");
    double shift = 0.0;
    while (z < detail::kAsymptoticThreshold) {
        shift -= 1.0 / z;
        z += 1.0;
    }
    const double w = 1.0 / (z * z);
    // -sum B_{2k} / (2k z^{2k}), k = 1..7
    const double series =
        w * (-1.0 / 12 +
        w * (1.0 / 120 +
        w * (-1.0 / 252 +
        w * (1.0 / 240 +
        w * (-1.0 / 132 +
        w * (691.0 / 32760 +
        w * (-1.0 / 12)))))));
    return shift + std::log(z) - 0.5 / z + series;
}

/// psi'(z).
inline double trigamma(double z) {
    detail::require_positive_arg(z, "trigamma");
    double shift = 0.0;
    while (z < detail::kAsymptoticThreshold) {
        shift += 1.0 / (z * z);
        z += 1.0;
    }
    const double w = 1.0 / (z * z);
    const double series =
        w * (1.0 / 6 +
        w * (-1.0 / 30 +
        w * (1.0 / 42 +
        w * (-1.0 / 30 +
        w * (5.0 / 66 +
        w * (-691.0 / 2730 +
        w * (7.0 / 6)))))));
    return shift + (1.0 + 0.5 / z + series) / z;
}

/// psi''(z).
inline double tetragamma(double z) {
    detail::require_positive_arg(z, "tetragamma");
    double shift = 0.0;
    while (z < detail::kAsymptoticThreshold) {
        shift -= 2.0 / (z * z * z);
        z += 1.0;
    }
    const double w = 1.0 / (z * z);
    const double series =
        w * (-1.0 / 2 +
        w * (1.0 / 6 +
        w * (-1.0 / 6 +
        w * (3.0 / 10 +
        w * (-5.0 / 6 +
        w * (691.0 / 210 +
        w * (-35.0 / 2)))))));
    return shift + (-1.0 - 1.0 / z + series) / (z * z);
}

}  // namespace gereg
