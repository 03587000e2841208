#pragma once

// Generalized exponential (GE) distribution:
//   F(x) = (1 - e^{-lambda x})^alpha,  x > 0.
// alpha = 1 recovers the exponential distribution with rate lambda.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "random.hpp"
#include "special.hpp"

namespace gereg {

class GEParams {
public:
    GEParams(double alpha, double lambda) : alpha_(alpha), lambda_(lambda) {
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw std::domain_error("GEParams: alpha must be positive, got " + std::to_string(alpha));
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw std::domain_error("GEParams: lambda must be positive, got " + std::to_string(lambda));
    }

    double alpha() const noexcept { return alpha_; }
    double lambda() const noexcept { return lambda_; }

    friend bool operator==(const GEParams&, const GEParams&) = default;

private:
    double alpha_;
    double lambda_;
};

/// log(1 - e^{-u}) for u > 0 without cancellation at either end.
inline double log1mexp(double u) noexcept {
    return u < std::numbers::ln2 ? std::log(-std::expm1(-u)) : std::log1p(-std::exp(-u));
}

namespace detail {
inline void require_positive_x(double x, const char* fn) {
    if (!(x > 0.0))
        throw std::domain_error(std::string(fn) + ": x must be positive");
}
}  // namespace detail

inline double log_pdf(double x, const GEParams& p) {
    detail::require_positive_x(x, "log_pdf");
    const double u = p.lambda() * x;
    return std::log(p.alpha()) + std::log(p.lambda()) + (p.alpha() - 1.0) * log1mexp(u) - u;
}

inline double pdf(double x, const GEParams& p) {
    detail::require_positive_x(x, "pdf");
    const double u = p.lambda() * x;
    return p.alpha() * p.lambda() * std::pow(-std::expm1(-u), p.alpha() - 1.0) * std::exp(-u);
}

inline double cdf(double x, const GEParams& p) {
    if (x <= 0.0) return 0.0;
    return std::pow(-std::expm1(-p.lambda() * x), p.alpha());
}

/// log(1 - F(x)).
inline double log_survival(double x, const GEParams& p) {
    if (x <= 0.0) return 0.0;
    return std::log(-std::expm1(p.alpha() * log1mexp(p.lambda() * x)));
}

inline double quantile(double q, const GEParams& p) {
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("quantile: q must lie in (0, 1)");
    // log(1 - q^{1/alpha}) with u = -log(q)/alpha
    return -log1mexp(-std::log(q) / p.alpha()) / p.lambda();
}

inline double hazard(double x, const GEParams& p) {
    detail::require_positive_x(x, "hazard");
    const double log_s = log_survival(x, p);
    if (!std::isfinite(log_s))
        throw std::domain_error("hazard: survival probability underflows at x = " + std::to_string(x));
    return std::exp(log_pdf(x, p) - log_s);
}

inline double mean(const GEParams& p) {
    return (digamma(p.alpha() + 1.0) - digamma(1.0)) / p.lambda();
}

inline double variance(const GEParams& p) {
    return (trigamma(1.0) - trigamma(p.alpha() + 1.0)) / (p.lambda() * p.lambda());
}

inline double skewness(const GEParams& p) {
    const double v = trigamma(1.0) - trigamma(p.alpha() + 1.0);
    return (tetragamma(p.alpha() + 1.0) - tetragamma(1.0)) / std::pow(v, 1.5);
}

/// n i.i.d. draws by inversion, X = -log(1 - U^{1/alpha}) / lambda.
inline std::vector<double> sample(std::size_t n, const GEParams& p, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample: n must be at least 1");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = quantile(rng.uniform(), p);
    return out;
}

inline double sample_one(Rng& rng, const GEParams& p) { return quantile(rng.uniform(), p); }

}  // namespace gereg
