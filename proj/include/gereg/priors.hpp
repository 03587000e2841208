#pragma once

// Priors for the GE shape parameter and the rate-model coefficients.
//
// The penalized-complexity (PC) prior places d(alpha) ~ Exp(theta) on the
// distance d(alpha) = sqrt(2 KLD(alpha)) from the exponential base model,
// where KLD(alpha) = log(alpha) + 1/alpha - 1, and splits the mass equally
// between the alpha < 1 and alpha > 1 branches.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "format.hpp"
#include "random.hpp"

namespace gereg {

namespace detail {

// Inside this radius around alpha = 1 the direct KLD formula loses most of
// its digits to cancellation.
inline constexpr double kPcSeriesRadius = 1e-4;

// 2 KLD / eps^2 for alpha = 1 + eps, |eps| small:
//   sum_{k>=2} 2 (-1)^k (k-1)/k eps^{k-2}
inline double kld_ratio_series(double eps) noexcept {
    return 1.0 + eps * (-4.0 / 3 + eps * (3.0 / 2 + eps * (-8.0 / 5 + eps * (5.0 / 3 + eps * (-12.0 / 7)))));
}

// KLD as a function of t = log(alpha); valid for any finite t.
inline double kld_log_alpha(double t) noexcept { return t + std::expm1(-t); }

inline void require_alpha(double alpha, const char* fn) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::domain_error(std::string(fn) + ": alpha must be positive and finite");
}

inline void require_theta(double theta, const char* fn) {
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw std::domain_error(std::string(fn) + ": theta must be positive and finite");
}

}  // namespace detail

/// KLD(GE(alpha, lambda) || Exp(lambda)); independent of lambda.
inline double kld_ge_exp(double alpha) {
    detail::require_alpha(alpha, "kld_ge_exp");
    const double eps = alpha - 1.0;
    if (std::abs(eps) < detail::kPcSeriesRadius) return 0.5 * eps * eps * detail::kld_ratio_series(eps);
    return detail::kld_log_alpha(std::log(alpha));
}

inline double pc_distance(double alpha) {
    detail::require_alpha(alpha, "pc_distance");
    const double eps = alpha - 1.0;
    if (std::abs(eps) < detail::kPcSeriesRadius) return std::abs(eps) * std::sqrt(detail::kld_ratio_series(eps));
    return std::sqrt(2.0 * detail::kld_log_alpha(std::log(alpha)));
}

/// log pi(alpha) for the PC prior, parameterized by t = log(alpha) so that
/// tails far beyond the double range of alpha stay finite.
inline double pc_log_density_log_alpha(double t, double theta) {
    detail::require_theta(theta, "pc_log_density");
    const double eps = std::expm1(t);
    // pi = theta/2 * exp(-theta d) * |1/alpha - 1/alpha^2| / d
    //    = theta/2 * exp(-theta d) * alpha^{-2} / sqrt(2 KLD / eps^2)
    double d = 0.0;
    double log_ratio = 0.0;  // log(d / |eps|)
    if (std::abs(eps) < detail::kPcSeriesRadius) {
        const double r = detail::kld_ratio_series(eps);
        d = std::abs(eps) * std::sqrt(r);
        log_ratio = 0.5 * std::log(r);
    } else {
        const double kld = detail::kld_log_alpha(t);
        d = std::sqrt(2.0 * kld);
        // log|eps| = log|e^t - 1|
        const double log_abs_eps = t > 0.0 ? t + std::log1p(-std::exp(-t)) : std::log(-eps);
        log_ratio = std::log(d) - log_abs_eps;
    }
    return std::log(0.5 * theta) - theta * d - 2.0 * t - log_ratio;
}

inline double pc_log_density(double alpha, double theta) {
    detail::require_alpha(alpha, "pc_log_density");
    return pc_log_density_log_alpha(std::log(alpha), theta);
}

namespace detail {

// Solve d(alpha) = target on one monotone branch by bisection in log(alpha).
inline double invert_pc_distance(double target, bool upper_branch) {
    if (target == 0.0) return 1.0;
    const double half_sq = 0.5 * target * target;
    double inner = 0.0;
    double outer = upper_branch ? 1.0 : -1.0;
    while (kld_log_alpha(outer) < half_sq) {
        outer *= 2.0;
        if (std::abs(outer) > 1e4) break;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (inner + outer);
        if (mid == inner || mid == outer) break;
        if (kld_log_alpha(mid) < half_sq)
            inner = mid;
        else
            outer = mid;
    }
    const double alpha = std::exp(0.5 * (inner + outer));
    if (alpha == 0.0) return std::numeric_limits<double>::min();
    if (!std::isfinite(alpha)) return std::numeric_limits<double>::max();
    return alpha;
}

}  // namespace detail

/// Draw from the PC prior: D ~ Exp(theta), a fair coin picks the branch,
/// then alpha solves d(alpha) = D on that branch.
inline std::vector<double> pc_sample(std::size_t n, double theta, std::uint64_t seed) {
    detail::require_theta(theta, "pc_sample");
    if (n == 0) throw std::invalid_argument("pc_sample: n must be at least 1");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& a : out) {
        const double dist = rng.exponential(theta);
        const bool upper = rng.uniform() < 0.5;
        a = detail::invert_pc_distance(dist, upper);
    }
    return out;
}

/// theta such that Pr[d(alpha) > upper] = tail_prob.
inline double calibrate_theta(double upper, double tail_prob) {
    if (!(upper > 0.0) || !std::isfinite(upper))
        throw std::domain_error("calibrate_theta: U must be positive");
    if (!(tail_prob > 0.0 && tail_prob < 1.0))
        throw std::domain_error("calibrate_theta: xi must lie in (0, 1)");
    return -std::log(tail_prob) / upper;
}

/// Gamma(shape a, rate b) log-density.
inline double gamma_log_density(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("gamma_log_density: a and b must be positive");
    if (!(x > 0.0)) throw std::domain_error("gamma_log_density: x must be positive");
    return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
}

inline double gaussian_log_density(double x, double mean, double sd) {
    if (!(sd > 0.0)) throw std::domain_error("gaussian_log_density: sd must be positive");
    const double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

class AlphaPrior {
public:
    enum class Kind { pc, gamma };

    static AlphaPrior pc(double theta) {
        detail::require_theta(theta, "AlphaPrior::pc");
        return AlphaPrior(Kind::pc, theta, 0.0, 0.0);
    }

    static AlphaPrior gamma(double shape, double rate) {
        if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
            throw std::domain_error("AlphaPrior::gamma: shape and rate must be positive");
        return AlphaPrior(Kind::gamma, 0.0, shape, rate);
    }

    /// Parse "pc:THETA" or "gamma:A,B".
    static AlphaPrior parse(const std::string& text) {
        const auto bad = [&] {
            return std::invalid_argument("alpha prior must look like pc:THETA or gamma:A,B, got '" + text + "'");
        };
        const auto colon = text.find(':');
        if (colon == std::string::npos) throw bad();
        const std::string_view kind = std::string_view(text).substr(0, colon);
        const std::string_view rest = std::string_view(text).substr(colon + 1);
        if (kind == "pc") {
            double theta = 0.0;
            if (!parse_double(rest, theta)) throw bad();
            return pc(theta);
        }
        if (kind == "gamma") {
            const auto comma = rest.find(',');
            double a = 0.0, b = 0.0;
            if (comma == std::string_view::npos || !parse_double(rest.substr(0, comma), a) ||
                !parse_double(rest.substr(comma + 1), b))
                throw bad();
            return gamma(a, b);
        }
        throw bad();
    }

    Kind kind() const noexcept { return kind_; }
    double theta() const noexcept { return theta_; }
    double shape() const noexcept { return shape_; }
    double rate() const noexcept { return rate_; }

    double log_density(double alpha) const {
        return kind_ == Kind::pc ? pc_log_density(alpha, theta_) : gamma_log_density(alpha, shape_, rate_);
    }

    std::string label() const {
        if (kind_ == Kind::pc) return "pc:" + format_double(theta_);
        return "gamma:" + format_double(shape_) + "," + format_double(rate_);
    }

    friend bool operator==(const AlphaPrior&, const AlphaPrior&) = default;

private:
    AlphaPrior(Kind k, double theta, double shape, double rate)
        : kind_(k), theta_(theta), shape_(shape), rate_(rate) {}

    Kind kind_;
    double theta_;
    double shape_;
    double rate_;
};

/// Independent N(mean, sd^2) on every rate-model coefficient.
struct BetaPrior {
    double mean = 0.0;
    double sd = 10.0;

    double log_density(double beta) const { return gaussian_log_density(beta, mean, sd); }
};

}  // namespace gereg
