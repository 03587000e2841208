#pragma once

// Posterior summaries and chain diagnostics.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gereg {

/// Type-7 (linear interpolation) empirical quantile of an ascending sample.
inline double sorted_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline double empirical_quantile(std::span<const double> draws, double p) {
    std::vector<double> s(draws.begin(), draws.end());
    std::sort(s.begin(), s.end());
    return sorted_quantile(s, p);
}

struct Interval {
    double lo;
    double hi;

    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// Equal-tailed interval with the given central coverage.
inline Interval credible_interval(std::span<const double> draws, double level = 0.95) {
    if (draws.size() < 2) throw std::invalid_argument("credible_interval: need at least 2 draws");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("credible_interval: level must lie in (0, 1)");
    std::vector<double> s(draws.begin(), draws.end());
    std::sort(s.begin(), s.end());
    const double tail = 0.5 * (1.0 - level);
    return {sorted_quantile(s, tail), sorted_quantile(s, 1.0 - tail)};
}

/// Posterior mean with a 95% equal-tailed interval.
struct Summary {
    double mean = 0.0;
    double lo95 = 0.0;
    double hi95 = 0.0;
};

inline Summary summarize(std::span<const double> draws) {
    if (draws.empty()) throw std::invalid_argument("summarize: no draws");
    double sum = 0.0;
    for (double v : draws) sum += v;
    Summary s;
    s.mean = sum / static_cast<double>(draws.size());
    if (draws.size() == 1) {
        s.lo95 = s.hi95 = draws.front();
        return s;
    }
    const auto ci = credible_interval(draws, 0.95);
    s.lo95 = ci.lo;
    s.hi95 = ci.hi;
    return s;
}

struct EssResult {
    double ess = 0.0;
    bool degenerate = false;  // constant chain
};

/// Effective sample size with Geyer's initial positive sequence estimator.
inline EssResult effective_sample_size(std::span<const double> draws) {
    const std::size_t n = draws.size();
    if (n < 10) throw std::invalid_argument("effective_sample_size: need at least 10 draws");
    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= static_cast<double>(n);
    const auto autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) acc += (draws[i] - mean) * (draws[i + lag] - mean);
        return acc / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) return {static_cast<double>(n), true};

    // tau = -1 + 2 * sum_m (rho_{2m} + rho_{2m+1}) over the initial positive run
    double tau = -1.0;
    for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
        const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
        if (!(pair > 0.0)) break;
        tau += 2.0 * pair;
    }
    const double ess = static_cast<double>(n) / std::max(tau, 1.0);
    return {ess, false};
}

}  // namespace gereg
