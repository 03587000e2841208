#pragma once

// Fitted models and posterior functionals of the mean rainfall curve
//   mu(t) = [psi(alpha + 1) - psi(1)] / lambda(t).

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "diagnostics.hpp"
#include "model.hpp"
#include "sampler.hpp"
#include "special.hpp"

namespace gereg {

struct FittedModel {
    ModelSpec spec;
    PosteriorDraws draws;
    double waic = 0.0;

    const std::vector<double>& acceptance_rates() const noexcept { return draws.acceptance_rates; }
};

/// WAIC over the retained draws, streamed one draw at a time.
inline double waic_of_draws(const ModelSpec& spec, const Dataset& data, const PosteriorDraws& draws) {
    GroupedLikelihood lik(spec, data);
    WaicAccumulator acc(data.size());
    std::vector<double> row(data.size());
    for (std::size_t s = 0; s < draws.size(); ++s) {
        const auto b = draws.beta_row(s);
        lik.pointwise(draws.alpha[s], b, row);
        acc.add(row);
    }
    return acc.value();
}

/// S x n pointwise log-likelihood matrix (small problems and tests).
inline Eigen::MatrixXd loglik_matrix(const ModelSpec& spec, const Dataset& data, const PosteriorDraws& draws) {
    GroupedLikelihood lik(spec, data);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(draws.size()), static_cast<Eigen::Index>(data.size()));
    std::vector<double> row(data.size());
    for (std::size_t s = 0; s < draws.size(); ++s) {
        lik.pointwise(draws.alpha[s], draws.beta_row(s), row);
        for (std::size_t i = 0; i < row.size(); ++i)
            m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = row[i];
    }
    return m;
}

inline FittedModel fit_model(const ModelSpec& spec, const Dataset& data, const ChainConfig& cfg) {
    PosteriorDraws draws = run_chain(spec, data, cfg);
    const double w = waic_of_draws(spec, data, draws);
    return FittedModel{spec, std::move(draws), w};
}

namespace detail {

inline void require_draws(const FittedModel& fit) {
    if (fit.draws.size() == 0) throw std::invalid_argument("posterior functional: no retained draws");
}

inline double mean_factor(double alpha) { return digamma(alpha + 1.0) - digamma(1.0); }

// values[s * ts.size() + j] = f(draw s, t_j), then summarized per t.
template <class PerDraw>
std::vector<Summary> summarize_over_draws(const FittedModel& fit, std::span<const double> ts, PerDraw&& f) {
    require_draws(fit);
    for (double t : ts) fit.spec.check_domain(t);
    const std::size_t s_count = fit.draws.size();
    std::vector<std::vector<double>> per_t(ts.size(), std::vector<double>(s_count));
    for (std::size_t s = 0; s < s_count; ++s) {
        const auto beta = fit.draws.beta_row(s);
        for (std::size_t j = 0; j < ts.size(); ++j) per_t[j][s] = f(fit.draws.alpha[s], beta, ts[j]);
    }
    std::vector<Summary> out;
    out.reserve(ts.size());
    for (const auto& v : per_t) out.push_back(summarize(v));
    return out;
}

}  // namespace detail

/// mu(t) for one parameter draw.
inline double mean_at(const ModelSpec& spec, double alpha, std::span<const double> beta, double t) {
    return detail::mean_factor(alpha) / rate(spec, beta, t);
}

inline std::vector<Summary> mean_curve(const FittedModel& fit, std::span<const double> ts) {
    return detail::summarize_over_draws(fit, ts, [&](double a, std::span<const double> b, double t) {
        return mean_at(fit.spec, a, b, t);
    });
}

/// 100p% probability rainfall: the (1 - p) quantile of GE(alpha, lambda(t)).
inline std::vector<Summary> probability_rainfall(const FittedModel& fit, std::span<const double> ts, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("probability_rainfall: p must lie in (0, 1)");
    return detail::summarize_over_draws(fit, ts, [&](double a, std::span<const double> b, double t) {
        return quantile(1.0 - p, GEParams(a, rate(fit.spec, b, t)));
    });
}

/// d mu / dt = -mu(t) * d eta / dt for the spline rate model.
inline std::vector<Summary> rate_of_change(const FittedModel& fit, std::span<const double> ts) {
    if (fit.spec.form() != RateForm::spline)
        throw std::invalid_argument(
            "rate_of_change applies to the spline rate model; for the linear model "
            "d mu/dt = -mu(t) * beta_1 / (t_max - t_min) in closed form");
    return detail::summarize_over_draws(fit, ts, [&](double a, std::span<const double> b, double t) {
        return -mean_at(fit.spec, a, b, t) * fit.spec.predictor_deriv(b, t);
    });
}

/// (mu(t1) - mu(t0)) per decade, i.e. divided by (t1 - t0) / 10.
inline Summary decadal_shift(const FittedModel& fit, double t0, double t1) {
    detail::require_draws(fit);
    if (!(t1 != t0)) throw std::invalid_argument("decadal_shift: t0 and t1 must differ");
    fit.spec.check_domain(t0);
    fit.spec.check_domain(t1);
    const double decades = (t1 - t0) / 10.0;
    std::vector<double> v(fit.draws.size());
    for (std::size_t s = 0; s < v.size(); ++s) {
        const auto beta = fit.draws.beta_row(s);
        const double a = fit.draws.alpha[s];
        v[s] = (mean_at(fit.spec, a, beta, t1) - mean_at(fit.spec, a, beta, t0)) / decades;
    }
    return summarize(v);
}

}  // namespace gereg
