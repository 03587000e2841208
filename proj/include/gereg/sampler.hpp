#pragma once

// Adaptive Metropolis-Hastings within Gibbs.
//
// Each sweep updates the parameters one at a time in a fixed order with a
// Gaussian random-walk proposal, either on the parameter itself or on its
// logarithm (positive parameters; the Jacobian term is added to the log
// acceptance ratio). During burn-in the proposal scales are multiplied or
// divided by adapt_factor after every adapt_batch sweeps whenever the batch
// acceptance rate leaves the target band; they are frozen afterwards.

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "random.hpp"

namespace gereg {

struct ChainConfig {
    int n_iter = 10000;
    int burn_in = 3000;
    int thin = 5;
    std::uint64_t seed = 1;
    double target_lo = 0.3;
    double target_hi = 0.5;
    int adapt_batch = 50;
    double adapt_factor = 1.1;
    double initial_scale_log_alpha = 0.1;
    double initial_scale_beta = 0.05;

    static ChainConfig simulation_protocol(std::uint64_t seed) {
        ChainConfig c;
        c.n_iter = 4000;
        c.burn_in = 2000;
        c.thin = 5;
        c.seed = seed;
        return c;
    }

    static ChainConfig application_protocol(std::uint64_t seed) {
        ChainConfig c;
        c.seed = seed;
        return c;
    }

    void validate() const {
        if (n_iter <= 0) throw std::invalid_argument("ChainConfig: n_iter must be positive");
        if (burn_in < 0 || burn_in >= n_iter) throw std::invalid_argument("ChainConfig: need 0 <= burn_in < n_iter");
        if (thin < 1) throw std::invalid_argument("ChainConfig: thin must be at least 1");
        if (adapt_batch < 1) throw std::invalid_argument("ChainConfig: adapt_batch must be at least 1");
        if (!(adapt_factor > 1.0)) throw std::invalid_argument("ChainConfig: adapt_factor must exceed 1");
        if (!(target_lo > 0.0 && target_lo < target_hi && target_hi < 1.0))
            throw std::invalid_argument("ChainConfig: target acceptance band must satisfy 0 < lo < hi < 1");
        if (!(initial_scale_log_alpha > 0.0) || !(initial_scale_beta > 0.0))
            throw std::invalid_argument("ChainConfig: initial proposal scales must be positive");
    }

    std::size_t retained() const noexcept { return static_cast<std::size_t>((n_iter - burn_in) / thin); }
};

enum class Transform { identity, log };

/// A target for componentwise updates. stage(k, v) returns
/// log pi(state with theta_k = v) - log pi(state) and may cache work that
/// accept(k, v) then commits.
template <class T>
concept GibbsTarget = requires(T t, const T ct, std::size_t k, double v) {
    { ct.size() } -> std::convertible_to<std::size_t>;
    { ct.value(k) } -> std::convertible_to<double>;
    { ct.transform(k) } -> std::convertible_to<Transform>;
    { t.stage(k, v) } -> std::convertible_to<double>;
    t.accept(k, v);
};

struct MwgStats {
    std::vector<double> acceptance_rates;             // post-burn-in
    std::vector<double> final_scales;
    std::vector<std::vector<double>> scale_history;   // one entry per adaptation batch
};

/// Runs the sampler; on_retain(target) is called for every retained state.
template <GibbsTarget Target, class OnRetain>
MwgStats run_mwg(Target& target, const ChainConfig& cfg, std::vector<double> scales, Rng& rng,
                 OnRetain&& on_retain) {
    cfg.validate();
    const std::size_t p = target.size();
    if (scales.size() != p) throw std::invalid_argument("run_mwg: one proposal scale per parameter required");

    std::vector<int> batch_accepts(p, 0), post_accepts(p, 0);
    MwgStats stats;

    for (int iter = 0; iter < cfg.n_iter; ++iter) {
        for (std::size_t k = 0; k < p; ++k) {
            const double cur = target.value(k);
            const double z = rng.normal();
            double prop = 0.0;
            double log_jacobian = 0.0;
            if (target.transform(k) == Transform::log) {
                const double step = scales[k] * z;
                prop = cur * std::exp(step);
                log_jacobian = step;  // log(prop / cur)
                if (!(prop > 0.0) || !std::isfinite(prop)) {
                    (void)rng.uniform();
                    continue;
                }
            } else {
                prop = cur + scales[k] * z;
            }
            const double log_ratio = target.stage(k, prop) + log_jacobian;
            const double u = rng.uniform();
            if (std::isfinite(log_ratio) && std::log(u) < log_ratio) {
                target.accept(k, prop);
                if (iter < cfg.burn_in)
                    ++batch_accepts[k];
                else
                    ++post_accepts[k];
            }
        }

        if (iter < cfg.burn_in && (iter + 1) % cfg.adapt_batch == 0) {
            for (std::size_t k = 0; k < p; ++k) {
                const double rate = static_cast<double>(batch_accepts[k]) / cfg.adapt_batch;
                if (rate > cfg.target_hi)
                    scales[k] *= cfg.adapt_factor;
                else if (rate < cfg.target_lo)
                    scales[k] /= cfg.adapt_factor;
                batch_accepts[k] = 0;
            }
            stats.scale_history.push_back(scales);
        }

        if (iter >= cfg.burn_in && (iter - cfg.burn_in + 1) % cfg.thin == 0) on_retain(target);
    }

    const int post = cfg.n_iter - cfg.burn_in;
    stats.acceptance_rates.resize(p);
    for (std::size_t k = 0; k < p; ++k) stats.acceptance_rates[k] = static_cast<double>(post_accepts[k]) / post;
    stats.final_scales = std::move(scales);
    return stats;
}

/// The GE regression posterior as a componentwise target:
/// parameter 0 is alpha (log scale), 1..K are the coefficients.
class GeRegressionTarget {
public:
    GeRegressionTarget(const ModelSpec& spec, const Dataset& data, double alpha, std::span<const double> beta)
        : spec_(spec), lik_(spec, data) {
        lik_.set_state(alpha, beta);
        beta_log_prior_.resize(beta.size());
        for (std::size_t c = 0; c < beta.size(); ++c) beta_log_prior_[c] = spec_.beta_prior().log_density(beta[c]);
        alpha_log_prior_ = spec_.alpha_prior().log_density(alpha);
    }

    std::size_t size() const noexcept { return 1 + lik_.num_coefficients(); }
    double value(std::size_t k) const { return k == 0 ? lik_.alpha() : lik_.beta()[k - 1]; }
    Transform transform(std::size_t k) const noexcept { return k == 0 ? Transform::log : Transform::identity; }

    double stage(std::size_t k, double v) {
        if (k == 0) {
            staged_prior_ = spec_.alpha_prior().log_density(v);
            return lik_.loglik_at_alpha(v) - lik_.loglik() + staged_prior_ - alpha_log_prior_;
        }
        staged_prior_ = spec_.beta_prior().log_density(v);
        return lik_.stage_coefficient(k - 1, v) + staged_prior_ - beta_log_prior_[k - 1];
    }

    void accept(std::size_t k, double v) {
        if (k == 0) {
            lik_.set_alpha(v);
            alpha_log_prior_ = staged_prior_;
        } else {
            lik_.commit_coefficient();
            beta_log_prior_[k - 1] = staged_prior_;
        }
    }

    double log_posterior() const {
        double lp = lik_.loglik() + alpha_log_prior_;
        for (double v : beta_log_prior_) lp += v;
        return lp;
    }

    const GroupedLikelihood& likelihood() const noexcept { return lik_; }

private:
    const ModelSpec& spec_;
    GroupedLikelihood lik_;
    std::vector<double> beta_log_prior_;
    double alpha_log_prior_ = 0.0;
    double staged_prior_ = 0.0;
};

struct PosteriorDraws {
    std::vector<double> alpha;
    Eigen::MatrixXd beta;                  // retained draws x coefficients
    std::vector<double> acceptance_rates;  // alpha first, then coefficients
    std::vector<double> initial_scales;
    std::vector<double> proposal_scales;   // final (frozen) scales
    std::vector<std::vector<double>> scale_history;
    Eigen::VectorXd initial_beta;
    std::vector<std::string> warnings;
    bool failed = false;

    std::size_t size() const noexcept { return alpha.size(); }
    std::size_t num_coefficients() const noexcept { return static_cast<std::size_t>(beta.cols()); }

    std::vector<double> beta_row(std::size_t s) const {
        std::vector<double> b(num_coefficients());
        for (std::size_t c = 0; c < b.size(); ++c)
            b[c] = beta(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c));
        return b;
    }
};

/// Posterior draws for (alpha, beta) started at alpha = 1 and the
/// exponential-regression MLE for beta.
inline PosteriorDraws run_chain(const ModelSpec& spec, const Dataset& data, const ChainConfig& cfg) {
    cfg.validate();
    data.validate();

    PosteriorDraws out;
    const MleResult mle = mle_beta_under_exponential(spec, data);
    if (!mle.converged) out.warnings.push_back("exponential MLE did not converge; coefficients start at zero");
    if (mle.rank_deficient) out.warnings.push_back("design matrix is rank deficient");
    out.initial_beta = mle.beta;

    std::vector<double> beta0(mle.beta.data(), mle.beta.data() + mle.beta.size());
    GeRegressionTarget target(spec, data, 1.0, beta0);

    const std::size_t k = spec.num_coefficients();
    std::vector<double> scales(1 + k, cfg.initial_scale_beta);
    scales[0] = cfg.initial_scale_log_alpha;
    out.initial_scales = scales;

    const std::size_t keep = cfg.retained();
    out.alpha.reserve(keep);
    out.beta.resize(static_cast<Eigen::Index>(keep), static_cast<Eigen::Index>(k));

    Rng rng(cfg.seed);
    std::size_t row = 0;
    MwgStats stats = run_mwg(target, cfg, scales, rng, [&](const GeRegressionTarget& t) {
        out.alpha.push_back(t.value(0));
        const auto b = t.likelihood().beta();
        for (std::size_t c = 0; c < k; ++c)
            out.beta(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = b[c];
        ++row;
    });

    out.acceptance_rates = std::move(stats.acceptance_rates);
    out.proposal_scales = std::move(stats.final_scales);
    out.scale_history = std::move(stats.scale_history);
    for (std::size_t p = 0; p < out.acceptance_rates.size(); ++p) {
        if (out.acceptance_rates[p] == 0.0) {
            out.failed = true;
            out.warnings.push_back("parameter " + std::to_string(p) + " accepted no post-burn-in proposals");
        }
    }
    return out;
}

}  // namespace gereg
