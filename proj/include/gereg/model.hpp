#pragma once

// GE regression: Y | x ~ GE(alpha, lambda(x)) with log lambda(x) either
// linear in the (rescaled) covariate or a cubic B-spline expansion.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gedist.hpp"
#include "priors.hpp"
#include "splines.hpp"

namespace gereg {

/// Log-likelihood returned for data outside the support.
inline constexpr double kLogLikSentinel = -1e300;

enum class RateForm { linear, spline };

inline const char* to_string(RateForm f) { return f == RateForm::linear ? "linear" : "spline"; }

class ModelSpec {
public:
    /// log lambda(x) = beta_0 + beta_1 u, u = map(x) in [0, 1].
    static ModelSpec linear(CovariateMap map, AlphaPrior alpha_prior, BetaPrior beta_prior = {}) {
        return ModelSpec(RateForm::linear, map, std::nullopt, alpha_prior, beta_prior);
    }

    /// log lambda(x) = sum_k beta_k B_k(x).
    static ModelSpec spline(SplineBasis basis, AlphaPrior alpha_prior, BetaPrior beta_prior = {}) {
        const CovariateMap map = basis.map();
        return ModelSpec(RateForm::spline, map, std::move(basis), alpha_prior, beta_prior);
    }

    RateForm form() const noexcept { return form_; }
    const CovariateMap& map() const noexcept { return map_; }
    const AlphaPrior& alpha_prior() const noexcept { return alpha_prior_; }
    const BetaPrior& beta_prior() const noexcept { return beta_prior_; }
    const SplineBasis& basis() const {
        if (!basis_) throw std::logic_error("ModelSpec: linear rate form has no spline basis");
        return *basis_;
    }

    std::size_t num_coefficients() const noexcept { return form_ == RateForm::linear ? 2 : basis_->size(); }

    ModelSpec with_alpha_prior(AlphaPrior p) const {
        ModelSpec s = *this;
        s.alpha_prior_ = p;
        return s;
    }

    /// Design row at raw covariate x.
    std::vector<double> design_row(double x) const {
        if (form_ == RateForm::linear) return {1.0, map_.to_unit(x)};
        return basis_->eval(x);
    }

    /// d(design row)/dx at raw covariate x.
    std::vector<double> design_row_deriv(double x) const {
        if (form_ == RateForm::linear) return {0.0, map_.slope()};
        return basis_->eval_deriv(x);
    }

    /// Linear predictor eta = log lambda(x).
    double predictor(std::span<const double> beta, double x) const {
        check_size(beta);
        if (form_ == RateForm::linear) return beta[0] + beta[1] * map_.to_unit(x);
        const auto local = basis_->eval_local(x);
        double eta = 0.0;
        for (int r = 0; r <= SplineBasis::kDegree; ++r) eta += beta[local.first + r] * local.values[r];
        return eta;
    }

    /// d eta / dx at raw covariate x.
    double predictor_deriv(std::span<const double> beta, double x) const {
        check_size(beta);
        if (form_ == RateForm::linear) return beta[1] * map_.slope();
        const auto local = basis_->eval_deriv_local(x);
        double d = 0.0;
        for (int r = 0; r <= SplineBasis::kDegree; ++r) d += beta[local.first + r] * local.values[r];
        return d;
    }

    void check_size(std::span<const double> beta) const {
        if (beta.size() != num_coefficients())
            throw std::invalid_argument("coefficient vector has length " + std::to_string(beta.size()) +
                                        ", model expects " + std::to_string(num_coefficients()));
    }

    void check_domain(double x) const {
        if (form_ == RateForm::spline && !basis_->contains(x))
            throw std::out_of_range("covariate " + std::to_string(x) + " outside the spline domain");
    }

private:
    ModelSpec(RateForm f, CovariateMap map, std::optional<SplineBasis> basis, AlphaPrior ap, BetaPrior bp)
        : form_(f), map_(map), basis_(std::move(basis)), alpha_prior_(ap), beta_prior_(bp) {
        if (!(bp.sd > 0.0)) throw std::invalid_argument("BetaPrior: sd must be positive");
    }

    RateForm form_;
    CovariateMap map_;
    std::optional<SplineBasis> basis_;
    AlphaPrior alpha_prior_;
    BetaPrior beta_prior_;
};

/// Responses y (positive) with one covariate value each.
struct Dataset {
    std::vector<double> y;
    std::vector<double> x;

    std::size_t size() const noexcept { return y.size(); }

    void validate() const {
        if (y.size() != x.size()) throw std::invalid_argument("Dataset: y and x differ in length");
        if (y.empty()) throw std::invalid_argument("Dataset: no observations");
        for (double v : y)
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("Dataset: responses must be positive");
    }
};

inline double rate(const ModelSpec& spec, std::span<const double> beta, double x) {
    spec.check_domain(x);
    return std::exp(spec.predictor(beta, x));
}

inline double log_likelihood(const ModelSpec& spec, double alpha, std::span<const double> beta, const Dataset& data) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::domain_error("log_likelihood: alpha must be positive");
    if (data.y.size() != data.x.size()) throw std::invalid_argument("log_likelihood: y and x differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!(data.y[i] > 0.0)) return kLogLikSentinel;
        const double lambda = rate(spec, beta, data.x[i]);
        total += log_pdf(data.y[i], GEParams(alpha, lambda));
    }
    return total;
}

/// Unnormalized log posterior: likelihood + Gaussian coefficient priors +
/// shape prior.
inline double log_posterior(const ModelSpec& spec, double alpha, std::span<const double> beta, const Dataset& data) {
    const double ll = log_likelihood(spec, alpha, beta, data);
    if (ll == kLogLikSentinel) return kLogLikSentinel;
    double lp = ll + spec.alpha_prior().log_density(alpha);
    for (double b : beta) lp += spec.beta_prior().log_density(b);
    return lp;
}

// ---------------------------------------------------------------------------
// WAIC

/// WAIC = -2 (lppd - p_waic) from an S x n matrix of pointwise
/// log-likelihoods (draws in rows).
inline double waic(const Eigen::MatrixXd& loglik) {
    const Eigen::Index draws = loglik.rows();
    if (draws < 2) throw std::invalid_argument("waic: need at least 2 draws");
    if (loglik.cols() < 1) throw std::invalid_argument("waic: need at least 1 observation");
    if (!loglik.allFinite()) throw std::invalid_argument("waic: log-likelihood entries must be finite");
    double lppd = 0.0;
    double p_waic = 0.0;
    for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
        const auto col = loglik.col(i);
        const double m = col.maxCoeff();
        const double lse = m + std::log((col.array() - m).exp().sum());
        lppd += lse - std::log(static_cast<double>(draws));
        const double mu = col.mean();
        p_waic += (col.array() - mu).square().sum() / static_cast<double>(draws - 1);
    }
    return -2.0 * (lppd - p_waic);
}

/// Streaming WAIC: feed one draw's pointwise log-likelihoods at a time.
class WaicAccumulator {
public:
    explicit WaicAccumulator(std::size_t n_obs)
        : max_(n_obs, -std::numeric_limits<double>::infinity()), sumexp_(n_obs, 0.0), mean_(n_obs, 0.0),
          m2_(n_obs, 0.0) {}

    void add(std::span<const double> pointwise) {
        if (pointwise.size() != max_.size()) throw std::invalid_argument("WaicAccumulator: wrong row length");
        ++draws_;
        for (std::size_t i = 0; i < pointwise.size(); ++i) {
            const double v = pointwise[i];
            if (!std::isfinite(v)) throw std::invalid_argument("WaicAccumulator: non-finite log-likelihood");
            if (v > max_[i]) {
                sumexp_[i] = sumexp_[i] * std::exp(max_[i] - v) + 1.0;
                max_[i] = v;
            } else {
                sumexp_[i] += std::exp(v - max_[i]);
            }
            const double delta = v - mean_[i];
            mean_[i] += delta / static_cast<double>(draws_);
            m2_[i] += delta * (v - mean_[i]);
        }
    }

    std::size_t draws() const noexcept { return draws_; }

    double value() const {
        if (draws_ < 2) throw std::invalid_argument("waic: need at least 2 draws");
        const double log_s = std::log(static_cast<double>(draws_));
        double lppd = 0.0, p_waic = 0.0;
        for (std::size_t i = 0; i < max_.size(); ++i) {
            lppd += max_[i] + std::log(sumexp_[i]) - log_s;
            p_waic += m2_[i] / static_cast<double>(draws_ - 1);
        }
        return -2.0 * (lppd - p_waic);
    }

private:
    std::vector<double> max_, sumexp_, mean_, m2_;
    std::size_t draws_ = 0;
};

// ---------------------------------------------------------------------------
// Initial coefficients: MLE of the exponential (alpha = 1) regression.

struct MleResult {
    Eigen::VectorXd beta;
    bool converged = false;
    bool rank_deficient = false;
    int iterations = 0;
};

/// Maximize sum_i [eta_i - exp(eta_i) y_i], eta = X beta, by damped Newton.
inline MleResult mle_exponential_regression(const Eigen::MatrixXd& design, std::span<const double> y,
                                            int max_iter = 100) {
    const Eigen::Index n = design.rows(), p = design.cols();
    if (n == 0 || static_cast<std::size_t>(n) != y.size())
        throw std::invalid_argument("mle: design rows must match a nonempty response vector");
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

    MleResult res;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    res.rank_deficient = qr.rank() < p;

    const auto objective = [&](const Eigen::VectorXd& b) {
        const Eigen::ArrayXd eta = (design * b).array();
        return (eta - eta.exp() * yv.array()).sum();
    };

    // Start from the constant-rate MLE projected onto the column space.
    double ybar = yv.mean();
    Eigen::VectorXd beta;
    {
        const Eigen::VectorXd target = Eigen::VectorXd::Constant(n, -std::log(ybar));
        beta = design.completeOrthogonalDecomposition().solve(target);
        if (!beta.allFinite()) beta = Eigen::VectorXd::Zero(p);
    }
    double f = objective(beta);

    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        const Eigen::ArrayXd w = (design * beta).array().exp() * yv.array();
        const Eigen::VectorXd grad = design.transpose() * (1.0 - w).matrix();
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10 * std::max<double>(1.0, std::sqrt(static_cast<double>(n)))) {
            res.converged = true;
            break;
        }
        const Eigen::MatrixXd hess = design.transpose() * w.matrix().asDiagonal() * design;
        Eigen::VectorXd step;
        if (res.rank_deficient) {
            step = hess.completeOrthogonalDecomposition().solve(grad);
        } else {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
            step = ldlt.solve(grad);
            if (ldlt.info() != Eigen::Success || !step.allFinite())
                step = hess.completeOrthogonalDecomposition().solve(grad);
        }
        double t = 1.0;
        Eigen::VectorXd trial = beta + step;
        double f_trial = objective(trial);
        while (!(std::isfinite(f_trial) && f_trial >= f) && t > 1e-10) {
            t *= 0.5;
            trial = beta + t * step;
            f_trial = objective(trial);
        }
        if (!(std::isfinite(f_trial) && f_trial >= f)) break;
        const double move = (trial - beta).lpNorm<Eigen::Infinity>();
        beta = trial;
        f = f_trial;
        if (move < 1e-14 * (1.0 + beta.lpNorm<Eigen::Infinity>())) {
            res.converged = true;
            break;
        }
    }
    res.beta = res.converged ? beta : Eigen::VectorXd::Zero(p);
    return res;
}

inline Eigen::MatrixXd model_design(const ModelSpec& spec, std::span<const double> xs) {
    const auto k = static_cast<Eigen::Index>(spec.num_coefficients());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), k);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        spec.check_domain(xs[i]);
        const auto row = spec.design_row(xs[i]);
        for (Eigen::Index j = 0; j < k; ++j) m(static_cast<Eigen::Index>(i), j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

inline MleResult mle_beta_under_exponential(const ModelSpec& spec, const Dataset& data) {
    data.validate();
    return mle_exponential_regression(model_design(spec, data.x), data.y);
}

// ---------------------------------------------------------------------------
// Grouped likelihood with cached per-covariate terms.
//
// Observations sharing a covariate value share lambda. Per group g it keeps
// eta_g, n_g, S_g = sum y, and L_g = sum log(1 - e^{-lambda_g y}), so that
//   loglik = sum_g n_g (log alpha + eta_g) + (alpha - 1) L_g - lambda_g S_g.
// An alpha move is O(1); a coefficient move touches only the groups where
// that basis function is nonzero.

class GroupedLikelihood {
public:
    GroupedLikelihood(const ModelSpec& spec, const Dataset& data) : k_(spec.num_coefficients()) {
        data.validate();
        std::vector<std::size_t> order(data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.x[a] < data.x[b]; });

        for (std::size_t idx : order) {
            const double x = data.x[idx];
            if (xs_.empty() || x != xs_.back()) {
                spec.check_domain(x);
                xs_.push_back(x);
                offsets_.push_back(y_.size());
                const auto row = spec.design_row(x);
                design_.insert(design_.end(), row.begin(), row.end());
            }
            y_.push_back(data.y[idx]);
            obs_order_.push_back(idx);
        }
        offsets_.push_back(y_.size());

        const std::size_t g = xs_.size();
        sum_y_.assign(g, 0.0);
        for (std::size_t j = 0; j < g; ++j)
            for (std::size_t i = offsets_[j]; i < offsets_[j + 1]; ++i) sum_y_[j] += y_[i];

        touched_.resize(k_);
        for (std::size_t j = 0; j < g; ++j)
            for (std::size_t c = 0; c < k_; ++c)
                if (design_[j * k_ + c] != 0.0) touched_[c].push_back(j);

        eta_.assign(g, 0.0);
        lambda_.assign(g, 1.0);
        log1m_.assign(g, 0.0);
        staged_eta_.resize(g);
        staged_lambda_.resize(g);
        staged_log1m_.resize(g);
    }

    std::size_t num_groups() const noexcept { return xs_.size(); }
    std::size_t num_observations() const noexcept { return y_.size(); }
    std::size_t num_coefficients() const noexcept { return k_; }
    std::span<const double> group_covariates() const noexcept { return xs_; }

    void set_state(double alpha, std::span<const double> beta) {
        if (beta.size() != k_) throw std::invalid_argument("GroupedLikelihood: wrong coefficient count");
        alpha_ = alpha;
        beta_.assign(beta.begin(), beta.end());
        for (std::size_t j = 0; j < xs_.size(); ++j) {
            double eta = 0.0;
            for (std::size_t c = 0; c < k_; ++c) eta += design_[j * k_ + c] * beta_[c];
            eta_[j] = eta;
            lambda_[j] = std::exp(eta);
            log1m_[j] = group_log1m(j, lambda_[j]);
        }
        refresh_totals();
    }

    double alpha() const noexcept { return alpha_; }
    std::span<const double> beta() const noexcept { return beta_; }

    double loglik() const noexcept { return loglik_at_alpha(alpha_); }

    double loglik_at_alpha(double alpha) const noexcept {
        const double n = static_cast<double>(y_.size());
        return n * std::log(alpha) + total_eta_ + (alpha - 1.0) * total_log1m_ - total_rate_y_;
    }

    /// loglik(beta with beta_c = value) - loglik(current); stages the move.
    double stage_coefficient(std::size_t c, double value) {
        const double delta_b = value - beta_[c];
        double diff = 0.0;
        const double am1 = alpha_ - 1.0;
        for (std::size_t j : touched_[c]) {
            const double n = static_cast<double>(offsets_[j + 1] - offsets_[j]);
            const double eta = eta_[j] + design_[j * k_ + c] * delta_b;
            const double lambda = std::exp(eta);
            const double l1m = group_log1m(j, lambda);
            staged_eta_[j] = eta;
            staged_lambda_[j] = lambda;
            staged_log1m_[j] = l1m;
            diff += n * (eta - eta_[j]) + am1 * (l1m - log1m_[j]) - (lambda - lambda_[j]) * sum_y_[j];
        }
        staged_coef_ = c;
        staged_value_ = value;
        return diff;
    }

    void commit_coefficient() {
        const std::size_t c = staged_coef_;
        for (std::size_t j : touched_[c]) {
            eta_[j] = staged_eta_[j];
            lambda_[j] = staged_lambda_[j];
            log1m_[j] = staged_log1m_[j];
        }
        beta_[c] = staged_value_;
        refresh_totals();
    }

    void set_alpha(double alpha) noexcept { alpha_ = alpha; }

    /// Pointwise log-likelihoods at (alpha, beta), in original data order.
    void pointwise(double alpha, std::span<const double> beta, std::span<double> out) const {
        const double log_alpha = std::log(alpha);
        for (std::size_t j = 0; j < xs_.size(); ++j) {
            double eta = 0.0;
            for (std::size_t c = 0; c < k_; ++c) eta += design_[j * k_ + c] * beta[c];
            const double lambda = std::exp(eta);
            for (std::size_t i = offsets_[j]; i < offsets_[j + 1]; ++i) {
                const double u = lambda * y_[i];
                out[obs_order_[i]] = log_alpha + eta + (alpha - 1.0) * log1mexp(u) - u;
            }
        }
    }

private:
    double group_log1m(std::size_t j, double lambda) const noexcept {
        double acc = 0.0;
        for (std::size_t i = offsets_[j]; i < offsets_[j + 1]; ++i) acc += log1mexp(lambda * y_[i]);
        return acc;
    }

    void refresh_totals() noexcept {
        total_eta_ = total_log1m_ = total_rate_y_ = 0.0;
        for (std::size_t j = 0; j < xs_.size(); ++j) {
            const double n = static_cast<double>(offsets_[j + 1] - offsets_[j]);
            total_eta_ += n * eta_[j];
            total_log1m_ += log1m_[j];
            total_rate_y_ += lambda_[j] * sum_y_[j];
        }
    }

    std::size_t k_;
    std::vector<double> xs_;
    std::vector<std::size_t> offsets_;
    std::vector<double> y_;
    std::vector<std::size_t> obs_order_;
    std::vector<double> design_;  // groups x k, row-major
    std::vector<double> sum_y_;
    std::vector<std::vector<std::size_t>> touched_;

    double alpha_ = 1.0;
    std::vector<double> beta_;
    std::vector<double> eta_, lambda_, log1m_;
    std::vector<double> staged_eta_, staged_lambda_, staged_log1m_;
    std::size_t staged_coef_ = 0;
    double staged_value_ = 0.0;
    double total_eta_ = 0.0, total_log1m_ = 0.0, total_rate_y_ = 0.0;
};

}  // namespace gereg
