#pragma once

// Simulation study harness.
//
// Settings 1-4 fix one fitted model and compare four shape priors;
// settings 5-8 fit both the parametric and semiparametric models to the
// same datasets under two priors of one family.
//
//   id  truth      fits                 priors
//   1   linear     parametric           pc:2.5 pc:5 gamma:0.01,0.01 gamma:1,1
//   2   nonlinear  parametric           (same four)
//   3   linear     semiparametric       (same four)
//   4   nonlinear  semiparametric       (same four)
//   5   linear     both                 gamma:0.01,0.01 gamma:1,1
//   6   linear     both                 pc:2.5 pc:5
//   7   nonlinear  both                 gamma:0.01,0.01 gamma:1,1
//   8   nonlinear  both                 pc:2.5 pc:5

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "format.hpp"
#include "functionals.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace gereg {

enum class Truth { linear, nonlinear };
enum class FitKind { parametric, semiparametric };

inline const char* to_string(Truth t) { return t == Truth::linear ? "linear" : "nonlinear"; }
inline const char* to_string(FitKind f) { return f == FitKind::parametric ? "parametric" : "semiparametric"; }

struct SimSetting {
    int id = 1;
    Truth truth = Truth::linear;
    std::vector<FitKind> fits;
    std::vector<AlphaPrior> priors;
    std::vector<double> alpha_grid{0.5, 1.0, 2.0};
    std::vector<std::size_t> n_grid{24, 99};
};

inline SimSetting sim_setting(int id) {
    const std::vector<AlphaPrior> all_four{AlphaPrior::pc(2.5), AlphaPrior::pc(5.0), AlphaPrior::gamma(0.01, 0.01),
                                           AlphaPrior::gamma(1.0, 1.0)};
    const std::vector<AlphaPrior> gammas{AlphaPrior::gamma(0.01, 0.01), AlphaPrior::gamma(1.0, 1.0)};
    const std::vector<AlphaPrior> pcs{AlphaPrior::pc(2.5), AlphaPrior::pc(5.0)};
    const std::vector<FitKind> both{FitKind::parametric, FitKind::semiparametric};
    SimSetting s;
    s.id = id;
    switch (id) {
        case 1: s.truth = Truth::linear; s.fits = {FitKind::parametric}; s.priors = all_four; break;
        case 2: s.truth = Truth::nonlinear; s.fits = {FitKind::parametric}; s.priors = all_four; break;
        case 3: s.truth = Truth::linear; s.fits = {FitKind::semiparametric}; s.priors = all_four; break;
        case 4: s.truth = Truth::nonlinear; s.fits = {FitKind::semiparametric}; s.priors = all_four; break;
        case 5: s.truth = Truth::linear; s.fits = both; s.priors = gammas; break;
        case 6: s.truth = Truth::linear; s.fits = both; s.priors = pcs; break;
        case 7: s.truth = Truth::nonlinear; s.fits = both; s.priors = gammas; break;
        case 8: s.truth = Truth::nonlinear; s.fits = both; s.priors = pcs; break;
        default: throw std::invalid_argument("simulation setting must be 1..8, got " + std::to_string(id));
    }
    return s;
}

/// Data-generating parameters: log lambda(x) = beta0 + beta1 * g(x) with
/// g(x) = x (linear) or sin(2 pi x) (nonlinear).
struct TruthParams {
    Truth truth = Truth::linear;
    double alpha = 1.0;
    double beta0 = 0.5;
    double beta1 = 1.0;

    double rate(double x) const {
        const double g = truth == Truth::linear ? x : std::sin(2.0 * std::numbers::pi * x);
        return std::exp(beta0 + beta1 * g);
    }

    double mean(double x) const { return gereg::mean(GEParams(alpha, rate(x))); }
};

/// Equispaced covariates i / (n + 1), i = 1..n, for the two study sizes.
inline std::vector<double> covariate_grid(std::size_t n) {
    if (n != 24 && n != 99)
        throw std::invalid_argument("simulation sample size must be 24 or 99, got " + std::to_string(n));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    return x;
}

inline Dataset gen_dataset(const TruthParams& truth, std::size_t n, std::uint64_t seed) {
    Dataset d;
    d.x = covariate_grid(n);
    d.y.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) d.y[i] = sample_one(rng, GEParams(truth.alpha, truth.rate(d.x[i])));
    return d;
}

inline Dataset gen_dataset(Truth truth, double alpha_true, std::size_t n, std::uint64_t seed) {
    return gen_dataset(TruthParams{truth, alpha_true}, n, seed);
}

struct SimOptions {
    int n_iter = 4000;
    int burn_in = 2000;
    int thin = 5;
    std::size_t num_basis = 10;
    double beta0_true = 0.5;
    double beta1_true = 1.0;
    unsigned jobs = 1;
};

inline ModelSpec simulation_model(FitKind fit, const AlphaPrior& prior, std::size_t num_basis) {
    if (fit == FitKind::parametric) return ModelSpec::linear(CovariateMap(0.0, 1.0), prior);
    return ModelSpec::spline(make_basis(num_basis, 0.0, 1.0), prior);
}

/// Mean over the grid of |mu_hat(x) - mu_true(x)| where mu_hat plugs in the
/// posterior mean of alpha and the pointwise posterior mean of lambda(x).
inline double abs_fit_error(double alpha_hat, std::span<const double> lambda_hat, const TruthParams& truth,
                            std::span<const double> x_grid) {
    if (lambda_hat.size() != x_grid.size() || x_grid.empty())
        throw std::invalid_argument("abs_fit_error: grid and rate estimates must match and be nonempty");
    double acc = 0.0;
    for (std::size_t i = 0; i < x_grid.size(); ++i)
        acc += std::abs(mean(GEParams(alpha_hat, lambda_hat[i])) - truth.mean(x_grid[i]));
    return acc / static_cast<double>(x_grid.size());
}

inline double abs_fit_error(const FittedModel& fit, const TruthParams& truth, std::span<const double> x_grid) {
    detail::require_draws(fit);
    double alpha_hat = 0.0;
    for (double a : fit.draws.alpha) alpha_hat += a;
    alpha_hat /= static_cast<double>(fit.draws.size());
    std::vector<double> lambda_hat(x_grid.size(), 0.0);
    for (std::size_t s = 0; s < fit.draws.size(); ++s) {
        const auto b = fit.draws.beta_row(s);
        for (std::size_t i = 0; i < x_grid.size(); ++i) lambda_hat[i] += rate(fit.spec, b, x_grid[i]);
    }
    for (double& l : lambda_hat) l /= static_cast<double>(fit.draws.size());
    return abs_fit_error(alpha_hat, lambda_hat, truth, x_grid);
}

struct ReplicateRecord {
    int setting = 0;
    Truth truth = Truth::linear;
    FitKind fit = FitKind::parametric;
    std::string prior;
    double alpha_true = 0.0;
    std::size_t n = 0;
    std::size_t replicate = 0;
    double beta0_true = 0.0;
    double beta1_true = 0.0;
    double alpha_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double abs_fit_error = 0.0;
    double waic = 0.0;
    bool failed = false;
    std::string note;

    bool covered() const noexcept { return !failed && alpha_true >= ci_lo && alpha_true <= ci_hi; }
};

namespace detail {
inline std::uint64_t alpha_key(double a) { return std::bit_cast<std::uint64_t>(a); }
}  // namespace detail

/// Seed of the dataset for one replicate. It depends only on the truth,
/// alpha, n and replicate index, so every prior and fitted model within a
/// setting (and settings sharing a truth) sees the same datasets.
inline std::uint64_t dataset_seed(std::uint64_t base, Truth truth, double alpha_true, std::size_t n, std::size_t rep) {
    return derive_seed(base, {0, static_cast<std::uint64_t>(truth), detail::alpha_key(alpha_true), n, rep});
}

inline std::uint64_t chain_seed(std::uint64_t base, int setting, std::size_t prior_index, FitKind fit,
                                double alpha_true, std::size_t n, std::size_t rep) {
    return derive_seed(base, {1, static_cast<std::uint64_t>(setting), prior_index, static_cast<std::uint64_t>(fit),
                              detail::alpha_key(alpha_true), n, rep});
}

/// All replicates of one (setting, prior, alpha, n) cell. Records are
/// ordered by replicate, then by fitted model in setting order.
inline std::vector<ReplicateRecord> run_cell(const SimSetting& setting, std::size_t prior_index, double alpha_true,
                                             std::size_t n, std::size_t replicates, std::uint64_t base_seed,
                                             const SimOptions& opt = {}) {
    if (prior_index >= setting.priors.size()) throw std::invalid_argument("run_cell: prior index out of range");
    if (replicates == 0) throw std::invalid_argument("run_cell: replicates must be positive");
    const AlphaPrior& prior = setting.priors[prior_index];
    const TruthParams truth{setting.truth, alpha_true, opt.beta0_true, opt.beta1_true};
    (void)covariate_grid(n);

    const std::size_t per_rep = setting.fits.size();
    std::vector<ReplicateRecord> out(replicates * per_rep);

    parallel_for(replicates, opt.jobs, [&](std::size_t rep) {
        const Dataset data = gen_dataset(truth, n, dataset_seed(base_seed, setting.truth, alpha_true, n, rep));
        for (std::size_t f = 0; f < per_rep; ++f) {
            ReplicateRecord r;
            r.setting = setting.id;
            r.truth = setting.truth;
            r.fit = setting.fits[f];
            r.prior = prior.label();
            r.alpha_true = alpha_true;
            r.n = n;
            r.replicate = rep;
            r.beta0_true = opt.beta0_true;
            r.beta1_true = opt.beta1_true;
            try {
                ChainConfig cfg = ChainConfig::simulation_protocol(
                    chain_seed(base_seed, setting.id, prior_index, r.fit, alpha_true, n, rep));
                cfg.n_iter = opt.n_iter;
                cfg.burn_in = opt.burn_in;
                cfg.thin = opt.thin;
                const FittedModel fit = fit_model(simulation_model(r.fit, prior, opt.num_basis), data, cfg);
                double sum = 0.0;
                for (double a : fit.draws.alpha) sum += a;
                r.alpha_hat = sum / static_cast<double>(fit.draws.size());
                const Interval ci = credible_interval(fit.draws.alpha, 0.95);
                r.ci_lo = ci.lo;
                r.ci_hi = ci.hi;
                r.abs_fit_error = abs_fit_error(fit, truth, data.x);
                r.waic = fit.waic;
                r.failed = fit.draws.failed;
                if (fit.draws.failed) r.note = "chain flagged: zero post-burn-in acceptance";
            } catch (const std::exception& e) {
                r.failed = true;
                r.note = e.what();
            }
            out[rep * per_rep + f] = std::move(r);
        }
    });
    return out;
}

/// Every cell of a setting, in prior x alpha x n order.
inline std::vector<ReplicateRecord> run_setting(const SimSetting& setting, std::size_t replicates,
                                                std::uint64_t base_seed, const SimOptions& opt = {}) {
    std::vector<ReplicateRecord> all;
    for (std::size_t p = 0; p < setting.priors.size(); ++p)
        for (double a : setting.alpha_grid)
            for (std::size_t n : setting.n_grid) {
                auto cell = run_cell(setting, p, a, n, replicates, base_seed, opt);
                all.insert(all.end(), std::make_move_iterator(cell.begin()), std::make_move_iterator(cell.end()));
            }
    return all;
}

struct AggregateRow {
    int setting = 0;
    Truth truth = Truth::linear;
    FitKind fit = FitKind::parametric;
    std::string prior;
    double alpha_true = 0.0;
    std::size_t n = 0;
    std::size_t replicates = 0;
    std::size_t failed = 0;
    double coverage = 0.0;           // fraction of usable replicates whose 95% CI holds alpha_true
    double abs_bias = 0.0;           // |mean(alpha_hat) - alpha_true|
    double mean_abs_error = 0.0;     // mean |alpha_hat - alpha_true|
    double mean_abs_fit_error = 0.0;
    double mean_waic = 0.0;
    bool empty = false;              // no usable replicate
};

/// Group records by (setting, fit, prior, alpha, n) in order of first
/// appearance. Failed replicates are counted but excluded from the means.
inline std::vector<AggregateRow> aggregate(std::span<const ReplicateRecord> records) {
    std::vector<AggregateRow> rows;
    std::vector<std::size_t> usable;
    std::vector<double> sum_alpha, sum_abs_err, sum_fit, sum_waic;
    std::vector<std::size_t> hits;
    for (const auto& r : records) {
        std::size_t g = 0;
        for (; g < rows.size(); ++g) {
            const auto& a = rows[g];
            if (a.setting == r.setting && a.fit == r.fit && a.prior == r.prior && a.alpha_true == r.alpha_true &&
                a.n == r.n)
                break;
        }
        if (g == rows.size()) {
            AggregateRow a;
            a.setting = r.setting;
            a.truth = r.truth;
            a.fit = r.fit;
            a.prior = r.prior;
            a.alpha_true = r.alpha_true;
            a.n = r.n;
            rows.push_back(a);
            usable.push_back(0);
            hits.push_back(0);
            sum_alpha.push_back(0.0);
            sum_abs_err.push_back(0.0);
            sum_fit.push_back(0.0);
            sum_waic.push_back(0.0);
        }
        auto& a = rows[g];
        ++a.replicates;
        if (r.failed) {
            ++a.failed;
            continue;
        }
        ++usable[g];
        if (r.covered()) ++hits[g];
        sum_alpha[g] += r.alpha_hat;
        sum_abs_err[g] += std::abs(r.alpha_hat - r.alpha_true);
        sum_fit[g] += r.abs_fit_error;
        sum_waic[g] += r.waic;
    }
    for (std::size_t g = 0; g < rows.size(); ++g) {
        auto& a = rows[g];
        if (usable[g] == 0) {
            a.empty = true;
            a.coverage = a.abs_bias = a.mean_abs_error = a.mean_abs_fit_error = a.mean_waic =
                std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double m = static_cast<double>(usable[g]);
        a.coverage = static_cast<double>(hits[g]) / m;
        a.abs_bias = std::abs(sum_alpha[g] / m - a.alpha_true);
        a.mean_abs_error = sum_abs_err[g] / m;
        a.mean_abs_fit_error = sum_fit[g] / m;
        a.mean_waic = sum_waic[g] / m;
    }
    return rows;
}

inline void write_replicates_csv(std::ostream& os, std::span<const ReplicateRecord> records) {
    os << "setting,truth,fit,prior,alpha_true,n,replicate,beta0_true,beta1_true,alpha_hat,ci_lo,ci_hi,covered,"
          "abs_fit_error,waic,failed\n";
    for (const auto& r : records) {
        os << r.setting << ',' << to_string(r.truth) << ',' << to_string(r.fit) << ',' << '"' << r.prior << '"' << ','
           << format_double(r.alpha_true) << ',' << r.n << ',' << r.replicate << ',' << format_double(r.beta0_true)
           << ',' << format_double(r.beta1_true) << ',' << format_double(r.alpha_hat) << ','
           << format_double(r.ci_lo) << ',' << format_double(r.ci_hi) << ',' << (r.covered() ? 1 : 0) << ','
           << format_double(r.abs_fit_error) << ',' << format_double(r.waic) << ',' << (r.failed ? 1 : 0) << '\n';
    }
}

inline void write_aggregate_csv(std::ostream& os, std::span<const AggregateRow> rows) {
    os << "setting,truth,fit,prior,alpha_true,n,replicates,failed,coverage,abs_bias,mean_abs_error,"
          "mean_abs_fit_error,mean_waic,empty\n";
    for (const auto& a : rows) {
        os << a.setting << ',' << to_string(a.truth) << ',' << to_string(a.fit) << ',' << '"' << a.prior << '"' << ','
           << format_double(a.alpha_true) << ',' << a.n << ',' << a.replicates << ',' << a.failed << ','
           << format_double(a.coverage) << ',' << format_double(a.abs_bias) << ','
           << format_double(a.mean_abs_error) << ',' << format_double(a.mean_abs_fit_error) << ','
           << format_double(a.mean_waic) << ',' << (a.empty ? 1 : 0) << '\n';
    }
}

}  // namespace gereg
