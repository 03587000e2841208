#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gereg/gedist.hpp>
#include <gereg/model.hpp>
#include <gereg/random.hpp>

using namespace gereg;

namespace {

Dataset random_dataset(std::size_t n, std::uint64_t seed, bool repeated_x = false) {
    Rng rng(seed);
    Dataset d;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = repeated_x ? static_cast<double>(i % 7) / 6.0 : rng.uniform();
        d.x.push_back(x);
        d.y.push_back(sample_one(rng, GEParams(1.7, std::exp(0.3 + 0.8 * x))));
    }
    return d;
}

ModelSpec linear01(AlphaPrior p = AlphaPrior::pc(2.5)) { return ModelSpec::linear(CovariateMap(0, 1), p); }
ModelSpec spline01(std::size_t k = 6, AlphaPrior p = AlphaPrior::pc(2.5)) {
    return ModelSpec::spline(make_basis(k, 0, 1), p);
}

// WAIC from the definition in extended precision, without log-sum-exp.
double waic_direct(const Eigen::MatrixXd& m) {
    long double lppd = 0, pw = 0;
    const long double s = m.rows();
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        long double e = 0, mu = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            e += std::exp(static_cast<long double>(m(r, i)));
            mu += m(r, i);
        }
        mu /= s;
        long double v = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r) v += (m(r, i) - mu) * (m(r, i) - mu);
        lppd += std::log(e / s);
        pw += v / (s - 1);
    }
    return static_cast<double>(-2 * (lppd - pw));
}

}  // namespace

TEST(Rate, Examples) {
    const std::vector<double> zero{0, 0}, b12{1, 2};
    for (double x : {0.0, 0.3, 1.0}) EXPECT_EQ(rate(linear01(), zero, x), 1.0);
    EXPECT_NEAR(rate(linear01(), b12, 0.5), std::exp(2.0), 1e-14);
    const auto s = spline01(8);
    const std::vector<double> c(8, -0.7);
    for (double x = 0; x <= 1; x += 0.05) EXPECT_NEAR(rate(s, c, x), std::exp(-0.7), 1e-14);
}

TEST(Rate, RawCovariateIsRescaled) {
    const auto spec = ModelSpec::linear(CovariateMap(1901, 2022), AlphaPrior::pc(1));
    const std::vector<double> b{0.5, -1.0};
    EXPECT_NEAR(rate(spec, b, 1901), std::exp(0.5), 1e-14);
    EXPECT_NEAR(rate(spec, b, 2022), std::exp(-0.5), 1e-14);
}

TEST(Rate, Errors) {
    const std::vector<double> three{0, 0, 0};
    EXPECT_THROW(rate(linear01(), three, 0.5), std::invalid_argument);
    const std::vector<double> six(6, 0.0);
    EXPECT_THROW(rate(spline01(), six, 1.5), std::out_of_range);
}

TEST(LogLikelihood, Examples) {
    const std::vector<double> zero{0, 0};
    EXPECT_NEAR(log_likelihood(linear01(), 1.0, zero, Dataset{{1.0}, {0.2}}), -1.0, 1e-15);

    const auto d = random_dataset(50, 3);
    const std::vector<double> b{0.2, 0.9};
    double sum = 0;
    for (std::size_t i = 0; i < d.size(); ++i) sum += log_pdf(d.y[i], GEParams(1.3, std::exp(0.2 + 0.9 * d.x[i])));
    EXPECT_NEAR(log_likelihood(linear01(), 1.3, b, d), sum, 1e-12 * std::abs(sum));

    Dataset far = d;
    far.y[7] = 1e3;
    EXPECT_LT(log_likelihood(linear01(), 1.3, b, far), log_likelihood(linear01(), 1.3, b, d));
}

TEST(LogLikelihood, SentinelForNonPositiveResponse) {
    const std::vector<double> zero{0, 0};
    EXPECT_EQ(log_likelihood(linear01(), 1.0, zero, Dataset{{1.0, 0.0}, {0.2, 0.4}}), kLogLikSentinel);
    EXPECT_EQ(log_posterior(linear01(), 1.0, zero, Dataset{{-1.0}, {0.2}}), kLogLikSentinel);
    EXPECT_THROW(log_likelihood(linear01(), 0.0, zero, Dataset{{1.0}, {0.2}}), std::domain_error);
}

TEST(LogPosterior, TermwiseDifference) {
    const auto d = random_dataset(40, 8);
    const std::vector<double> b{0.1, 0.7};
    const auto spec = linear01(AlphaPrior::pc(2.5));
    const double diff = log_posterior(spec, 1.1, b, d) - log_posterior(spec, 1.0, b, d);
    double ll = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double l = std::exp(0.1 + 0.7 * d.x[i]);
        ll += log_pdf(d.y[i], GEParams(1.1, l)) - log_pdf(d.y[i], GEParams(1.0, l));
    }
    const double prior = pc_log_density(1.1, 2.5) - pc_log_density(1.0, 2.5);
    EXPECT_NEAR(diff, ll + prior, 1e-10);
}

TEST(LogPosterior, WideBetaPriorWashesOut) {
    const auto d = random_dataset(40, 9);
    const auto spec = ModelSpec::linear(CovariateMap(0, 1), AlphaPrior::gamma(1, 1), BetaPrior{0.0, 1e6});
    const std::vector<double> b1{0.1, 0.7}, b2{0.4, 0.2};
    const double dp = log_posterior(spec, 1.2, b1, d) - log_posterior(spec, 1.2, b2, d);
    const double dl = log_likelihood(spec, 1.2, b1, d) - log_likelihood(spec, 1.2, b2, d);
    EXPECT_NEAR(dp, dl, 1e-9);
    EXPECT_TRUE(std::isfinite(log_posterior(spec, 1e-3, b1, d)));
    EXPECT_TRUE(std::isfinite(log_posterior(spec, 1e3, b1, d)));
}

TEST(Waic, Examples) {
    Eigen::MatrixXd m(2, 1);
    m << std::log(0.5), std::log(0.5);
    EXPECT_NEAR(waic(m), -2 * std::log(0.5), 1e-15);

    Rng rng(4);
    Eigen::MatrixXd r(10, 5);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = -2.0 + rng.normal();
    EXPECT_NEAR(waic(r), waic_direct(r), 1e-12);
    const double c = 3.7;
    EXPECT_NEAR(waic((r.array() + c).matrix()), waic(r) - 2 * c * r.cols(), 1e-12);
}

TEST(Waic, AccumulatorMatchesMatrix) {
    Rng rng(5);
    Eigen::MatrixXd r(200, 30);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = -50.0 + 3.0 * rng.normal();
    WaicAccumulator acc(30);
    std::vector<double> row(30);
    for (Eigen::Index s = 0; s < r.rows(); ++s) {
        for (Eigen::Index i = 0; i < 30; ++i) row[i] = r(s, i);
        acc.add(row);
    }
    EXPECT_NEAR(acc.value(), waic(r), 1e-9 * std::abs(waic(r)));
}

TEST(Waic, Errors) {
    EXPECT_THROW(waic(Eigen::MatrixXd::Zero(1, 3)), std::invalid_argument);
    WaicAccumulator acc(2);
    EXPECT_THROW(acc.add(std::vector<double>{1.0}), std::invalid_argument);
    acc.add(std::vector<double>{1.0, 2.0});
    EXPECT_THROW(acc.value(), std::invalid_argument);
}

TEST(Mle, InterceptOnlyIsExponentialMle) {
    const std::vector<double> y{0.5, 2.0, 1.25, 3.0, 0.75};
    const double m = (0.5 + 2.0 + 1.25 + 3.0 + 0.75) / 5;
    const auto res = mle_exponential_regression(Eigen::MatrixXd::Ones(5, 1), y);
    ASSERT_TRUE(res.converged);
    EXPECT_NEAR(res.beta[0], -std::log(m), 1e-12);
}

TEST(Mle, GradientVanishesAtOptimum) {
    for (bool spline : {false, true}) {
        const auto d = random_dataset(300, 12);
        const auto spec = spline ? spline01(7) : linear01();
        const auto res = mle_beta_under_exponential(spec, d);
        ASSERT_TRUE(res.converged);
        EXPECT_FALSE(res.rank_deficient);
        std::vector<double> b(res.beta.data(), res.beta.data() + res.beta.size());
        for (std::size_t c = 0; c < b.size(); ++c) {
            const double h = 1e-6;
            auto bp = b, bm = b;
            bp[c] += h;
            bm[c] -= h;
            const double g =
                (log_likelihood(spec, 1.0, bp, d) - log_likelihood(spec, 1.0, bm, d)) / (2 * h);
            EXPECT_LT(std::abs(g), 1e-6 * d.size()) << c;
        }
    }
}

TEST(Mle, DuplicatedColumnIsFlagged) {
    Eigen::MatrixXd x(6, 3);
    const std::vector<double> y{1, 2, 0.5, 4, 1.5, 0.7};
    for (int i = 0; i < 6; ++i) x.row(i) << 1.0, i / 5.0, i / 5.0;
    const auto res = mle_exponential_regression(x, y);
    EXPECT_TRUE(res.rank_deficient);
    EXPECT_TRUE(res.beta.allFinite());
}

TEST(GroupedLikelihood, AgreesWithDirectLikelihood) {
    for (bool repeated : {false, true}) {
        const auto d = random_dataset(60, 21, repeated);
        const auto spec = spline01(6);
        std::vector<double> b{0.1, 0.5, 0.2, -0.3, 0.4, 0.9};
        GroupedLikelihood g(spec, d);
        g.set_state(1.4, b);
        EXPECT_NEAR(g.loglik(), log_likelihood(spec, 1.4, b, d), 1e-10);
        EXPECT_NEAR(g.loglik_at_alpha(0.6), log_likelihood(spec, 0.6, b, d), 1e-10);

        const double delta = g.stage_coefficient(2, 1.1);
        auto b2 = b;
        b2[2] = 1.1;
        EXPECT_NEAR(delta, log_likelihood(spec, 1.4, b2, d) - log_likelihood(spec, 1.4, b, d), 1e-10);
        g.commit_coefficient();
        EXPECT_NEAR(g.loglik(), log_likelihood(spec, 1.4, b2, d), 1e-10);
        g.set_alpha(2.2);
        EXPECT_NEAR(g.loglik(), log_likelihood(spec, 2.2, b2, d), 1e-10);

        std::vector<double> pw(d.size());
        g.pointwise(2.2, b2, pw);
        for (std::size_t i = 0; i < d.size(); ++i)
            EXPECT_NEAR(pw[i], log_pdf(d.y[i], GEParams(2.2, rate(spec, b2, d.x[i]))), 1e-11);
    }
}
