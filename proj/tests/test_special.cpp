#include <gtest/gtest.h>

#include <boost/math/special_functions/polygamma.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <gereg/special.hpp>

using namespace gereg;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

const double kArgs[] = {1e-3, 0.01, 0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.5, 9.99, 10.0, 10.01, 20.0, 123.4, 1e4};

}  // namespace

TEST(Polygamma, DigammaMatchesBoost) {
    for (double z : kArgs) EXPECT_LT(rel_err(digamma(z), boost::math::polygamma(0, z)), 1e-13) << z;
}

TEST(Polygamma, TrigammaMatchesBoost) {
    for (double z : kArgs) EXPECT_LT(rel_err(trigamma(z), boost::math::polygamma(1, z)), 1e-13) << z;
}

TEST(Polygamma, TetragammaMatchesBoost) {
    for (double z : kArgs) EXPECT_LT(rel_err(tetragamma(z), boost::math::polygamma(2, z)), 1e-13) << z;
}

TEST(Polygamma, KnownValuesAtOne) {
    EXPECT_NEAR(digamma(1.0), -std::numbers::egamma, 1e-15);
    EXPECT_NEAR(trigamma(1.0), std::numbers::pi * std::numbers::pi / 6.0, 1e-14);
    EXPECT_NEAR(tetragamma(1.0), -2.0 * 1.2020569031595942, 1e-14);
}

TEST(Polygamma, RecurrenceHolds) {
    for (double z : {0.3, 1.7, 4.2, 12.0}) {
        EXPECT_NEAR(digamma(z + 1) - digamma(z), 1.0 / z, 1e-13);
        EXPECT_NEAR(trigamma(z) - trigamma(z + 1), 1.0 / (z * z), 1e-12);
        EXPECT_NEAR(tetragamma(z + 1) - tetragamma(z), 2.0 / (z * z * z), 1e-11);
    }
}

TEST(Polygamma, RejectsNonPositive) {
    EXPECT_THROW(digamma(0.0), std::domain_error);
    EXPECT_THROW(trigamma(-1.0), std::domain_error);
    EXPECT_THROW(tetragamma(-0.5), std::domain_error);
}
