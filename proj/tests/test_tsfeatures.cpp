#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "driftcast/tsfeatures.hpp"

using namespace driftcast;
using namespace driftcast::features;

namespace {

// Direct double loop over lag pairs; shares nothing with the library path.
std::vector<double> naive_acf(const std::vector<double>& x, std::size_t max_lag) {
    const auto n = x.size();
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(n);
    double den = 0.0;
    for (double v : x) den += (v - mu) * (v - mu);
    std::vector<double> r;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i + k) num += (x[i] - mu) * (x[j] - mu);
            }
        }
        r.push_back(num / den);
    }
    return r;
}

// phi_kk from solving the order-k Yule-Walker system R phi = r directly.
std::vector<double> yule_walker_pacf(const std::vector<double>& r) {
    std::vector<double> out;
    for (std::size_t k = 1; k <= r.size(); ++k) {
        Eigen::MatrixXd R(k, k);
        Eigen::VectorXd rhs(k);
        for (std::size_t i = 0; i < k; ++i) {
            rhs(static_cast<Eigen::Index>(i)) = r[i];
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t lag = i > j ? i - j : j - i;
                R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = lag == 0 ? 1.0 : r[lag - 1];
            }
        }
        const Eigen::VectorXd phi = R.fullPivLu().solve(rhs);
        out.push_back(phi(static_cast<Eigen::Index>(k - 1)));
    }
    return out;
}

std::vector<double> random_walkish(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> e(0.0, 1.0);
    std::uniform_real_distribution<double> coef(-0.9, 0.9);
    const double a = coef(rng), b = coef(rng) * 0.3;
    std::vector<double> x(n);
    double p1 = 0.0, p2 = 0.0;
    for (auto& v : x) {
        v = a * p1 + b * p2 + e(rng);
        p2 = p1;
        p1 = v;
    }
    return x;
}

FeatureErrc feature_error(auto&& fn) {
    try {
        fn();
    } catch (const FeatureError& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected FeatureError";
    return FeatureErrc::WindowTooShort;
}

}  // namespace

TEST(Acf, HandComputedLinearRamp) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const auto r = acf(x, 1);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NEAR(r[0], 0.4, 1e-15);
}

TEST(Acf, ConstantWindowRejected) {
    const std::vector<double> x(10, 3.0);
    EXPECT_EQ(feature_error([&] { acf(x, 2); }), FeatureErrc::ConstantWindow);
    EXPECT_EQ(feature_error([&] { pacf(x, 2); }), FeatureErrc::ConstantWindow);
    EXPECT_EQ(feature_error([&] { moments(x); }), FeatureErrc::ConstantWindow);
    EXPECT_EQ(feature_error([&] { bicorrelation(x, 1); }), FeatureErrc::ConstantWindow);
    EXPECT_EQ(feature_error([&] { fedd_features(x); }), FeatureErrc::ConstantWindow);
}

TEST(Acf, MatchesNaiveOracleAndIsBounded) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = random_walkish(rng, 500);
        const auto r = acf(x, 5);
        const auto oracle = naive_acf(x, 5);
        for (std::size_t k = 0; k < 5; ++k) {
            EXPECT_NEAR(r[k], oracle[k], 1e-12);
            EXPECT_LE(std::abs(r[k]), 1.0 + 1e-9);
        }
    }
}

TEST(Pacf, FirstLagEqualsAcf) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_walkish(rng, 200);
        EXPECT_EQ(pacf(x, 3)[0], acf(x, 3)[0]);
    }
}

TEST(Pacf, MatchesYuleWalkerSolveOnShortWindow) {
    const std::vector<double> x{1, 2, 3, 4, 5, 4, 3, 2, 1, 2};
    const auto p = pacf(x, 3);
    const auto oracle = yule_walker_pacf(naive_acf(x, 3));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(p[k], oracle[k], 1e-8);
}

TEST(Pacf, MatchesYuleWalkerSolveOnRandomSeries) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = random_walkish(rng, 500);
        const auto p = pacf(x, 5);
        const auto oracle = yule_walker_pacf(naive_acf(x, 5));
        for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(p[k], oracle[k], 1e-8) << "trial " << trial << " lag " << k + 1;
    }
}

TEST(Pacf, Ar1HasNoSecondOrderPartial) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> x(5000);
    double prev = 0.0;
    for (auto& v : x) prev = v = 0.7 * prev + e(rng);
    const auto p = pacf(x, 2);
    EXPECT_NEAR(p[0], 0.7, 0.05);
    EXPECT_NEAR(p[1], 0.0, 0.05);
}

TEST(Pacf, DegenerateRecursionDetected) {
    // r(1) = 1 makes the first Durbin-Levinson denominator vanish.
    const std::vector<double> r{1.0, 1.0};
    EXPECT_EQ(feature_error([&] { pacf_from_acf(r); }), FeatureErrc::DegenerateRecursion);
}

TEST(Moments, HandComputedRamp) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const auto m = moments(x);
    EXPECT_NEAR(m.variance, 2.0, 1e-15);
    EXPECT_NEAR(m.skewness, 0.0, 1e-15);
    EXPECT_NEAR(m.excess_kurtosis, -1.3, 1e-12);
}

TEST(Moments, SymmetricInputHasZeroSkew) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x;
        const double c = u(rng);
        for (int i = 0; i < 50; ++i) {
            const double d = u(rng);
            x.push_back(c + d);
            x.push_back(c - d);
        }
        EXPECT_NEAR(moments(x).skewness, 0.0, 1e-12);
    }
}

TEST(Moments, StandardizedMomentsAreScaleInvariant) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = random_walkish(rng, 300);
        const auto a = moments(x);
        for (auto& v : x) v *= 37.5;
        const auto b = moments(x);
        EXPECT_NEAR(a.skewness, b.skewness, 1e-9);
        EXPECT_NEAR(a.excess_kurtosis, b.excess_kurtosis, 1e-9);
    }
}

TEST(TurningPoints, Examples) {
    EXPECT_EQ(turning_point_rate(std::vector<double>{1, 2, 3, 4, 5}), 0.0);
    EXPECT_EQ(turning_point_rate(std::vector<double>{1, 3, 1, 3, 1}), 1.0);
    EXPECT_EQ(turning_point_rate(std::vector<double>{2, 2, 2, 2}), 0.0);
    EXPECT_EQ(turning_point_rate(std::vector<double>{1, 2, 2, 1}), 0.0);
}

TEST(Bicorrelation, IndependentNormalIsNearZero) {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> x(50000);
    for (auto& v : x) v = e(rng);
    EXPECT_LT(std::abs(bicorrelation(x, 1)), 0.05);
}

TEST(Bicorrelation, OddUnderNegation) {
    std::mt19937_64 rng(6);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> x(400);
    for (auto& v : x) v = e(rng);
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    for (std::size_t lag = 1; lag <= 3; ++lag) {
        const double a = bicorrelation(x, lag), b = bicorrelation(neg, lag);
        EXPECT_NEAR(a, -b, 1e-12);
        EXPECT_NE(a, 0.0);
    }
}

TEST(MutualInformation, ConstantIsZero) {
    EXPECT_EQ(mutual_information(std::vector<double>(20, 4.0), 1, 16), 0.0);
}

TEST(MutualInformation, SelfInformationEqualsHistogramEntropy) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> x(3000);
    for (auto& v : x) v = e(rng);
    const std::size_t bins = 16;
    const double lo = *std::min_element(x.begin(), x.end()), hi = *std::max_element(x.begin(), x.end());
    std::map<long, double> counts;
    for (double v : x) counts[std::min<long>(static_cast<long>((v - lo) / ((hi - lo) / bins)), bins - 1)] += 1.0;
    double entropy = 0.0;
    for (const auto& [bin, c] : counts) entropy -= c / x.size() * std::log(c / x.size());
    EXPECT_NEAR(mutual_information(x, 0, bins), entropy, 1e-9);
}

TEST(MutualInformation, IndependentUniformIsSmall) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(50000);
    for (auto& v : x) v = u(rng);
    EXPECT_LT(mutual_information(x, 1, 16), 0.02);
}

TEST(FeddFeatures, PropertiesOnRandomWindows) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> len(10, 400);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = random_walkish(rng, len(rng));
        const auto f = fedd_features(x);
        ASSERT_EQ(f.size(), 20u);
        for (double v : f.values) EXPECT_TRUE(std::isfinite(v));
        for (std::size_t i = 0; i < 10; ++i) EXPECT_LE(std::abs(f[i]), 1.0 + 1e-9) << i;
        EXPECT_GE(f[13], 0.0);
        EXPECT_LE(f[13], 1.0);
        for (std::size_t i = 17; i < 20; ++i) EXPECT_GE(f[i], -1e-12);
        EXPECT_EQ(fedd_features(x), f);
    }
}

TEST(FeddFeatures, LevelShiftLeavesCenteredFeaturesUnchanged) {
    std::mt19937_64 rng(12);
    const auto x = random_walkish(rng, 336);
    auto shifted = x;
    for (auto& v : shifted) v += 10.0;
    const auto a = fedd_features(x), b = fedd_features(shifted);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
    EXPECT_NEAR(a[10], b[10], 1e-9);
    EXPECT_EQ(a[13], b[13]);
}

TEST(FeddFeatures, ConfigurableLayout) {
    std::mt19937_64 rng(2);
    const auto x = random_walkish(rng, 100);
    const FeatureConfig cfg{3, 2, 8};
    EXPECT_EQ(fedd_features(x, cfg).size(), cfg.dimension());
    EXPECT_EQ(cfg.dimension(), 14u);
    EXPECT_EQ(feature_error([&] { fedd_features(std::vector<double>{1, 2, 3}); }), FeatureErrc::WindowTooShort);
}
