#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "driftcast/synthgen.hpp"

using namespace driftcast;
using namespace driftcast::synth;

namespace {

TimeSeries noiseless(std::size_t hours) {
    GeneratorConfig cfg;
    cfg.length_hours = hours;
    cfg.noise_sigma = 0.0;
    return gen_seasonal_ar(cfg);
}

}  // namespace

TEST(Generator, NoiselessMatchesClosedForm) {
    const auto ts = noiseless(500);
    ASSERT_EQ(ts.size(), 500u);
    for (std::size_t t = 0; t < ts.size(); ++t) {
        const double tt = static_cast<double>(t);
        const double expected = 50 + 10 * std::sin(2 * std::numbers::pi * tt / 24) + 5 * std::sin(2 * std::numbers::pi * tt / 168);
        EXPECT_NEAR(*ts[t], expected, 1e-12);
    }
}

TEST(Generator, SameSeedSameSeries) {
    GeneratorConfig cfg;
    cfg.seed = 42;
    EXPECT_EQ(gen_seasonal_ar(cfg), gen_seasonal_ar(cfg));
    auto other = cfg;
    other.seed = 43;
    EXPECT_NE(gen_seasonal_ar(cfg), gen_seasonal_ar(other));
}

TEST(Generator, NoiseHasArStructure) {
    GeneratorConfig cfg;
    cfg.length_hours = 20000;
    cfg.seed = 3;
    const auto ts = gen_seasonal_ar(cfg);
    const auto clean = noiseless(cfg.length_hours);
    std::vector<double> e(ts.size());
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = *ts[t] - *clean[t];
    double m = 0;
    for (double v : e) m += v;
    m /= static_cast<double>(e.size());
    double c0 = 0, c1 = 0;
    for (std::size_t t = 0; t < e.size(); ++t) {
        c0 += (e[t] - m) * (e[t] - m);
        if (t > 0) c1 += (e[t] - m) * (e[t - 1] - m);
    }
    EXPECT_NEAR(c1 / c0, 0.5, 0.03);
    // Stationary AR(1) variance sigma^2 / (1 - phi^2).
    EXPECT_NEAR(c0 / static_cast<double>(e.size()), 4.0 / 0.75, 0.3);
}

TEST(Generator, RejectsBadParameters) {
    GeneratorConfig cfg;
    cfg.ar_coefficient = 1.0;
    EXPECT_THROW(gen_seasonal_ar(cfg), std::invalid_argument);
    cfg.ar_coefficient = 0.5;
    cfg.noise_sigma = -1;
    EXPECT_THROW(gen_seasonal_ar(cfg), std::invalid_argument);
}

TEST(Drift, SuddenShiftsEverythingFromOnset) {
    const auto ts = noiseless(400);
    const auto d = inject_drift(ts, {DriftKind::Sudden, 100, 5.0, 2.0});
    for (std::size_t t = 0; t < ts.size(); ++t) EXPECT_NEAR(*d[t] - *ts[t], t < 100 ? 0.0 : 10.0, 1e-12);
}

TEST(Drift, GradualRampsLinearly) {
    const auto ts = noiseless(400);
    DriftSpec spec{DriftKind::Gradual, 100, 4.0, 1.0, 50};
    const auto d = inject_drift(ts, spec);
    EXPECT_NEAR(*d[99] - *ts[99], 0.0, 1e-12);
    EXPECT_NEAR(*d[100] - *ts[100], 0.0, 1e-12);
    EXPECT_NEAR(*d[125] - *ts[125], 2.0, 1e-12);
    EXPECT_NEAR(*d[150] - *ts[150], 4.0, 1e-12);
    EXPECT_NEAR(*d[399] - *ts[399], 4.0, 1e-12);
    for (std::size_t t = 101; t < 400; ++t) EXPECT_GE(*d[t] - *ts[t], *d[t - 1] - *ts[t - 1] - 1e-12);
}

TEST(Drift, RecurringReverts) {
    const auto ts = noiseless(1000);
    DriftSpec spec{DriftKind::Recurring, 200, 3.0, 1.0, 1, 336};
    const auto d = inject_drift(ts, spec);
    for (std::size_t t = 0; t < ts.size(); ++t) {
        const bool inside = t >= 200 && t < 536;
        EXPECT_NEAR(*d[t] - *ts[t], inside ? 3.0 : 0.0, 1e-12) << t;
    }
    spec.at_hour = 900;
    EXPECT_THROW(inject_drift(ts, spec), std::invalid_argument);
}

TEST(Drift, MissingSlotsStayMissing) {
    const auto ts = inject_missing(noiseless(300), MissingMode::burst(150, 10), 0);
    const auto d = inject_drift(ts, {DriftKind::Sudden, 100, 1.0});
    EXPECT_EQ(d.present_count(), ts.present_count());
}

TEST(Missing, BurstRemovesExactRange) {
    const auto ts = inject_missing(noiseless(300), MissingMode::burst(50, 24), 0);
    for (std::size_t t = 0; t < ts.size(); ++t) EXPECT_EQ(ts.present(t), t < 50 || t >= 74);
}

TEST(Missing, RandomRateAndDeterminism) {
    const auto base = noiseless(20000);
    const auto a = inject_missing(base, MissingMode::random(0.1), 7);
    EXPECT_EQ(a, inject_missing(base, MissingMode::random(0.1), 7));
    const double rate = 1.0 - static_cast<double>(a.present_count()) / 20000.0;
    EXPECT_NEAR(rate, 0.1, 0.01);
    EXPECT_EQ(inject_missing(base, MissingMode::random(0.0), 7), base);
    EXPECT_THROW(inject_missing(base, MissingMode::random(1.0), 7), std::invalid_argument);
}
