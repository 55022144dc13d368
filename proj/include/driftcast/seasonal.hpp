#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "driftcast/errors.hpp"
#include "driftcast/series.hpp"

namespace driftcast::forecast {

inline constexpr std::size_t kFourierOrder = 3;
inline constexpr double kDailyPeriod = 24.0;
inline constexpr double kWeeklyPeriod = 168.0;

// Linear trend plus daily and weekly Fourier seasonality, fitted by least
// squares. Time is measured in hours from `origin`.
struct SeasonalTrendModel {
    EpochSeconds origin = 0;
    double intercept = 0.0;
    double slope = 0.0;  // per hour
    std::array<double, kFourierOrder> daily_sin{}, daily_cos{};
    std::array<double, kFourierOrder> weekly_sin{}, weekly_cos{};

    double hours_at(EpochSeconds ts) const noexcept { return static_cast<double>(ts - origin) / static_cast<double>(kHour); }

    double trend(EpochSeconds ts) const noexcept { return intercept + slope * hours_at(ts); }

    double daily(EpochSeconds ts) const noexcept { return fourier(hours_at(ts), kDailyPeriod, daily_sin, daily_cos); }

    double weekly(EpochSeconds ts) const noexcept { return fourier(hours_at(ts), kWeeklyPeriod, weekly_sin, weekly_cos); }

    double value(EpochSeconds ts) const noexcept { return trend(ts) + daily(ts) + weekly(ts); }

    static double fourier(double t, double period, const std::array<double, kFourierOrder>& s,
                          const std::array<double, kFourierOrder>& c) noexcept {
        double acc = 0.0;
        for (std::size_t k = 0; k < kFourierOrder; ++k) {
            const double w = 2.0 * std::numbers::pi * static_cast<double>(k + 1) * t / period;
            acc += s[k] * std::sin(w) + c[k] * std::cos(w);
        }
        return acc;
    }
};

namespace detail {

inline constexpr std::size_t kDesignColumns = 2 + 4 * kFourierOrder;

// Column order: 1, t/scale, daily sin/cos pairs, weekly sin/cos pairs.
inline void design_row(double t, double t_scale, Eigen::Ref<Eigen::RowVectorXd> row) {
    row(0) = 1.0;
    row(1) = t / t_scale;
    std::size_t c = 2;
    for (double period : {kDailyPeriod, kWeeklyPeriod}) {
        for (std::size_t k = 1; k <= kFourierOrder; ++k) {
            const double w = 2.0 * std::numbers::pi * static_cast<double>(k) * t / period;
            row(static_cast<Eigen::Index>(c++)) = std::sin(w);
            row(static_cast<Eigen::Index>(c++)) = std::cos(w);
        }
    }
}

}  // namespace detail

// OLS over the present slots of `train` via ridge-jittered normal equations.
// The trend column is rescaled internally for conditioning; `slope` is per hour.
inline SeasonalTrendModel fit_seasonal_trend(const TimeSeries& train) {
    constexpr auto cols = static_cast<Eigen::Index>(detail::kDesignColumns);
    const std::size_t present = train.present_count();
    if (present < detail::kDesignColumns) {
        throw FitError(FitErrc::Underdetermined, "seasonal-trend fit: fewer present values than design columns");
    }
    const double t_scale = std::max(1.0, static_cast<double>(train.size() - 1));

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(cols, cols);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(cols);
    Eigen::RowVectorXd row(cols);
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (!train[i]) continue;
        detail::design_row(static_cast<double>(i), t_scale, row);
        xtx.noalias() += row.transpose() * row;
        xty.noalias() += row.transpose() * *train[i];
    }
    xtx.diagonal().array() += 1e-8;
    const Eigen::VectorXd beta = xtx.ldlt().solve(xty);

    SeasonalTrendModel m;
    m.origin = train.start();
    m.intercept = beta(0);
    m.slope = beta(1) / t_scale;
    Eigen::Index c = 2;
    for (std::size_t k = 0; k < kFourierOrder; ++k) {
        m.daily_sin[k] = beta(c++);
        m.daily_cos[k] = beta(c++);
    }
    for (std::size_t k = 0; k < kFourierOrder; ++k) {
        m.weekly_sin[k] = beta(c++);
        m.weekly_cos[k] = beta(c++);
    }
    return m;
}

}  // namespace driftcast::forecast
