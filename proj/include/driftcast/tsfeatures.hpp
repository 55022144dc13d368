#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "driftcast/errors.hpp"

// Window descriptors used by the drift detector: autocorrelation, partial
// autocorrelation, standardized moments, turning-point rate, bicorrelation and
// histogram mutual information. All estimators use population (biased) moments.
namespace driftcast::features {

struct FeatureConfig {
    std::size_t max_lag = 5;          // acf / pacf lags 1..max_lag
    std::size_t nonlinear_lags = 3;   // bicorrelation / MI lags 1..nonlinear_lags
    std::size_t mi_bins = 16;

    std::size_t dimension() const noexcept { return 2 * max_lag + 4 + 2 * nonlinear_lags; }
    std::size_t min_window() const noexcept { return std::max({2 * nonlinear_lags + 1, max_lag + 2, std::size_t{4}}); }
};

// Layout: acf[1..L], pacf[1..L], variance, skewness, excess kurtosis,
// turning-point rate, bicorrelation[1..K], mutual information[1..K].
struct FeatureVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

namespace detail {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline void require_non_constant(std::span<const double> x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw FeatureError(FeatureErrc::ConstantWindow, "constant window");
}

}  // namespace detail

inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (n <= max_lag + 1) throw FeatureError(FeatureErrc::WindowTooShort, "acf: window too short");
    detail::require_non_constant(x);
    const double mu = detail::mean(x);
    std::vector<double> centered(n);
    double denom = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        centered[t] = x[t] - mu;
        denom += centered[t] * centered[t];
    }
    std::vector<double> r(max_lag);
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) num += centered[t] * centered[t + k];
        r[k - 1] = num / denom;
    }
    return r;
}

// Durbin-Levinson recursion over an autocorrelation sequence r[0] = r(1), ...
inline std::vector<double> pacf_from_acf(std::span<const double> r) {
    const std::size_t lags = r.size();
    std::vector<double> out(lags);
    if (lags == 0) return out;
    std::vector<double> phi(lags, 0.0), prev(lags, 0.0);
    phi[0] = r[0];
    out[0] = r[0];
    for (std::size_t k = 2; k <= lags; ++k) {
        prev = phi;
        double num = r[k - 1];
        double den = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            num -= prev[j - 1] * r[k - j - 1];
            den -= prev[j - 1] * r[j - 1];
        }
        if (std::abs(den) < 1e-12) throw FeatureError(FeatureErrc::DegenerateRecursion, "pacf: degenerate recursion");
        const double phi_kk = num / den;
        for (std::size_t j = 1; j < k; ++j) phi[j - 1] = prev[j - 1] - phi_kk * prev[k - j - 1];
        phi[k - 1] = phi_kk;
        out[k - 1] = phi_kk;
    }
    return out;
}

inline std::vector<double> pacf(std::span<const double> x, std::size_t max_lag) {
    const auto r = acf(x, max_lag);
    return pacf_from_acf(r);
}

struct Moments {
    double variance = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

inline Moments moments(std::span<const double> x) {
    if (x.size() < 4) throw FeatureError(FeatureErrc::WindowTooShort, "moments: need at least 4 values");
    detail::require_non_constant(x);
    const double mu = detail::mean(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mu;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const auto n = static_cast<double>(x.size());
    m2 /= n;
    m3 /= n;
    m4 /= n;
    return {m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

// Fraction of interior points that are strict local extrema. Ties never count.
inline double turning_point_rate(std::span<const double> x) {
    if (x.size() < 3) throw FeatureError(FeatureErrc::WindowTooShort, "turning_point_rate: need at least 3 values");
    std::size_t count = 0;
    for (std::size_t t = 1; t + 1 < x.size(); ++t) {
        const bool peak = x[t - 1] < x[t] && x[t] > x[t + 1];
        const bool trough = x[t - 1] > x[t] && x[t] < x[t + 1];
        count += (peak || trough) ? 1 : 0;
    }
    return static_cast<double>(count) / static_cast<double>(x.size() - 2);
}

inline double bicorrelation(std::span<const double> x, std::size_t lag) {
    const std::size_t n = x.size();
    if (n <= 2 * lag) throw FeatureError(FeatureErrc::WindowTooShort, "bicorrelation: window too short");
    detail::require_non_constant(x);
    const double mu = detail::mean(x);
    double m2 = 0.0;
    for (double v : x) m2 += (v - mu) * (v - mu);
    const double sigma = std::sqrt(m2 / static_cast<double>(n));
    double acc = 0.0;
    const std::size_t terms = n - 2 * lag;
    for (std::size_t t = 0; t < terms; ++t) {
        acc += ((x[t] - mu) / sigma) * ((x[t + lag] - mu) / sigma) * ((x[t + 2 * lag] - mu) / sigma);
    }
    return acc / static_cast<double>(terms);
}

// Histogram mutual information (nats) between x_t and x_{t+lag}. Both marginals
// share equal-width bins over [min(x), max(x)]. Constant input yields 0.
inline double mutual_information(std::span<const double> x, std::size_t lag, std::size_t bins) {
    const std::size_t n = x.size();
    if (n <= lag + 1) throw FeatureError(FeatureErrc::WindowTooShort, "mutual_information: window too short");
    if (bins < 2) throw std::invalid_argument("mutual_information: bins must be >= 2");
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) return 0.0;

    const double width = (hi - lo) / static_cast<double>(bins);
    auto bin_of = [&](double v) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        return std::min(b, bins - 1);
    };
    std::vector<std::size_t> codes(n);
    for (std::size_t t = 0; t < n; ++t) codes[t] = bin_of(x[t]);

    const std::size_t pairs = n - lag;
    std::vector<std::size_t> joint(bins * bins, 0), left(bins, 0), right(bins, 0);
    for (std::size_t t = 0; t < pairs; ++t) {
        const auto i = codes[t], j = codes[t + lag];
        ++joint[i * bins + j];
        ++left[i];
        ++right[j];
    }
    const auto total = static_cast<double>(pairs);
    double mi = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        if (left[i] == 0) continue;
        for (std::size_t j = 0; j < bins; ++j) {
            const auto c = joint[i * bins + j];
            if (c == 0) continue;
            // p(i,j) / (p(i) q(j)) = c * N / (left * right)
            mi += (static_cast<double>(c) / total) *
                  std::log(static_cast<double>(c) * total / (static_cast<double>(left[i]) * static_cast<double>(right[j])));
        }
    }
    return mi;
}

inline FeatureVector fedd_features(std::span<const double> x, const FeatureConfig& cfg = {}) {
    if (x.size() < cfg.min_window()) throw FeatureError(FeatureErrc::WindowTooShort, "fedd_features: window too short");
    FeatureVector out;
    out.values.reserve(cfg.dimension());
    const auto r = acf(x, cfg.max_lag);
    const auto p = pacf_from_acf(r);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.values.insert(out.values.end(), p.begin(), p.end());
    const auto m = moments(x);
    out.values.push_back(m.variance);
    out.values.push_back(m.skewness);
    out.values.push_back(m.excess_kurtosis);
    out.values.push_back(turning_point_rate(x));
    for (std::size_t lag = 1; lag <= cfg.nonlinear_lags; ++lag) out.values.push_back(bicorrelation(x, lag));
    for (std::size_t lag = 1; lag <= cfg.nonlinear_lags; ++lag) out.values.push_back(mutual_information(x, lag, cfg.mi_bins));
    return out;
}

}  // namespace driftcast::features
