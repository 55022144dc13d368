#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "driftcast/errors.hpp"

namespace driftcast::metrics {

// Paired actual/prediction values; missing actuals are dropped pairwise.
struct EvaluationBatch {
    std::vector<double> actuals;
    std::vector<double> predictions;

    std::size_t size() const noexcept { return actuals.size(); }

    static EvaluationBatch paired(std::span<const std::optional<double>> actuals, std::span<const double> predictions) {
        if (actuals.size() > predictions.size()) {
            throw MetricError(MetricErrc::LengthMismatch, "more actuals than predictions");
        }
        EvaluationBatch b;
        for (std::size_t i = 0; i < actuals.size(); ++i) {
            if (!actuals[i]) continue;
            b.actuals.push_back(*actuals[i]);
            b.predictions.push_back(predictions[i]);
        }
        return b;
    }
};

// Mean absolute one-step naive error: (1/(n-1)) * sum_{i>=2} |Y_i - Y_{i-1}|.
inline double naive_scale(std::span<const double> y) {
    if (y.size() < 2) throw MetricError(MetricErrc::TooFewPoints, "naive scale needs at least 2 points");
    double acc = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) acc += std::abs(y[i] - y[i - 1]);
    return acc / static_cast<double>(y.size() - 1);
}

inline double mae(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw MetricError(MetricErrc::LengthMismatch, "length mismatch");
    if (actual.empty()) throw MetricError(MetricErrc::TooFewPoints, "empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) acc += std::abs(actual[i] - predicted[i]);
    return acc / static_cast<double>(actual.size());
}

// MAE divided by an externally supplied scale (e.g. in-sample naive error of the training span).
inline double mase_with_scale(const EvaluationBatch& batch, double scale) {
    if (!(scale > 0.0)) throw MetricError(MetricErrc::ZeroScale, "zero naive scale");
    return mae(batch.actuals, batch.predictions) / scale;
}

// MASE scaled by the naive error of the evaluation actuals themselves.
inline double mase(const EvaluationBatch& batch) {
    if (batch.actuals.size() != batch.predictions.size()) throw MetricError(MetricErrc::LengthMismatch, "length mismatch");
    if (batch.size() < 2) throw MetricError(MetricErrc::TooFewPoints, "MASE needs at least 2 points");
    return mase_with_scale(batch, naive_scale(batch.actuals));
}

inline double mase(std::span<const double> actual, std::span<const double> predicted) {
    return mase(EvaluationBatch{{actual.begin(), actual.end()}, {predicted.begin(), predicted.end()}});
}

// Positive when the drift-retrained model has the lower error.
inline double mase_improvement(double mase_periodic, double mase_fedd) {
    if (mase_periodic == 0.0) throw MetricError(MetricErrc::ZeroBaseline, "zero periodic MASE");
    return (mase_periodic - mase_fedd) / mase_periodic * 100.0;
}

inline double retraining_savings(std::size_t n_periodic, std::size_t n_fedd) {
    if (n_periodic == 0) throw MetricError(MetricErrc::ZeroBaseline, "zero periodic retrainings");
    return (static_cast<double>(n_periodic) - static_cast<double>(n_fedd)) / static_cast<double>(n_periodic) * 100.0;
}

struct WilcoxonResult {
    double statistic = 0.0;   // min(W+, W-)
    double p_value = 1.0;     // two-sided
    std::size_t n_nonzero = 0;
    bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 20;

// Signed-rank test on paired samples. Zero differences are dropped, tied
// magnitudes receive mid-ranks. Exact null distribution up to 20 non-zero pairs,
// normal approximation with tie and continuity corrections above.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw MetricError(MetricErrc::LengthMismatch, "wilcoxon: unpaired inputs");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        if (diff != 0.0) d.push_back(diff);
    }
    const std::size_t m = d.size();
    if (m == 0) throw MetricError(MetricErrc::DegeneratePairs, "wilcoxon: all differences are zero");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });

    // Ranks are stored doubled so mid-ranks stay integral.
    std::vector<std::int64_t> rank2(m);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i;
        while (j + 1 < m && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const auto twice_mid = static_cast<std::int64_t>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = twice_mid;
        const auto t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    std::int64_t w_plus2 = 0, total2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) w_plus2 += rank2[i];
    }
    const std::int64_t w_min2 = std::min(w_plus2, total2 - w_plus2);

    WilcoxonResult res;
    res.statistic = static_cast<double>(w_min2) / 2.0;
    res.n_nonzero = m;

    if (m <= kWilcoxonExactLimit) {
        // Counts of sign assignments per doubled W+ value.
        std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
        counts[0] = 1.0;
        std::int64_t reach = 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::int64_t s = reach; s >= 0; --s) {
                if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + rank2[i])] += counts[static_cast<std::size_t>(s)];
            }
            reach += rank2[i];
        }
        double extreme = 0.0;
        for (std::int64_t s = 0; s <= total2; ++s) {
            if (std::min(s, total2 - s) <= w_min2) extreme += counts[static_cast<std::size_t>(s)];
        }
        res.p_value = std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(m)));
        res.exact = true;
        return res;
    }

    const auto n = static_cast<double>(m);
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) {
        res.p_value = 1.0;
        return res;
    }
    const double z = std::max(0.0, std::abs(res.statistic - mean) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return res;
}

// One row of the retraining-policy comparison table.
struct ComparisonReport {
    double mase_periodic = 0.0;
    double mase_fedd = 0.0;
    double mase_improvement_pct = 0.0;
    std::size_t retrainings_periodic = 0;
    std::size_t retrainings_fedd = 0;
    std::optional<double> retraining_savings_pct;  // undefined when the baseline never retrained
    std::optional<WilcoxonResult> wilcoxon;        // absent when every paired difference is zero
    std::size_t paired_batches = 0;
    std::size_t excluded_batches = 0;
};

// Averages only batches where both policies have a defined MASE, keeping the comparison paired.
inline ComparisonReport compare(std::span<const std::optional<double>> mase_periodic,
                                std::span<const std::optional<double>> mase_fedd, std::size_t retrainings_periodic,
                                std::size_t retrainings_fedd) {
    if (mase_periodic.size() != mase_fedd.size()) throw MetricError(MetricErrc::LengthMismatch, "batch count mismatch");
    std::vector<double> a, b;
    ComparisonReport rep;
    for (std::size_t i = 0; i < mase_periodic.size(); ++i) {
        if (mase_periodic[i] && mase_fedd[i]) {
            a.push_back(*mase_periodic[i]);
            b.push_back(*mase_fedd[i]);
        } else {
            ++rep.excluded_batches;
        }
    }
    if (a.empty()) throw MetricError(MetricErrc::TooFewPoints, "no paired batches with defined MASE");
    rep.paired_batches = a.size();
    rep.mase_periodic = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    rep.mase_fedd = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
    rep.mase_improvement_pct = mase_improvement(rep.mase_periodic, rep.mase_fedd);
    rep.retrainings_periodic = retrainings_periodic;
    rep.retrainings_fedd = retrainings_fedd;
    if (retrainings_periodic > 0) rep.retraining_savings_pct = retraining_savings(retrainings_periodic, retrainings_fedd);
    try {
        rep.wilcoxon = wilcoxon_signed_rank(a, b);
    } catch (const MetricError& e) {
        if (e.code() != MetricErrc::DegeneratePairs) throw;
    }
    return rep;
}

}  // namespace driftcast::metrics
