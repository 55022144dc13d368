#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "driftcast/errors.hpp"
#include "driftcast/forecast_features.hpp"
#include "driftcast/gbt.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/seasonal.hpp"
#include "driftcast/series.hpp"

namespace driftcast::forecast {

// num_trees {50,100} x max_depth {3,5} x learning_rate {0.05,0.1}, min_samples_leaf 20.
inline std::vector<HParams> default_grid() {
    std::vector<HParams> grid;
    for (std::size_t trees : {50, 100}) {
        for (std::size_t depth : {3, 5}) {
            for (double lr : {0.05, 0.1}) grid.push_back({trees, depth, lr, 20});
        }
    }
    return grid;
}

// Targets aligned with the rows of a FeatureMatrix. Rows whose target slot is
// missing (or beyond the series) are masked out of `X`.
struct Dataset {
    FeatureMatrix X;
    std::vector<double> y;
};

inline Dataset make_dataset(const TimeSeries& ts, std::size_t begin, std::size_t end, const FeatureSpec& spec,
                            const SeasonalTrendModel& stm) {
    Dataset d{build_features(ts, begin, end, spec, stm), std::vector<double>(end > begin ? end - begin : 0, 0.0)};
    for (std::size_t r = 0; r < d.y.size(); ++r) {
        const std::size_t t = begin + r;
        if (t < ts.size() && ts[t]) {
            d.y[r] = *ts[t];
        } else {
            d.X.mask[r] = 0;
            d.y[r] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return d;
}

struct GridResult {
    GbtModel model;
    HParams hparams;
    double val_score = 0.0;  // validation MAE
};

namespace detail {

inline double masked_mae(const GbtModel& m, const Dataset& val) {
    const auto pred = m.predict(val.X);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < pred.size(); ++r) {
        if (!val.X.mask[r]) continue;
        acc += std::abs(val.y[r] - pred[r]);
        ++n;
    }
    if (n == 0) throw FitError(FitErrc::TooFewSamples, "validation span has no usable rows");
    return acc / static_cast<double>(n);
}

}  // namespace detail

// Fits every candidate on `train`, scores validation MAE, keeps the argmin
// (first in grid order on ties). Candidates differing only in num_trees share one
// boosting run, since the first k trees of a longer run are exactly a k-tree model.
inline GridResult grid_search(const Dataset& train, const Dataset& val, std::span<const HParams> grid) {
    if (grid.empty()) throw FitError(FitErrc::EmptyGrid, "grid_search: empty grid");
    using Key = std::tuple<std::size_t, double, std::size_t>;
    std::map<Key, std::size_t> longest;
    for (const auto& hp : grid) {
        auto& n = longest[Key{hp.max_depth, hp.learning_rate, hp.min_samples_leaf}];
        n = std::max(n, hp.num_trees);
    }
    std::map<Key, std::optional<GbtModel>> fitted;

    std::optional<GridResult> best;
    for (const auto& hp : grid) {
        try {
            hp.validate();
            const Key key{hp.max_depth, hp.learning_rate, hp.min_samples_leaf};
            auto& full = fitted[key];
            if (!full) {
                HParams run = hp;
                run.num_trees = longest[key];
                full = fit_gbt(train.X, train.y, run);
            }
            GbtModel candidate = full->truncated(hp.num_trees);
            const double score = detail::masked_mae(candidate, val);
            if (!best || score < best->val_score) best = GridResult{std::move(candidate), hp, score};
        } catch (const FitError&) {
            continue;
        }
    }
    if (!best) throw FitError(FitErrc::AllCandidatesFailed, "grid_search: every candidate failed");
    return std::move(*best);
}

// Everything needed to produce forecasts for one series.
struct TrainedForecaster {
    FeatureSpec spec;
    SeasonalTrendModel stm;
    GbtModel model;
    HParams hparams;
    double val_mae = 0.0;
    std::size_t train_end = 0;  // exclusive slot bound of the training span
    std::size_t val_end = 0;    // exclusive slot bound of the validation span
};

// Seasonal-trend fit and boosting on [0, train_end); model selection on [train_end, val_end).
inline TrainedForecaster train_forecaster(const TimeSeries& ts, std::size_t train_end, std::size_t val_end,
                                          const FeatureSpec& spec, std::span<const HParams> grid) {
    if (!(train_end < val_end && val_end <= ts.size())) throw std::invalid_argument("train_forecaster: bad spans");
    TrainedForecaster f;
    f.spec = spec;
    f.train_end = train_end;
    f.val_end = val_end;
    f.stm = fit_seasonal_trend(ts.prefix(train_end));
    const auto train = make_dataset(ts, 0, train_end, spec, f.stm);
    const auto val = make_dataset(ts, train_end, val_end, spec, f.stm);
    auto result = grid_search(train, val, grid);
    f.model = std::move(result.model);
    f.hparams = result.hparams;
    f.val_mae = result.val_score;
    return f;
}

// Predictions for slots [from_slot, from_slot + horizon). Only slots < from_slot are read
// as long as horizon <= spec.horizon.
inline std::vector<double> forecast(const GbtModel& model, const TimeSeries& ts, const FeatureSpec& spec,
                                    const SeasonalTrendModel& stm, std::size_t from_slot, std::size_t horizon,
                                    AccessAudit* audit = nullptr) {
    if (horizon > spec.horizon) throw std::invalid_argument("forecast: horizon exceeds the feature horizon");
    if (from_slot > ts.size()) throw std::invalid_argument("forecast: origin beyond series end");
    const auto fm = build_features(ts, from_slot, from_slot + horizon, spec, stm, audit);
    return model.predict(fm);
}

inline std::vector<double> forecast(const TrainedForecaster& f, const TimeSeries& ts, std::size_t from_slot,
                                    std::size_t horizon, AccessAudit* audit = nullptr) {
    return forecast(f.model, ts, f.spec, f.stm, from_slot, horizon, audit);
}

}  // namespace driftcast::forecast
