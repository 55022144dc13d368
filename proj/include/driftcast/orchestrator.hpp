#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "driftcast/errors.hpp"
#include "driftcast/fedd.hpp"
#include "driftcast/forecaster.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/series.hpp"

// Week-by-week replay of a series: forecast, score, feed the drift detector,
// and decide at each batch end whether to retrain.
namespace driftcast::sim {

struct Static {
    friend bool operator==(const Static&, const Static&) = default;
};
struct Periodic {
    std::size_t period_weeks = 4;
    friend bool operator==(const Periodic&, const Periodic&) = default;
};
struct DriftBased {
    friend bool operator==(const DriftBased&, const DriftBased&) = default;
};

using BasePolicy = std::variant<Static, Periodic, DriftBased>;

// Per-series choice among the base policies; `fallback` covers unlisted series.
struct Hybrid {
    std::map<std::string, BasePolicy> assignment;
    std::optional<BasePolicy> fallback;

    const BasePolicy& resolve(const std::string& series_id) const {
        if (auto it = assignment.find(series_id); it != assignment.end()) return it->second;
        if (fallback) return *fallback;
        throw SimulationError(SimulationErrc::UnknownSeries, "hybrid policy has no assignment for series '" + series_id + "'");
    }
};

using RetrainPolicy = std::variant<Static, Periodic, DriftBased, Hybrid>;

inline std::string policy_name(const BasePolicy& p) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Static>) return "static";
            else if constexpr (std::is_same_v<T, Periodic>) return "periodic:" + std::to_string(v.period_weeks);
            else return "drift";
        },
        p);
}

inline std::string policy_name(const RetrainPolicy& p) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Hybrid>) return "hybrid";
            else return policy_name(BasePolicy{v});
        },
        p);
}

struct DriftEvent {
    std::uint64_t stream_position = 0;  // 0-based index among samples fed to the detector
    std::size_t slot_index = 0;
    double distance = 0.0;
    double z = 0.0;
    double threshold = 0.0;
};

inline bool decide_retrain(const BasePolicy& policy, std::size_t batch_index, std::span<const DriftEvent> drifts) {
    if (batch_index < 1) throw std::invalid_argument("decide_retrain: batch_index starts at 1");
    return std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Static>) return false;
            else if constexpr (std::is_same_v<T, Periodic>) {
                if (p.period_weeks < 1) throw std::invalid_argument("decide_retrain: period must be >= 1 week");
                return batch_index % p.period_weeks == 0;
            }
            else return !drifts.empty();
        },
        policy);
}

inline bool decide_retrain(const RetrainPolicy& policy, std::size_t batch_index, std::span<const DriftEvent> drifts,
                           const std::string& series_id = {}) {
    if (const auto* h = std::get_if<Hybrid>(&policy)) return decide_retrain(h->resolve(series_id), batch_index, drifts);
    return std::visit(
        [&](const auto& p) -> bool {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Hybrid>) return false;
            else return decide_retrain(BasePolicy{p}, batch_index, drifts);
        },
        policy);
}

enum class MaseScale { Batch, Train };

struct SimulationConfig {
    double train_fraction = 1.0 / 3.0;
    std::size_t train_weeks = 8;
    std::size_t val_weeks = 2;
    std::size_t batch_hours = 168;
    std::size_t horizon_hours = 336;
    MaseScale mase_scale = MaseScale::Batch;
    fedd::DetectorConfig detector{};
    forecast::FeatureSpec features{};
    std::vector<forecast::HParams> grid = forecast::default_grid();
    std::uint64_t seed = 1;
    std::string series_id;

    std::size_t week_hours() const noexcept { return batch_hours; }

    void validate() const {
        if (batch_hours < 1) throw SimulationError(SimulationErrc::InvalidConfig, "batch_hours must be >= 1");
        if (train_weeks < 1 || val_weeks < 1) throw SimulationError(SimulationErrc::InvalidConfig, "train/val weeks must be >= 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
            throw SimulationError(SimulationErrc::InvalidConfig, "train_fraction must be in (0,1)");
        }
        if (horizon_hours < batch_hours) throw SimulationError(SimulationErrc::InvalidConfig, "horizon must cover a batch");
        if (features.horizon < horizon_hours) {
            throw SimulationError(SimulationErrc::InvalidConfig, "feature horizon shorter than forecast horizon");
        }
        if (grid.empty()) throw SimulationError(SimulationErrc::InvalidConfig, "empty hyperparameter grid");
        detector.validate();
    }

    // Initial train+validation span: train_fraction of the series rounded down to
    // whole batches, never shorter than train_weeks + val_weeks.
    std::size_t initial_span(std::size_t series_len) const {
        const std::size_t minimum = (train_weeks + val_weeks) * batch_hours;
        const auto frac = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(series_len)));
        return std::max(minimum, frac / batch_hours * batch_hours);
    }
};

struct BatchRecord {
    std::size_t batch_index = 0;  // 1-based
    std::size_t start_slot = 0;
    std::vector<double> forecast;                  // horizon values from start_slot
    std::vector<std::optional<double>> actuals;    // batch slots
    std::optional<double> mase;                    // absent when undefined
    std::vector<DriftEvent> drift_events;
    bool retrained = false;
    forecast::HParams hparams_used;
};

struct SimulationTrace {
    std::string series_id;
    std::string policy;
    std::size_t initial_span = 0;
    std::vector<BatchRecord> batches;
    std::size_t retrain_count = 0;
    std::size_t drift_count = 0;

    std::vector<std::optional<double>> mase_curve() const {
        std::vector<std::optional<double>> out;
        out.reserve(batches.size());
        for (const auto& b : batches) out.push_back(b.mase);
        return out;
    }

    std::optional<double> mean_mase() const {
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto& b : batches) {
            if (b.mase) {
                acc += *b.mase;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return acc / static_cast<double>(n);
    }
};

// The model deployed before the first test batch: trained on the first
// train_weeks, tuned on the following val_weeks.
inline forecast::TrainedForecaster initial_model(const TimeSeries& ts, const SimulationConfig& cfg) {
    const std::size_t train_end = cfg.train_weeks * cfg.batch_hours;
    const std::size_t val_end = train_end + cfg.val_weeks * cfg.batch_hours;
    if (val_end > ts.size()) throw SimulationError(SimulationErrc::SeriesTooShort, "series shorter than train + validation weeks");
    return forecast::train_forecaster(ts, train_end, val_end, cfg.features, cfg.grid);
}

// Refits the seasonal-trend model and grid search on all data before upto_slot;
// the last val_weeks serve as validation.
inline forecast::TrainedForecaster retrain(const TimeSeries& ts, std::size_t upto_slot, const SimulationConfig& cfg) {
    const std::size_t val_len = cfg.val_weeks * cfg.batch_hours;
    if (upto_slot > ts.size() || upto_slot < (cfg.train_weeks + cfg.val_weeks) * cfg.batch_hours) {
        throw SimulationError(SimulationErrc::SeriesTooShort, "retrain: not enough data before upto_slot");
    }
    return forecast::train_forecaster(ts, upto_slot - val_len, upto_slot, cfg.features, cfg.grid);
}

// Memoizes models for one (series, config) pair, so several policies replayed
// over the same series share identical fits.
class ModelCache {
public:
    const forecast::TrainedForecaster& initial(const TimeSeries& ts, const SimulationConfig& cfg) {
        if (!initial_) initial_ = initial_model(ts, cfg);
        return *initial_;
    }
    const forecast::TrainedForecaster& get(const TimeSeries& ts, std::size_t upto_slot, const SimulationConfig& cfg) {
        auto it = models_.find(upto_slot);
        if (it == models_.end()) it = models_.emplace(upto_slot, retrain(ts, upto_slot, cfg)).first;
        return it->second;
    }
    std::size_t size() const noexcept { return models_.size() + (initial_ ? 1 : 0); }

private:
    std::optional<forecast::TrainedForecaster> initial_;
    std::map<std::size_t, forecast::TrainedForecaster> models_;
};

struct SimulationHooks {
    ModelCache* cache = nullptr;
    // Receives, per batch, the highest slot read while building that batch's forecast.
    std::vector<std::optional<std::size_t>>* max_slot_read = nullptr;
    // Records every retrain's upto_slot.
    std::vector<std::size_t>* retrain_slots = nullptr;
};

inline std::optional<double> score_batch(const TimeSeries& ts, std::size_t start, std::span<const std::optional<double>> actuals,
                                         std::span<const double> predictions, MaseScale scale) {
    const auto batch = metrics::EvaluationBatch::paired(actuals, predictions);
    try {
        if (scale == MaseScale::Batch) return metrics::mase(batch);
        const auto history = compact(ts, start);
        if (batch.size() < 1) return std::nullopt;
        return metrics::mase_with_scale(batch, metrics::naive_scale(history.values));
    } catch (const MetricError&) {
        return std::nullopt;
    }
}

inline SimulationTrace run_simulation(const TimeSeries& ts, const RetrainPolicy& policy, const SimulationConfig& cfg,
                                      const SimulationHooks& hooks = {}) {
    cfg.validate();
    const std::size_t start = cfg.initial_span(ts.size());
    if (start + cfg.batch_hours > ts.size()) {
        throw SimulationError(SimulationErrc::SeriesTooShort, "series too short for the initial span plus one test batch");
    }
    const std::size_t n_batches = (ts.size() - start) / cfg.batch_hours;

    SimulationTrace trace;
    trace.series_id = cfg.series_id;
    trace.policy = policy_name(policy);
    trace.initial_span = start;

    ModelCache local_cache;
    ModelCache& cache = hooks.cache ? *hooks.cache : local_cache;
    const forecast::TrainedForecaster* model = &cache.initial(ts, cfg);

    const auto seed = compact(ts, start);
    if (seed.size() < cfg.detector.ref_len) {
        throw SimulationError(SimulationErrc::SeriesTooShort, "not enough present samples to seed the detector");
    }
    auto detector = fedd::FeddDetector::init(cfg.detector, seed.values);

    for (std::size_t b = 1; b <= n_batches; ++b) {
        BatchRecord rec;
        rec.batch_index = b;
        rec.start_slot = start + (b - 1) * cfg.batch_hours;
        rec.hparams_used = model->hparams;

        forecast::AccessAudit audit;
        rec.forecast = forecast::forecast(*model, ts, rec.start_slot, cfg.horizon_hours, &audit);
        if (hooks.max_slot_read) hooks.max_slot_read->push_back(audit.max_index);

        const std::size_t end = rec.start_slot + cfg.batch_hours;
        rec.actuals.assign(ts.slots().begin() + static_cast<std::ptrdiff_t>(rec.start_slot),
                           ts.slots().begin() + static_cast<std::ptrdiff_t>(end));
        rec.mase = score_batch(ts, rec.start_slot, rec.actuals,
                               std::span<const double>(rec.forecast).first(cfg.batch_hours), cfg.mase_scale);

        for (std::size_t i = rec.start_slot; i < end; ++i) {
            if (!ts[i]) continue;
            const auto outcome = detector.observe(*ts[i]);
            if (const auto* d = std::get_if<fedd::Drift>(&outcome)) {
                rec.drift_events.push_back({d->at_sample, i, d->distance, d->z, d->threshold});
            }
        }
        trace.drift_count += rec.drift_events.size();

        if (decide_retrain(policy, b, rec.drift_events, cfg.series_id)) {
            rec.retrained = true;
            ++trace.retrain_count;
            if (hooks.retrain_slots) hooks.retrain_slots->push_back(end);
            model = &cache.get(ts, end, cfg);
        }
        trace.batches.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace driftcast::sim
