#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "driftcast/fedd.hpp"
#include "driftcast/forecaster.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/orchestrator.hpp"

// JSON views of the toolkit's result types. Traces round-trip; the rest are
// export-only.
namespace driftcast::json_io {

using nlohmann::json;

inline constexpr std::string_view kToolVersion = "1.0.0";

// FNV-1a, 64-bit.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

// Provenance record attached to every output. Holds no wall-clock data so
// identical runs emit identical bytes.
struct RunManifest {
    std::string command;
    std::optional<std::string> config_path;
    std::map<std::string, std::string> parameters;
    std::uint64_t seed = 0;
    std::string tool_version{kToolVersion};
    std::map<std::string, std::string> input_hashes;  // input name -> fnv1a hex
};

inline json to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["config_path"] = m.config_path ? json(*m.config_path) : json(nullptr);
    j["parameters"] = m.parameters;
    j["seed"] = m.seed;
    j["tool_version"] = m.tool_version;
    j["input_hashes"] = m.input_hashes;
    return j;
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    if (!j.at("config_path").is_null()) m.config_path = j.at("config_path").get<std::string>();
    m.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
    return m;
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> number_or_null(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline json to_json(const forecast::HParams& hp) {
    return {{"num_trees", hp.num_trees},
            {"max_depth", hp.max_depth},
            {"learning_rate", hp.learning_rate},
            {"min_samples_leaf", hp.min_samples_leaf}};
}

inline forecast::HParams hparams_from_json(const json& j) {
    return {j.at("num_trees").get<std::size_t>(), j.at("max_depth").get<std::size_t>(), j.at("learning_rate").get<double>(),
            j.at("min_samples_leaf").get<std::size_t>()};
}

inline json to_json(const sim::DriftEvent& e) {
    return {{"stream_position", e.stream_position},
            {"slot_index", e.slot_index},
            {"distance", e.distance},
            {"z", e.z},
            {"threshold", e.threshold}};
}

inline sim::DriftEvent drift_event_from_json(const json& j) {
    return {j.at("stream_position").get<std::uint64_t>(), j.at("slot_index").get<std::size_t>(), j.at("distance").get<double>(),
            j.at("z").get<double>(), j.at("threshold").get<double>()};
}

inline json to_json(const sim::BatchRecord& b) {
    json actuals = json::array();
    for (const auto& a : b.actuals) actuals.push_back(optional_number(a));
    json events = json::array();
    for (const auto& e : b.drift_events) events.push_back(to_json(e));
    return {{"batch_index", b.batch_index},
            {"start_slot", b.start_slot},
            {"forecast", b.forecast},
            {"actuals", std::move(actuals)},
            {"mase", optional_number(b.mase)},
            {"drift_events", std::move(events)},
            {"retrained", b.retrained},
            {"hparams_used", to_json(b.hparams_used)}};
}

inline sim::BatchRecord batch_from_json(const json& j) {
    sim::BatchRecord b;
    b.batch_index = j.at("batch_index").get<std::size_t>();
    b.start_slot = j.at("start_slot").get<std::size_t>();
    b.forecast = j.at("forecast").get<std::vector<double>>();
    for (const auto& a : j.at("actuals")) b.actuals.push_back(number_or_null(a));
    b.mase = number_or_null(j.at("mase"));
    for (const auto& e : j.at("drift_events")) b.drift_events.push_back(drift_event_from_json(e));
    b.retrained = j.at("retrained").get<bool>();
    b.hparams_used = hparams_from_json(j.at("hparams_used"));
    return b;
}

inline json to_json(const sim::SimulationTrace& t) {
    json batches = json::array();
    for (const auto& b : t.batches) batches.push_back(to_json(b));
    return {{"series_id", t.series_id},
            {"policy", t.policy},
            {"initial_span", t.initial_span},
            {"retrain_count", t.retrain_count},
            {"drift_count", t.drift_count},
            {"mean_mase", optional_number(t.mean_mase())},
            {"batches", std::move(batches)}};
}

// Rejects traces whose totals disagree with their batch records.
inline sim::SimulationTrace trace_from_json(const json& j) {
    sim::SimulationTrace t;
    t.series_id = j.at("series_id").get<std::string>();
    t.policy = j.at("policy").get<std::string>();
    t.initial_span = j.at("initial_span").get<std::size_t>();
    t.retrain_count = j.at("retrain_count").get<std::size_t>();
    t.drift_count = j.at("drift_count").get<std::size_t>();
    for (const auto& b : j.at("batches")) t.batches.push_back(batch_from_json(b));
    std::size_t retrains = 0, drifts = 0;
    for (const auto& b : t.batches) {
        retrains += b.retrained ? 1 : 0;
        drifts += b.drift_events.size();
    }
    if (retrains != t.retrain_count || drifts != t.drift_count) {
        throw std::invalid_argument("trace totals do not match its batch records");
    }
    return t;
}

inline json to_json(const metrics::WilcoxonResult& w) {
    return {{"statistic", w.statistic}, {"p_value", w.p_value}, {"n_nonzero", w.n_nonzero}, {"exact", w.exact}};
}

inline json to_json(const metrics::ComparisonReport& r) {
    return {{"mase_periodic", r.mase_periodic},
            {"mase_fedd", r.mase_fedd},
            {"mase_improvement_pct", r.mase_improvement_pct},
            {"retrainings_periodic", r.retrainings_periodic},
            {"retrainings_fedd", r.retrainings_fedd},
            {"retraining_savings_pct", optional_number(r.retraining_savings_pct)},
            {"wilcoxon", r.wilcoxon ? to_json(*r.wilcoxon) : json(nullptr)},
            {"degenerate_pairs", !r.wilcoxon.has_value()},
            {"paired_batches", r.paired_batches},
            {"excluded_batches", r.excluded_batches}};
}

inline json to_json(const forecast::SeasonalTrendModel& m) {
    auto arr = [](const auto& a) { return std::vector<double>(a.begin(), a.end()); };
    return {{"origin", m.origin},
            {"intercept", m.intercept},
            {"slope_per_hour", m.slope},
            {"daily_sin", arr(m.daily_sin)},
            {"daily_cos", arr(m.daily_cos)},
            {"weekly_sin", arr(m.weekly_sin)},
            {"weekly_cos", arr(m.weekly_cos)}};
}

namespace detail {

inline json node_to_json(const forecast::RegressionTree& tree, std::size_t i, const std::vector<std::string>& names) {
    const auto& n = tree.nodes[i];
    if (n.is_leaf()) return {{"leaf", n.value}};
    const auto f = static_cast<std::size_t>(n.feature);
    return {{"feature", f < names.size() ? json(names[f]) : json(f)},
            {"feature_index", f},
            {"threshold", n.threshold},
            {"left", node_to_json(tree, static_cast<std::size_t>(n.left), names)},
            {"right", node_to_json(tree, static_cast<std::size_t>(n.right), names)}};
}

}  // namespace detail

// Trees as nested split/leaf records. `left` holds rows with feature <= threshold.
inline json to_json(const forecast::GbtModel& m) {
    json trees = json::array();
    for (const auto& t : m.trees) trees.push_back(detail::node_to_json(t, 0, m.feature_names));
    return {{"base_prediction", m.base_prediction},
            {"hparams", to_json(m.hparams)},
            {"feature_names", m.feature_names},
            {"schema_hash", hex64(m.schema_hash)},
            {"trees", std::move(trees)}};
}

inline json to_json(const forecast::FeatureSpec& s) {
    return {{"horizon", s.horizon},
            {"lag_offsets", s.lag_offsets},
            {"rolling_windows", s.rolling_windows},
            {"time_features", s.time_features},
            {"seasonal_features", s.seasonal_features},
            {"columns", s.column_names()}};
}

inline json to_json(const forecast::TrainedForecaster& f) {
    return {{"feature_spec", to_json(f.spec)},
            {"seasonal_trend", to_json(f.stm)},
            {"model", to_json(f.model)},
            {"val_mae", f.val_mae},
            {"train_end", f.train_end},
            {"val_end", f.val_end}};
}

inline json to_json(const fedd::DetectorConfig& c) {
    return {{"ref_len", c.ref_len},
            {"cur_len", c.cur_len},
            {"lambda", c.lambda},
            {"control_limit", c.control_limit},
            {"warmup_min", c.warmup_min},
            {"cooldown_samples", c.cooldown_samples},
            {"normalize_features", c.normalize_features},
            {"max_lag", c.features.max_lag},
            {"nonlinear_lags", c.features.nonlinear_lags},
            {"mi_bins", c.features.mi_bins}};
}

inline std::string_view phase_name(fedd::Phase p) {
    switch (p) {
        case fedd::Phase::Filling: return "filling";
        case fedd::Phase::Monitoring: return "monitoring";
        case fedd::Phase::Cooldown: return "cooldown";
    }
    return "unknown";
}

// Summary of a detector's state; the binary image from serialize() is the full record.
inline json to_json(const fedd::FeddDetector& d) {
    const auto& c = d.chart();
    return {{"phase", phase_name(d.phase())},
            {"cooldown_remaining", d.cooldown_remaining()},
            {"samples_seen", d.samples_seen()},
            {"drift_count", d.drift_count()},
            {"reference_features", d.reference_features().values},
            {"chart",
             {{"z", c.z},
              {"t", c.t},
              {"mean0", c.mean0},
              {"sigma0", c.sigma0()},
              {"threshold", c.threshold(d.config().lambda, d.config().control_limit)}}},
            {"state_bytes", d.serialize().size()},
            {"config", to_json(d.config())}};
}

}  // namespace driftcast::json_io
