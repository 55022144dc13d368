#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftcast/errors.hpp"
#include "driftcast/orchestrator.hpp"
#include "driftcast/series.hpp"
#include "driftcast/synthgen.hpp"

// Run configuration in a flat `key = value` text format. Keys are dotted
// (`detector.lambda`), lists are comma separated, '#' starts a comment line.
namespace driftcast::config {

struct GridAxes {
    std::vector<std::size_t> num_trees{50, 100};
    std::vector<std::size_t> max_depth{3, 5};
    std::vector<double> learning_rate{0.05, 0.1};
    std::vector<std::size_t> min_samples_leaf{20};

    // Cartesian product, num_trees outermost.
    std::vector<forecast::HParams> expand() const {
        std::vector<forecast::HParams> grid;
        for (auto n : num_trees)
            for (auto d : max_depth)
                for (auto lr : learning_rate)
                    for (auto m : min_samples_leaf) grid.push_back({n, d, lr, m});
        return grid;
    }
};

struct ToolConfig {
    std::uint64_t seed = 1;
    sim::SimulationConfig sim;
    GridAxes grid;
    synth::GeneratorConfig generator;
    std::optional<synth::DriftSpec> drift;
    std::optional<synth::MissingMode> missing;

    sim::SimulationConfig simulation() const {
        auto s = sim;
        s.grid = grid.expand();
        s.seed = seed;
        return s;
    }
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += format_double(xs[i]);
        else out += std::to_string(xs[i]);
    }
    return out;
}

inline ConfigError bad_value(std::string_view key, std::string_view value) {
    return ConfigError(ConfigErrc::BadValue, "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_scalar(std::string_view key, std::string_view text) {
    if constexpr (std::is_same_v<T, bool>) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw bad_value(key, text);
    } else {
        auto v = driftcast::detail::parse_number<T>(driftcast::detail::trim(text));
        if (!v) throw bad_value(key, text);
        if constexpr (std::is_floating_point_v<T>) {
            if (!std::isfinite(*v)) throw bad_value(key, text);
        }
        return *v;
    }
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
    std::vector<T> out;
    if (driftcast::detail::trim(text).empty()) return out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = text.find(',', pos);
        out.push_back(parse_scalar<T>(key, text.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace detail

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = driftcast::detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(ConfigErrc::Syntax, "line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const auto key = driftcast::detail::trim(view.substr(0, eq));
        if (key.empty()) throw ConfigError(ConfigErrc::Syntax, "line " + std::to_string(lineno) + ": empty key");
        kv.emplace_back(std::string(key), std::string(driftcast::detail::trim(view.substr(eq + 1))));
    }
    return kv;
}

inline void apply(ToolConfig& c, std::string_view key, std::string_view value) {
    using detail::parse_list;
    using detail::parse_scalar;
    auto& d = c.sim.detector;
    auto& f = c.sim.features;
    auto& g = c.generator;
    auto drift = [&]() -> synth::DriftSpec& {
        if (!c.drift) c.drift = synth::DriftSpec{};
        return *c.drift;
    };
    auto missing = [&]() -> synth::MissingMode& {
        if (!c.missing) c.missing = synth::MissingMode{};
        return *c.missing;
    };

    if (key == "seed") c.seed = parse_scalar<std::uint64_t>(key, value);
    else if (key == "detector.ref_len") d.ref_len = parse_scalar<std::size_t>(key, value);
    else if (key == "detector.cur_len") d.cur_len = parse_scalar<std::size_t>(key, value);
    else if (key == "detector.lambda") d.lambda = parse_scalar<double>(key, value);
    else if (key == "detector.control_limit") d.control_limit = parse_scalar<double>(key, value);
    else if (key == "detector.warmup_min") d.warmup_min = parse_scalar<std::size_t>(key, value);
    else if (key == "detector.cooldown_samples") d.cooldown_samples = parse_scalar<std::size_t>(key, value);
    else if (key == "detector.normalize_features") d.normalize_features = parse_scalar<bool>(key, value);
    else if (key == "detector.max_lag") d.features.max_lag = parse_scalar<std::size_t>(key, value);
    else if (key == "detector.nonlinear_lags") d.features.nonlinear_lags = parse_scalar<std::size_t>(key, value);
    else if (key == "detector.mi_bins") d.features.mi_bins = parse_scalar<std::size_t>(key, value);
    else if (key == "sim.train_fraction") c.sim.train_fraction = parse_scalar<double>(key, value);
    else if (key == "sim.train_weeks") c.sim.train_weeks = parse_scalar<std::size_t>(key, value);
    else if (key == "sim.val_weeks") c.sim.val_weeks = parse_scalar<std::size_t>(key, value);
    else if (key == "sim.batch_hours") c.sim.batch_hours = parse_scalar<std::size_t>(key, value);
    else if (key == "sim.horizon_hours") c.sim.horizon_hours = parse_scalar<std::size_t>(key, value);
    else if (key == "sim.mase_scale") {
        if (value == "batch") c.sim.mase_scale = sim::MaseScale::Batch;
        else if (value == "train") c.sim.mase_scale = sim::MaseScale::Train;
        else throw detail::bad_value(key, value);
    }
    else if (key == "features.horizon") f.horizon = parse_scalar<std::size_t>(key, value);
    else if (key == "features.lag_offsets") f.lag_offsets = parse_list<std::size_t>(key, value);
    else if (key == "features.rolling_windows") f.rolling_windows = parse_list<std::size_t>(key, value);
    else if (key == "features.time_features") f.time_features = parse_scalar<bool>(key, value);
    else if (key == "features.seasonal_features") f.seasonal_features = parse_scalar<bool>(key, value);
    else if (key == "grid.num_trees") c.grid.num_trees = parse_list<std::size_t>(key, value);
    else if (key == "grid.max_depth") c.grid.max_depth = parse_list<std::size_t>(key, value);
    else if (key == "grid.learning_rate") c.grid.learning_rate = parse_list<double>(key, value);
    else if (key == "grid.min_samples_leaf") c.grid.min_samples_leaf = parse_list<std::size_t>(key, value);
    else if (key == "synth.length_hours") g.length_hours = parse_scalar<std::size_t>(key, value);
    else if (key == "synth.base_level") g.base_level = parse_scalar<double>(key, value);
    else if (key == "synth.daily_amp") g.daily_amp = parse_scalar<double>(key, value);
    else if (key == "synth.weekly_amp") g.weekly_amp = parse_scalar<double>(key, value);
    else if (key == "synth.ar_coefficient") g.ar_coefficient = parse_scalar<double>(key, value);
    else if (key == "synth.noise_sigma") g.noise_sigma = parse_scalar<double>(key, value);
    else if (key == "synth.start") {
        const auto t = parse_timestamp(value);
        if (!t || *t % kHour != 0) throw detail::bad_value(key, value);
        g.start = *t;
    }
    else if (key == "synth.drift.kind") {
        if (value == "none") c.drift.reset();
        else if (value == "sudden") drift().kind = synth::DriftKind::Sudden;
        else if (value == "gradual") drift().kind = synth::DriftKind::Gradual;
        else if (value == "recurring") drift().kind = synth::DriftKind::Recurring;
        else throw detail::bad_value(key, value);
    }
    else if (key == "synth.drift.at_hour") drift().at_hour = parse_scalar<std::size_t>(key, value);
    else if (key == "synth.drift.magnitude") drift().magnitude = parse_scalar<double>(key, value);
    else if (key == "synth.drift.ramp_hours") drift().ramp_hours = parse_scalar<std::size_t>(key, value);
    else if (key == "synth.drift.duration_hours") drift().duration_hours = parse_scalar<std::size_t>(key, value);
    else if (key == "synth.missing.mode") {
        if (value == "none") c.missing.reset();
        else if (value == "random") missing().kind = synth::MissingMode::Kind::Random;
        else if (value == "burst") missing().kind = synth::MissingMode::Kind::Burst;
        else throw detail::bad_value(key, value);
    }
    else if (key == "synth.missing.probability") missing().probability = parse_scalar<double>(key, value);
    else if (key == "synth.missing.burst_start") missing().burst_start = parse_scalar<std::size_t>(key, value);
    else if (key == "synth.missing.burst_length") missing().burst_length = parse_scalar<std::size_t>(key, value);
    else throw ConfigError(ConfigErrc::UnknownKey, "unknown configuration key '" + std::string(key) + "'");
}

// Checks cross-field constraints the individual setters cannot see.
inline void validate(const ToolConfig& c) {
    try {
        c.simulation().validate();
        c.sim.features.validate();
    } catch (const std::exception& e) {
        throw ConfigError(ConfigErrc::BadValue, e.what());
    }
    if (c.grid.expand().empty()) throw ConfigError(ConfigErrc::BadValue, "hyperparameter grid is empty");
    if (c.generator.noise_sigma < 0.0) throw ConfigError(ConfigErrc::BadValue, "synth.noise_sigma must be >= 0");
    if (c.generator.ar_coefficient < 0.0 || c.generator.ar_coefficient >= 1.0) {
        throw ConfigError(ConfigErrc::BadValue, "synth.ar_coefficient must be in [0,1)");
    }
    if (c.missing && c.missing->kind == synth::MissingMode::Kind::Random &&
        (c.missing->probability < 0.0 || c.missing->probability >= 1.0)) {
        throw ConfigError(ConfigErrc::BadValue, "synth.missing.probability must be in [0,1)");
    }
}

inline ToolConfig load(std::istream& in, ToolConfig base = {}) {
    for (const auto& [k, v] : parse_key_values(in)) apply(base, k, v);
    return base;
}

inline ToolConfig load_file(const std::string& path, ToolConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigErrc::Unreadable, "cannot read config file '" + path + "'");
    return load(in, std::move(base));
}

// Every effective parameter, keyed as in the config file.
inline std::map<std::string, std::string> resolved(const ToolConfig& c) {
    using detail::format_double;
    using detail::join;
    const auto& d = c.sim.detector;
    const auto& f = c.sim.features;
    const auto& g = c.generator;
    std::map<std::string, std::string> m{
        {"seed", std::to_string(c.seed)},
        {"detector.ref_len", std::to_string(d.ref_len)},
        {"detector.cur_len", std::to_string(d.cur_len)},
        {"detector.lambda", format_double(d.lambda)},
        {"detector.control_limit", format_double(d.control_limit)},
        {"detector.warmup_min", std::to_string(d.warmup_min)},
        {"detector.cooldown_samples", std::to_string(d.cooldown_samples)},
        {"detector.normalize_features", d.normalize_features ? "true" : "false"},
        {"detector.max_lag", std::to_string(d.features.max_lag)},
        {"detector.nonlinear_lags", std::to_string(d.features.nonlinear_lags)},
        {"detector.mi_bins", std::to_string(d.features.mi_bins)},
        {"sim.train_fraction", format_double(c.sim.train_fraction)},
        {"sim.train_weeks", std::to_string(c.sim.train_weeks)},
        {"sim.val_weeks", std::to_string(c.sim.val_weeks)},
        {"sim.batch_hours", std::to_string(c.sim.batch_hours)},
        {"sim.horizon_hours", std::to_string(c.sim.horizon_hours)},
        {"sim.mase_scale", c.sim.mase_scale == sim::MaseScale::Batch ? "batch" : "train"},
        {"features.horizon", std::to_string(f.horizon)},
        {"features.lag_offsets", join(f.lag_offsets)},
        {"features.rolling_windows", join(f.rolling_windows)},
        {"features.time_features", f.time_features ? "true" : "false"},
        {"features.seasonal_features", f.seasonal_features ? "true" : "false"},
        {"grid.num_trees", join(c.grid.num_trees)},
        {"grid.max_depth", join(c.grid.max_depth)},
        {"grid.learning_rate", join(c.grid.learning_rate)},
        {"grid.min_samples_leaf", join(c.grid.min_samples_leaf)},
        {"synth.length_hours", std::to_string(g.length_hours)},
        {"synth.base_level", format_double(g.base_level)},
        {"synth.daily_amp", format_double(g.daily_amp)},
        {"synth.weekly_amp", format_double(g.weekly_amp)},
        {"synth.ar_coefficient", format_double(g.ar_coefficient)},
        {"synth.noise_sigma", format_double(g.noise_sigma)},
        {"synth.start", format_timestamp(g.start)},
    };
    if (c.drift) {
        const char* kinds[] = {"sudden", "gradual", "recurring"};
        m["synth.drift.kind"] = kinds[static_cast<int>(c.drift->kind)];
        m["synth.drift.at_hour"] = std::to_string(c.drift->at_hour);
        m["synth.drift.magnitude"] = format_double(c.drift->magnitude);
        m["synth.drift.ramp_hours"] = std::to_string(c.drift->ramp_hours);
        m["synth.drift.duration_hours"] = std::to_string(c.drift->duration_hours);
    } else {
        m["synth.drift.kind"] = "none";
    }
    if (c.missing) {
        if (c.missing->kind == synth::MissingMode::Kind::Random) {
            m["synth.missing.mode"] = "random";
            m["synth.missing.probability"] = format_double(c.missing->probability);
        } else {
            m["synth.missing.mode"] = "burst";
            m["synth.missing.burst_start"] = std::to_string(c.missing->burst_start);
            m["synth.missing.burst_length"] = std::to_string(c.missing->burst_length);
        }
    } else {
        m["synth.missing.mode"] = "none";
    }
    return m;
}

// Writes `resolved(c)` back in the config format; loading it reproduces c.
inline void write(std::ostream& out, const ToolConfig& c) {
    for (const auto& [k, v] : resolved(c)) out << k << " = " << v << '\n';
}

}  // namespace driftcast::config
