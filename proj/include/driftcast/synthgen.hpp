#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "driftcast/series.hpp"

// Synthetic utilization series with seasonal structure, AR(1) noise, injected
// level drifts and missing-data patterns.
namespace driftcast::synth {

inline constexpr EpochSeconds kDefaultStart = 1675209600;  // 2023-02-01T00:00:00Z

struct GeneratorConfig {
    std::size_t length_hours = 6048;
    double base_level = 50.0;
    double daily_amp = 10.0;
    double weekly_amp = 5.0;
    double ar_coefficient = 0.5;
    double noise_sigma = 2.0;
    std::uint64_t seed = 1;
    EpochSeconds start = kDefaultStart;
};

enum class DriftKind { Sudden, Gradual, Recurring };

struct DriftSpec {
    DriftKind kind = DriftKind::Sudden;
    std::size_t at_hour = 0;
    double magnitude = 0.0;       // in units of noise_sigma
    double noise_sigma = 1.0;     // unit for magnitude
    std::size_t ramp_hours = 1;   // Gradual
    std::size_t duration_hours = 336;  // Recurring

    double shift() const noexcept { return magnitude * noise_sigma; }
};

// y_t = base + daily_amp sin(2 pi t/24) + weekly_amp sin(2 pi t/168) + e_t,
// e_t = phi e_{t-1} + N(0, sigma^2).
inline TimeSeries gen_seasonal_ar(const GeneratorConfig& cfg) {
    if (cfg.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    if (cfg.ar_coefficient < 0.0 || cfg.ar_coefficient >= 1.0) throw std::invalid_argument("ar_coefficient must be in [0,1)");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::optional<double>> slots(cfg.length_hours);
    double e = 0.0;
    for (std::size_t t = 0; t < cfg.length_hours; ++t) {
        const double tt = static_cast<double>(t);
        const double seasonal = cfg.daily_amp * std::sin(2.0 * std::numbers::pi * tt / 24.0) +
                                cfg.weekly_amp * std::sin(2.0 * std::numbers::pi * tt / 168.0);
        if (cfg.noise_sigma > 0.0) e = cfg.ar_coefficient * e + cfg.noise_sigma * noise(rng);
        slots[t] = cfg.base_level + seasonal + e;
    }
    return {cfg.start, std::move(slots)};
}

inline TimeSeries inject_drift(const TimeSeries& ts, const DriftSpec& spec) {
    if (spec.at_hour > ts.size()) throw std::invalid_argument("drift start beyond series end");
    if (spec.kind == DriftKind::Gradual && spec.ramp_hours < 1) throw std::invalid_argument("ramp_hours must be >= 1");
    if (spec.kind == DriftKind::Recurring && spec.at_hour + spec.duration_hours > ts.size()) {
        throw std::invalid_argument("recurring drift extends beyond series end");
    }
    const double full = spec.shift();
    auto slots = ts.slots();
    for (std::size_t t = spec.at_hour; t < slots.size(); ++t) {
        if (!slots[t]) continue;
        double delta = 0.0;
        switch (spec.kind) {
            case DriftKind::Sudden:
                delta = full;
                break;
            case DriftKind::Gradual: {
                const double progress = std::min(1.0, static_cast<double>(t - spec.at_hour) / static_cast<double>(spec.ramp_hours));
                delta = full * progress;
                break;
            }
            case DriftKind::Recurring:
                if (t >= spec.at_hour + spec.duration_hours) return {ts.start(), std::move(slots)};
                delta = full;
                break;
        }
        if (delta != 0.0) *slots[t] += delta;
    }
    return {ts.start(), std::move(slots)};
}

struct MissingMode {
    enum class Kind { Random, Burst } kind = Kind::Random;
    double probability = 0.0;     // Random
    std::size_t burst_start = 0;  // Burst
    std::size_t burst_length = 0;

    static MissingMode random(double p) { return {Kind::Random, p, 0, 0}; }
    static MissingMode burst(std::size_t start, std::size_t length) { return {Kind::Burst, 0.0, start, length}; }
};

inline TimeSeries inject_missing(const TimeSeries& ts, const MissingMode& mode, std::uint64_t seed) {
    auto slots = ts.slots();
    if (mode.kind == MissingMode::Kind::Random) {
        if (mode.probability < 0.0 || mode.probability >= 1.0) throw std::invalid_argument("missing probability must be in [0,1)");
        if (mode.probability == 0.0) return ts;
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution drop(mode.probability);
        for (auto& s : slots) {
            if (drop(rng)) s.reset();
        }
    } else {
        const std::size_t end = std::min(slots.size(), mode.burst_start + mode.burst_length);
        for (std::size_t i = mode.burst_start; i < end; ++i) slots[i].reset();
    }
    return {ts.start(), std::move(slots)};
}

}  // namespace driftcast::synth
