#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "driftcast/errors.hpp"
#include "driftcast/tsfeatures.hpp"

// Online feature-extraction drift detector. A reference feature vector is
// compared against the features of a sliding current window by cosine
// distance; the distance stream is monitored by an EWMA control chart. After a
// drift the detector cools down, then rebuilds its reference from the most
// recent samples. Storage is bounded by the replay and window buffers.
namespace driftcast::fedd {

using features::FeatureConfig;
using features::FeatureVector;

struct DetectorConfig {
    std::size_t ref_len = 1344;          // 8 weeks of hourly samples
    std::size_t cur_len = 336;           // 2 weeks
    double lambda = 0.2;                 // EWMA smoothing
    // Consecutive distances share all but one window sample, so the chart's
    // i.i.d. variance factor understates the spread of z; the limit is set
    // accordingly high.
    double control_limit = 18.0;         // L
    std::size_t warmup_min = 336;        // distances required before drift can fire
    std::size_t cooldown_samples = 336;
    bool normalize_features = false;     // scale both vectors by |reference| per coordinate
    FeatureConfig features{5, 3, 8};

    void validate() const {
        if (cur_len < features.min_window()) throw DetectorError(DetectorErrc::InvalidConfig, "cur_len below minimum feature window");
        if (ref_len <= cur_len) throw DetectorError(DetectorErrc::InvalidConfig, "ref_len must exceed cur_len");
        if (!(lambda > 0.0 && lambda <= 1.0)) throw DetectorError(DetectorErrc::InvalidConfig, "lambda must be in (0,1]");
        if (!(control_limit > 0.0)) throw DetectorError(DetectorErrc::InvalidConfig, "control limit must be positive");
        if (cooldown_samples < 1) throw DetectorError(DetectorErrc::InvalidConfig, "cooldown_samples must be >= 1");
    }
};

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_distance: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DetectorError(DetectorErrc::ZeroNormFeatures, "zero-norm feature vector");
    return std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
}

inline double cosine_distance(const FeatureVector& a, const FeatureVector& b) {
    return cosine_distance(std::span<const double>(a.values), std::span<const double>(b.values));
}

// sqrt(lambda/(2-lambda) * (1-(1-lambda)^(2t)))
inline double ewma_sigma_factor(double lambda, std::uint64_t t) {
    return std::sqrt(lambda / (2.0 - lambda) * (1.0 - std::pow(1.0 - lambda, 2.0 * static_cast<double>(t))));
}

// EWMA of distances plus Welford mean/variance of every distance since reset.
struct EwmaChart {
    double z = 0.0;
    std::uint64_t t = 0;
    double mean0 = 0.0;
    double m2 = 0.0;

    void reset() noexcept { *this = EwmaChart{}; }

    void update(double d, double lambda) noexcept {
        ++t;
        const double delta = d - mean0;
        mean0 += delta / static_cast<double>(t);
        m2 += delta * (d - mean0);
        z = t == 1 ? d : (1.0 - lambda) * z + lambda * d;
    }

    double sigma0() const noexcept { return t > 0 ? std::sqrt(std::max(0.0, m2) / static_cast<double>(t)) : 0.0; }

    double threshold(double lambda, double limit) const noexcept {
        return mean0 + limit * sigma0() * ewma_sigma_factor(lambda, t);
    }
};

// Fixed-capacity FIFO; oldest element is overwritten once full.
class RingBuffer {
public:
    RingBuffer() = default;
    explicit RingBuffer(std::size_t capacity) : data_(capacity, 0.0) {}

    void push(double v) {
        data_[head_] = v;
        head_ = (head_ + 1) % data_.size();
        size_ = std::min(size_ + 1, data_.size());
    }
    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return data_.size(); }
    bool full() const noexcept { return size_ == data_.size(); }

    // Oldest-to-newest copy of the most recent `n` elements.
    void copy_tail(std::size_t n, std::vector<double>& out) const {
        n = std::min(n, size_);
        out.resize(n);
        const std::size_t cap = data_.size();
        std::size_t idx = (head_ + cap - n) % cap;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = data_[idx];
            idx = idx + 1 == cap ? 0 : idx + 1;
        }
    }
    std::vector<double> to_vector() const {
        std::vector<double> out;
        copy_tail(size_, out);
        return out;
    }

    const std::vector<double>& raw() const noexcept { return data_; }
    std::size_t head() const noexcept { return head_; }

    static RingBuffer restore(std::vector<double> raw, std::size_t head, std::size_t size) {
        if (raw.empty() || head >= raw.size() || size > raw.size()) throw std::invalid_argument("RingBuffer::restore: bad layout");
        RingBuffer rb;
        rb.data_ = std::move(raw);
        rb.head_ = head;
        rb.size_ = size;
        return rb;
    }

private:
    std::vector<double> data_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

enum class Phase : std::uint8_t { Filling, Monitoring, Cooldown };

struct NotReady {};
struct NoDrift {
    double distance = 0.0;
    double z = 0.0;
    double threshold = 0.0;
    bool degenerate_window = false;
};
struct Drift {
    double distance = 0.0;
    double z = 0.0;
    double threshold = 0.0;
    std::uint64_t at_sample = 0;  // 0-based position in the observed stream
};
struct CoolingDown {
    std::size_t remaining = 0;
};

using DetectionOutcome = std::variant<NotReady, NoDrift, Drift, CoolingDown>;

inline bool is_drift(const DetectionOutcome& o) noexcept { return std::holds_alternative<Drift>(o); }

class FeddDetector {
public:
    // Starts in Filling; Monitoring begins once ref_len samples have been observed.
    explicit FeddDetector(DetectorConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        replay_ = RingBuffer(cfg_.ref_len);
        window_ = RingBuffer(cfg_.cur_len);
    }

    // Builds the reference from the last ref_len seed values and starts monitoring.
    static FeddDetector init(DetectorConfig cfg, std::span<const double> seed_values) {
        FeddDetector det(std::move(cfg));
        if (seed_values.size() < det.cfg_.ref_len) throw DetectorError(DetectorErrc::SeedTooShort, "seed shorter than ref_len");
        for (double v : seed_values.subspan(seed_values.size() - det.cfg_.ref_len)) {
            det.replay_.push(v);
            det.window_.push(v);
        }
        det.rebuild_reference();
        return det;
    }

    DetectionOutcome observe(double sample) {
        if (!std::isfinite(sample)) throw std::invalid_argument("observe: non-finite sample");
        const std::uint64_t position = samples_seen_++;
        replay_.push(sample);
        window_.push(sample);

        switch (phase_) {
            case Phase::Filling:
                if (replay_.full()) {
                    try {
                        rebuild_reference();
                    } catch (const DetectorError&) {
                        // Constant history: keep filling until the replay buffer varies.
                    }
                }
                return NotReady{};
            case Phase::Cooldown:
                if (--cooldown_remaining_ == 0) {
                    try {
                        rebuild_reference();
                    } catch (const DetectorError&) {
                        cooldown_remaining_ = cfg_.cooldown_samples;
                    }
                }
                return CoolingDown{cooldown_remaining_};
            case Phase::Monitoring:
                break;
        }

        window_.copy_tail(cfg_.cur_len, scratch_);
        FeatureVector current;
        try {
            current = features::fedd_features(scratch_, cfg_.features);
        } catch (const FeatureError&) {
            return NoDrift{last_distance_, chart_.z, chart_.threshold(cfg_.lambda, cfg_.control_limit), true};
        }
        const double d = distance_to_reference(current);
        last_distance_ = d;
        chart_.update(d, cfg_.lambda);
        const double limit = chart_.threshold(cfg_.lambda, cfg_.control_limit);
        if (chart_.t >= cfg_.warmup_min && chart_.z > limit) {
            Drift drift{d, chart_.z, limit, position};
            reset_after_drift();
            return drift;
        }
        return NoDrift{d, chart_.z, limit, false};
    }

    // Enters cool-down; the reference is rebuilt from the replay buffer when it elapses.
    void reset_after_drift() {
        phase_ = Phase::Cooldown;
        cooldown_remaining_ = cfg_.cooldown_samples;
        ++drift_count_;
    }

    const DetectorConfig& config() const noexcept { return cfg_; }
    Phase phase() const noexcept { return phase_; }
    std::size_t cooldown_remaining() const noexcept { return cooldown_remaining_; }
    const FeatureVector& reference_features() const noexcept { return ref_features_; }
    const EwmaChart& chart() const noexcept { return chart_; }
    std::uint64_t samples_seen() const noexcept { return samples_seen_; }
    std::uint64_t drift_count() const noexcept { return drift_count_; }
    double last_distance() const noexcept { return last_distance_; }
    std::vector<double> current_window() const { return window_.to_vector(); }
    std::vector<double> replay_window() const { return replay_.to_vector(); }

    // Fixed-layout binary image of the full detector state. Its size depends only on the config.
    std::vector<std::uint8_t> serialize() const {
        std::vector<std::uint8_t> out;
        auto put = [&out](const auto& v) {
            static_assert(std::is_trivially_copyable_v<std::decay_t<decltype(v)>>);
            const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
            out.insert(out.end(), p, p + sizeof v);
        };
        auto put_buffer = [&](const RingBuffer& rb) {
            put(static_cast<std::uint64_t>(rb.capacity()));
            put(static_cast<std::uint64_t>(rb.head()));
            put(static_cast<std::uint64_t>(rb.size()));
            for (double v : rb.raw()) put(v);
        };
        put(static_cast<std::uint64_t>(cfg_.ref_len));
        put(static_cast<std::uint64_t>(cfg_.cur_len));
        put(cfg_.lambda);
        put(cfg_.control_limit);
        put(static_cast<std::uint64_t>(cfg_.warmup_min));
        put(static_cast<std::uint64_t>(cfg_.cooldown_samples));
        put(static_cast<std::uint8_t>(cfg_.normalize_features));
        put(static_cast<std::uint64_t>(cfg_.features.max_lag));
        put(static_cast<std::uint64_t>(cfg_.features.nonlinear_lags));
        put(static_cast<std::uint64_t>(cfg_.features.mi_bins));
        put(static_cast<std::uint8_t>(phase_));
        put(static_cast<std::uint64_t>(cooldown_remaining_));
        const std::size_t dim = cfg_.features.dimension();
        for (std::size_t i = 0; i < dim; ++i) put(i < ref_features_.size() ? ref_features_[i] : 0.0);
        put_buffer(replay_);
        put_buffer(window_);
        put(chart_.z);
        put(chart_.t);
        put(chart_.mean0);
        put(chart_.m2);
        put(samples_seen_);
        put(drift_count_);
        put(last_distance_);
        return out;
    }

    // Inverse of serialize(); rejects truncated or inconsistent images.
    static FeddDetector deserialize(std::span<const std::uint8_t> bytes) {
        std::size_t pos = 0;
        auto get = [&]<typename T>(T& v) {
            if (pos + sizeof v > bytes.size()) throw std::invalid_argument("detector image truncated");
            std::memcpy(&v, bytes.data() + pos, sizeof v);
            pos += sizeof v;
        };
        auto u64 = [&] {
            std::uint64_t v = 0;
            get(v);
            return static_cast<std::size_t>(v);
        };
        auto f64 = [&] {
            double v = 0;
            get(v);
            return v;
        };
        auto u8 = [&] {
            std::uint8_t v = 0;
            get(v);
            return v;
        };
        auto get_buffer = [&] {
            const std::size_t cap = u64();
            const std::size_t head = u64();
            const std::size_t size = u64();
            if (cap > bytes.size()) throw std::invalid_argument("detector image corrupt");
            std::vector<double> raw(cap);
            for (auto& v : raw) v = f64();
            return RingBuffer::restore(std::move(raw), head, size);
        };

        DetectorConfig cfg;
        cfg.ref_len = u64();
        cfg.cur_len = u64();
        cfg.lambda = f64();
        cfg.control_limit = f64();
        cfg.warmup_min = u64();
        cfg.cooldown_samples = u64();
        cfg.normalize_features = u8() != 0;
        cfg.features.max_lag = u64();
        cfg.features.nonlinear_lags = u64();
        cfg.features.mi_bins = u64();
        FeddDetector det(cfg);
        const auto phase = u8();
        if (phase > static_cast<std::uint8_t>(Phase::Cooldown)) throw std::invalid_argument("detector image: bad phase");
        det.phase_ = static_cast<Phase>(phase);
        det.cooldown_remaining_ = u64();
        std::vector<double> ref(cfg.features.dimension());
        for (auto& v : ref) v = f64();
        if (det.phase_ != Phase::Filling) det.ref_features_.values = std::move(ref);
        det.replay_ = get_buffer();
        det.window_ = get_buffer();
        if (det.replay_.capacity() != cfg.ref_len || det.window_.capacity() != cfg.cur_len) {
            throw std::invalid_argument("detector image: buffer sizes disagree with config");
        }
        get(det.chart_.z);
        get(det.chart_.t);
        get(det.chart_.mean0);
        get(det.chart_.m2);
        get(det.samples_seen_);
        get(det.drift_count_);
        get(det.last_distance_);
        if (pos != bytes.size()) throw std::invalid_argument("detector image has trailing bytes");
        return det;
    }

private:
    double distance_to_reference(const FeatureVector& current) const {
        if (!cfg_.normalize_features) return cosine_distance(ref_features_, current);
        std::vector<double> a(current.size()), b(current.size());
        for (std::size_t i = 0; i < current.size(); ++i) {
            const double scale = std::max(std::abs(ref_features_[i]), 1e-6);
            a[i] = ref_features_[i] / scale;
            b[i] = current[i] / scale;
        }
        return cosine_distance(a, b);
    }

    void rebuild_reference() {
        const auto ref = replay_.to_vector();
        try {
            ref_features_ = features::fedd_features(ref, cfg_.features);
        } catch (const FeatureError& e) {
            throw DetectorError(DetectorErrc::DegenerateReference, std::string("degenerate reference window: ") + e.what());
        }
        chart_.reset();
        last_distance_ = 0.0;
        phase_ = Phase::Monitoring;
        cooldown_remaining_ = 0;
    }

    DetectorConfig cfg_;
    Phase phase_ = Phase::Filling;
    std::size_t cooldown_remaining_ = 0;
    FeatureVector ref_features_;
    RingBuffer replay_;
    RingBuffer window_;
    EwmaChart chart_;
    std::uint64_t samples_seen_ = 0;
    std::uint64_t drift_count_ = 0;
    double last_distance_ = 0.0;
    std::vector<double> scratch_;  // not part of the state
};

}  // namespace driftcast::fedd
