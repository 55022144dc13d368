#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "driftcast/seasonal.hpp"
#include "driftcast/series.hpp"

namespace driftcast::forecast {

struct FeatureSpec {
    std::size_t horizon = 336;
    std::vector<std::size_t> lag_offsets{0, 24, 168, 336};  // hours before t - horizon
    std::vector<std::size_t> rolling_windows{24, 168};      // windows ending at t - horizon
    bool time_features = true;
    bool seasonal_features = true;

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("FeatureSpec: horizon must be >= 1");
        for (auto w : rolling_windows) {
            if (w < 1) throw std::invalid_argument("FeatureSpec: rolling windows must be >= 1");
        }
    }

    std::vector<std::string> column_names() const {
        std::vector<std::string> names;
        if (time_features) {
            names.insert(names.end(), {"hour_of_day", "day_of_week", "is_weekend", "day_of_month", "month", "quarter",
                                       "is_month_start", "is_month_end"});
        }
        for (auto o : lag_offsets) names.push_back("lag_" + std::to_string(horizon + o));
        for (auto w : rolling_windows) {
            for (const char* stat : {"mean", "std", "min", "max"}) names.push_back("roll" + std::to_string(w) + "_" + stat);
        }
        if (seasonal_features) names.insert(names.end(), {"st_trend", "st_daily", "st_weekly"});
        return names;
    }

    // FNV-1a over the column names; guards train/predict schema agreement.
    std::uint64_t schema_hash() const {
        std::uint64_t h = 14695981039346656037ULL;
        for (const auto& name : column_names()) {
            for (unsigned char c : name) {
                h ^= c;
                h *= 1099511628211ULL;
            }
            h ^= 0xffu;
            h *= 1099511628211ULL;
        }
        return h;
    }
};

// Records the highest slot index read while building features.
struct AccessAudit {
    std::optional<std::size_t> max_index;
    std::size_t reads = 0;

    void record(std::size_t i) {
        ++reads;
        if (!max_index || i > *max_index) max_index = i;
    }
};

struct FeatureMatrix {
    std::size_t first_target = 0;  // slot index of row 0
    std::size_t cols = 0;
    std::vector<double> data;       // row-major
    std::vector<std::uint8_t> mask; // 1 = usable row
    std::vector<std::string> column_names;
    std::uint64_t schema_hash = 0;

    std::size_t rows() const noexcept { return mask.size(); }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::size_t usable_rows() const {
        return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    }
};

struct CalendarFields {
    int hour_of_day = 0;
    int day_of_week = 0;  // Monday = 0
    int day_of_month = 1;
    int month = 1;
    int days_in_month = 31;
};

inline CalendarFields calendar_fields(EpochSeconds t) {
    using namespace std::chrono;
    const EpochSeconds day_index = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
    const sys_days day{days{day_index}};
    const year_month_day ymd{day};
    const weekday wd{day};
    CalendarFields f;
    f.hour_of_day = static_cast<int>((t - day_index * 86400) / 3600);
    f.day_of_week = static_cast<int>(wd.iso_encoding()) - 1;
    f.day_of_month = static_cast<int>(static_cast<unsigned>(ymd.day()));
    f.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    f.days_in_month = static_cast<int>(static_cast<unsigned>(year_month_day_last{ymd.year() / ymd.month() / last}.day()));
    return f;
}

namespace detail {

// Read-only view over the series limited to slots <= limit. Every read is audited.
class HistoryReader {
public:
    HistoryReader(const TimeSeries& ts, std::ptrdiff_t limit, AccessAudit* audit) : ts_(ts), audit_(audit) {
        const auto n = static_cast<std::ptrdiff_t>(ts.size());
        limit_ = std::min(limit, n - 1);
        if (limit_ < 0) return;
        const auto len = static_cast<std::size_t>(limit_ + 1);
        prev_.assign(len, -1);
        next_.assign(len, -1);
        present_.assign(len, 0);
        for (std::size_t i = 0; i < len; ++i) {
            if (audit_) audit_->record(i);
            present_[i] = ts_[i].has_value();
            prev_[i] = present_[i] ? static_cast<std::ptrdiff_t>(i) : (i > 0 ? prev_[i - 1] : -1);
        }
        for (std::size_t k = len; k-- > 0;) {
            next_[k] = present_[k] ? static_cast<std::ptrdiff_t>(k) : (k + 1 < len ? next_[k + 1] : -1);
        }
    }

    // Nearest present value at or before i; failing that, the first present value in (i, cutoff].
    std::optional<double> value(std::ptrdiff_t i, std::ptrdiff_t cutoff) const {
        cutoff = std::min(cutoff, limit_);
        if (cutoff < 0) return std::nullopt;
        if (i > cutoff) i = cutoff;
        if (i >= 0 && prev_[static_cast<std::size_t>(i)] >= 0) return get(prev_[static_cast<std::size_t>(i)]);
        const std::ptrdiff_t from = std::max<std::ptrdiff_t>(i, 0);
        const auto nxt = next_[static_cast<std::size_t>(from)];
        if (nxt >= 0 && nxt <= cutoff) return get(nxt);
        return std::nullopt;
    }

    bool present(std::ptrdiff_t i) const { return i >= 0 && i <= limit_ && present_[static_cast<std::size_t>(i)]; }
    double get(std::ptrdiff_t i) const {
        if (audit_) audit_->record(static_cast<std::size_t>(i));
        return *ts_[static_cast<std::size_t>(i)];
    }

private:
    const TimeSeries& ts_;
    AccessAudit* audit_;
    std::ptrdiff_t limit_ = -1;
    std::vector<std::ptrdiff_t> prev_, next_;
    std::vector<std::uint8_t> present_;
};

}  // namespace detail

// Rows for target slots [begin, end). Every value feature of target t reads only
// slots <= t - horizon; end may extend past the series for out-of-sample rows.
// Missing history is carried forward from the nearest preceding present value.
// Rows without any usable history are masked.
inline FeatureMatrix build_features(const TimeSeries& ts, std::size_t begin, std::size_t end, const FeatureSpec& spec,
                                    const SeasonalTrendModel& stm, AccessAudit* audit = nullptr) {
    spec.validate();
    FeatureMatrix fm;
    fm.first_target = begin;
    fm.column_names = spec.column_names();
    fm.schema_hash = spec.schema_hash();
    fm.cols = fm.column_names.size();
    if (end <= begin) return fm;
    const std::size_t rows = end - begin;
    fm.data.assign(rows * fm.cols, 0.0);
    fm.mask.assign(rows, 1);

    const auto horizon = static_cast<std::ptrdiff_t>(spec.horizon);
    const detail::HistoryReader reader(ts, static_cast<std::ptrdiff_t>(end) - 1 - horizon, audit);

    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = begin + r;
        double* out = fm.data.data() + r * fm.cols;
        std::size_t c = 0;
        const EpochSeconds stamp = ts.timestamp(t);
        if (spec.time_features) {
            const auto cal = calendar_fields(stamp);
            out[c++] = cal.hour_of_day;
            out[c++] = cal.day_of_week;
            out[c++] = cal.day_of_week >= 5 ? 1.0 : 0.0;
            out[c++] = cal.day_of_month;
            out[c++] = cal.month;
            out[c++] = (cal.month - 1) / 3 + 1;
            out[c++] = cal.day_of_month <= 3 ? 1.0 : 0.0;
            out[c++] = cal.day_of_month > cal.days_in_month - 3 ? 1.0 : 0.0;
        }

        const std::ptrdiff_t cutoff = static_cast<std::ptrdiff_t>(t) - horizon;
        const auto anchor = reader.value(cutoff, cutoff);
        if (!anchor) {
            fm.mask[r] = 0;
            std::fill(out + c, out + fm.cols, std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        for (auto o : spec.lag_offsets) out[c++] = *reader.value(cutoff - static_cast<std::ptrdiff_t>(o), cutoff);

        for (auto w : spec.rolling_windows) {
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, cutoff - static_cast<std::ptrdiff_t>(w) + 1);
            double sum = 0.0, sq = 0.0, mn = std::numeric_limits<double>::infinity(), mx = -mn;
            std::size_t n = 0;
            for (std::ptrdiff_t i = lo; i <= cutoff; ++i) {
                if (!reader.present(i)) continue;
                const double v = reader.get(i);
                sum += v;
                sq += v * v;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
                ++n;
            }
            if (n == 0) {
                out[c++] = *anchor;
                out[c++] = 0.0;
                out[c++] = *anchor;
                out[c++] = *anchor;
            } else {
                const double mean = sum / static_cast<double>(n);
                out[c++] = mean;
                out[c++] = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
                out[c++] = mn;
                out[c++] = mx;
            }
        }
        if (spec.seasonal_features) {
            out[c++] = stm.trend(stamp);
            out[c++] = stm.daily(stamp);
            out[c++] = stm.weekly(stamp);
        }
    }
    return fm;
}

}  // namespace driftcast::forecast
