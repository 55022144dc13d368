#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "driftcast/errors.hpp"

namespace driftcast {

using EpochSeconds = std::int64_t;

inline constexpr EpochSeconds kHour = 3600;

struct RawPoint {
    EpochSeconds timestamp = 0;
    double value = 0.0;
};

// Minute-level (or any granularity) samples, strictly increasing in time.
struct RawSeries {
    std::vector<RawPoint> points;
};

// Hourly grid. Slot i covers [start + i*3600, start + (i+1)*3600).
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(EpochSeconds start, std::vector<std::optional<double>> slots)
        : start_(start), slots_(std::move(slots)) {
        if (start_ % kHour != 0) throw std::invalid_argument("TimeSeries start must be hour-aligned");
        for (const auto& s : slots_) {
            if (s && !std::isfinite(*s)) throw std::invalid_argument("TimeSeries values must be finite");
        }
    }

    static TimeSeries from_values(EpochSeconds start, std::span<const double> values) {
        std::vector<std::optional<double>> slots(values.begin(), values.end());
        return {start, std::move(slots)};
    }

    EpochSeconds start() const noexcept { return start_; }
    static constexpr EpochSeconds step() noexcept { return kHour; }
    std::size_t size() const noexcept { return slots_.size(); }
    bool empty() const noexcept { return slots_.empty(); }

    EpochSeconds timestamp(std::size_t i) const noexcept {
        return start_ + static_cast<EpochSeconds>(i) * kHour;
    }
    const std::optional<double>& operator[](std::size_t i) const { return slots_[i]; }
    bool present(std::size_t i) const { return slots_[i].has_value(); }
    const std::vector<std::optional<double>>& slots() const noexcept { return slots_; }

    std::size_t present_count() const noexcept {
        std::size_t n = 0;
        for (const auto& s : slots_) n += s.has_value() ? 1 : 0;
        return n;
    }

    // First `n` slots (n clipped to size()).
    TimeSeries prefix(std::size_t n) const {
        n = std::min(n, slots_.size());
        return {start_, std::vector<std::optional<double>>(slots_.begin(), slots_.begin() + static_cast<std::ptrdiff_t>(n))};
    }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    EpochSeconds start_ = 0;
    std::vector<std::optional<double>> slots_;
};

// Present values only, with each value's original slot index.
struct CompactSeries {
    std::vector<double> values;
    std::vector<std::size_t> origin_index;

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T out{};
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return out;
}

}  // namespace detail

// Parses `YYYY-MM-DDThh:mm:ssZ` or an integer epoch-seconds string.
inline std::optional<EpochSeconds> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    s = detail::trim(s);
    if (s.empty()) return std::nullopt;
    if (auto epoch = detail::parse_number<EpochSeconds>(s)) return epoch;
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z') {
        return std::nullopt;
    }
    auto yr = detail::parse_number<int>(s.substr(0, 4));
    auto mo = detail::parse_number<unsigned>(s.substr(5, 2));
    auto dy = detail::parse_number<unsigned>(s.substr(8, 2));
    auto hh = detail::parse_number<int>(s.substr(11, 2));
    auto mm = detail::parse_number<int>(s.substr(14, 2));
    auto ss = detail::parse_number<int>(s.substr(17, 2));
    if (!yr || !mo || !dy || !hh || !mm || !ss) return std::nullopt;
    const year_month_day ymd{year{*yr}, month{*mo}, day{*dy}};
    if (!ymd.ok() || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<EpochSeconds>(days) * 86400 + *hh * 3600 + *mm * 60 + *ss;
}

inline std::string format_timestamp(EpochSeconds t) {
    using namespace std::chrono;
    const auto day_count = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
    const EpochSeconds rem = t - day_count * 86400;
    const year_month_day ymd{sys_days{days{day_count}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
    return buf;
}

// Reads `timestamp,value` CSV. Rejects unsorted input rather than sorting it.
// Lines starting with '#' are comments.
inline RawSeries parse_csv(std::istream& in) {
    RawSeries raw;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        if (!header_seen) {
            if (view != "timestamp,value") {
                throw ParseError(ParseErrc::MissingHeader, lineno, "expected header 'timestamp,value'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = view.find(',');
        if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos) {
            throw ParseError(ParseErrc::MalformedLine, lineno, "malformed line");
        }
        const auto ts = parse_timestamp(view.substr(0, comma));
        if (!ts) throw ParseError(ParseErrc::MalformedLine, lineno, "malformed timestamp");

        const auto value_text = detail::trim(view.substr(comma + 1));
        // from_chars accepts "nan"/"inf"; strtod-compatible spellings are caught by the finiteness check.
        const auto value = detail::parse_number<double>(value_text);
        if (!value) {
            std::string lowered(value_text);
            for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (lowered == "nan" || lowered == "inf" || lowered == "-inf" || lowered == "+inf") {
                throw ParseError(ParseErrc::NonFiniteValue, lineno, "non-finite value");
            }
            throw ParseError(ParseErrc::MalformedLine, lineno, "malformed value");
        }
        if (!std::isfinite(*value)) throw ParseError(ParseErrc::NonFiniteValue, lineno, "non-finite value");
        if (!raw.points.empty() && *ts <= raw.points.back().timestamp) {
            throw ParseError(ParseErrc::NonMonotoneTimestamps, lineno, "non-monotone timestamps");
        }
        raw.points.push_back({*ts, *value});
    }
    if (!header_seen) throw ParseError(ParseErrc::Empty, lineno, "empty input");
    return raw;
}

inline EpochSeconds floor_hour(EpochSeconds t) noexcept {
    EpochSeconds q = t / kHour;
    if (t % kHour != 0 && t < 0) --q;
    return q * kHour;
}

// Hourly mean of raw samples; hours without samples become MISSING.
inline TimeSeries aggregate_hourly(const RawSeries& raw) {
    if (raw.points.empty()) throw std::invalid_argument("aggregate_hourly: empty series");
    const EpochSeconds first = floor_hour(raw.points.front().timestamp);
    const EpochSeconds last = floor_hour(raw.points.back().timestamp);
    const auto n = static_cast<std::size_t>((last - first) / kHour + 1);
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    for (const auto& p : raw.points) {
        const auto i = static_cast<std::size_t>((floor_hour(p.timestamp) - first) / kHour);
        sum[i] += p.value;
        ++count[i];
    }
    std::vector<std::optional<double>> slots(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] > 0) slots[i] = sum[i] / static_cast<double>(count[i]);
    }
    return {first, std::move(slots)};
}

// Present values with slot index < upto, in order. No interpolation.
inline CompactSeries compact(const TimeSeries& ts, std::size_t upto) {
    if (upto > ts.size()) throw std::out_of_range("compact: upto beyond series end");
    CompactSeries out;
    out.values.reserve(upto);
    out.origin_index.reserve(upto);
    for (std::size_t i = 0; i < upto; ++i) {
        if (const auto& s = ts[i]) {
            out.values.push_back(*s);
            out.origin_index.push_back(i);
        }
    }
    return out;
}

inline CompactSeries compact(const TimeSeries& ts) { return compact(ts, ts.size()); }

// Writes present slots in the ingestion format; missing hours are simply absent.
inline void write_csv(std::ostream& out, const TimeSeries& ts) {
    out << "timestamp,value\n";
    char buf[64];
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!ts[i]) continue;
        std::snprintf(buf, sizeof buf, "%.17g", *ts[i]);
        out << format_timestamp(ts.timestamp(i)) << ',' << buf << '\n';
    }
}

}  // namespace driftcast
