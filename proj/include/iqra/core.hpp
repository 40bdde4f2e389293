#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iqra {

/// Input data does not satisfy a documented precondition (bad file, bad window,
/// off-grid level). Distinguished from logic errors so the CLI can map it to
/// exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Day = std::chrono::sys_days;

inline Day make_day(int y, unsigned m, unsigned d) {
    return Day{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

/// Parses YYYY-MM-DD. Throws DataError on anything else.
inline Day parse_day(const std::string& text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        throw DataError("invalid ISO-8601 date '" + text + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + text + "'");
    return Day{ymd};
}

inline std::string format_day(Day day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

inline int year_of(Day day) { return static_cast<int>(std::chrono::year_month_day{day}.year()); }

/// One (day, hour) observation with its ensemble of point forecasts, sorted
/// nondecreasing.
struct ForecastRecord {
    Day day{};
    int hour = 1;
    double observed = 0.0;
    std::vector<double> ensemble;

    std::size_t members() const { return ensemble.size(); }

    double ensemble_mean() const {
        double s = 0.0;
        for (double v : ensemble) s += v;
        return ensemble.empty() ? 0.0 : s / static_cast<double>(ensemble.size());
    }
};

// ---------------------------------------------------------------------------
// Probability grid
// ---------------------------------------------------------------------------

inline constexpr std::size_t kGridSize = 99;

/// tau_i = i/100 for grid index i-1.
inline constexpr double grid_tau(std::size_t index) { return static_cast<double>(index + 1) / 100.0; }

inline const std::array<double, kGridSize>& tau_grid() {
    static const std::array<double, kGridSize> grid = [] {
        std::array<double, kGridSize> g{};
        for (std::size_t i = 0; i < kGridSize; ++i) g[i] = grid_tau(i);
        return g;
    }();
    return grid;
}

/// 99 percentile forecasts, nondecreasing in probability.
class QuantileCurve {
public:
    QuantileCurve() { values_.fill(0.0); }

    /// Takes values that are already known to be nondecreasing (throws otherwise).
    explicit QuantileCurve(const std::array<double, kGridSize>& sorted_values) : values_(sorted_values) {
        for (std::size_t i = 0; i < kGridSize; ++i) {
            if (!std::isfinite(values_[i])) {
                throw DataError("quantile value at tau=" + std::to_string(grid_tau(i)) + " is not finite");
            }
            if (i > 0 && values_[i] < values_[i - 1]) {
                throw std::logic_error("quantile curve is crossing at index " + std::to_string(i));
            }
        }
    }

    double operator[](std::size_t index) const { return values_[index]; }
    double at_tau(double tau) const;
    const std::array<double, kGridSize>& values() const { return values_; }

    bool operator==(const QuantileCurve&) const = default;

private:
    std::array<double, kGridSize> values_;
};

/// Converts a probability that must lie on the percentile grid to its index.
inline std::size_t grid_index(double tau) {
    const double scaled = tau * 100.0;
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9 || rounded < 1.0 || rounded > 99.0) {
        throw DataError("probability " + std::to_string(tau) + " is not on the percentile grid");
    }
    return static_cast<std::size_t>(rounded) - 1;
}

inline double QuantileCurve::at_tau(double tau) const { return values_[grid_index(tau)]; }

/// Rearranges 99 raw quantile estimates into a non-crossing curve.
inline QuantileCurve sort_fix(std::span<const double> raw) {
    if (raw.size() != kGridSize) {
        throw DataError("expected 99 quantile values, got " + std::to_string(raw.size()));
    }
    std::array<double, kGridSize> v{};
    for (std::size_t i = 0; i < kGridSize; ++i) {
        if (!std::isfinite(raw[i])) {
            throw DataError("non-finite quantile value at probability index " + std::to_string(i + 1));
        }
        v[i] = raw[i];
    }
    std::sort(v.begin(), v.end());
    return QuantileCurve{v};
}

struct PredictionInterval {
    double nominal_level = 0.0;  // 1 - alpha
    double lower = 0.0;
    double upper = 0.0;

    double width() const { return upper - lower; }
    bool contains(double p) const { return p >= lower && p <= upper; }
};

/// Validates alpha and returns the grid index of alpha/2.
inline std::size_t alpha_lower_index(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
    const std::size_t idx = grid_index(alpha / 2.0);
    if (idx > 48) throw DataError("alpha/2 must be at most 0.49");
    return idx;
}

/// Central (1 - alpha) interval read directly off the percentile grid; alpha/2
/// must be a grid point.
inline PredictionInterval interval_from_curve(const QuantileCurve& curve, double alpha) {
    const std::size_t lo = alpha_lower_index(alpha);
    const std::size_t hi = kGridSize - 1 - lo;
    return PredictionInterval{1.0 - alpha, curve[lo], curve[hi]};
}

// ---------------------------------------------------------------------------
// Rolling calibration windows
// ---------------------------------------------------------------------------

/// The T most recent records of one hour preceding target_day.
struct CalibrationWindow {
    std::span<const ForecastRecord> records;
    Day target_day{};

    std::size_t length() const { return records.size(); }
    std::size_t members() const { return records.empty() ? 0 : records.front().members(); }
    int hour() const { return records.empty() ? 0 : records.front().hour; }
};

/// Throws DataError unless the window satisfies T >= M + 2, single hour,
/// strictly increasing days before the target day.
inline void validate_window(const CalibrationWindow& w) {
    if (w.records.empty()) throw DataError("calibration window is empty");
    const std::size_t m = w.members();
    if (m == 0) throw DataError("ensemble must have at least one member");
    if (w.length() < m + 2) {
        throw DataError("calibration window length " + std::to_string(w.length()) +
                        " below feasibility floor M+2 = " + std::to_string(m + 2));
    }
    const int h = w.hour();
    for (std::size_t i = 0; i < w.length(); ++i) {
        const auto& r = w.records[i];
        if (r.hour != h) throw DataError("calibration window mixes hours");
        if (r.members() != m) throw DataError("ensemble size changes inside calibration window");
        if (i > 0 && !(w.records[i - 1].day < r.day)) throw DataError("window days not strictly increasing");
        if (!(r.day < w.target_day)) throw DataError("window record does not precede target day");
    }
}

struct WindowStep {
    CalibrationWindow window;
    const ForecastRecord* target = nullptr;
    /// True when the window spans more than T calendar days (gaps in the data).
    bool calendar_gap = false;
};

/// Emits one (window, target) pair per record after the first T. Records must be
/// one hour, sorted by day.
inline std::vector<WindowStep> roll_windows(std::span<const ForecastRecord> records, std::size_t window_length) {
    if (window_length == 0) throw DataError("window length must be positive");
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].hour != records[0].hour) throw DataError("roll_windows expects a single hour");
        if (!(records[i - 1].day < records[i].day)) throw DataError("records must be strictly increasing in day");
    }
    std::vector<WindowStep> steps;
    if (records.size() <= window_length) return steps;
    steps.reserve(records.size() - window_length);
    for (std::size_t target = window_length; target < records.size(); ++target) {
        WindowStep s;
        s.window.records = records.subspan(target - window_length, window_length);
        s.window.target_day = records[target].day;
        s.target = &records[target];
        const auto span_days = (records[target].day - records[target - window_length].day).count();
        s.calendar_gap = span_days != static_cast<long>(window_length);
        steps.push_back(s);
    }
    return steps;
}

}  // namespace iqra
