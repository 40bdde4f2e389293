#pragma once

#include "iqra/core.hpp"

#include <algorithm>
#include <chrono>
#include <vector>

namespace iqra::fixture {

/// Consecutive daily records for one hour starting 2021-01-01; ensembles are sorted.
inline std::vector<ForecastRecord> records(const std::vector<double>& observed, std::vector<std::vector<double>> ensembles,
                                           int hour = 1) {
    std::vector<ForecastRecord> out;
    const Day start = make_day(2021, 1, 1);
    for (std::size_t t = 0; t < observed.size(); ++t) {
        std::sort(ensembles[t].begin(), ensembles[t].end());
        out.push_back({start + std::chrono::days{static_cast<int>(t)}, hour, observed[t], ensembles[t]});
    }
    return out;
}

inline CalibrationWindow window_of(const std::vector<ForecastRecord>& recs) {
    return CalibrationWindow{recs, recs.back().day + std::chrono::days{1}};
}

}  // namespace iqra::fixture
