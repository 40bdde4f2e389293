#include "iqra/core.hpp"

#include <gtest/gtest.h>

#include <array>
#include <limits>
#include <random>
#include <set>

using namespace iqra;

namespace {

std::array<double, kGridSize> identity_values() {
    std::array<double, kGridSize> v{};
    for (std::size_t i = 0; i < kGridSize; ++i) v[i] = static_cast<double>(i + 1);
    return v;
}

std::vector<ForecastRecord> daily_records(std::size_t count, int hour = 1) {
    std::vector<ForecastRecord> out;
    const Day start = make_day(2020, 1, 1);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({start + std::chrono::days{static_cast<int>(i)}, hour, static_cast<double>(i), {0.0, 1.0}});
    }
    return out;
}

}  // namespace

TEST(SortFix, SortsAscending) {
    auto raw = identity_values();
    raw[0] = 3;
    raw[1] = 1;
    raw[2] = 2;
    const auto curve = sort_fix(raw);
    EXPECT_EQ(curve[0], 1.0);
    EXPECT_EQ(curve[1], 2.0);
    EXPECT_EQ(curve[2], 3.0);
    EXPECT_EQ(curve[98], 99.0);
}

TEST(SortFix, IdempotentOnSortedInput) {
    const auto v = identity_values();
    const auto once = sort_fix(v);
    EXPECT_EQ(once.values(), v);
    EXPECT_EQ(sort_fix(once.values()), once);
}

TEST(SortFix, AllEqualUnchanged) {
    std::array<double, kGridSize> v{};
    v.fill(42.5);
    EXPECT_EQ(sort_fix(v).values(), v);
}

TEST(SortFix, RejectsNonFiniteWithIndex) {
    auto v = identity_values();
    v[16] = std::numeric_limits<double>::quiet_NaN();
    try {
        sort_fix(v);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("17"), std::string::npos);
    }
    std::vector<double> short_input(98, 1.0);
    EXPECT_THROW(sort_fix(short_input), DataError);
}

TEST(IntervalFromCurve, DirectLookup) {
    const QuantileCurve curve{identity_values()};
    const auto wide = interval_from_curve(curve, 0.02);
    EXPECT_EQ(wide.lower, 1.0);
    EXPECT_EQ(wide.upper, 99.0);
    const auto narrow = interval_from_curve(curve, 0.20);
    EXPECT_EQ(narrow.lower, 10.0);
    EXPECT_EQ(narrow.upper, 90.0);
    EXPECT_DOUBLE_EQ(narrow.nominal_level, 0.8);
}

TEST(IntervalFromCurve, DegenerateCurveZeroWidth) {
    std::array<double, kGridSize> v{};
    v.fill(7.0);
    const QuantileCurve curve{v};
    for (double a : {0.02, 0.04, 0.10, 0.20, 0.98}) EXPECT_EQ(interval_from_curve(curve, a).width(), 0.0);
}

TEST(IntervalFromCurve, RejectsOffGridAlpha) {
    const QuantileCurve curve{identity_values()};
    EXPECT_THROW(interval_from_curve(curve, 0.05), DataError);
    EXPECT_THROW(interval_from_curve(curve, 0.015), DataError);
    EXPECT_THROW(interval_from_curve(curve, 1.0), DataError);
    EXPECT_THROW(interval_from_curve(curve, 0.0), DataError);
}

TEST(IntervalFromCurve, WidthNonincreasingInAlpha) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 10.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::array<double, kGridSize> raw{};
        for (auto& v : raw) v = n(rng);
        const auto curve = sort_fix(raw);
        double previous = std::numeric_limits<double>::infinity();
        for (int half = 1; half <= 49; ++half) {
            const double w = interval_from_curve(curve, 2.0 * half / 100.0).width();
            EXPECT_LE(w, previous);
            previous = w;
        }
    }
}

TEST(RollWindows, Counting) {
    EXPECT_EQ(roll_windows(daily_records(365), 364).size(), 1u);
    EXPECT_TRUE(roll_windows(daily_records(364), 364).empty());
}

TEST(RollWindows, OverlapAndNoLookAhead) {
    const auto recs = daily_records(370);
    const auto steps = roll_windows(recs, 364);
    ASSERT_EQ(steps.size(), 6u);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& w = steps[i].window;
        ASSERT_EQ(w.length(), 364u);
        EXPECT_EQ(steps[i].target, &recs[364 + i]);
        EXPECT_FALSE(steps[i].calendar_gap);
        for (std::size_t j = 0; j < w.length(); ++j) {
            EXPECT_LT(w.records[j].day, w.target_day);
            if (j > 0) {
                EXPECT_LT(w.records[j - 1].day, w.records[j].day);
            }
        }
        if (i > 0) {
            std::set<long> prev, cur;
            for (const auto& r : steps[i - 1].window.records) prev.insert(r.day.time_since_epoch().count());
            for (const auto& r : w.records) cur.insert(r.day.time_since_epoch().count());
            std::size_t shared = 0;
            for (long d : cur) shared += prev.count(d);
            EXPECT_EQ(shared, 363u);
        }
    }
}

TEST(RollWindows, GapUsesMostRecentRecordsAndFlags) {
    auto recs = daily_records(12);
    recs.erase(recs.begin() + 4);  // drop a calendar day
    const auto steps = roll_windows(recs, 5);
    ASSERT_EQ(steps.size(), 6u);
    EXPECT_TRUE(steps[0].calendar_gap);
    EXPECT_EQ(steps[0].window.length(), 5u);
    EXPECT_EQ(steps[0].window.records.back().day, make_day(2020, 1, 6));
    EXPECT_FALSE(steps[5].calendar_gap);
}

TEST(CalibrationWindow, FeasibilityFloor) {
    const auto recs = daily_records(6);  // M = 2 needs T >= 4
    CalibrationWindow ok{std::span(recs).subspan(0, 4), recs[4].day};
    EXPECT_NO_THROW(validate_window(ok));
    CalibrationWindow small{std::span(recs).subspan(0, 3), recs[3].day};
    EXPECT_THROW(validate_window(small), DataError);
    CalibrationWindow lookahead{std::span(recs).subspan(0, 5), recs[2].day};
    EXPECT_THROW(validate_window(lookahead), DataError);
}

TEST(Dates, ParseAndFormat) {
    EXPECT_EQ(format_day(parse_day("2024-02-29")), "2024-02-29");
    EXPECT_THROW(parse_day("2023-02-29"), DataError);
    EXPECT_THROW(parse_day("2023/01/01"), DataError);
    EXPECT_EQ(year_of(parse_day("2021-12-31")), 2021);
}
