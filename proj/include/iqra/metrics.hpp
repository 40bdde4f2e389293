#pragma once

#include "iqra/core.hpp"

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iqra {

/// (1{p < q} - tau)(q - p), never negative.
inline double pinball(double tau, double q_hat, double p) {
    return ((p < q_hat ? 1.0 : 0.0) - tau) * (q_hat - p);
}

/// Mean of the two tail pinball scores of the central (1 - alpha) interval.
inline double pips(double alpha, const QuantileCurve& curve, double p) {
    const std::size_t lo = alpha_lower_index(alpha);
    const std::size_t hi = kGridSize - 1 - lo;
    return 0.5 * pinball(grid_tau(lo), curve[lo], p) + 0.5 * pinball(grid_tau(hi), curve[hi], p);
}

/// Mean pinball score over the 99 percentiles.
inline double crps(const QuantileCurve& curve, double p) {
    double s = 0.0;
    for (std::size_t i = 0; i < kGridSize; ++i) s += pinball(grid_tau(i), curve[i], p);
    return s / static_cast<double>(kGridSize);
}

inline double empirical_coverage(std::span<const PredictionInterval> intervals, std::span<const double> observed) {
    if (intervals.empty() || intervals.size() != observed.size()) throw DataError("coverage needs aligned, nonempty series");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) inside += intervals[i].contains(observed[i]) ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(intervals.size());
}

/// Empirical minus nominal coverage (1 - alpha); bounds count as inside.
inline double ace(std::span<const PredictionInterval> intervals, std::span<const double> observed, double alpha) {
    return empirical_coverage(intervals, observed) - (1.0 - alpha);
}

/// (exceedances above - exceedances below) / number of points.
inline double tail_bias(std::span<const PredictionInterval> intervals, std::span<const double> observed) {
    if (intervals.empty() || intervals.size() != observed.size()) throw DataError("tail bias needs aligned, nonempty series");
    long above = 0, below = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (observed[i] > intervals[i].upper) ++above;
        else if (observed[i] < intervals[i].lower) ++below;
    }
    return static_cast<double>(above - below) / static_cast<double>(intervals.size());
}

// ---------------------------------------------------------------------------
// Conditional predictive ability
// ---------------------------------------------------------------------------

struct CpaResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int dof = 2;
    double mean_differential = 0.0;  // mean of loss_a - loss_b; > 0 means a is worse
};

/// Wald test on Z_t = (1, d_t) d_{t+1}, d = loss_a - loss_b, with the
/// uncentred second-moment matrix of Z. Chi-squared with 2 degrees of freedom.
inline CpaResult cpa_test(std::span<const double> loss_a, std::span<const double> loss_b) {
    if (loss_a.size() != loss_b.size()) throw DataError("CPA loss series differ in length");
    if (loss_a.size() < 30) throw DataError("CPA test needs at least 30 observations");
    const std::size_t n = loss_a.size();
    std::vector<double> d(n);
    CpaResult out;
    for (std::size_t t = 0; t < n; ++t) {
        d[t] = loss_a[t] - loss_b[t];
        out.mean_differential += d[t];
    }
    out.mean_differential /= static_cast<double>(n);
    double z0 = 0.0, z1 = 0.0, s00 = 0.0, s01 = 0.0, s11 = 0.0;
    const std::size_t m = n - 1;
    for (std::size_t t = 0; t < m; ++t) {
        const double a = d[t + 1], b = d[t] * d[t + 1];
        z0 += a;
        z1 += b;
        s00 += a * a;
        s01 += a * b;
        s11 += b * b;
    }
    const double k = static_cast<double>(m);
    z0 /= k;
    z1 /= k;
    s00 /= k;
    s01 /= k;
    s11 /= k;
    const double det = s00 * s11 - s01 * s01;
    if (!(det > 1e-12 * s00 * s11) || !(s00 > 0.0)) return out;
    const double quad = (s11 * z0 * z0 - 2.0 * s01 * z0 * z1 + s00 * z1 * z1) / det;
    out.statistic = k * quad;
    out.p_value = std::exp(-0.5 * out.statistic);
    return out;
}

/// "**" at 1 %, "*" at 5 %, only when the first series has the larger mean loss.
inline std::string significance_stars(const CpaResult& r) {
    if (!(r.mean_differential > 0.0)) return "";
    if (r.p_value < 0.01) return "**";
    if (r.p_value < 0.05) return "*";
    return "";
}

// ---------------------------------------------------------------------------
// Aggregate report
// ---------------------------------------------------------------------------

struct ScoredPoint {
    Day day{};
    int hour = 1;
    QuantileCurve curve;
    double observed = 0.0;
};

struct LevelScore {
    double alpha = 0.0;
    double ace = 0.0;
    double tail_bias = 0.0;
    double mean_pips = 0.0;
};

struct ScoreReport {
    std::string method;
    std::vector<LevelScore> levels;
    double mean_crps = 0.0;
    std::map<int, double> crps_by_year;
    std::size_t point_count = 0;
    std::size_t day_count = 0;
    std::optional<CpaResult> cpa;  // against the reference method
};

/// Scores points that are already in (day, hour) order; sums run in that order.
inline ScoreReport score_points(const std::string& method, std::span<const ScoredPoint> points, std::span<const double> alphas) {
    if (points.empty()) throw DataError("no forecasts to evaluate for " + method);
    ScoreReport r;
    r.method = method;
    r.point_count = points.size();
    for (double alpha : alphas) {
        std::vector<PredictionInterval> iv;
        std::vector<double> obs;
        double pips_sum = 0.0;
        iv.reserve(points.size());
        obs.reserve(points.size());
        for (const auto& p : points) {
            iv.push_back(interval_from_curve(p.curve, alpha));
            obs.push_back(p.observed);
            pips_sum += pips(alpha, p.curve, p.observed);
        }
        r.levels.push_back({alpha, ace(iv, obs, alpha), tail_bias(iv, obs), pips_sum / static_cast<double>(points.size())});
    }
    std::map<int, std::pair<double, std::size_t>> years;
    double total = 0.0;
    Day last{};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double c = crps(points[i].curve, points[i].observed);
        total += c;
        auto& y = years[year_of(points[i].day)];
        y.first += c;
        ++y.second;
        if (i == 0 || points[i].day != last) ++r.day_count;
        last = points[i].day;
    }
    r.mean_crps = total / static_cast<double>(points.size());
    for (const auto& [year, acc] : years) r.crps_by_year[year] = acc.first / static_cast<double>(acc.second);
    return r;
}

/// Daily mean CRPS, one value per distinct day in the (day, hour)-sorted input.
inline std::vector<double> daily_crps(std::span<const ScoredPoint> points) {
    std::vector<double> out;
    std::size_t count = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && points[i].day != points[i - 1].day) {
            out.push_back(sum / static_cast<double>(count));
            sum = 0.0;
            count = 0;
        }
        sum += crps(points[i].curve, points[i].observed);
        ++count;
    }
    if (count > 0) out.push_back(sum / static_cast<double>(count));
    return out;
}

}  // namespace iqra
