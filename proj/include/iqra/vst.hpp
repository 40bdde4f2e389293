#pragma once

// Robust Box-Cox variance-stabilizing transform of median/MAD-standardized
// prices. Odd and strictly increasing, defined for zero and negative prices.

#include "iqra/core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace iqra {

inline double median(std::vector<double> v) {
    if (v.empty()) throw DataError("median of an empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

/// Median absolute deviation from the median, without a consistency factor.
inline double median_abs_deviation(std::span<const double> v, double center) {
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - center);
    return median(std::move(dev));
}

inline double vst_forward(double p, double lambda) {
    if (!(lambda >= 0.0)) throw DataError("Box-Cox exponent must be >= 0");
    const double s = p < 0.0 ? -1.0 : (p > 0.0 ? 1.0 : 0.0);
    const double a = std::abs(p);
    if (lambda == 0.0) return s * std::log1p(a);
    return s * std::expm1(lambda * std::log1p(a)) / lambda;
}

inline double vst_inverse(double y, double lambda) {
    if (!(lambda >= 0.0)) throw DataError("Box-Cox exponent must be >= 0");
    const double s = y < 0.0 ? -1.0 : (y > 0.0 ? 1.0 : 0.0);
    const double a = std::abs(y);
    if (lambda == 0.0) return s * std::expm1(a);
    return s * std::expm1(std::log1p(lambda * a) / lambda);
}

struct VstParams {
    double a = 0.0;       // median
    double b = 1.0;       // MAD
    double lambda = 0.5;

    double forward(double p) const { return vst_forward((p - a) / b, lambda); }
    double inverse(double y) const { return b * vst_inverse(y, lambda) + a; }
};

struct Standardized {
    VstParams params;
    std::vector<double> values;
};

/// Parameters come from `prices` alone; a constant window (MAD = 0) cannot be
/// standardized and the caller should run without the transform.
inline Standardized standardize(std::span<const double> prices, double lambda = 0.5) {
    if (prices.empty()) throw DataError("cannot standardize an empty window");
    if (!(lambda >= 0.0)) throw DataError("Box-Cox exponent must be >= 0");
    Standardized out;
    out.params.a = median(std::vector<double>(prices.begin(), prices.end()));
    out.params.b = median_abs_deviation(prices, out.params.a);
    out.params.lambda = lambda;
    if (!(out.params.b > 0.0)) throw DataError("window has zero MAD; disable the variance-stabilizing transform");
    out.values.reserve(prices.size());
    for (double p : prices) out.values.push_back(out.params.forward(p));
    return out;
}

inline std::vector<double> destandardize(const VstParams& params, std::span<const double> transformed) {
    std::vector<double> out;
    out.reserve(transformed.size());
    for (double y : transformed) out.push_back(params.inverse(y));
    return out;
}

}  // namespace iqra
