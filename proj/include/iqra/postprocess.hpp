#pragma once

// The seven ensemble postprocessing methods. Each one takes a calibration
// window plus the target day's sorted ensemble and returns 99 percentiles.

#include "iqra/core.hpp"
#include "iqra/pava.hpp"
#include "iqra/qr_solver.hpp"
#include "iqra/vst.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace iqra {

enum class MethodKind { CP, HS, IDR, QRA, QRM, LQRA, IQRA };

inline constexpr std::array<MethodKind, 7> kAllMethods{MethodKind::CP,  MethodKind::HS,   MethodKind::IDR, MethodKind::QRA,
                                                       MethodKind::QRM, MethodKind::LQRA, MethodKind::IQRA};

inline std::string method_name(MethodKind k) {
    switch (k) {
        case MethodKind::CP: return "cp";
        case MethodKind::HS: return "hs";
        case MethodKind::IDR: return "idr";
        case MethodKind::QRA: return "qra";
        case MethodKind::QRM: return "qrm";
        case MethodKind::LQRA: return "lqra";
        case MethodKind::IQRA: return "iqra";
    }
    return "?";
}

inline MethodKind parse_method(std::string name) {
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (MethodKind k : kAllMethods)
        if (method_name(k) == name) return k;
    throw DataError("unknown method '" + name + "'");
}

/// Methods that fit linear quantile regressions and therefore log coefficients.
inline bool is_regression_method(MethodKind k) {
    return k == MethodKind::QRA || k == MethodKind::QRM || k == MethodKind::LQRA || k == MethodKind::IQRA;
}

enum class Centering { Mean, Median };

struct MethodOptions {
    Centering centering = Centering::Mean;  // point forecast CP and HS are built around
    std::vector<double> lambda_grid = default_lambda_grid();
    bool vst = false;  // fit on variance-stabilized prices and map the curve back
    double vst_lambda = 0.5;
};

struct MethodSpec {
    MethodKind kind = MethodKind::IQRA;
    MethodOptions options;
};

struct CoefficientRow {
    double tau = 0.0;
    double intercept = 0.0;
    std::vector<double> slopes;
};

struct Forecast {
    QuantileCurve curve;
    std::vector<CoefficientRow> coefficients;  // one per tau for regression methods
};

// ---------------------------------------------------------------------------
// Conformal prediction and historical simulation
// ---------------------------------------------------------------------------

inline double center_of(std::span<const double> ensemble, Centering c) {
    if (ensemble.empty()) throw DataError("empty ensemble");
    if (c == Centering::Median) return median(std::vector<double>(ensemble.begin(), ensemble.end()));
    double s = 0.0;
    for (double v : ensemble) s += v;
    return s / static_cast<double>(ensemble.size());
}

/// 1-based order statistic rank ceil(p (T+1)) clamped to [1, T], for p = num/100.
/// Integer arithmetic keeps grid probabilities exact.
inline std::size_t conformal_rank(long num, std::size_t t) {
    const long n = static_cast<long>(t);
    long k = (num * (n + 1) + 99) / 100;
    if (num <= 0) k = 0;
    return static_cast<std::size_t>(std::clamp(k, 1L, n));
}

inline std::vector<double> window_errors(const CalibrationWindow& w, Centering c) {
    std::vector<double> e;
    e.reserve(w.length());
    for (const auto& r : w.records) e.push_back(r.observed - center_of(r.ensemble, c));
    return e;
}

/// Symmetric intervals from absolute errors of the centre: curve(tau) = c +/- q_{2 tau - 1}(|e|).
/// The median level is the centre itself.
inline QuantileCurve fit_predict_cp(const CalibrationWindow& w, std::span<const double> ensemble,
                                    const MethodOptions& opt = {}) {
    validate_window(w);
    std::vector<double> abs_err = window_errors(w, opt.centering);
    for (double& v : abs_err) v = std::abs(v);
    std::sort(abs_err.begin(), abs_err.end());
    const double c = center_of(ensemble, opt.centering);
    std::array<double, kGridSize> v{};
    v[49] = c;
    for (std::size_t i = 51; i <= 99; ++i) {
        const double q = abs_err[conformal_rank(2 * static_cast<long>(i) - 100, abs_err.size()) - 1];
        v[i - 1] = c + q;
        v[99 - i] = c - q;
    }
    return QuantileCurve{v};
}

/// curve(tau) = c + q_tau(e) on signed errors.
inline QuantileCurve fit_predict_hs(const CalibrationWindow& w, std::span<const double> ensemble,
                                    const MethodOptions& opt = {}) {
    validate_window(w);
    std::vector<double> err = window_errors(w, opt.centering);
    std::sort(err.begin(), err.end());
    const double c = center_of(ensemble, opt.centering);
    std::array<double, kGridSize> v{};
    for (std::size_t i = 1; i <= 99; ++i) v[i - 1] = c + err[conformal_rank(static_cast<long>(i), err.size()) - 1];
    return QuantileCurve{v};
}

// ---------------------------------------------------------------------------
// Isotonic distributional regression
// ---------------------------------------------------------------------------

/// Right-continuous step CDF: F(z) = probabilities[j] for thresholds[j] <= z < thresholds[j+1].
struct StepCdf {
    std::vector<double> thresholds;
    std::vector<double> probabilities;

    void validate() const {
        if (thresholds.empty() || thresholds.size() != probabilities.size()) throw std::logic_error("malformed step CDF");
        for (std::size_t j = 0; j < thresholds.size(); ++j) {
            if (j > 0 && !(thresholds[j] > thresholds[j - 1])) throw std::logic_error("step CDF thresholds not increasing");
            if (j > 0 && probabilities[j] < probabilities[j - 1]) throw std::logic_error("step CDF decreasing");
            if (probabilities[j] < 0.0 || probabilities[j] > 1.0) throw std::logic_error("step CDF outside [0, 1]");
        }
        if (probabilities.back() != 1.0) throw std::logic_error("step CDF does not reach 1");
    }

    double cdf(double z) const {
        const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), z);
        if (it == thresholds.begin()) return 0.0;
        return probabilities[static_cast<std::size_t>(it - thresholds.begin()) - 1];
    }

    /// Generalized inverse min{z : F(z) >= tau}.
    double quantile(double tau) const {
        for (std::size_t j = 0; j < thresholds.size(); ++j)
            if (probabilities[j] >= tau - 1e-12) return thresholds[j];
        return thresholds.back();
    }
};

/// Conditional CDFs of one ensemble member: for every threshold (the distinct
/// observed prices), the antitonic least-squares fit of 1{p <= z} in the
/// member's forecast, tied forecasts pooled with their multiplicity.
/// Thresholds of a window (its distinct observed prices) and the order in
/// which observations enter the indicator 1{p <= z} as z sweeps upward.
/// Shared by every member's fit.
struct IdrSweep {
    std::vector<double> thresholds;
    std::vector<std::uint32_t> entering;  // record indices by observed price
    std::vector<std::size_t> start;       // entering[start[j] .. start[j+1]) join at threshold j

    explicit IdrSweep(const CalibrationWindow& w) {
        const std::size_t T = w.length();
        entering.resize(T);
        std::iota(entering.begin(), entering.end(), 0u);
        std::sort(entering.begin(), entering.end(), [&](std::uint32_t a, std::uint32_t b) {
            return w.records[a].observed < w.records[b].observed || (w.records[a].observed == w.records[b].observed && a < b);
        });
        for (std::size_t i = 0; i < T; ++i) {
            const double z = w.records[entering[i]].observed;
            if (thresholds.empty() || z != thresholds.back()) {
                thresholds.push_back(z);
                start.push_back(i);
            }
        }
        start.push_back(T);
    }
};

/// Conditional CDFs of one ensemble member: for every threshold (the distinct
/// observed prices), the antitonic least-squares fit of 1{p <= z} in the
/// member's forecast, tied forecasts pooled with their multiplicity.
class IdrMemberFit {
public:
    IdrMemberFit(const CalibrationWindow& w, std::size_t member) : IdrMemberFit(w, member, (validate_window(w), IdrSweep(w))) {}

    IdrMemberFit(const CalibrationWindow& w, std::size_t member, const IdrSweep& sweep) {
        if (member >= w.members()) throw DataError("IDR member index out of range");
        const std::size_t T = w.length();
        std::vector<std::pair<double, std::uint32_t>> order(T);
        for (std::size_t t = 0; t < T; ++t) order[t] = {w.records[t].ensemble[member], static_cast<std::uint32_t>(t)};
        std::sort(order.begin(), order.end());
        std::vector<std::uint32_t> group_of(T);
        for (const auto& [x, t] : order) {
            if (covariates_.empty() || x != covariates_.back()) {
                covariates_.push_back(x);
                weights_.push_back(0.0);
            }
            weights_.back() += 1.0;
            group_of[t] = static_cast<std::uint32_t>(covariates_.size() - 1);
        }
        thresholds_ = sweep.thresholds;
        arrival_start_ = sweep.start;
        arrivals_.resize(T);
        for (std::size_t i = 0; i < T; ++i) arrivals_[i] = group_of[sweep.entering[i]];
    }

    /// CDF for a new forecast x: the fit of the group with the largest
    /// covariate <= x; below the smallest covariate, the smallest group's fit.
    StepCdf predict(double x) const {
        const auto it = std::upper_bound(covariates_.begin(), covariates_.end(), x);
        const std::size_t g = it == covariates_.begin() ? 0 : static_cast<std::size_t>(it - covariates_.begin()) - 1;
        StepCdf out;
        out.thresholds = thresholds_;
        out.probabilities = fitted_for_group(g);
        finish(out.probabilities);
        return out;
    }

    /// Full table of fitted probabilities, thresholds x groups (row-major).
    std::vector<double> table() const {
        const std::size_t G = covariates_.size();
        std::vector<double> out(thresholds_.size() * G);
        std::vector<double> column(thresholds_.size());
        sweep([&](std::size_t j, const std::vector<double>& fit) { std::copy(fit.begin(), fit.end(), out.begin() + static_cast<std::ptrdiff_t>(j * G)); },
              npos);
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t j = 0; j < thresholds_.size(); ++j) column[j] = out[j * G + g];
            finish(column);
            for (std::size_t j = 0; j < thresholds_.size(); ++j) out[j * G + g] = column[j];
        }
        return out;
    }

    const std::vector<double>& covariates() const { return covariates_; }
    const std::vector<double>& thresholds() const { return thresholds_; }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    // Runs the antitonic fit for every threshold in increasing order. With a
    // target group only that group's entry of `fit` is filled in.
    template <class Visit>
    void sweep(Visit&& visit, std::size_t target) const {
        const std::size_t G = covariates_.size();
        std::vector<double> counts(G, 0.0), fit(G, 0.0);
        std::vector<double> bw(G), bs(G);
        std::vector<std::size_t> bend(G);
        for (std::size_t j = 0; j < thresholds_.size(); ++j) {
            for (std::size_t a = arrival_start_[j]; a < arrival_start_[j + 1]; ++a) counts[arrivals_[a]] += 1.0;
            std::size_t top = 0;
            for (std::size_t g = 0; g < G; ++g) {
                bw[top] = weights_[g];
                bs[top] = counts[g];
                bend[top] = g;
                ++top;
                // Pool while the right block's mean exceeds its left neighbour's.
                while (top > 1 && bs[top - 1] * bw[top - 2] > bs[top - 2] * bw[top - 1]) {
                    bw[top - 2] += bw[top - 1];
                    bs[top - 2] += bs[top - 1];
                    bend[top - 2] = bend[top - 1];
                    --top;
                }
            }
            if (target != npos) {
                std::size_t b = 0;
                while (bend[b] < target) ++b;
                fit[target] = bs[b] / bw[b];
            } else {
                std::size_t start = 0;
                for (std::size_t b = 0; b < top; ++b) {
                    for (std::size_t g = start; g <= bend[b]; ++g) fit[g] = bs[b] / bw[b];
                    start = bend[b] + 1;
                }
            }
            visit(j, fit);
        }
    }

    // Pooled blocks of a run of consecutive groups, as a stack whose top is
    // the block nearest the target group.
    struct BlockStack {
        std::vector<double> w, s;
        std::vector<std::size_t> far;  // block end away from the target
        std::size_t top = 0;

        explicit BlockStack(std::size_t n) : w(n), s(n), far(n) {}

        // `violates(a, b)` is true when the block below (mean a) and the new
        // block (mean b) are out of order.
        template <class Violates>
        void push(double bw, double bs, std::size_t bfar, Violates&& violates) {
            while (top > 0 && violates(s[top - 1] * bw, bs * w[top - 1])) {
                --top;
                bw += w[top];
                bs += s[top];
                bfar = far[top];
            }
            w[top] = bw;
            s[top] = bs;
            far[top] = bfar;
            ++top;
        }
    };

    // Pushes the held blocks back. Once one lands without pooling, the rest
    // sit on the same stack as before and are copied back unchanged.
    template <class Violates>
    static void restore(BlockStack& st, const BlockStack& held, Violates&& violates) {
        for (std::size_t i = 0; i < held.top; ++i) {
            const std::size_t before = st.top;
            st.push(held.w[i], held.s[i], held.far[i], violates);
            if (st.top == before + 1 && st.far[before] == held.far[i]) {
                const auto n = static_cast<std::ptrdiff_t>(held.top - i - 1);
                const auto src = static_cast<std::ptrdiff_t>(i + 1);
                const auto dst = static_cast<std::ptrdiff_t>(st.top);
                std::copy_n(held.w.begin() + src, n, st.w.begin() + dst);
                std::copy_n(held.s.begin() + src, n, st.s.begin() + dst);
                std::copy_n(held.far.begin() + src, n, st.far.begin() + dst);
                st.top += static_cast<std::size_t>(n);
                return;
            }
        }
    }

    // One group's fit at every threshold. Pooling is kept as two stacks, over
    // the groups left of and including g and over those right of it. When an
    // observation enters the indicator only its group's block can change:
    // that block is repooled element by element and the blocks above it are
    // pushed back whole, as their internal pooling involved only unchanged
    // data. The block holding g is then grown against both stacks until no
    // neighbour violates the ordering.
    std::vector<double> fitted_for_group(std::size_t g) const {
        const std::size_t G = covariates_.size();
        const std::size_t K = thresholds_.size();
        std::vector<double> counts(G, 0.0), out(K);
        BlockStack left(g + 1), right(G - g), held(G);
        const auto left_bad = [](double below, double above) { return below < above; };
        const auto right_bad = [](double below, double above) { return below > above; };
        for (std::size_t k = 0; k <= g; ++k) left.push(weights_[k], 0.0, k, left_bad);
        for (std::size_t k = G; k-- > g + 1;) right.push(weights_[k], 0.0, k, right_bad);

        for (std::size_t j = 0; j < K; ++j) {
            for (std::size_t a = arrival_start_[j]; a < arrival_start_[j + 1]; ++a) {
                const std::size_t k = arrivals_[a];
                counts[k] += 1.0;
                // Stacks store block ends farthest from g: left blocks by start
                // (increasing up the stack), right blocks by end (decreasing).
                BlockStack& st = k <= g ? left : right;
                std::size_t b = 0;
                if (k <= g) {
                    b = static_cast<std::size_t>(std::upper_bound(st.far.begin(), st.far.begin() + st.top, k) - st.far.begin()) - 1;
                } else {
                    b = static_cast<std::size_t>(std::upper_bound(st.far.begin(), st.far.begin() + st.top, k, std::greater<>()) -
                                                 st.far.begin()) - 1;
                }
                held.top = 0;
                for (std::size_t i = b + 1; i < st.top; ++i) {
                    held.w[held.top] = st.w[i];
                    held.s[held.top] = st.s[i];
                    held.far[held.top] = st.far[i];
                    ++held.top;
                }
                const std::size_t from = st.far[b];
                st.top = b;
                if (k <= g) {
                    const std::size_t to = held.top > 0 ? held.far[0] : g + 1;
                    for (std::size_t e = from; e < to; ++e) st.push(weights_[e], counts[e], e, left_bad);
                    restore(st, held, left_bad);
                } else {
                    const std::size_t to = held.top > 0 ? held.far[0] : g;
                    for (std::size_t e = from; e > to; --e) st.push(weights_[e], counts[e], e, right_bad);
                    restore(st, held, right_bad);
                }
            }

            double w = left.w[left.top - 1], sum = left.s[left.top - 1];
            std::size_t l = left.top - 1, r = right.top;
            for (;;) {
                if (r > 0 && right.s[r - 1] * w > sum * right.w[r - 1]) {
                    --r;
                    w += right.w[r];
                    sum += right.s[r];
                } else if (l > 0 && sum * left.w[l - 1] > left.s[l - 1] * w) {
                    --l;
                    w += left.w[l];
                    sum += left.s[l];
                } else {
                    break;
                }
            }
            out[j] = sum / w;
        }
        return out;
    }

    // Clamp to [0, 1], enforce monotonicity in the threshold, end at 1.
    static void finish(std::vector<double>& p) {
        double running = 0.0;
        for (double& v : p) {
            v = std::max(running, std::clamp(v, 0.0, 1.0));
            running = v;
        }
        if (!p.empty()) p.back() = 1.0;
    }

    std::vector<double> covariates_;
    std::vector<double> weights_;
    std::vector<double> thresholds_;
    std::vector<std::size_t> arrival_start_;
    std::vector<std::uint32_t> arrivals_;
};

inline IdrMemberFit fit_idr_member(const CalibrationWindow& w, std::size_t member) { return IdrMemberFit(w, member); }

/// Equal-weight pool of CDFs sharing one threshold set.
inline StepCdf linear_pool(std::span<const StepCdf> parts) {
    if (parts.empty()) throw DataError("nothing to pool");
    StepCdf out;
    out.thresholds = parts.front().thresholds;
    out.probabilities.assign(out.thresholds.size(), 0.0);
    for (const auto& p : parts) {
        if (p.thresholds != out.thresholds) throw std::logic_error("pooled CDFs use different thresholds");
        for (std::size_t j = 0; j < out.probabilities.size(); ++j) out.probabilities[j] += p.probabilities[j];
    }
    for (double& v : out.probabilities) v = std::min(1.0, v / static_cast<double>(parts.size()));
    out.probabilities.back() = 1.0;
    return out;
}

inline QuantileCurve curve_from_cdf(const StepCdf& cdf) {
    std::array<double, kGridSize> v{};
    for (std::size_t i = 0; i < kGridSize; ++i) v[i] = cdf.quantile(grid_tau(i));
    return QuantileCurve{v};
}

inline StepCdf idr_pooled_cdf(const CalibrationWindow& w, std::span<const double> ensemble) {
    validate_window(w);
    if (ensemble.size() != w.members()) throw DataError("target ensemble size differs from the window");
    std::vector<StepCdf> parts;
    parts.reserve(ensemble.size());
    const IdrSweep sweep(w);
    for (std::size_t m = 0; m < ensemble.size(); ++m) parts.push_back(IdrMemberFit(w, m, sweep).predict(ensemble[m]));
    return linear_pool(parts);
}

inline QuantileCurve fit_predict_idr(const CalibrationWindow& w, std::span<const double> ensemble,
                                     const MethodOptions& = {}) {
    return curve_from_cdf(idr_pooled_cdf(w, ensemble));
}

// ---------------------------------------------------------------------------
// Quantile regression averaging family
// ---------------------------------------------------------------------------

/// Regression data in robust units: prices minus the window median of the
/// observations, divided by their MAD (1 when the MAD vanishes). Slopes are
/// unchanged by the transform and the lasso penalty gets a scale-free meaning.
struct RegressionData {
    Eigen::MatrixXd design;
    Eigen::VectorXd targets;
    Eigen::VectorXd query;
    double shift = 0.0;
    double scale = 1.0;
};

inline RegressionData regression_data(const CalibrationWindow& w, std::span<const double> ensemble, bool mean_only) {
    validate_window(w);
    if (ensemble.size() != w.members()) throw DataError("target ensemble size differs from the window");
    const auto T = static_cast<Eigen::Index>(w.length());
    const auto M = static_cast<Eigen::Index>(mean_only ? 1 : w.members());
    RegressionData d;
    std::vector<double> obs(w.length());
    for (std::size_t t = 0; t < w.length(); ++t) obs[t] = w.records[t].observed;
    d.shift = median(obs);
    const double mad = median_abs_deviation(obs, d.shift);
    d.scale = mad > 0.0 ? mad : 1.0;
    d.design.resize(T, M);
    d.targets.resize(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& r = w.records[static_cast<std::size_t>(t)];
        d.targets(t) = (r.observed - d.shift) / d.scale;
        if (mean_only) {
            d.design(t, 0) = (r.ensemble_mean() - d.shift) / d.scale;
        } else {
            for (Eigen::Index k = 0; k < M; ++k) d.design(t, k) = (r.ensemble[static_cast<std::size_t>(k)] - d.shift) / d.scale;
        }
    }
    d.query.resize(M);
    if (mean_only) {
        d.query(0) = (center_of(ensemble, Centering::Mean) - d.shift) / d.scale;
    } else {
        for (Eigen::Index k = 0; k < M; ++k) d.query(k) = (ensemble[static_cast<std::size_t>(k)] - d.shift) / d.scale;
    }
    return d;
}

/// Fits one regression per grid probability, predicts at the target ensemble
/// and sorts the 99 values. Coefficients are reported in price units.
inline Forecast fit_predict_regression(MethodKind kind, const CalibrationWindow& w, std::span<const double> ensemble,
                                       const MethodOptions& opt = {}) {
    if (!is_regression_method(kind)) throw std::logic_error("not a quantile regression method");
    const RegressionData d = regression_data(w, ensemble, kind == MethodKind::QRM);
    Forecast out;
    out.coefficients.reserve(kGridSize);
    std::array<double, kGridSize> raw{};
    for (std::size_t i = 0; i < kGridSize; ++i) {
        const double tau = grid_tau(i);
        QrSolution s;
        switch (kind) {
            case MethodKind::IQRA: s = solve(QrProblem(d.design, d.targets, tau, Regime::isotonic())); break;
            case MethodKind::LQRA: s = solve_lasso_path(d.design, d.targets, tau, opt.lambda_grid).solution; break;
            default: s = solve(QrProblem(d.design, d.targets, tau, Regime::unconstrained())); break;
        }
        double fit = s.intercept, slope_sum = 0.0;
        for (std::size_t k = 0; k < s.coefficients.size(); ++k) {
            fit += s.coefficients[k] * d.query(static_cast<Eigen::Index>(k));
            slope_sum += s.coefficients[k];
        }
        raw[i] = d.shift + d.scale * fit;
        out.coefficients.push_back({tau, d.shift * (1.0 - slope_sum) + d.scale * s.intercept, s.coefficients});
    }
    out.curve = sort_fix(raw);
    return out;
}

inline Forecast fit_predict_qra(const CalibrationWindow& w, std::span<const double> e, const MethodOptions& o = {}) {
    return fit_predict_regression(MethodKind::QRA, w, e, o);
}
inline Forecast fit_predict_qrm(const CalibrationWindow& w, std::span<const double> e, const MethodOptions& o = {}) {
    return fit_predict_regression(MethodKind::QRM, w, e, o);
}
inline Forecast fit_predict_lqra(const CalibrationWindow& w, std::span<const double> e, const MethodOptions& o = {}) {
    return fit_predict_regression(MethodKind::LQRA, w, e, o);
}
inline Forecast fit_predict_iqra(const CalibrationWindow& w, std::span<const double> e, const MethodOptions& o = {}) {
    return fit_predict_regression(MethodKind::IQRA, w, e, o);
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

namespace detail {

inline Forecast fit_predict_plain(const MethodSpec& spec, const CalibrationWindow& w, std::span<const double> ensemble) {
    switch (spec.kind) {
        case MethodKind::CP: return {fit_predict_cp(w, ensemble, spec.options), {}};
        case MethodKind::HS: return {fit_predict_hs(w, ensemble, spec.options), {}};
        case MethodKind::IDR: return {fit_predict_idr(w, ensemble, spec.options), {}};
        default: return fit_predict_regression(spec.kind, w, ensemble, spec.options);
    }
}

}  // namespace detail

/// Runs one method. With the variance-stabilizing option, the window and the
/// target ensemble are transformed with parameters from the window's observed
/// prices, and the curve is mapped back (the transform is increasing, so the
/// curve stays sorted).
inline Forecast fit_predict(const MethodSpec& spec, const CalibrationWindow& w, std::span<const double> ensemble) {
    if (!spec.options.vst) return detail::fit_predict_plain(spec, w, ensemble);
    std::vector<double> obs;
    obs.reserve(w.length());
    for (const auto& r : w.records) obs.push_back(r.observed);
    const VstParams params = standardize(obs, spec.options.vst_lambda).params;
    std::vector<ForecastRecord> moved(w.records.begin(), w.records.end());
    for (auto& r : moved) {
        r.observed = params.forward(r.observed);
        for (double& v : r.ensemble) v = params.forward(v);
    }
    std::vector<double> target(ensemble.begin(), ensemble.end());
    for (double& v : target) v = params.forward(v);
    const CalibrationWindow tw{moved, w.target_day};
    Forecast f = detail::fit_predict_plain(spec, tw, target);
    std::array<double, kGridSize> back{};
    for (std::size_t i = 0; i < kGridSize; ++i) back[i] = params.inverse(f.curve[i]);
    f.curve = sort_fix(back);
    return f;
}

// ---------------------------------------------------------------------------
// Variable selection frequency
// ---------------------------------------------------------------------------

struct SelectionFrequency {
    std::size_t members = 0;
    std::vector<std::array<double, kGridSize>> by_member;  // [m][tau index], percent
    std::array<std::size_t, kGridSize> models{};           // fitted models per tau
    double aggregate = 0.0;                                // percent over all cells

    double at(std::size_t tau_index, std::size_t member) const { return by_member[member][tau_index]; }
};

inline SelectionFrequency selection_frequency(std::span<const CoefficientRow> rows) {
    if (rows.empty()) throw DataError("no coefficient records to summarize");
    SelectionFrequency out;
    out.members = rows.front().slopes.size();
    if (out.members == 0) throw DataError("coefficient records carry no slopes");
    std::vector<std::array<std::size_t, kGridSize>> hits(out.members);
    for (auto& h : hits) h.fill(0);
    for (const auto& r : rows) {
        if (r.slopes.size() != out.members) throw DataError("coefficient records disagree on the ensemble size");
        const std::size_t i = grid_index(r.tau);
        ++out.models[i];
        for (std::size_t m = 0; m < out.members; ++m)
            if (std::abs(r.slopes[m]) > kZeroThreshold) ++hits[m][i];
    }
    out.by_member.resize(out.members);
    double total = 0.0;
    std::size_t cells = 0;
    for (std::size_t m = 0; m < out.members; ++m) {
        for (std::size_t i = 0; i < kGridSize; ++i) {
            const double pct = out.models[i] == 0 ? 0.0 : 100.0 * static_cast<double>(hits[m][i]) / static_cast<double>(out.models[i]);
            out.by_member[m][i] = pct;
            if (out.models[i] > 0) {
                total += pct;
                ++cells;
            }
        }
    }
    out.aggregate = cells == 0 ? 0.0 : total / static_cast<double>(cells);
    return out;
}

}  // namespace iqra
