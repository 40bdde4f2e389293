#pragma once

// Linear quantile regression as a linear program in standard form
//
//     min c'x  s.t.  A x = y,  x >= 0
//
// with one row per calibration observation:
//
//     b0+ - b0- + sum_k X_tk (b_k+ - b_k-) + u_t+ - u_t- = y_t
//
// Costs are tau on u+, (1 - tau) on u-, zero on the intercept parts and lambda
// on the slope parts. The isotonic regime drops every b_k- column, so slopes
// are nonnegative by construction rather than by a post-hoc clamp.
//
// The solver is a primal revised simplex. A basis always holds s <= M+1
// structural columns and T-s signed unit columns (the residual of each
// remaining row), so B^{-1} reduces to the s x s block of the structural
// columns on their pivot rows. The ratio test takes long steps through
// residual breakpoints (a row whose residual changes sign swaps u+ for u-)
// while the entering reduced cost stays negative.

#include "iqra/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iqra {

inline constexpr double kZeroThreshold = 1e-7;

enum class RegimeKind { Unconstrained, Isotonic, Lasso };

struct Regime {
    RegimeKind kind = RegimeKind::Unconstrained;
    double lambda = 0.0;

    static Regime unconstrained() { return {RegimeKind::Unconstrained, 0.0}; }
    static Regime isotonic() { return {RegimeKind::Isotonic, 0.0}; }
    static Regime lasso(double lambda) {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("lasso penalty must be finite and >= 0");
        return {RegimeKind::Lasso, lambda};
    }
};

/// Nonnegative pinball loss; rho(0) = 0.
inline double pinball_loss(double tau, double residual) {
    return residual >= 0.0 ? tau * residual : (tau - 1.0) * residual;
}

struct LpSize {
    std::size_t variables = 0;
    std::size_t constraints = 0;
    bool operator==(const LpSize&) const = default;
};

/// Standard-form dimensions: 2(M+T+1) variables when slopes may be negative,
/// M + 2(T+1) when they are constrained nonnegative; T equality rows.
inline LpSize standard_form_size(std::size_t regressors, std::size_t window, RegimeKind kind) {
    const std::size_t slope_columns = kind == RegimeKind::Isotonic ? regressors : 2 * regressors;
    return {2 + slope_columns + 2 * window, window};
}

/// Non-owning view of one pinball-loss minimization problem.
struct QrProblem {
    Eigen::Ref<const Eigen::MatrixXd> design;  // T x M, column-major
    Eigen::Ref<const Eigen::VectorXd> targets; // T
    double tau;
    Regime regime;

    QrProblem(Eigen::Ref<const Eigen::MatrixXd> x, Eigen::Ref<const Eigen::VectorXd> y, double tau_,
              Regime r = Regime::unconstrained())
        : design(x), targets(y), tau(tau_), regime(r) {}
};

struct QrSolution {
    double intercept = 0.0;
    std::vector<double> coefficients;
    double objective = 0.0;           // sum of pinball losses, penalty excluded
    double penalized_objective = 0.0; // objective + lambda * |beta|_1
    std::size_t nonzero_count = 0;
    LpSize lp_size;
    std::size_t iterations = 0;

    double predict(std::span<const double> regressors) const {
        double q = intercept;
        for (std::size_t k = 0; k < coefficients.size(); ++k) q += coefficients[k] * regressors[k];
        return q;
    }
};

inline double pinball_objective(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                const Eigen::Ref<const Eigen::VectorXd>& targets, double tau, double intercept,
                                std::span<const double> coefficients) {
    double total = 0.0;
    for (Eigen::Index t = 0; t < targets.size(); ++t) {
        double fit = intercept;
        for (Eigen::Index k = 0; k < design.cols(); ++k) fit += design(t, k) * coefficients[static_cast<std::size_t>(k)];
        total += pinball_loss(tau, targets(t) - fit);
    }
    return total;
}

namespace detail {

enum class ColumnKind : std::uint8_t { InterceptPos, InterceptNeg, SlopePos, SlopeNeg, ResidualPos, ResidualNeg };

struct LpColumn {
    ColumnKind kind;
    std::uint32_t index;  // regressor k for slopes, row t for residuals
    double cost;
};

inline bool is_structural(ColumnKind k) { return k != ColumnKind::ResidualPos && k != ColumnKind::ResidualNeg; }
inline double column_sign(ColumnKind k) {
    return (k == ColumnKind::InterceptNeg || k == ColumnKind::SlopeNeg || k == ColumnKind::ResidualNeg) ? -1.0 : 1.0;
}

class QuantileLp {
public:
    explicit QuantileLp(const QrProblem& p)
        : x_(p.design), y_(p.targets), tau_(p.tau), rows_(static_cast<std::size_t>(p.targets.size())),
          regressors_(static_cast<std::size_t>(p.design.cols())) {
        const bool negative_slopes = p.regime.kind != RegimeKind::Isotonic;
        const double slope_cost = p.regime.kind == RegimeKind::Lasso ? p.regime.lambda : 0.0;
        columns_.push_back({ColumnKind::InterceptPos, 0, 0.0});
        columns_.push_back({ColumnKind::InterceptNeg, 0, 0.0});
        slope_pos_ = columns_.size();
        for (std::size_t k = 0; k < regressors_; ++k)
            columns_.push_back({ColumnKind::SlopePos, static_cast<std::uint32_t>(k), slope_cost});
        slope_neg_ = columns_.size();
        if (negative_slopes) {
            for (std::size_t k = 0; k < regressors_; ++k)
                columns_.push_back({ColumnKind::SlopeNeg, static_cast<std::uint32_t>(k), slope_cost});
        } else {
            slope_neg_ = npos;
        }
        residual_pos_ = columns_.size();
        for (std::size_t t = 0; t < rows_; ++t)
            columns_.push_back({ColumnKind::ResidualPos, static_cast<std::uint32_t>(t), tau_});
        residual_neg_ = columns_.size();
        for (std::size_t t = 0; t < rows_; ++t)
            columns_.push_back({ColumnKind::ResidualNeg, static_cast<std::uint32_t>(t), 1.0 - tau_});
        const auto nb = static_cast<Eigen::Index>(regressors_ + 1);
        gram_.resize(nb, nb);
        gram_(0, 0) = static_cast<double>(rows_);
        if (regressors_ > 0) {
            gram_.block(1, 1, nb - 1, nb - 1).noalias() = p.design.transpose() * p.design;
            const Eigen::VectorXd sums = p.design.colwise().sum().transpose();
            gram_.block(1, 0, nb - 1, 1) = sums;
            gram_.block(0, 1, 1, nb - 1) = sums.transpose();
        }
        scale_ = 1.0;
        for (Eigen::Index k = 0; k < p.design.cols(); ++k) scale_ = std::max(scale_, p.design.col(k).cwiseAbs().maxCoeff());
    }

    LpSize size() const { return {columns_.size(), rows_}; }

    /// Entry A(t, j) of a structural column.
    double structural_entry(std::size_t j, std::size_t t) const {
        const auto& c = columns_[j];
        const double v = (c.kind == ColumnKind::InterceptPos || c.kind == ColumnKind::InterceptNeg)
                             ? 1.0
                             : x_(static_cast<Eigen::Index>(t), c.index);
        return column_sign(c.kind) * v;
    }

    /// Returns the primal solution vector x (length n) at an optimal vertex.
    std::vector<double> solve(std::size_t& iterations_out);

    const LpColumn& column(std::size_t j) const { return columns_[j]; }
    std::size_t slope_pos_offset() const { return slope_pos_; }
    std::size_t slope_neg_offset() const { return slope_neg_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    enum class RowState : std::uint8_t { Pos, Neg, Pivot };

    std::size_t partner(std::size_t j) const {
        const auto& c = columns_[j];
        switch (c.kind) {
            case ColumnKind::InterceptPos: return 1;
            case ColumnKind::InterceptNeg: return 0;
            case ColumnKind::SlopePos: return slope_neg_ == npos ? npos : slope_neg_ + c.index;
            case ColumnKind::SlopeNeg: return slope_pos_ + c.index;
            default: return npos;
        }
    }

    // Structural columns are signed copies of base column 0 (ones) or 1+k (X_k).
    std::size_t base_of(std::size_t j) const {
        const auto& c = columns_[j];
        return (c.kind == ColumnKind::InterceptPos || c.kind == ColumnKind::InterceptNeg) ? 0 : 1 + c.index;
    }
    double base_entry(std::size_t b, std::size_t t) const {
        return b == 0 ? 1.0 : x_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b - 1));
    }

    // Accumulates out += coeff * (structural column j).
    void axpy_column(std::size_t j, double coeff, Eigen::VectorXd& out) const {
        const auto& c = columns_[j];
        const double s = column_sign(c.kind) * coeff;
        if (c.kind == ColumnKind::InterceptPos || c.kind == ColumnKind::InterceptNeg) {
            out.array() += s;
        } else {
            out.noalias() += s * x_.col(c.index);
        }
    }

    Eigen::Ref<const Eigen::MatrixXd> x_;
    Eigen::Ref<const Eigen::VectorXd> y_;
    double tau_;
    std::size_t rows_;
    std::size_t regressors_;
    std::vector<LpColumn> columns_;
    std::size_t slope_pos_ = 0, slope_neg_ = 0, residual_pos_ = 0, residual_neg_ = 0;
    double scale_ = 1.0;
    Eigen::MatrixXd gram_;
};

inline std::vector<double> QuantileLp::solve(std::size_t& iterations_out) {
    const std::size_t T = rows_;
    const std::size_t n = columns_.size();
    const std::size_t nb = regressors_ + 1;
    const auto rows = static_cast<Eigen::Index>(T);

    // Basis: structural columns `basic` paired (as a set) with `pivot_rows`;
    // every other row carries its residual column, u+ or u- per row_state.
    std::vector<std::size_t> basic;
    std::vector<std::size_t> pivot_rows;
    std::vector<RowState> row_state(T);
    for (std::size_t t = 0; t < T; ++t) row_state[t] = y_(static_cast<Eigen::Index>(t)) >= 0.0 ? RowState::Pos : RowState::Neg;

    Eigen::VectorXd residual(rows), dual(rows), direction(rows), gx(static_cast<Eigen::Index>(regressors_));
    Eigen::VectorXd coef(static_cast<Eigen::Index>(nb));
    Eigen::VectorXd xs, ws, rhs, piz, az, yz, ub, gub;
    std::vector<double> reduced(n, 0.0);
    std::vector<char> is_basic(n, 0);

    const double y_scale = std::max(1.0, y_.size() > 0 ? y_.cwiseAbs().maxCoeff() : 1.0);
    const double value_tol = 1e-11 * y_scale;
    const double cost_tol = 1e-10 * (1.0 + static_cast<double>(T) * scale_);
    const std::size_t max_iterations = 200 * (T + regressors_ + 2);
    const std::size_t degenerate_limit = 2 * (regressors_ + 1) + 10;
    // Only the most attractive Dantzig candidates get an exact edge norm.
    constexpr std::size_t kPricedCandidates = 12;

    struct Breakpoint {
        double theta;
        double w;
        std::uint32_t var;  // column id of the basic variable
        std::uint32_t slot; // row t (residual) or position in `basic`
        bool residual;
    };
    std::vector<Breakpoint> breaks;
    breaks.reserve(T + nb);
    std::vector<std::size_t> flipped;
    std::vector<std::pair<double, std::size_t>> candidates;
    candidates.reserve(n);

    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::MatrixXd sz, gss;
    Eigen::VectorXd sigma;
    std::size_t degenerate_run = 0;
    bool bland = false;

    // out = sum_j c_j * (structural column basic[j]) as one pass over [1 X].
    auto combine = [&](const Eigen::VectorXd& c, double scale, Eigen::VectorXd& out, bool accumulate) {
        coef.setZero();
        for (std::size_t j = 0; j < basic.size(); ++j)
            coef(static_cast<Eigen::Index>(base_of(basic[j]))) += scale * column_sign(columns_[basic[j]].kind) * c(static_cast<Eigen::Index>(j));
        if (!accumulate) out.setZero();
        out.array() += coef(0);
        if (regressors_ > 0) out.noalias() += x_ * coef.tail(static_cast<Eigen::Index>(regressors_));
    };

    for (std::size_t iter = 0;; ++iter) {
        if (iter > max_iterations) throw std::logic_error("quantile LP exceeded iteration limit");
        const std::size_t s = basic.size();
        const auto ss = static_cast<Eigen::Index>(s);

        // Factor S_Z and recover the basic solution from scratch.
        if (s > 0) {
            sz.resize(ss, ss);
            yz.resize(ss);
            for (std::size_t i = 0; i < s; ++i) {
                const std::size_t t = pivot_rows[i];
                for (std::size_t j = 0; j < s; ++j)
                    sz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = structural_entry(basic[j], t);
                yz(static_cast<Eigen::Index>(i)) = y_(static_cast<Eigen::Index>(t));
            }
            lu.compute(sz);
            xs = lu.solve(yz);
        } else {
            xs.resize(0);
        }

        // A free structural variable that drifted negative is relabelled as its partner.
        for (std::size_t j = 0; j < s; ++j) {
            const double v = xs(static_cast<Eigen::Index>(j));
            if (v < -value_tol) {
                const std::size_t p = partner(basic[j]);
                if (p != npos) {
                    is_basic[basic[j]] = 0;
                    basic[j] = p;
                    is_basic[p] = 1;
                    xs(static_cast<Eigen::Index>(j)) = -v;
                }
            }
        }
        residual = y_;
        if (s > 0) combine(xs, -1.0, residual, true);
        for (std::size_t t = 0; t < T; ++t) {
            if (row_state[t] == RowState::Pivot) continue;
            const double r = residual(static_cast<Eigen::Index>(t));
            if (r > value_tol) row_state[t] = RowState::Pos;
            else if (r < -value_tol) row_state[t] = RowState::Neg;
        }

        // Duals: pi_t fixed by the residual column on non-pivot rows, then
        // S_Z' pi_Z = c_S - S_R' pi_R.
        for (std::size_t t = 0; t < T; ++t) {
            const auto st = row_state[t];
            dual(static_cast<Eigen::Index>(t)) = st == RowState::Pos ? tau_ : (st == RowState::Neg ? tau_ - 1.0 : 0.0);
        }
        double dual_sum = dual.sum();
        if (regressors_ > 0) gx.noalias() = x_.transpose() * dual;
        if (s > 0) {
            rhs.resize(ss);
            for (std::size_t j = 0; j < s; ++j) {
                const auto& c = columns_[basic[j]];
                const std::size_t b = base_of(basic[j]);
                const double base_dot = b == 0 ? dual_sum : gx(static_cast<Eigen::Index>(b - 1));
                rhs(static_cast<Eigen::Index>(j)) = c.cost - column_sign(c.kind) * base_dot;
            }
            piz = lu.transpose().solve(rhs);
            for (std::size_t i = 0; i < s; ++i) {
                const auto t = static_cast<Eigen::Index>(pivot_rows[i]);
                const double pi = piz(static_cast<Eigen::Index>(i));
                dual(t) = pi;
                dual_sum += pi;
                for (std::size_t k = 0; k < regressors_; ++k) gx(static_cast<Eigen::Index>(k)) += pi * x_(t, static_cast<Eigen::Index>(k));
            }
        }

        // Reduced costs of every nonbasic candidate.
        candidates.clear();
        auto consider = [&](std::size_t j, double d) {
            reduced[j] = d;
            if (!is_basic[j] && d < -cost_tol) candidates.push_back({d, j});
        };
        consider(0, -dual_sum);
        consider(1, dual_sum);
        for (std::size_t k = 0; k < regressors_; ++k) {
            const double g = gx(static_cast<Eigen::Index>(k));
            consider(slope_pos_ + k, columns_[slope_pos_ + k].cost - g);
            if (slope_neg_ != npos) consider(slope_neg_ + k, columns_[slope_neg_ + k].cost + g);
        }
        for (std::size_t i = 0; i < s; ++i) {
            const std::size_t t = pivot_rows[i];
            const double pi = dual(static_cast<Eigen::Index>(t));
            consider(residual_pos_ + t, tau_ - pi);
            consider(residual_neg_ + t, (1.0 - tau_) + pi);
        }
        if (candidates.empty()) {
            iterations_out = iter;
            break;
        }

        std::size_t entering = npos;
        if (bland) {
            for (const auto& c : candidates) entering = std::min(entering, c.second);
        } else {
            // Steepest edge over the best Dantzig candidates: d_j / ||(1, B^{-1} a_j)||.
            // Off-pivot rows of B^{-1} a_j equal a_j - S u with u = sigma .* S_Z^{-1} a_j[Z],
            // so the norm expands through the Gram matrix of [1 X].
            const std::size_t keep = std::min(candidates.size(), kPricedCandidates);
            std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end());
            if (s > 0) {
                sigma.resize(ss);
                gss.resize(ss, ss);
                for (std::size_t i = 0; i < s; ++i) {
                    sigma(static_cast<Eigen::Index>(i)) = column_sign(columns_[basic[i]].kind);
                    for (std::size_t k = 0; k < s; ++k)
                        gss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = gram_(base_of(basic[i]), base_of(basic[k]));
                }
            }
            double best = 0.0;
            for (std::size_t c = 0; c < keep; ++c) {
                const std::size_t j = candidates[c].second;
                const auto& col = columns_[j];
                double weight = 1.0;
                if (is_structural(col.kind)) {
                    const std::size_t b = base_of(j);
                    const auto bi = static_cast<Eigen::Index>(b);
                    weight += gram_(bi, bi);
                    if (s > 0) {
                        az.resize(ss);
                        for (std::size_t i = 0; i < s; ++i) az(static_cast<Eigen::Index>(i)) = base_entry(b, pivot_rows[i]);
                        ub = sigma.cwiseProduct(lu.solve(az));
                        double cross = 0.0;
                        for (std::size_t k = 0; k < s; ++k)
                            cross += gram_(bi, static_cast<Eigen::Index>(base_of(basic[k]))) * ub(static_cast<Eigen::Index>(k));
                        gub.noalias() = gss * ub;
                        weight = 1.0 + ub.squaredNorm() + std::max(0.0, gram_(bi, bi) - 2.0 * cross + ub.dot(gub));
                    }
                } else {
                    const auto it = std::find(pivot_rows.begin(), pivot_rows.end(), static_cast<std::size_t>(col.index));
                    az.setZero(ss);
                    az(static_cast<Eigen::Index>(it - pivot_rows.begin())) = 1.0;
                    ub = sigma.cwiseProduct(lu.solve(az));
                    gub.noalias() = gss * ub;
                    weight = std::max(1.0, ub.squaredNorm() + ub.dot(gub));
                }
                const double score = candidates[c].first / std::sqrt(weight);
                if (entering == npos || score < best) {
                    best = score;
                    entering = j;
                }
            }
        }

        // Direction w = B^{-1} a_q.
        const auto& eq = columns_[entering];
        const bool entering_structural = is_structural(eq.kind);
        std::size_t entering_row = npos;
        if (s > 0) {
            az.resize(ss);
            for (std::size_t i = 0; i < s; ++i) {
                const std::size_t t = pivot_rows[i];
                if (entering_structural) az(static_cast<Eigen::Index>(i)) = structural_entry(entering, t);
                else az(static_cast<Eigen::Index>(i)) = (t == eq.index) ? column_sign(eq.kind) : 0.0;
            }
            ws = lu.solve(az);
        } else {
            ws.resize(0);
        }
        if (!entering_structural) entering_row = eq.index;
        if (s > 0) {
            combine(ws, -1.0, direction, false);
        } else {
            direction.setZero();
        }
        if (entering_structural) axpy_column(entering, 1.0, direction);

        double w_scale = 0.0;
        for (std::size_t j = 0; j < s; ++j) w_scale = std::max(w_scale, std::abs(ws(static_cast<Eigen::Index>(j))));
        for (std::size_t t = 0; t < T; ++t)
            if (row_state[t] != RowState::Pivot) w_scale = std::max(w_scale, std::abs(direction(static_cast<Eigen::Index>(t))));
        const double pivot_tol = 1e-9 * std::max(1.0, w_scale);

        breaks.clear();
        for (std::size_t j = 0; j < s; ++j) {
            const double w = ws(static_cast<Eigen::Index>(j));
            if (w > pivot_tol)
                breaks.push_back({std::max(0.0, xs(static_cast<Eigen::Index>(j))) / w, w,
                                  static_cast<std::uint32_t>(basic[j]), static_cast<std::uint32_t>(j), false});
        }
        for (std::size_t t = 0; t < T; ++t) {
            const auto st = row_state[t];
            if (st == RowState::Pivot) continue;
            const double sign = st == RowState::Pos ? 1.0 : -1.0;
            const double w = sign * direction(static_cast<Eigen::Index>(t));
            if (w > pivot_tol) {
                const double value = std::max(0.0, sign * residual(static_cast<Eigen::Index>(t)));
                const std::size_t var = (st == RowState::Pos ? residual_pos_ : residual_neg_) + t;
                breaks.push_back({value / w, w, static_cast<std::uint32_t>(var), static_cast<std::uint32_t>(t), true});
            }
        }
        if (breaks.empty()) throw std::logic_error("quantile LP is unbounded");
        // Min-heap on (theta, variable id); only the first few breakpoints are
        // usually consumed, so avoid a full sort.
        const auto later = [](const Breakpoint& a, const Breakpoint& b) {
            return a.theta > b.theta || (a.theta == b.theta && a.var > b.var);
        };
        std::make_heap(breaks.begin(), breaks.end(), later);

        double slope = reduced[entering];
        flipped.clear();
        bool found = false;
        Breakpoint leave{};
        while (!breaks.empty()) {
            std::pop_heap(breaks.begin(), breaks.end(), later);
            const Breakpoint b = breaks.back();
            breaks.pop_back();
            if (!bland && b.residual && slope + b.w < -cost_tol) {
                slope += b.w;
                flipped.push_back(b.slot);
                continue;
            }
            leave = b;
            found = true;
            break;
        }
        if (!found) throw std::logic_error("quantile LP is unbounded along entering column");

        if (leave.theta * leave.w <= value_tol) {
            if (++degenerate_run > degenerate_limit) bland = true;
        } else {
            degenerate_run = 0;
            bland = false;
        }

        for (std::size_t t : flipped) row_state[t] = row_state[t] == RowState::Pos ? RowState::Neg : RowState::Pos;

        if (leave.residual) {
            const std::size_t r = leave.slot;
            row_state[r] = RowState::Pivot;
            if (entering_structural) {
                basic.push_back(entering);
                pivot_rows.push_back(r);
            } else {
                // Entering residual takes over its pivot row; the leaving row becomes a pivot row.
                auto it = std::find(pivot_rows.begin(), pivot_rows.end(), entering_row);
                *it = r;
                row_state[entering_row] = eq.kind == ColumnKind::ResidualPos ? RowState::Pos : RowState::Neg;
            }
        } else {
            const std::size_t slot = leave.slot;
            is_basic[basic[slot]] = 0;
            if (entering_structural) {
                basic[slot] = entering;
            } else {
                basic.erase(basic.begin() + static_cast<std::ptrdiff_t>(slot));
                auto it = std::find(pivot_rows.begin(), pivot_rows.end(), entering_row);
                pivot_rows.erase(it);
                row_state[entering_row] = eq.kind == ColumnKind::ResidualPos ? RowState::Pos : RowState::Neg;
            }
        }
        if (entering_structural) is_basic[entering] = 1;
    }

    std::vector<double> solution(n, 0.0);
    for (std::size_t j = 0; j < basic.size(); ++j) solution[basic[j]] = std::max(0.0, xs(static_cast<Eigen::Index>(j)));
    for (std::size_t t = 0; t < T; ++t) {
        const double r = residual(static_cast<Eigen::Index>(t));
        if (r > 0.0) solution[residual_pos_ + t] = r;
        else solution[residual_neg_ + t] = -r;
    }
    return solution;
}

}  // namespace detail

inline void validate_problem(const QrProblem& p) {
    if (!(p.tau > 0.0 && p.tau < 1.0)) throw DataError("tau must lie in (0, 1)");
    if (p.design.rows() != p.targets.size()) throw DataError("design and targets disagree on T");
    if (p.targets.size() == 0) throw DataError("quantile regression needs at least one observation");
    if (!p.design.allFinite() || !p.targets.allFinite()) throw DataError("design and targets must be finite");
}

/// Global minimizer of the pinball loss under the problem's regime.
inline QrSolution solve(const QrProblem& problem) {
    validate_problem(problem);
    detail::QuantileLp lp(problem);
    QrSolution out;
    out.lp_size = lp.size();
    const std::vector<double> x = lp.solve(out.iterations);

    const std::size_t m = static_cast<std::size_t>(problem.design.cols());
    out.intercept = x[0] - x[1];
    out.coefficients.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double b = x[lp.slope_pos_offset() + k];
        if (lp.slope_neg_offset() != detail::QuantileLp::npos) b -= x[lp.slope_neg_offset() + k];
        out.coefficients[k] = b;
        if (std::abs(b) > kZeroThreshold) ++out.nonzero_count;
    }
    out.objective = pinball_objective(problem.design, problem.targets, problem.tau, out.intercept, out.coefficients);
    double l1 = 0.0;
    for (double b : out.coefficients) l1 += std::abs(b);
    out.penalized_objective = out.objective + (problem.regime.kind == RegimeKind::Lasso ? problem.regime.lambda * l1 : 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Lasso path with BIC selection
// ---------------------------------------------------------------------------

/// 20 log-spaced penalties from 1e-2 to 1e1.
inline std::vector<double> default_lambda_grid(std::size_t count = 20, double lo = 1e-2, double hi = 1e1) {
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = lo;
        return grid;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    return grid;
}

/// Quantile-regression BIC: ln(mean pinball loss) + k ln(T) / (2T). The
/// likelihood term uses the unpenalized loss; zero loss gives -inf.
inline double quantile_bic(double objective, std::size_t nonzero, std::size_t window) {
    const double t = static_cast<double>(window);
    const double fit = objective > 0.0 ? std::log(objective / t) : -std::numeric_limits<double>::infinity();
    return fit + static_cast<double>(nonzero) * std::log(t) / (2.0 * t);
}

struct LassoPathResult {
    QrSolution solution;
    double lambda = 0.0;
    std::size_t chosen_index = 0;
    std::vector<QrSolution> path;
    std::vector<double> bic;
};

/// Fits every penalty on the grid and keeps the BIC minimizer; ties go to the larger penalty.
inline LassoPathResult solve_lasso_path(Eigen::Ref<const Eigen::MatrixXd> design, Eigen::Ref<const Eigen::VectorXd> targets,
                                        double tau, std::span<const double> grid) {
    if (grid.empty()) throw DataError("lambda grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DataError("lambda grid must be strictly increasing");
    LassoPathResult out;
    out.path.reserve(grid.size());
    out.bic.reserve(grid.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.path.push_back(solve(QrProblem(design, targets, tau, Regime::lasso(grid[i]))));
        const double b = quantile_bic(out.path.back().objective, out.path.back().nonzero_count,
                                      static_cast<std::size_t>(targets.size()));
        out.bic.push_back(b);
        if (b <= best || (std::isinf(b) && b < 0.0)) {
            best = b;
            out.chosen_index = i;
        }
    }
    out.solution = out.path[out.chosen_index];
    out.lambda = grid[out.chosen_index];
    return out;
}

}  // namespace iqra
