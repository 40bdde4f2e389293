#pragma once

// Rolling-window backtest: every (method, hour, target day) is an independent
// task. Workers fill preallocated result slots, so output order never depends
// on scheduling.

#include "iqra/core.hpp"
#include "iqra/ingest.hpp"
#include "iqra/postprocess.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace iqra {

struct CurveRow {
    Day day{};
    int hour = 1;
    QuantileCurve curve;
};

struct CoefficientLog {
    Day day{};
    int hour = 1;
    CoefficientRow row;
};

struct MethodRun {
    MethodSpec spec;
    std::vector<CurveRow> curves;              // (day, hour) order
    std::vector<CoefficientLog> coefficients;  // (day, hour, tau) order
};

struct BacktestConfig {
    std::vector<MethodSpec> methods;
    std::size_t window = 364;
    std::size_t workers = 1;
};

struct BacktestResult {
    std::vector<MethodRun> runs;
    std::size_t gap_windows = 0;  // windows spanning missing calendar days
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception by index is rethrown after all threads finish.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline void check_backtest_input(const Dataset& ds, const BacktestConfig& cfg) {
    if (cfg.methods.empty()) throw DataError("no methods selected");
    if (cfg.window < ds.members + 2)
        throw DataError("window " + std::to_string(cfg.window) + " is below the feasibility floor M+2 = " +
                        std::to_string(ds.members + 2));
    if (ds.hours.empty()) throw DataError("dataset is empty");
    for (const auto& [h, recs] : ds.hours)
        if (recs.size() < cfg.window + 1)
            throw DataError("hour " + std::to_string(h) + " has " + std::to_string(recs.size()) +
                            " days; the backtest needs at least window + 1 = " + std::to_string(cfg.window + 1));
}

inline BacktestResult run_backtest(const Dataset& ds, const BacktestConfig& cfg) {
    check_backtest_input(ds, cfg);
    struct Step {
        WindowStep step;
        int hour;
    };
    std::vector<Step> steps;
    BacktestResult out;
    for (const auto& [h, recs] : ds.hours)
        for (const auto& s : roll_windows(recs, cfg.window)) {
            steps.push_back({s, h});
            if (s.calendar_gap) ++out.gap_windows;
        }
    std::stable_sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
        return a.step.target->day < b.step.target->day || (a.step.target->day == b.step.target->day && a.hour < b.hour);
    });

    const std::size_t per_method = steps.size();
    std::vector<Forecast> results(per_method * cfg.methods.size());
    parallel_for(results.size(), cfg.workers, [&](std::size_t i) {
        const auto& spec = cfg.methods[i / per_method];
        const auto& s = steps[i % per_method].step;
        results[i] = fit_predict(spec, s.window, s.target->ensemble);
    });

    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        MethodRun run;
        run.spec = cfg.methods[m];
        run.curves.reserve(per_method);
        for (std::size_t k = 0; k < per_method; ++k) {
            auto& f = results[m * per_method + k];
            const auto& target = *steps[k].step.target;
            run.curves.push_back({target.day, target.hour, f.curve});
            for (auto& row : f.coefficients) run.coefficients.push_back({target.day, target.hour, std::move(row)});
        }
        out.runs.push_back(std::move(run));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files: <dir>/<method>/curves.csv and <dir>/<method>/coefficients.csv
// ---------------------------------------------------------------------------

inline std::string percentile_label(std::size_t i) {
    const std::size_t k = i + 1;
    return std::string("q") + (k < 10 ? "0" : "") + std::to_string(k);
}

inline void write_curves(std::ostream& out, std::span<const CurveRow> rows) {
    std::string line = "date,hour";
    for (std::size_t i = 0; i < kGridSize; ++i) line += "," + percentile_label(i);
    out << line << '\n';
    for (const auto& r : rows) {
        line = format_day(r.day) + "," + std::to_string(r.hour);
        for (std::size_t i = 0; i < kGridSize; ++i) {
            line += ',';
            line += format_double(r.curve[i]);
        }
        out << line << '\n';
    }
}

inline void write_coefficients(std::ostream& out, std::span<const CoefficientLog> rows, std::size_t slopes) {
    std::string line = "date,hour,tau,beta0";
    for (std::size_t k = 1; k <= slopes; ++k) line += ",beta" + std::to_string(k);
    out << line << '\n';
    for (const auto& r : rows) {
        line = format_day(r.day) + "," + std::to_string(r.hour) + "," + format_double(r.row.tau) + "," +
               format_double(r.row.intercept);
        for (double b : r.row.slopes) {
            line += ',';
            line += format_double(b);
        }
        out << line << '\n';
    }
}

inline void write_backtest(const std::filesystem::path& dir, const BacktestResult& result) {
    for (const auto& run : result.runs) {
        const auto sub = dir / method_name(run.spec.kind);
        std::filesystem::create_directories(sub);
        {
            std::ofstream out(sub / "curves.csv", std::ios::binary);
            if (!out) throw DataError("cannot write " + (sub / "curves.csv").string());
            write_curves(out, run.curves);
        }
        if (is_regression_method(run.spec.kind)) {
            std::ofstream out(sub / "coefficients.csv", std::ios::binary);
            if (!out) throw DataError("cannot write " + (sub / "coefficients.csv").string());
            const std::size_t slopes = run.coefficients.empty() ? 0 : run.coefficients.front().row.slopes.size();
            write_coefficients(out, run.coefficients, slopes);
        }
    }
}

namespace detail {

inline std::vector<std::string_view> read_csv_fields(const std::string& line, std::size_t expected, const std::string& source,
                                                      std::size_t line_no) {
    auto f = split_csv_line(line);
    if (f.size() != expected)
        throw DataError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(expected) + " fields, got " +
                        std::to_string(f.size()));
    return f;
}

inline double field_number(std::string_view f, const std::string& source, std::size_t line_no) {
    double v = 0.0;
    if (!parse_double(f, v) || !std::isfinite(v))
        throw DataError(source + ":" + std::to_string(line_no) + ": '" + std::string(f) + "' is not a finite number");
    return v;
}

}  // namespace detail

inline std::vector<CurveRow> read_curves(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("forecast file not found: " + path.string());
    const std::string src = path.string();
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw DataError(src + ": empty file");
    std::vector<CurveRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::read_csv_fields(line, 2 + kGridSize, src, line_no);
        CurveRow r;
        r.day = parse_day(std::string(f[0]));
        r.hour = static_cast<int>(detail::field_number(f[1], src, line_no));
        std::array<double, kGridSize> v{};
        for (std::size_t i = 0; i < kGridSize; ++i) v[i] = detail::field_number(f[2 + i], src, line_no);
        try {
            r.curve = QuantileCurve{v};
        } catch (const std::logic_error&) {
            throw DataError(src + ":" + std::to_string(line_no) + ": quantile curve is not sorted");
        }
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<CoefficientLog> read_coefficients(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("coefficient log not found: " + path.string());
    const std::string src = path.string();
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw DataError(src + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t fields = split_csv_line(line).size();
    if (fields < 5) throw DataError(src + ": coefficient log has no slope columns");
    std::vector<CoefficientLog> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::read_csv_fields(line, fields, src, line_no);
        CoefficientLog r;
        r.day = parse_day(std::string(f[0]));
        r.hour = static_cast<int>(detail::field_number(f[1], src, line_no));
        r.row.tau = detail::field_number(f[2], src, line_no);
        r.row.intercept = detail::field_number(f[3], src, line_no);
        for (std::size_t k = 4; k < fields; ++k) r.row.slopes.push_back(detail::field_number(f[k], src, line_no));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace iqra
