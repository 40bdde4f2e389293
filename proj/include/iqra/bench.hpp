#pragma once

// Wall time of one forecast day (every hour, all 99 percentiles) per method,
// single thread, data generation excluded.

#include "iqra/ingest.hpp"
#include "iqra/postprocess.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace iqra {

struct BenchConfig {
    std::size_t window = 364;
    std::size_t members = 25;
    std::size_t hours = 24;
    std::size_t repeats = 5;
    std::uint64_t seed = 1;
    SynthRegime regime = SynthRegime::SpreadInformative;
    std::vector<MethodKind> methods{kAllMethods.begin(), kAllMethods.end()};
};

struct BenchRow {
    MethodKind kind;
    double median_seconds = 0.0;
    std::vector<double> samples;
};

struct BenchCheck {
    std::string name;
    bool pass = false;
};

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    if (cfg.repeats == 0) throw DataError("bench needs at least one repeat");
    SynthConfig sc;
    sc.days = cfg.window + 1;
    sc.members = cfg.members;
    sc.hours = cfg.hours;
    sc.seed = cfg.seed;
    sc.regime = cfg.regime;
    const Dataset ds = generate_synthetic(sc);
    std::vector<WindowStep> steps;
    for (const auto& [h, recs] : ds.hours) {
        const auto s = roll_windows(recs, cfg.window);
        steps.push_back(s.back());
    }
    std::vector<BenchRow> rows;
    for (MethodKind k : cfg.methods) {
        BenchRow row{k, 0.0, {}};
        const MethodSpec spec{k, {}};
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            double sink = 0.0;
            const auto t0 = std::chrono::steady_clock::now();
            for (const auto& s : steps) sink += fit_predict(spec, s.window, s.target->ensemble).curve[49];
            const auto t1 = std::chrono::steady_clock::now();
            row.samples.push_back(std::chrono::duration<double>(t1 - t0).count() + 0.0 * sink);
        }
        std::vector<double> sorted = row.samples;
        std::sort(sorted.begin(), sorted.end());
        row.median_seconds = sorted[sorted.size() / 2];
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Qualitative ordering CP ~ HS < IDR < {iQRA, QRM, QRA} < LQRA, iQRA <= QRA,
/// and LQRA/QRA within [10, 30]. Only checks whose methods were timed are emitted.
inline std::vector<BenchCheck> bench_checks(const std::vector<BenchRow>& rows) {
    std::map<MethodKind, double> t;
    for (const auto& r : rows) t[r.kind] = r.median_seconds;
    const auto has = [&](std::initializer_list<MethodKind> ks) {
        for (auto k : ks)
            if (!t.count(k)) return false;
        return true;
    };
    using K = MethodKind;
    std::vector<BenchCheck> out;
    if (has({K::CP, K::HS, K::IDR})) out.push_back({"CP, HS < IDR", std::max(t[K::CP], t[K::HS]) < t[K::IDR]});
    if (has({K::IDR, K::IQRA, K::QRM, K::QRA}))
        out.push_back({"IDR < iQRA, QRM, QRA", t[K::IDR] < std::min({t[K::IQRA], t[K::QRM], t[K::QRA]})});
    if (has({K::LQRA, K::IQRA, K::QRM, K::QRA}))
        out.push_back({"iQRA, QRM, QRA < LQRA", std::max({t[K::IQRA], t[K::QRM], t[K::QRA]}) < t[K::LQRA]});
    if (has({K::IQRA, K::QRA})) out.push_back({"iQRA <= QRA", t[K::IQRA] <= t[K::QRA]});
    if (has({K::LQRA, K::QRA})) {
        const double ratio = t[K::LQRA] / t[K::QRA];
        out.push_back({"LQRA/QRA in [10, 30] (" + format_double(std::round(ratio * 100.0) / 100.0) + ")",
                       ratio >= 10.0 && ratio <= 30.0});
    }
    return out;
}

}  // namespace iqra
