#pragma once

#include "iqra/backtest.hpp"
#include "iqra/ingest.hpp"
#include "iqra/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace iqra {

struct MethodCurves {
    std::string method;
    std::vector<CurveRow> curves;
};

struct Evaluation {
    std::vector<double> alphas;
    std::string reference;
    std::vector<ScoreReport> reports;
    std::vector<std::string> notes;
};

/// CPA compares daily mean CRPS series; shorter test sets are not tested.
inline constexpr std::size_t kMinCpaDays = 30;

inline Evaluation evaluate_curves(const Dataset& ds, std::vector<MethodCurves> methods, const std::vector<double>& alphas,
                                  const std::string& reference) {
    if (methods.empty()) throw DataError("no forecasts to evaluate");
    for (double a : alphas) alpha_lower_index(a);
    std::map<std::pair<Day, int>, double> observed;
    for (const auto& [h, recs] : ds.hours)
        for (const auto& r : recs) observed[{r.day, r.hour}] = r.observed;

    Evaluation ev;
    ev.alphas = alphas;
    ev.reference = reference;
    std::map<std::string, std::vector<ScoredPoint>> points;
    for (auto& mc : methods) {
        std::sort(mc.curves.begin(), mc.curves.end(), [](const CurveRow& a, const CurveRow& b) {
            return a.day < b.day || (a.day == b.day && a.hour < b.hour);
        });
        std::vector<ScoredPoint> pts;
        std::vector<std::string> missing;
        for (const auto& c : mc.curves) {
            const auto it = observed.find({c.day, c.hour});
            if (it == observed.end()) {
                missing.push_back(format_day(c.day) + " h" + std::to_string(c.hour));
                continue;
            }
            pts.push_back({c.day, c.hour, c.curve, it->second});
        }
        if (!missing.empty()) {
            std::string list;
            for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
            if (missing.size() > 10) list += ", ...";
            throw DataError(mc.method + ": " + std::to_string(missing.size()) + " forecasts have no observation: " + list);
        }
        ev.reports.push_back(score_points(mc.method, pts, alphas));
        points[mc.method] = std::move(pts);
    }

    const auto ref = points.find(reference);
    if (ref == points.end()) {
        if (methods.size() > 1) ev.notes.push_back("reference method '" + reference + "' not evaluated; CPA skipped");
        return ev;
    }
    const std::vector<double> ref_daily = daily_crps(ref->second);
    for (auto& report : ev.reports) {
        if (report.method == reference) continue;
        const auto& pts = points[report.method];
        bool aligned = pts.size() == ref->second.size();
        for (std::size_t i = 0; aligned && i < pts.size(); ++i)
            aligned = pts[i].day == ref->second[i].day && pts[i].hour == ref->second[i].hour;
        if (!aligned) throw DataError(report.method + " and " + reference + " forecast different (day, hour) sets");
        if (ref_daily.size() < kMinCpaDays) {
            ev.notes.push_back(report.method + ": fewer than " + std::to_string(kMinCpaDays) + " test days; CPA skipped");
            continue;
        }
        report.cpa = cpa_test(daily_crps(pts), ref_daily);
    }
    return ev;
}

inline Evaluation evaluate_directory(const Dataset& ds, const std::filesystem::path& dir, const std::vector<std::string>& methods,
                                     const std::vector<double>& alphas, const std::string& reference) {
    std::vector<MethodCurves> curves;
    for (const auto& m : methods) curves.push_back({m, read_curves(dir / m / "curves.csv")});
    return evaluate_curves(ds, std::move(curves), alphas, reference);
}

inline nlohmann::ordered_json evaluation_json(const Evaluation& ev) {
    nlohmann::ordered_json j;
    j["reference"] = ev.reference;
    j["alphas"] = ev.alphas;
    j["methods"] = nlohmann::ordered_json::array();
    for (const auto& r : ev.reports) {
        nlohmann::ordered_json m;
        m["method"] = r.method;
        m["points"] = r.point_count;
        m["days"] = r.day_count;
        m["mean_crps"] = r.mean_crps;
        nlohmann::ordered_json years = nlohmann::ordered_json::object();
        for (const auto& [y, v] : r.crps_by_year) years[std::to_string(y)] = v;
        m["crps_by_year"] = years;
        m["levels"] = nlohmann::ordered_json::array();
        for (const auto& l : r.levels)
            m["levels"].push_back({{"alpha", l.alpha}, {"nominal_level", 1.0 - l.alpha}, {"ace", l.ace},
                                   {"tail_bias", l.tail_bias}, {"mean_pips", l.mean_pips}});
        if (r.cpa) {
            m["cpa"] = {{"statistic", r.cpa->statistic},
                        {"p_value", r.cpa->p_value},
                        {"dof", r.cpa->dof},
                        {"mean_differential", r.cpa->mean_differential},
                        {"stars", significance_stars(*r.cpa)}};
        } else {
            m["cpa"] = nullptr;
        }
        j["methods"].push_back(m);
    }
    j["notes"] = ev.notes;
    return j;
}

/// levels.csv (ACE, TB, PIPS per alpha), crps.csv (overall, per year, CPA)
/// and report.json.
inline void write_evaluation(const std::filesystem::path& dir, const Evaluation& ev) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "levels.csv", std::ios::binary);
        out << "method,alpha,nominal_level,ace,tail_bias,mean_pips\n";
        for (const auto& r : ev.reports)
            for (const auto& l : r.levels)
                out << r.method << ',' << format_double(l.alpha) << ',' << format_double(1.0 - l.alpha) << ','
                    << format_double(l.ace) << ',' << format_double(l.tail_bias) << ',' << format_double(l.mean_pips) << '\n';
    }
    {
        std::set<int> years;
        for (const auto& r : ev.reports)
            for (const auto& [y, v] : r.crps_by_year) years.insert(y);
        std::ofstream out(dir / "crps.csv", std::ios::binary);
        out << "method,crps";
        for (int y : years) out << ",crps_" << y;
        out << ",cpa_p_value,cpa_stars\n";
        for (const auto& r : ev.reports) {
            out << r.method << ',' << format_double(r.mean_crps);
            for (int y : years) {
                out << ',';
                if (const auto it = r.crps_by_year.find(y); it != r.crps_by_year.end()) out << format_double(it->second);
            }
            out << ',';
            if (r.cpa) out << format_double(r.cpa->p_value);
            out << ',' << (r.cpa ? significance_stars(*r.cpa) : "") << '\n';
        }
    }
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << evaluation_json(ev).dump(2) << '\n';
}

inline void write_selection(std::ostream& out, const SelectionFrequency& s) {
    out << "tau";
    for (std::size_t m = 1; m <= s.members; ++m) out << ",rank" << m;
    out << '\n';
    for (std::size_t i = 0; i < kGridSize; ++i) {
        out << format_double(grid_tau(i));
        for (std::size_t m = 0; m < s.members; ++m) out << ',' << format_double(s.at(i, m));
        out << '\n';
    }
}

inline SelectionFrequency selection_from_logs(std::span<const CoefficientLog> logs) {
    std::vector<CoefficientRow> rows;
    rows.reserve(logs.size());
    for (const auto& l : logs) rows.push_back(l.row);
    return selection_frequency(rows);
}

}  // namespace iqra
