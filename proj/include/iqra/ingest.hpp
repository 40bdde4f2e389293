#pragma once

// Dataset files: CSV with header `date,hour,observed,f1,...,fM`, one row per
// (date, hour). Ensembles are sorted on load.

#include "iqra/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace iqra {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), out);
    return r.ec == std::errc{} && r.ptr == text.data() + text.size();
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

struct Dataset {
    std::size_t members = 0;
    std::map<int, std::vector<ForecastRecord>> hours;  // each sorted by day

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [h, recs] : hours) n += recs.size();
        return n;
    }

    /// All records ordered by (day, hour).
    std::vector<ForecastRecord> rows() const {
        std::vector<ForecastRecord> out;
        out.reserve(size());
        for (const auto& [h, recs] : hours) out.insert(out.end(), recs.begin(), recs.end());
        std::stable_sort(out.begin(), out.end(), [](const ForecastRecord& a, const ForecastRecord& b) {
            return a.day < b.day || (a.day == b.day && a.hour < b.hour);
        });
        return out;
    }

    std::set<Day> days() const {
        std::set<Day> out;
        for (const auto& [h, recs] : hours)
            for (const auto& r : recs) out.insert(r.day);
        return out;
    }
};

struct LoadOptions {
    /// Average duplicated (date, hour) rows and impute a missing hour from the
    /// neighbouring hours of the same day, member by member.
    bool merge_dst = false;
};

namespace detail {

inline ForecastRecord average_records(const std::vector<ForecastRecord>& rs) {
    ForecastRecord out = rs.front();
    for (std::size_t i = 1; i < rs.size(); ++i) {
        out.observed += rs[i].observed;
        for (std::size_t m = 0; m < out.ensemble.size(); ++m) out.ensemble[m] += rs[i].ensemble[m];
    }
    const double k = static_cast<double>(rs.size());
    out.observed /= k;
    for (double& v : out.ensemble) v /= k;
    return out;
}

}  // namespace detail

inline Dataset read_dataset(std::istream& in, const LoadOptions& opt = {}, const std::string& source = "input") {
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) -> DataError {
        return DataError(source + ":" + std::to_string(line_no) + ": " + what);
    };
    ++line_no;
    if (!std::getline(in, line)) throw fail("missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "date" || header[1] != "hour" || header[2] != "observed")
        throw fail("header must be date,hour,observed,f1,...,fM");
    for (std::size_t c = 3; c < header.size(); ++c)
        if (header[c] != "f" + std::to_string(c - 2)) throw fail("forecast columns must be named f1..fM");
    Dataset ds;
    ds.members = header.size() - 3;

    // (day, hour) -> rows in file order; std::map keeps the key order fixed.
    std::map<std::pair<Day, int>, std::vector<ForecastRecord>> cells;
    std::map<std::pair<Day, int>, std::size_t> first_line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        ForecastRecord r;
        try {
            r.day = parse_day(std::string(f[0]));
        } catch (const DataError& e) {
            throw fail(e.what());
        }
        double hour = 0.0;
        if (!parse_double(f[1], hour) || hour != std::floor(hour) || hour < 1 || hour > 24)
            throw fail("hour must be an integer in 1..24");
        r.hour = static_cast<int>(hour);
        if (!parse_double(f[2], r.observed) || !std::isfinite(r.observed)) throw fail("observed price is not a finite number");
        r.ensemble.resize(ds.members);
        for (std::size_t m = 0; m < ds.members; ++m)
            if (!parse_double(f[3 + m], r.ensemble[m]) || !std::isfinite(r.ensemble[m]))
                throw fail("forecast f" + std::to_string(m + 1) + " is not a finite number");
        const auto key = std::make_pair(r.day, r.hour);
        auto& cell = cells[key];
        if (!cell.empty() && !opt.merge_dst)
            throw fail("duplicate row for " + format_day(r.day) + " hour " + std::to_string(r.hour) + " (first at line " +
                       std::to_string(first_line[key]) + ")");
        if (cell.empty()) first_line[key] = line_no;
        cell.push_back(std::move(r));
    }

    std::set<int> hour_set;
    std::map<Day, std::map<int, ForecastRecord>> by_day;
    for (auto& [key, rs] : cells) {
        hour_set.insert(key.second);
        by_day[key.first][key.second] = rs.size() == 1 ? rs.front() : detail::average_records(rs);
    }
    if (opt.merge_dst) {
        for (auto& [day, row] : by_day) {
            for (int h : hour_set) {
                if (row.count(h)) continue;
                std::vector<ForecastRecord> nb;
                if (row.count(h - 1)) nb.push_back(row.at(h - 1));
                if (row.count(h + 1)) nb.push_back(row.at(h + 1));
                if (nb.empty()) continue;
                ForecastRecord r = detail::average_records(nb);
                r.day = day;
                r.hour = h;
                row[h] = r;
            }
        }
    }
    for (auto& [day, row] : by_day) {
        for (auto& [h, r] : row) {
            std::sort(r.ensemble.begin(), r.ensemble.end());
            ds.hours[h].push_back(std::move(r));
        }
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path, const LoadOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset '" + path + "'");
    return read_dataset(in, opt, path);
}

inline void write_dataset(std::ostream& out, const Dataset& ds) {
    out << "date,hour,observed";
    for (std::size_t m = 1; m <= ds.members; ++m) out << ",f" << m;
    out << '\n';
    std::string line;
    for (const auto& r : ds.rows()) {
        line = format_day(r.day);
        line += ',';
        line += std::to_string(r.hour);
        line += ',';
        line += format_double(r.observed);
        for (double v : r.ensemble) {
            line += ',';
            line += format_double(v);
        }
        line += '\n';
        out << line;
    }
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset '" + path + "'");
    write_dataset(out, ds);
    if (!out) throw DataError("failed writing dataset '" + path + "'");
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

enum class SynthRegime { GaussianEnsemble, SkewedErrors, SpreadInformative };

inline std::string regime_name(SynthRegime r) {
    switch (r) {
        case SynthRegime::GaussianEnsemble: return "gaussian-ensemble";
        case SynthRegime::SkewedErrors: return "skewed-errors";
        case SynthRegime::SpreadInformative: return "spread-informative";
    }
    return "?";
}

inline SynthRegime parse_regime(const std::string& s) {
    for (SynthRegime r : {SynthRegime::GaussianEnsemble, SynthRegime::SkewedErrors, SynthRegime::SpreadInformative})
        if (regime_name(r) == s) return r;
    throw DataError("unknown synthetic regime '" + s + "'");
}

struct SynthConfig {
    std::size_t days = 730;
    std::size_t members = 25;
    std::uint64_t seed = 1;
    SynthRegime regime = SynthRegime::SpreadInformative;
    std::size_t hours = 24;
    Day start = make_day(2019, 1, 1);
    double noise_sd = 5.0;

    void validate() const {
        if (days < 2) throw DataError("synthetic config: days must be at least 2");
        if (members < 1) throw DataError("synthetic config: members must be at least 1");
        if (hours < 1 || hours > 24) throw DataError("synthetic config: hours must lie in 1..24");
        if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) throw DataError("synthetic config: noise_sd must be positive");
    }
};

/// Flat `key = value` lines; `#` starts a comment.
inline SynthConfig parse_synth_config(std::istream& in, SynthConfig cfg = {}) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto to_count = [&]() -> std::size_t {
            double v = 0.0;
            if (!parse_double(value, v) || v < 0 || v != std::floor(v))
                throw DataError("config line " + std::to_string(line_no) + ": '" + key + "' needs a nonnegative integer");
            return static_cast<std::size_t>(v);
        };
        if (key == "days") cfg.days = to_count();
        else if (key == "members" || key == "M") cfg.members = to_count();
        else if (key == "seed") cfg.seed = to_count();
        else if (key == "hours") cfg.hours = to_count();
        else if (key == "regime") cfg.regime = parse_regime(value);
        else if (key == "start") cfg.start = parse_day(value);
        else if (key == "noise_sd") {
            if (!parse_double(value, cfg.noise_sd)) throw DataError("config line " + std::to_string(line_no) + ": bad noise_sd");
        } else {
            throw DataError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

/// Latent price with daily and weekly shape, a persistent AR(1) level and
/// occasional spikes, all of which the ensemble sees. Members and the
/// observation scatter around it per regime:
///   gaussian-ensemble   members f + N(0, s^2), observation f + N(0, s^2 (1 - 1/M)),
///                       so observation minus ensemble mean has sd s;
///   skewed-errors       observation f + s (Exp(1) - 1), right-skewed;
///   spread-informative  a per-point scale v = s exp(0.6 N(0,1)) drives both the
///                       member spread and the observation error.
inline Dataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double s = cfg.noise_sd;
    const double m = static_cast<double>(cfg.members);
    Dataset ds;
    ds.members = cfg.members;
    double level = 0.0;
    for (std::size_t d = 0; d < cfg.days; ++d) {
        const Day day = cfg.start + std::chrono::days{static_cast<int>(d)};
        const unsigned weekday = std::chrono::weekday{day}.c_encoding();
        const double weekly = (weekday == 0 || weekday == 6) ? -8.0 : 0.0;
        level = 0.85 * level + 3.0 * normal(rng);
        for (std::size_t h = 1; h <= cfg.hours; ++h) {
            const double phase = 2.0 * std::numbers::pi * (static_cast<double>(h) - 8.0) / 24.0;
            double f = 50.0 + level + weekly + 12.0 * std::sin(phase) + 5.0 * std::sin(2.0 * phase);
            if (unit(rng) < 0.02) f += 40.0 * expo(rng);
            ForecastRecord r;
            r.day = day;
            r.hour = static_cast<int>(h);
            r.ensemble.resize(cfg.members);
            switch (cfg.regime) {
                case SynthRegime::GaussianEnsemble:
                    for (double& v : r.ensemble) v = f + s * normal(rng);
                    r.observed = f + s * std::sqrt(1.0 - 1.0 / m) * normal(rng);
                    break;
                case SynthRegime::SkewedErrors:
                    for (double& v : r.ensemble) v = f + s * normal(rng);
                    r.observed = f + s * (expo(rng) - 1.0);
                    break;
                case SynthRegime::SpreadInformative: {
                    const double v = s * std::exp(0.6 * normal(rng));
                    for (double& e : r.ensemble) e = f + v * normal(rng);
                    r.observed = f + v * normal(rng);
                    break;
                }
            }
            std::sort(r.ensemble.begin(), r.ensemble.end());
            ds.hours[r.hour].push_back(std::move(r));
        }
    }
    return ds;
}

}  // namespace iqra
