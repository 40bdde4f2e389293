#include "iqra/iqra.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace iqra;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<MethodKind> parse_methods(const std::string& s) {
    std::vector<MethodKind> out;
    try {
        for (const auto& name : split_list(s)) {
            const MethodKind k = parse_method(name);
            if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
        }
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    if (out.empty()) throw UsageError("--methods is empty");
    return out;
}

std::vector<double> parse_alphas(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        double a = 0.0;
        if (!parse_double(item, a)) throw UsageError("bad alpha '" + item + "'");
        try {
            alpha_lower_index(a);
        } catch (const DataError& e) {
            throw UsageError(std::string("alpha ") + item + ": " + e.what());
        }
        out.push_back(a);
    }
    if (out.empty()) throw UsageError("--alphas is empty");
    return out;
}

std::string join_names(const std::vector<MethodKind>& ks) {
    std::string s;
    for (auto k : ks) s += (s.empty() ? "" : ",") + method_name(k);
    return s;
}

struct Options {
    std::string input, output, forecasts, config;
    std::string methods = "cp,hs,idr,qra,qrm,lqra,iqra";
    std::string alphas = "0.02,0.04,0.10,0.20";
    std::string reference = "iqra";
    std::string centering = "mean";
    std::string regime;
    std::size_t window = 364;
    std::size_t workers = 1;
    std::size_t members = 25;
    std::size_t hours = 24;
    std::size_t days = 0;
    std::size_t repeats = 5;
    std::uint64_t seed = 1;
    bool seed_set = false;
    bool merge_dst = false;
    bool vst = false;
};

int cmd_synth(const Options& o) {
    SynthConfig cfg;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw DataError("cannot open config '" + o.config + "'");
        cfg = parse_synth_config(in);
    }
    if (o.seed_set) cfg.seed = o.seed;
    if (o.days > 0) cfg.days = o.days;
    if (!o.regime.empty()) cfg.regime = parse_regime(o.regime);
    const auto ds = generate_synthetic(cfg);
    if (o.output.empty() || o.output == "-") {
        write_dataset(std::cout, ds);
    } else {
        save_dataset(o.output, ds);
        std::cerr << "wrote " << ds.size() << " rows (" << cfg.days << " days, M=" << cfg.members << ", "
                  << regime_name(cfg.regime) << ") to " << o.output << '\n';
    }
    return 0;
}

int cmd_backtest(const Options& o) {
    BacktestConfig cfg;
    cfg.window = o.window;
    cfg.workers = o.workers;
    MethodOptions mo;
    if (o.centering == "median") mo.centering = Centering::Median;
    else if (o.centering != "mean") throw UsageError("--centering must be mean or median");
    mo.vst = o.vst;
    for (auto k : parse_methods(o.methods)) cfg.methods.push_back({k, mo});
    const auto ds = load_dataset(o.input, LoadOptions{o.merge_dst});
    const auto result = run_backtest(ds, cfg);
    if (result.gap_windows > 0)
        std::cerr << "warning: " << result.gap_windows
                  << " calibration windows span missing calendar days; the most recent records were used\n";
    write_backtest(o.output, result);
    std::cerr << "wrote " << result.runs.front().curves.size() << " curves per method for "
              << join_names(parse_methods(o.methods)) << " to " << o.output << '\n';
    return 0;
}

int cmd_evaluate(const Options& o) {
    const auto methods = parse_methods(o.methods);
    const auto alphas = parse_alphas(o.alphas);
    const auto ds = load_dataset(o.input, LoadOptions{o.merge_dst});
    std::vector<std::string> names;
    for (auto k : methods) names.push_back(method_name(k));
    std::string reference = o.reference;
    try {
        reference = method_name(parse_method(reference));
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    const auto ev = evaluate_directory(ds, o.forecasts, names, alphas, reference);
    write_evaluation(o.output, ev);
    std::printf("%-6s %10s  CPA vs %s\n", "method", "CRPS", reference.c_str());
    for (const auto& r : ev.reports) {
        std::string cpa = r.cpa ? format_double(r.cpa->p_value) + significance_stars(*r.cpa) : "";
        std::printf("%-6s %10.4f  %s\n", r.method.c_str(), r.mean_crps, cpa.c_str());
    }
    for (const auto& n : ev.notes) std::cerr << "note: " << n << '\n';
    return 0;
}

int cmd_selection(const Options& o) {
    const auto methods = parse_methods(o.methods.empty() ? "iqra,lqra" : o.methods);
    fs::create_directories(o.output);
    for (auto k : methods) {
        if (!is_regression_method(k)) throw UsageError(method_name(k) + " has no coefficients");
        const fs::path log = fs::path(o.input) / method_name(k) / "coefficients.csv";
        if (!fs::exists(log)) throw DataError("coefficient log not found: " + log.string());
        const auto s = selection_from_logs(read_coefficients(log));
        const fs::path out_path = fs::path(o.output) / (method_name(k) + "_selection.csv");
        std::ofstream out(out_path, std::ios::binary);
        write_selection(out, s);
        std::printf("%s: %.1f%% of coefficients selected (%s)\n", method_name(k).c_str(), s.aggregate, out_path.c_str());
    }
    return 0;
}

int cmd_bench(const Options& o) {
    BenchConfig cfg;
    cfg.window = o.window;
    cfg.members = o.members;
    cfg.hours = o.hours;
    cfg.repeats = o.repeats;
    cfg.seed = o.seed;
    cfg.methods = parse_methods(o.methods);
    if (cfg.window < cfg.members + 2) throw UsageError("--window must be at least members + 2");
    const auto rows = run_bench(cfg);
    std::printf("one day, %zu hours x 99 percentiles, T=%zu, M=%zu, median of %zu\n", cfg.hours, cfg.window, cfg.members,
                cfg.repeats);
    for (const auto& r : rows) std::printf("%-6s %12.3f ms\n", method_name(r.kind).c_str(), r.median_seconds * 1e3);
    for (const auto& c : bench_checks(rows)) std::printf("%s %s\n", c.pass ? "ok  " : "FAIL", c.name.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble postprocessing into 99-percentile probabilistic forecasts"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--config", o.config, "key = value file (days, members, seed, regime, hours, start, noise_sd)");
    synth->add_option("--output", o.output, "dataset CSV path (stdout when omitted)");
    synth->add_option("--seed", o.seed, "overrides the config seed")->each([&](const std::string&) { o.seed_set = true; });
    synth->add_option("--days", o.days, "overrides the config day count");
    synth->add_option("--regime", o.regime, "gaussian-ensemble, skewed-errors or spread-informative");

    auto* backtest = app.add_subcommand("backtest", "rolling-window forecasts for each method");
    backtest->add_option("--input", o.input, "dataset CSV")->required();
    backtest->add_option("--output", o.output, "output directory")->required();
    backtest->add_option("--methods", o.methods, "comma list of cp,hs,idr,qra,qrm,lqra,iqra");
    backtest->add_option("--window", o.window, "calibration window length T")->capture_default_str();
    backtest->add_option("--workers", o.workers, "worker threads")->capture_default_str();
    backtest->add_option("--centering", o.centering, "CP/HS centre: mean or median")->capture_default_str();
    backtest->add_flag("--merge-dst", o.merge_dst, "average duplicate hours and impute missing ones");
    backtest->add_flag("--vst", o.vst, "fit on variance-stabilized prices");
    backtest->add_option("--seed", o.seed, "unused; methods are deterministic");

    auto* evaluate = app.add_subcommand("evaluate", "score backtest forecasts");
    evaluate->add_option("--input", o.input, "dataset CSV with the observations")->required();
    evaluate->add_option("--forecasts", o.forecasts, "backtest output directory")->required();
    evaluate->add_option("--output", o.output, "report directory")->required();
    evaluate->add_option("--methods", o.methods, "methods to score")->capture_default_str();
    evaluate->add_option("--alphas", o.alphas, "interval levels alpha")->capture_default_str();
    evaluate->add_option("--reference", o.reference, "CPA reference method")->capture_default_str();
    evaluate->add_flag("--merge-dst", o.merge_dst, "average duplicate hours and impute missing ones");

    auto* selection = app.add_subcommand("selection-report", "how often each ensemble rank enters the model");
    selection->add_option("--input", o.input, "backtest output directory")->required();
    selection->add_option("--output", o.output, "report directory")->required();
    selection->add_option("--methods", o.methods, "iqra and/or lqra");

    auto* bench = app.add_subcommand("bench", "time one forecast day per method");
    bench->add_option("--methods", o.methods, "methods to time")->capture_default_str();
    bench->add_option("--window", o.window, "calibration window length T")->capture_default_str();
    bench->add_option("--members", o.members, "ensemble size M")->capture_default_str();
    bench->add_option("--hours", o.hours, "hours per day")->capture_default_str();
    bench->add_option("--repeats", o.repeats, "timed repetitions")->capture_default_str();
    bench->add_option("--seed", o.seed, "synthetic data seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    if (selection->parsed() && selection->count("--methods") == 0) o.methods = "iqra,lqra";

    try {
        if (synth->parsed()) return cmd_synth(o);
        if (backtest->parsed()) return cmd_backtest(o);
        if (evaluate->parsed()) return cmd_evaluate(o);
        if (selection->parsed()) return cmd_selection(o);
        if (bench->parsed()) return cmd_bench(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
