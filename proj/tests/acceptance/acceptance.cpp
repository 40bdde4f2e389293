// Acceptance run: one PASS/FAIL line per criterion. `--criterion N` runs a
// single one; the exit status is nonzero when any selected criterion fails.

#include "iqra/iqra.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace iqra;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string name;
    std::function<Outcome()> run;
};

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Random quantile regression instance. Every third one is rounded to
// integers so ties and degenerate vertices get exercised.
struct Instance {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

Instance random_instance(std::mt19937_64& rng, std::size_t t, std::size_t m, bool rounded, bool negative_slopes) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> slope(negative_slopes ? -1.0 : 0.0, 1.5);
    Instance in{Eigen::MatrixXd(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)),
                Eigen::VectorXd(static_cast<Eigen::Index>(t))};
    std::vector<double> beta(m);
    for (auto& b : beta) b = slope(rng);
    for (Eigen::Index r = 0; r < in.x.rows(); ++r) {
        double v = 2.0 * n01(rng);
        for (Eigen::Index c = 0; c < in.x.cols(); ++c) {
            in.x(r, c) = 3.0 * n01(rng);
            if (rounded) in.x(r, c) = std::round(in.x(r, c));
            v += beta[static_cast<std::size_t>(c)] * in.x(r, c);
        }
        in.y(r) = rounded ? std::round(v) : v;
    }
    return in;
}

Outcome solver_oracle() {
    Stopwatch clock;
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> pick_t(6, 12), pick_m(0, 2), pick_tau(0, 2);
    const double taus[] = {0.1, 0.5, 0.9};
    int matched = 0;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto in = random_instance(rng, pick_t(rng), pick_m(rng), k % 3 == 0, true);
        const double tau = taus[pick_tau(rng)];
        const auto sol = solve(QrProblem(in.x, in.y, tau));
        const double gap = std::abs(sol.objective - oracle::unconstrained_optimum(in.x, in.y, tau));
        worst = std::max(worst, gap);
        if (gap <= 1e-9) ++matched;
    }
    const double s = clock.seconds();
    return {matched == 200 && s < 10.0, fmt("%d/200 within 1e-9 (worst %.2e), %.2f s", matched, worst, s)};
}

Outcome isotonic_exactness() {
    Stopwatch clock;
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> pick_t(6, 12), pick_m(1, 3), pick_tau(0, 2);
    const double taus[] = {0.1, 0.5, 0.9};
    int ok = 0, equal_cases = 0;
    for (int k = 0; k < 200; ++k) {
        const auto in = random_instance(rng, pick_t(rng), pick_m(rng), k % 3 == 0, k % 2 == 0);
        const double tau = taus[pick_tau(rng)];
        const auto iso = solve(QrProblem(in.x, in.y, tau, Regime::isotonic()));
        const auto free = solve(QrProblem(in.x, in.y, tau));
        bool good = std::all_of(iso.coefficients.begin(), iso.coefficients.end(), [](double b) { return b >= 0.0; });
        good = good && iso.objective >= free.objective - 1e-9;
        good = good && std::abs(iso.objective - oracle::isotonic_optimum(in.x, in.y, tau)) <= 1e-9;
        if (std::all_of(free.coefficients.begin(), free.coefficients.end(), [](double b) { return b >= 0.0; })) {
            ++equal_cases;
            good = good && std::abs(iso.objective - free.objective) <= 1e-9;
        }
        if (good) ++ok;
    }
    const double s = clock.seconds();
    return {ok == 200 && s < 10.0, fmt("%d/200 hold (%d with nonnegative QRA slopes), %.2f s", ok, equal_cases, s)};
}

Outcome lp_dimensions() {
    const auto u = standard_form_size(25, 364, RegimeKind::Unconstrained);
    const auto i = standard_form_size(25, 364, RegimeKind::Isotonic);
    std::mt19937_64 rng(303);
    const auto in = random_instance(rng, 364, 25, false, true);
    const auto su = solve(QrProblem(in.x, in.y, 0.5)).lp_size;
    const auto si = solve(QrProblem(in.x, in.y, 0.5, Regime::isotonic())).lp_size;
    const bool pass = u.variables == 780 && u.constraints == 364 && i.variables == 755 && i.constraints == 364 &&
                      su.variables == 780 && su.constraints == 364 && si.variables == 755 && si.constraints == 364;
    return {pass, fmt("declared (%zu, %zu) / (%zu, %zu), solved (%zu, %zu) / (%zu, %zu)", u.variables, u.constraints,
                      i.variables, i.constraints, su.variables, su.constraints, si.variables, si.constraints)};
}

Outcome pava_oracle() {
    Stopwatch clock;
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<std::size_t> pick_n(1, 8);
    std::uniform_real_distribution<double> value(-5.0, 5.0), weight(0.1, 3.0);
    std::bernoulli_distribution coarse(0.3);
    int ok = 0;
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
        const std::size_t n = pick_n(rng);
        const bool ties = coarse(rng);
        std::vector<double> y(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = ties ? std::round(value(rng) / 2.0) : value(rng);
            w[i] = ties ? 1.0 : weight(rng);
        }
        const auto fit = antitonic_regression(y, w);
        const auto ref = oracle::antitonic_by_partitions(y, w);
        double gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) gap = std::max(gap, std::abs(fit[i] - ref[i]));
        worst = std::max(worst, gap);
        if (gap <= 1e-5) ++ok;
    }
    const double s = clock.seconds();
    return {ok == 500 && s < 30.0, fmt("%d/500 within 1e-5 (worst %.2e), %.2f s", ok, worst, s)};
}

Dataset synthetic(SynthRegime regime, std::size_t days, std::size_t members, std::size_t hours, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.regime = regime;
    cfg.days = days;
    cfg.members = members;
    cfg.hours = hours;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

Evaluation backtest_and_score(const Dataset& ds, const std::vector<MethodKind>& kinds, std::size_t window,
                              BacktestResult* keep = nullptr) {
    BacktestConfig cfg;
    cfg.window = window;
    for (auto k : kinds) cfg.methods.push_back({k, {}});
    auto result = run_backtest(ds, cfg);
    std::vector<MethodCurves> curves;
    for (const auto& run : result.runs) curves.push_back({method_name(run.spec.kind), run.curves});
    auto ev = evaluate_curves(ds, std::move(curves), {0.10}, "");
    if (keep) *keep = std::move(result);
    return ev;
}

Outcome conformal_coverage() {
    int passed = 0;
    std::string seen;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto ds = synthetic(SynthRegime::GaussianEnsemble, 364 + 1000, 25, 1, seed);
        const auto ev = backtest_and_score(ds, {MethodKind::CP}, 364);
        const double coverage = ev.reports[0].levels[0].ace + 0.90;
        if (std::abs(coverage - 0.90) <= 0.025) ++passed;
        seen += fmt("%s%.3f", seed == 1 ? "" : " ", coverage);
    }
    return {passed >= 18, fmt("%d/20 seeds within 90%% +/- 2.5 pp (coverage: %s)", passed, seen.c_str())};
}

Outcome metric_identities() {
    std::vector<std::string> failed;
    const auto check = [&](bool ok, const char* what) {
        if (!ok) failed.emplace_back(what);
    };
    const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };

    check(pinball(0.5, 10.0, 14.0) == 2.0, "pinball 0.5");
    check(pinball(0.3, 7.0, 7.0) == 0.0, "pinball at p");
    check(near(pinball(0.9, 10.0, 8.0), 0.2), "pinball 0.9");

    std::array<double, kGridSize> grid{};
    for (std::size_t i = 0; i < kGridSize; ++i) grid[i] = 100.0 * grid_tau(i);
    const QuantileCurve identity{grid};
    check(near(pips(0.02, identity, 50.0), 0.49), "pips identity");
    const double delta = 3.0;
    grid.fill(50.0);
    grid[alpha_lower_index(0.10)] = 50.0 - delta;
    for (std::size_t i = 0; i < alpha_lower_index(0.10); ++i) grid[i] = 50.0 - delta;
    for (std::size_t i = kGridSize - 1 - alpha_lower_index(0.10); i < kGridSize; ++i) grid[i] = 50.0 + delta;
    check(near(pips(0.10, QuantileCurve{grid}, 50.0), 0.05 * delta), "pips equidistant");
    grid.fill(42.0);
    const QuantileCurve flat{grid};
    check(pips(0.10, flat, 42.0) == 0.0, "pips degenerate");

    // CRPS of the identity curve at 50, summed independently: percentiles
    // below 50 contribute tau (50 - q), those above (1 - tau)(q - 50).
    double sum = 0.0;
    for (int i = 1; i <= 99; ++i) sum += i < 50 ? (i / 100.0) * (50 - i) : (1.0 - i / 100.0) * (i - 50);
    check(near(crps(identity, 50.0), sum / 99.0), "crps identity");
    check(near(crps(identity, 50.0), 41650.0 / 9900.0), "crps identity closed form");
    check(crps(flat, 42.0) == 0.0, "crps perfect");
    std::array<double, kGridSize> shifted{};
    for (std::size_t i = 0; i < kGridSize; ++i) shifted[i] = identity[i] + 17.25;
    check(near(crps(QuantileCurve{shifted}, 67.25), crps(identity, 50.0)), "crps translation");

    std::vector<PredictionInterval> iv(100, PredictionInterval{0.90, 10.0, 20.0});
    std::vector<double> inside(100, 15.0), outside(100, 30.0), mix(100, 15.0);
    check(near(ace(iv, inside, 0.10), 0.10), "ace all inside");
    check(near(ace(iv, outside, 0.10), -0.90), "ace none inside");
    for (std::size_t t = 0; t < 10; ++t) mix[t] = t % 2 ? 25.0 : 5.0;
    check(near(ace(iv, mix, 0.10), 0.0), "ace calibrated");
    check(near(tail_bias(iv, outside), 1.0), "tb all above");
    check(tail_bias(iv, mix) == 0.0, "tb symmetric");
    std::vector<double> tb(100, 15.0);
    tb[0] = tb[1] = tb[2] = 25.0;
    tb[3] = 5.0;
    check(near(tail_bias(iv, tb), 0.02), "tb 3 above 1 below");

    std::string detail = failed.empty() ? "pinball, PIPS, CRPS, ACE and TB examples exact" : "failed:";
    for (const auto& f : failed) detail += " " + f;
    return {failed.empty(), detail};
}

Outcome cpa_size() {
    std::mt19937_64 rng(707);
    std::normal_distribution<double> n01(0.0, 1.0);
    int rejected = 0;
    std::vector<double> a(500), b(500, 0.0);
    for (int sim = 0; sim < 1000; ++sim) {
        for (auto& v : a) v = n01(rng);
        if (cpa_test(a, b).p_value < 0.05) ++rejected;
    }
    const double rate = rejected / 1000.0;
    return {rate >= 0.03 && rate <= 0.07, fmt("rejection rate %.1f%% at the 5%% level", 100.0 * rate)};
}

// Smaller ensembles keep five 2000-day backtests inside the time budget.
constexpr std::size_t kStructureMembers = 10;

Outcome method_structure() {
    Stopwatch clock;
    int tb_holds = 0, crps_holds = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto skewed = synthetic(SynthRegime::SkewedErrors, 2000, kStructureMembers, 1, seed);
        const auto ev1 = backtest_and_score(skewed, {MethodKind::CP, MethodKind::HS}, 364);
        const double tb_cp = std::abs(ev1.reports[0].levels[0].tail_bias), tb_hs = std::abs(ev1.reports[1].levels[0].tail_bias);
        if (tb_hs < tb_cp) ++tb_holds;

        const auto spread = synthetic(SynthRegime::SpreadInformative, 2000, kStructureMembers, 1, seed);
        const auto ev2 = backtest_and_score(spread, {MethodKind::CP, MethodKind::IQRA}, 364);
        const double crps_cp = ev2.reports[0].mean_crps, crps_iqra = ev2.reports[1].mean_crps;
        if (crps_iqra <= crps_cp) ++crps_holds;
        detail += fmt("%s[%llu: |TB| hs %.3f cp %.3f, CRPS iqra %.3f cp %.3f]", seed == 1 ? "" : " ",
                      static_cast<unsigned long long>(seed), tb_hs, tb_cp, crps_iqra, crps_cp);
    }
    const double s = clock.seconds();
    return {tb_holds >= 3 && crps_holds >= 3 && s < 600.0,
            fmt("HS |TB| < CP |TB| in %d/5, iQRA CRPS <= CP in %d/5, %.0f s ", tb_holds, crps_holds, s) + detail};
}

Outcome selection_structure() {
    const std::size_t members = 25;
    const auto ds = synthetic(SynthRegime::SpreadInformative, 1000, members, 1, 1);
    BacktestResult result;
    backtest_and_score(ds, {MethodKind::IQRA}, 364, &result);
    const auto sel = selection_from_logs(result.runs[0].coefficients);
    const auto mean_over = [&](std::size_t m, std::size_t from, std::size_t to) {
        double s = 0.0;
        for (std::size_t i = from; i <= to; ++i) s += sel.at(i, m);
        return s / static_cast<double>(to - from + 1);
    };
    const std::size_t mid = members / 2;
    const double first = mean_over(0, 0, 98), last = mean_over(members - 1, 0, 98), median = mean_over(mid, 0, 98);
    const double low = mean_over(0, 0, 9), high = mean_over(0, 89, 98);
    const bool pass = first > median && last > median && low > high;
    return {pass, fmt("rank 1 %.1f%%, rank %zu %.1f%%, rank %zu %.1f%%; rank 1 at tau .01-.10 %.1f%% vs .90-.99 %.1f%%", first,
                      mid + 1, median, members, last, low, high)};
}

Outcome timing_order() {
    BenchConfig cfg;
    cfg.repeats = 1;
    const auto rows = run_bench(cfg);
    bool pass = true;
    std::string detail;
    for (const auto& r : rows) detail += fmt("%s %.1f ms, ", method_name(r.kind).c_str(), r.median_seconds * 1e3);
    for (const auto& c : bench_checks(rows)) {
        pass = pass && c.pass;
        if (!c.pass) detail += "failed " + c.name + ", ";
    }
    detail.resize(detail.size() - 2);
    return {pass, detail};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const auto ds = synthetic(SynthRegime::SpreadInformative, 100, 5, 4, 11);
    const fs::path root = fs::temp_directory_path() / fs::path("iqra_determinism_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<fs::path> trees;
    for (std::size_t workers : {1, 1, 8, 8}) {
        BacktestConfig cfg;
        cfg.window = 60;
        cfg.workers = workers;
        for (auto k : kAllMethods) cfg.methods.push_back({k, {}});
        trees.push_back(root / ("run" + std::to_string(trees.size())));
        write_backtest(trees.back(), run_backtest(ds, cfg));
    }
    std::size_t files = 0;
    bool same = true;
    for (const auto& entry : fs::recursive_directory_iterator(trees[0])) {
        if (!entry.is_regular_file()) continue;
        ++files;
        const auto rel = fs::relative(entry.path(), trees[0]);
        const std::string ref = slurp(entry.path());
        for (std::size_t k = 1; k < trees.size(); ++k) same = same && fs::exists(trees[k] / rel) && slurp(trees[k] / rel) == ref;
    }
    for (std::size_t k = 1; k < trees.size(); ++k) {
        std::size_t n = 0;
        for (const auto& entry : fs::recursive_directory_iterator(trees[k])) n += entry.is_regular_file();
        same = same && n == files;
    }
    fs::remove_all(root);
    return {same && files == 11, fmt("%zu files identical across 4 runs (workers 1, 1, 8, 8)", files)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "solver oracle equivalence", solver_oracle},
        {2, "isotonic constraint exactness", isotonic_exactness},
        {3, "LP dimensions", lp_dimensions},
        {4, "PAVA oracle equivalence", pava_oracle},
        {5, "conformal coverage", conformal_coverage},
        {6, "metric identities", metric_identities},
        {7, "CPA test size", cpa_size},
        {8, "HS tail bias and iQRA CRPS structure", method_structure},
        {9, "iQRA rank selection structure", selection_structure},
        {10, "timing order", timing_order},
        {11, "determinism", determinism},
    };
    bool ok = true;
    for (const auto& c : all) {
        if (only != 0 && c.number != only) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %2d %s: %s - %s\n", c.number, c.name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}
