// htf: histogram trend filtering from the command line.
//
// Subcommands:
//   fit    fit a density to a column of numbers and write estimate/curve files
//   eval   evaluate a serialized estimate at points read from a file
//   path   fit a tau path and print per-tau diagnostics
//   bench  run the Monte Carlo benchmark from a JSON config
//   check  print pseudo-inverse norm ratios of the difference operator
//
// Exit codes: 0 success, 1 runtime/convergence failure, 2 usage/validation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "htf/errors.hpp"
#include "htf/estimator.hpp"
#include "htf/kde.hpp"
#include "htf/model_select.hpp"
#include "htf/parallel.hpp"
#include "htf/simbench.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::vector<double> read_numbers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open input file: " + path);
    std::vector<double> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue; // blank line
        std::size_t b = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(a, b - a + 1);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size() || !std::isfinite(v)) {
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": not a finite number: '" + tok + "'");
        }
        out.push_back(v);
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

std::optional<htf::Interval> parse_support(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("--support expects two comma-separated numbers");
    char* end = nullptr;
    const std::string a = text.substr(0, comma), b = text.substr(comma + 1);
    const double lo = std::strtod(a.c_str(), &end);
    if (end != a.c_str() + a.size()) throw std::invalid_argument("--support: bad lower bound");
    const double hi = std::strtod(b.c_str(), &end);
    if (end != b.c_str() + b.size()) throw std::invalid_argument("--support: bad upper bound");
    if (!(lo < hi)) throw std::invalid_argument("--support: lower bound must be below upper");
    return htf::Interval{lo, hi};
}

std::string curve_csv(const htf::DensityEstimate& est, int points) {
    std::string out = "x,fhat\n";
    char line[80];
    const double lo = est.support.lo;
    const double step = est.support.width() / (points - 1);
    for (int i = 0; i < points; ++i) {
        const double x = lo + i * step;
        std::snprintf(line, sizeof(line), "%.17g,%.17g\n", x, htf::evaluate(est, x));
        out += line;
    }
    return out;
}

int cmd_fit(const std::string& input, int k, const std::string& bins_arg,
            const std::string& tau_arg, const std::string& tau_auto, const std::string& support_arg,
            long seed, const std::string& output, const std::string& curve) {
    auto values = read_numbers(input);
    const auto sample = htf::make_sample(std::move(values), parse_support(support_arg));

    htf::HtfConfig cfg;
    cfg.k = k;
    if (bins_arg != "auto") {
        cfg.bins = std::stoi(bins_arg);
        if (*cfg.bins < 2) throw std::invalid_argument("bins must be >= 2");
    }
    if (!tau_arg.empty()) {
        cfg.tau_rule = htf::TauRule::Explicit;
        cfg.tau = std::stod(tau_arg);
        if (!(cfg.tau >= 0.0)) throw std::invalid_argument("--tau must be >= 0");
    } else {
        cfg.tau_rule = (tau_auto == "path") ? htf::TauRule::AutoPath : htf::TauRule::AutoGrid;
    }

    const auto est = htf::fit_density(sample, cfg);
    if (!est.diagnostics.converged) {
        std::fprintf(stderr, "fit did not converge (kkt residual %.3e)\n",
                     est.diagnostics.kkt_residual);
        return kExitRuntime;
    }
    std::string doc = htf::serialize(est);
    if (!output.empty()) {
        write_file(output, doc);
    } else {
        std::cout << doc << "\n";
    }
    if (!curve.empty()) write_file(curve, curve_csv(est, 1000));
    std::fprintf(stderr, "n=%ld bins=%d k=%d tau=%.6g aic=%.6g seed=%ld\n", est.diagnostics.n,
                 est.diagnostics.bins, est.k, est.diagnostics.tau, est.diagnostics.aic, seed);
    return kExitOk;
}

int cmd_eval(const std::string& estimate_path, const std::string& points_path,
             const std::string& output) {
    std::ifstream in(estimate_path);
    if (!in) throw std::invalid_argument("cannot open estimate file: " + estimate_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto est = htf::deserialize(ss.str());
    const auto xs = read_numbers(points_path);
    std::string out = "x,fhat\n";
    char line[80];
    for (double x : xs) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g\n", x, htf::evaluate(est, x));
        out += line;
    }
    if (!output.empty()) {
        write_file(output, out);
    } else {
        std::cout << out;
    }
    return kExitOk;
}

int cmd_path(const std::string& input, int k, const std::string& bins_arg, int points,
             const std::string& support_arg, const std::string& output) {
    auto values = read_numbers(input);
    const auto sample = htf::make_sample(std::move(values), parse_support(support_arg));
    const long n = static_cast<long>(sample.values.size());
    const int bins = (bins_arg == "auto") ? htf::default_num_bins(n) : std::stoi(bins_arg);
    const auto hist = htf::make_histogram(sample, bins);

    const double lstar = htf::lambda_star(n, bins, k, htf::OperatorNorm::MaxAbs);
    std::vector<double> taus;
    if (points == 5) {
        taus = htf::default_grid(lstar);
        std::reverse(taus.begin(), taus.end());
    } else {
        taus = htf::dense_path_grid(lstar, points);
    }
    htf::BoxSpec box{true, 0.25, std::nullopt};
    const auto path = htf::fit_path(hist, k, taus, box);

    std::string out = "tau\tnll\tobjective\tactive_diffs\taic\tconverged\tselected\n";
    char line[160];
    for (std::size_t i = 0; i < path.entries.size(); ++i) {
        const auto& e = path.entries[i];
        std::snprintf(line, sizeof(line), "%.17g\t%.17g\t%.17g\t%d\t%.17g\t%d\t%d\n", e.tau,
                      e.fit.nll, e.fit.objective, e.fit.active_diffs, e.aic,
                      e.fit.converged ? 1 : 0, static_cast<int>(i) == path.selected ? 1 : 0);
        out += line;
    }
    if (!output.empty()) {
        write_file(output, out);
    } else {
        std::cout << out;
    }
    return kExitOk;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto cfg = htf::bench_config_from_json(ss.str());
    const auto report = htf::run_benchmark(cfg);
    const std::string tsv = htf::report_to_tsv(report);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_file(out_dir + "/report.json", htf::report_to_json(report));
        write_file(out_dir + "/report.tsv", tsv);
    }
    std::cout << tsv;
    for (const auto& c : report.cells) {
        if (c.replicates == 0) {
            std::fprintf(stderr, "cell %s/%ld/%s had no successful replicate\n", c.density.c_str(),
                         c.n, c.method.c_str());
            return kExitRuntime;
        }
    }
    return kExitOk;
}

int cmd_check(int k, int dmin, int dmax, int step, std::vector<int> dims) {
    if (dims.empty()) {
        if (dmin > dmax) throw std::invalid_argument("--dmin must not exceed --dmax");
        if (step < 1) throw std::invalid_argument("--step must be >= 1");
        for (int d = dmin; d <= dmax; d += step) dims.push_back(d);
    }
    const double lo = 0.1474, hi = 0.1482;
    bool all_inside = true;
    std::printf("D\tmax_abs\tratio\tverdict\n");
    for (int d : dims) {
        const auto op = htf::make_diff_operator(k + 1, d);
        const auto norms = htf::pinv_norms(op);
        const double ratio = norms.max_abs / d;
        const bool inside = ratio > lo && ratio < hi;
        all_inside = all_inside && inside;
        std::printf("%d\t%.10g\t%.10g\t%s\n", d, norms.max_abs, ratio,
                    inside ? "inside" : "outside");
    }
    std::printf("all ratios in (%.4f, %.4f): %s\n", lo, hi, all_inside ? "yes" : "no");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"histogram trend filtering density estimation"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "fit a density to numbers read from a file");
    std::string fit_input, fit_bins = "auto", fit_tau, fit_tau_auto = "grid", fit_support;
    std::string fit_output, fit_curve;
    int fit_k = 1;
    long fit_seed = 0;
    fit->add_option("--input", fit_input, "input file, one number per line")->required();
    fit->add_option("--k", fit_k, "piecewise polynomial degree (default 1)");
    fit->add_option("--bins", fit_bins, "bin count or 'auto'");
    auto* tau_opt = fit->add_option("--tau", fit_tau, "explicit penalty weight");
    auto* tau_auto_opt =
        fit->add_option("--tau-auto", fit_tau_auto, "automatic selection: grid or path")
            ->check(CLI::IsMember({"grid", "path"}));
    tau_opt->excludes(tau_auto_opt);
    fit->add_option("--support", fit_support, "support as 'a,b' (default: data range)");
    fit->add_option("--seed", fit_seed, "recorded seed (fits are deterministic)");
    fit->add_option("--output", fit_output, "estimate JSON path (default: stdout)");
    fit->add_option("--curve", fit_curve, "write a 1000-point x,fhat CSV here");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a serialized estimate at points");
    std::string eval_est, eval_points, eval_output;
    eval->add_option("--estimate", eval_est, "estimate JSON file")->required();
    eval->add_option("--points", eval_points, "points file, one number per line")->required();
    eval->add_option("--output", eval_output, "output CSV path (default: stdout)");

    // path
    auto* path = app.add_subcommand("path", "fit a tau path and print diagnostics");
    std::string path_input, path_bins = "auto", path_support, path_output;
    int path_k = 1, path_points = 41;
    path->add_option("--input", path_input, "input file, one number per line")->required();
    path->add_option("--k", path_k, "piecewise polynomial degree (default 1)");
    path->add_option("--bins", path_bins, "bin count or 'auto'");
    path->add_option("--points", path_points, "grid size (5 = anchor grid, default 41)")
        ->check(CLI::Range(2, 10000));
    path->add_option("--support", path_support, "support as 'a,b'");
    path->add_option("--output", path_output, "output TSV path (default: stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "run the Monte Carlo benchmark");
    std::string bench_config, bench_outdir;
    bench->add_option("--config", bench_config, "benchmark config JSON")->required();
    bench->add_option("--out-dir", bench_outdir, "directory for report.json / report.tsv");

    // check
    auto* check = app.add_subcommand("check", "pseudo-inverse norm ratios of the operator");
    int check_k = 1, check_dmin = 500, check_dmax = 10000, check_step = 500;
    std::vector<int> check_dims;
    check->add_option("--k", check_k, "difference degree k (operator order k+1)");
    check->add_option("--dmin", check_dmin, "smallest dimension");
    check->add_option("--dmax", check_dmax, "largest dimension");
    check->add_option("--step", check_step, "dimension stride");
    check->add_option("--d", check_dims, "explicit dimensions (overrides dmin/dmax/step)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fit->parsed()) {
            return cmd_fit(fit_input, fit_k, fit_bins, fit_tau, fit_tau_auto, fit_support, fit_seed,
                           fit_output, fit_curve);
        }
        if (eval->parsed()) return cmd_eval(eval_est, eval_points, eval_output);
        if (path->parsed()) {
            return cmd_path(path_input, path_k, path_bins, path_points, path_support, path_output);
        }
        if (bench->parsed()) return cmd_bench(bench_config, bench_outdir);
        if (check->parsed()) {
            return cmd_check(check_k, check_dmin, check_dmax, check_step, check_dims);
        }
    } catch (const htf::path_failure_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    } catch (const htf::unbounded_problem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const htf::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
