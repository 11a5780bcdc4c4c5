#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "htf/binning.hpp"
#include "htf/rng.hpp"

namespace htf {

// A synthetic density with matched sampler, truncated to a compact support
// (outside mass < 1e-6 before renormalization).
struct TrueDensity {
    std::string id;
    Interval support;
    std::function<double(double)> pdf;
    std::function<double(Rng&)> draw;
};

// 0.9 N(0,1) + 0.1 N(-2, 0.1^2) + 0.1 N(3, 0.5^2); the printed weights sum
// to 1.1 and are renormalized by that sum. Support [-5, 6].
TrueDensity density_f1();

// five translated exponentials with rate 2, weights (1,2,1,2,1)/7, shifts
// (-1,0,1,2,3). Support [-1, 13].
TrueDensity density_f2();

// beta mixture on [0,1]:
// (3/5) B(4,4) on [0,3/5] + (1/10) B(4000,4000) on [2/5,1]
// + (1/40) U[0,1] + (11/40) U[4/5,1].
TrueDensity density_f3();

TrueDensity density_by_id(const std::string& id);

// mean squared error of `est` against the true pdf over a uniform grid of
// grid_size points spanning the support
double mse(const std::function<double(double)>& est, const TrueDensity& truth, int grid_size = 1000);

struct BenchConfig {
    std::vector<std::string> densities;
    std::vector<long> sizes;
    int replicates = 25;
    std::vector<std::string> methods; // htf_k<k>[_path], kde_ref, kde_cv
    int grid_size = 1000;
    std::uint64_t seed = 0;
    int threads = 0; // 0 = library default
};

struct BenchCell {
    std::string density;
    long n = 0;
    std::string method;
    double mean_mse = 0.0;
    double scale = 1.0; // table convention: x100 for f1/f2, x10 for f3
    double scaled_mse = 0.0;
    double mean_seconds = 0.0;
    int replicates = 0; // completed
    int failures = 0;
};

struct BenchReport {
    BenchConfig config;
    std::vector<BenchCell> cells;
};

// One seeded sample per (density, n, replicate), shared by every method;
// replicates run in parallel and aggregate in a fixed order, so every field
// except the timings is bit-stable across runs.
BenchReport run_benchmark(const BenchConfig& cfg);

BenchConfig bench_config_from_json(const std::string& text);
std::string bench_config_to_json(const BenchConfig& cfg);
std::string report_to_json(const BenchReport& report);
std::string report_to_tsv(const BenchReport& report);

} // namespace htf
