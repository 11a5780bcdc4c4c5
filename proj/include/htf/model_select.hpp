#pragma once

#include <vector>

#include "htf/solver.hpp"

namespace htf {

// l(theta) + k + 1 + #active differences; the raw likelihood enters without a
// factor 2. doubled=true adds the conventional factor on the likelihood term,
// available behind a flag but never the default.
double aic(const FitResult& fit, int k, bool doubled = false);

// n * |pinv(Delta^(k+1))| / D; the 1-norm is the default scale, the inf-norm
// backs the alternative theoretical reading.
double lambda_star(long n, int num_bins, int k, OperatorNorm norm = OperatorNorm::One);

// { l/100, l/10, l, 10 l, 100 l }, ascending
std::vector<double> default_grid(double lstar);

// `count` log-spaced values spanning [lstar/100, 100 lstar], descending
std::vector<double> dense_path_grid(double lstar, int count);

struct PathEntry {
    double tau = 0.0;
    FitResult fit;
    double aic = 0.0;
};

// Entries are in descending tau order (warm starts move smooth to rough).
// `selected` is the AIC minimizer among converged entries; ties break toward
// the larger tau.
struct PathResult {
    std::vector<PathEntry> entries;
    int selected = -1;

    const PathEntry& best() const { return entries.at(selected); }
};

PathResult fit_path(const Histogram& hist, int k, const std::vector<double>& taus,
                    const BoxSpec& box = BoxSpec::disabled(),
                    const SolverOptions& opts = SolverOptions{});

} // namespace htf
