#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "htf/binning.hpp"

namespace htf {

// Gaussian-kernel density estimate with a fixed bandwidth.
struct KdeEstimate {
    std::vector<double> points;
    double bandwidth = 0.0;
};

KdeEstimate make_kde(const Sample& sample, double bandwidth);

// 0.9 * min(sd, IQR/1.34) * n^(-1/5). IQR uses linear-interpolation
// (type-7) quantiles; a zero IQR falls back to the standard deviation.
double reference_bandwidth(const Sample& sample);

// Bandwidth maximizing the mean held-out log density over `grid`, with fold
// assignment drawn from `seed` after a canonical sort of the values. An empty
// grid defaults to 30 log-spaced points in [h_ref/10, 10 h_ref].
double cv_bandwidth(const Sample& sample, int folds = 5, std::vector<double> grid = {},
                    std::uint64_t seed = 0);

// (1/(n h)) sum phi((x - y_i)/h)
double kde_evaluate(const KdeEstimate& est, double x);

// evaluation over many points; parallel, one independent sum per point
std::vector<double> kde_evaluate_grid(const KdeEstimate& est, std::span<const double> xs);

} // namespace htf
