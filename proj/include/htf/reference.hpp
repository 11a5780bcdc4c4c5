#pragma once

#include <functional>
#include <span>
#include <vector>

#include "htf/binning.hpp"
#include "htf/diff_operator.hpp"
#include "htf/kde.hpp"

namespace htf::ref {

// Plain serial implementations of the parallel kernels, kept for testing and
// for the kernel benchmark. Same contracts as the library entry points.

std::vector<long> bin_counts(const std::vector<double>& values, const std::vector<double>& edges,
                             double lo, double delta, int num_bins);

std::vector<double> kde_evaluate_grid(const KdeEstimate& est, std::span<const double> xs);

PinvNorms pinv_norms(const DiffOperator& op);

double mse_grid(const std::function<double(double)>& est, const std::function<double(double)>& pdf,
                double lo, double hi, int grid_size);

} // namespace htf::ref
