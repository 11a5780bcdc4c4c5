#include "htf/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace htf::ref {

std::vector<long> bin_counts(const std::vector<double>& values, const std::vector<double>& edges,
                             double lo, double delta, int num_bins) {
    std::vector<long> counts(num_bins, 0);
    for (double v : values) {
        int j = static_cast<int>(std::floor((v - lo) / delta));
        j = std::clamp(j, 0, num_bins - 1);
        if (j + 1 < num_bins && v >= edges[j + 1]) ++j;
        if (j > 0 && v < edges[j]) --j;
        ++counts[j];
    }
    return counts;
}

std::vector<double> kde_evaluate_grid(const KdeEstimate& est, std::span<const double> xs) {
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    std::vector<double> out(xs.size());
    const double h = est.bandwidth;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double s = 0.0;
        for (double y : est.points) {
            const double z = (xs[i] - y) / h;
            s += inv_sqrt_2pi * std::exp(-0.5 * z * z);
        }
        out[i] = s / (static_cast<double>(est.points.size()) * h);
    }
    return out;
}

PinvNorms pinv_norms(const DiffOperator& op) {
    const int r = op.rows();
    const int d = op.dim();
    const int m = op.order();
    const auto& coeff = op.coefficients();

    BandedMat<long double> gram(r, std::min(m, r - 1));
    for (int dd = 0; dd <= std::min(m, r - 1); ++dd) {
        long double s = 0.0L;
        for (int j = 0; j + dd <= m; ++j)
            s += static_cast<long double>(coeff[j]) * coeff[j + dd];
        for (int i = 0; i + dd < r; ++i) gram.add(i + dd, i, s);
    }
    if (!gram.cholesky()) throw std::runtime_error("ref::pinv_norms: row Gram numerically singular");

    PinvNorms norms;
    std::vector<double> row_sums(d, 0.0);
    std::vector<long double> w(r), col(d);
    for (int j = 0; j < r; ++j) {
        std::fill(w.begin(), w.end(), 0.0L);
        w[j] = 1.0L;
        gram.solve(w);
        std::fill(col.begin(), col.end(), 0.0L);
        for (int i = 0; i < r; ++i) {
            for (int t = 0; t <= m; ++t) col[i + t] += static_cast<long double>(coeff[t]) * w[i];
        }
        double csum = 0.0;
        for (int i = 0; i < d; ++i) {
            const double a = static_cast<double>(std::fabs(col[i]));
            csum += a;
            row_sums[i] += a;
            norms.max_abs = std::max(norms.max_abs, a);
        }
        norms.one = std::max(norms.one, csum);
    }
    norms.inf = *std::max_element(row_sums.begin(), row_sums.end());
    return norms;
}

double mse_grid(const std::function<double(double)>& est, const std::function<double(double)>& pdf,
                double lo, double hi, int grid_size) {
    const double step = (hi - lo) / (grid_size - 1);
    double s = 0.0;
    for (int i = 0; i < grid_size; ++i) {
        const double x = lo + i * step;
        const double e = est(x) - pdf(x);
        s += e * e;
    }
    return s / grid_size;
}

} // namespace htf::ref
