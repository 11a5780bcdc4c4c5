#include "htf/binning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "htf/errors.hpp"

namespace htf {

Sample make_sample(std::vector<double> values, std::optional<Interval> support) {
    if (values.size() < 2) throw std::invalid_argument("sample needs at least 2 observations");
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("sample contains a non-finite value");
    }
    Interval s;
    if (support) {
        s = *support;
        if (!(s.lo <= s.hi)) throw std::invalid_argument("support interval is reversed");
        for (double v : values) {
            if (!s.contains(v))
                throw std::invalid_argument("observation " + std::to_string(v) +
                                            " lies outside the declared support");
        }
    } else {
        auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        s = Interval{*mn, *mx};
    }
    return Sample{std::move(values), s};
}

namespace detail {

// Index by division, then correct against the stored edges so that values
// exactly on an interior edge always land in the right bin.
int bin_index(double v, const std::vector<double>& edges, double lo, double delta, int num_bins) {
    int j = static_cast<int>(std::floor((v - lo) / delta));
    j = std::clamp(j, 0, num_bins - 1);
    if (j + 1 < num_bins && v >= edges[j + 1]) ++j;
    if (j > 0 && v < edges[j]) --j;
    return j;
}

std::vector<long> bin_counts(const std::vector<double>& values, const std::vector<double>& edges,
                             double lo, double delta, int num_bins) {
    std::vector<long> counts(num_bins, 0);
    const long n = static_cast<long>(values.size());
#ifdef _OPENMP
#pragma omp parallel
    {
        std::vector<long> local(num_bins, 0);
#pragma omp for nowait
        for (long i = 0; i < n; ++i) {
            ++local[bin_index(values[i], edges, lo, delta, num_bins)];
        }
#pragma omp critical
        for (int j = 0; j < num_bins; ++j) counts[j] += local[j];
    }
#else
    for (long i = 0; i < n; ++i) {
        ++counts[bin_index(values[i], edges, lo, delta, num_bins)];
    }
#endif
    return counts;
}

} // namespace detail

Histogram make_histogram(const Sample& sample, int num_bins) {
    if (num_bins < 2) throw std::invalid_argument("bins must be >= 2");
    if (sample.values.size() < 2) throw std::invalid_argument("sample needs at least 2 observations");
    const Interval s = sample.support;
    if (!(s.width() > 0.0)) throw degenerate_support_error("support has zero width");

    Histogram h;
    h.support = s;
    h.n = static_cast<long>(sample.values.size());
    h.delta = s.width() / num_bins;
    h.edges.resize(num_bins + 1);
    for (int j = 0; j <= num_bins; ++j) {
        h.edges[j] = s.lo + j * h.delta;
    }
    h.edges[num_bins] = s.hi;
    h.centers.resize(num_bins);
    for (int j = 0; j < num_bins; ++j) h.centers[j] = 0.5 * (h.edges[j] + h.edges[j + 1]);
    h.counts = detail::bin_counts(sample.values, h.edges, s.lo, h.delta, num_bins);
    return h;
}

int default_num_bins(long n) {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    const double d = std::ceil(10.0 * std::pow(static_cast<double>(n), 0.4));
    return static_cast<int>(std::min<double>(d, static_cast<double>(n)));
}

} // namespace htf
