#pragma once

#include <optional>
#include <vector>

namespace htf {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// Ordered 1-D observations with a declared support. When no support is given
// it defaults to [min, max] of the values so every observation lands in a bin.
struct Sample {
    std::vector<double> values;
    Interval support;
};

Sample make_sample(std::vector<double> values, std::optional<Interval> support = std::nullopt);

// Equal-width histogram over the sample support. Bins are half-open
// [e_j, e_{j+1}) with the last bin closed, so interior-edge ties go right and
// the support maximum stays in the last bin.
struct Histogram {
    std::vector<double> edges;   // D + 1 increasing reals
    std::vector<double> centers; // bin midpoints
    std::vector<long> counts;    // per-bin observation counts
    double delta = 0.0;          // common bin width
    long n = 0;                  // total count
    Interval support;

    int bins() const { return static_cast<int>(counts.size()); }
};

Histogram make_histogram(const Sample& sample, int num_bins);

// ceil(10 * n^0.4) clamped to n
int default_num_bins(long n);

namespace detail {
int bin_index(double v, const std::vector<double>& edges, double lo, double delta, int num_bins);
std::vector<long> bin_counts(const std::vector<double>& values, const std::vector<double>& edges,
                             double lo, double delta, int num_bins);
} // namespace detail

} // namespace htf
