#include "htf/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "htf/errors.hpp"
#include "htf/rng.hpp"

namespace htf {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gauss(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double quantile_type7(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    const double h = (n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - lo;
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double kde_point(const std::vector<double>& pts, double h, double x) {
    double s = 0.0;
    for (double y : pts) s += gauss((x - y) / h);
    return s / (static_cast<double>(pts.size()) * h);
}

} // namespace

KdeEstimate make_kde(const Sample& sample, double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde bandwidth must be positive");
    return KdeEstimate{sample.values, bandwidth};
}

double reference_bandwidth(const Sample& sample) {
    const std::size_t n = sample.values.size();
    if (n < 2) throw std::invalid_argument("reference_bandwidth: n must be >= 2");
    double mean = 0.0;
    for (double v : sample.values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : sample.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    std::vector<double> sorted = sample.values;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);

    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) {
        throw degenerate_sample_error("reference_bandwidth: sample has no spread");
    }
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double kde_evaluate(const KdeEstimate& est, double x) {
    return kde_point(est.points, est.bandwidth, x);
}

std::vector<double> kde_evaluate_grid(const KdeEstimate& est, std::span<const double> xs) {
    std::vector<double> out(xs.size());
    const long m = static_cast<long>(xs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < m; ++i) {
        out[i] = kde_point(est.points, est.bandwidth, xs[i]);
    }
    return out;
}

double cv_bandwidth(const Sample& sample, int folds, std::vector<double> grid, std::uint64_t seed) {
    const long n = static_cast<long>(sample.values.size());
    if (folds < 2) throw std::invalid_argument("cv_bandwidth: folds must be >= 2");
    if (n < folds) throw std::invalid_argument("cv_bandwidth: need at least one point per fold");

    if (grid.empty()) {
        const double href = reference_bandwidth(sample);
        grid.resize(30);
        for (int i = 0; i < 30; ++i) {
            grid[i] = href * std::pow(10.0, -1.0 + 2.0 * i / 29.0);
        }
    }
    for (double h : grid) {
        if (!(h > 0.0)) throw std::invalid_argument("cv_bandwidth: grid bandwidths must be > 0");
    }

    // canonical sort, then a seeded shuffle striped into folds: permuting the
    // input leaves the assignment unchanged
    std::vector<double> sorted = sample.values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0L);
    Rng rng(seed_mix(seed, 0x6b64652d6376ULL));
    for (long i = n - 1; i > 0; --i) {
        const long j = static_cast<long>(rng.bits() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<int> fold_of(n);
    for (long i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % folds);

    std::vector<std::vector<double>> train(folds), held(folds);
    for (long i = 0; i < n; ++i) {
        for (int f = 0; f < folds; ++f) {
            (f == fold_of[i] ? held[f] : train[f]).push_back(sorted[i]);
        }
    }
    for (int f = 0; f < folds; ++f) {
        if (train[f].empty() || held[f].empty())
            throw degenerate_sample_error("cv_bandwidth: degenerate fold split");
    }

    const int g = static_cast<int>(grid.size());
    std::vector<double> score(g);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int gi = 0; gi < g; ++gi) {
        const double h = grid[gi];
        double ll = 0.0;
        long cnt = 0;
        for (int f = 0; f < folds; ++f) {
            for (double x : held[f]) {
                const double dens = kde_point(train[f], h, x);
                ll += std::log(std::max(dens, 1e-300));
                ++cnt;
            }
        }
        score[gi] = ll / static_cast<double>(cnt);
    }

    int best = 0;
    for (int gi = 1; gi < g; ++gi) {
        if (score[gi] > score[best]) best = gi;
    }
    return grid[best];
}

} // namespace htf
