#include "htf/model_select.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "htf/errors.hpp"

namespace htf {

double aic(const FitResult& fit, int k, bool doubled) {
    if (!fit.converged) throw std::invalid_argument("aic: fit did not converge");
    const double ll = doubled ? 2.0 * fit.nll : fit.nll;
    return ll + (k + 1) + fit.active_diffs;
}

double lambda_star(long n, int num_bins, int k, OperatorNorm norm) {
    if (n < 1) throw std::invalid_argument("lambda_star: n must be positive");
    const DiffOperator op(k + 1, num_bins); // throws the dimension error for D <= k+1
    return static_cast<double>(n) * pinv_norm(op, norm) / num_bins;
}

std::vector<double> default_grid(double lstar) {
    if (!(lstar > 0.0)) throw std::invalid_argument("default_grid: lambda* must be positive");
    return {lstar / 100.0, lstar / 10.0, lstar, lstar * 10.0, lstar * 100.0};
}

std::vector<double> dense_path_grid(double lstar, int count) {
    if (!(lstar > 0.0)) throw std::invalid_argument("dense_path_grid: lambda* must be positive");
    if (count < 2) throw std::invalid_argument("dense_path_grid: count must be >= 2");
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) {
        const double e = 2.0 - 4.0 * i / (count - 1);
        out[i] = lstar * std::pow(10.0, e);
    }
    return out;
}

PathResult fit_path(const Histogram& hist, int k, const std::vector<double>& taus,
                    const BoxSpec& box, const SolverOptions& opts) {
    if (taus.empty()) throw std::invalid_argument("fit_path: tau grid is empty");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0)) throw std::invalid_argument("fit_path: taus must be positive");
        if (i > 0 && taus[i] > taus[i - 1])
            throw std::invalid_argument("fit_path: taus must be sorted descending");
    }

    PathResult path;
    path.entries.reserve(taus.size());
    SolverOptions o = opts;
    for (double tau : taus) {
        FitResult fr = fit(hist, PenaltySpec{k, tau, PenaltyNorm::L1}, box, o);
        if (fr.converged) o.theta_init = fr.theta;
        PathEntry e;
        e.tau = tau;
        e.aic = fr.converged ? aic(fr, k) : std::numeric_limits<double>::quiet_NaN();
        e.fit = std::move(fr);
        path.entries.push_back(std::move(e));
    }

    for (std::size_t i = 0; i < path.entries.size(); ++i) {
        const PathEntry& e = path.entries[i];
        if (!e.fit.converged) continue;
        if (path.selected < 0 || e.aic < path.entries[path.selected].aic) {
            path.selected = static_cast<int>(i);
        }
    }
    if (path.selected < 0) {
        throw path_failure_error("fit_path: no tau in the grid produced a converged fit");
    }
    return path;
}

} // namespace htf
