#pragma once

#include <optional>
#include <span>
#include <vector>

#include "htf/binning.hpp"
#include "htf/diff_operator.hpp"

namespace htf {

enum class PenaltyNorm { L1, L2Squared };

// Penalty tau * |Delta^(k+1) theta|_1 or tau * |Delta^(k+1) theta|_2^2.
struct PenaltySpec {
    int k = 1;
    double tau = 0.0;
    PenaltyNorm norm = PenaltyNorm::L1;

    int order() const { return k + 1; }
};

// Optional box constraint |theta_j - center| <= n^b. When no center is given
// it defaults to log(n * delta) of the histogram being fit.
struct BoxSpec {
    bool enabled = false;
    double b = 0.25;
    std::optional<double> center;

    static BoxSpec disabled() { return BoxSpec{}; }
};

struct SolverOptions {
    double tol = 1e-6;          // KKT tolerance, scaled by the mean bin count
    int max_iters = 5000;       // outer (ADMM) iteration cap
    double admm_rho = 0.0;      // augmented-Lagrangian weight; 0 = max(tau, 1)
    double newton_inner_tol = 0.0; // inner Newton gradient tolerance; 0 = auto
    std::vector<double> theta_init; // warm start; empty = log(counts + 0.5)
};

struct FitResult {
    std::vector<double> theta;
    double objective = 0.0;    // loss + penalty at theta
    double nll = 0.0;          // Poisson loss alone
    double kkt_residual = 0.0; // stationarity certificate, inf-norm
    int active_diffs = 0;      // penalized differences above tolerance
    int iterations = 0;
    bool converged = false;
    double tau = 0.0;
};

// sum_j { exp(theta_j) - x_j * theta_j }
double poisson_nll(std::span<const double> theta, std::span<const long> counts);

double penalty_value(const PenaltySpec& pen, const DiffOperator& op, std::span<const double> theta);

double objective(const Histogram& hist, const PenaltySpec& pen, std::span<const double> theta);

// count of |(Delta theta)_i| > 1e-6 * max(1, |Delta theta|_inf)
int count_active_diffs(const DiffOperator& op, std::span<const double> theta);

// Solves min_theta poisson_nll + penalty, optionally over the box. L1 runs
// ADMM on the split z = Delta theta with a banded-Newton theta step; L2
// squared (and tau = 0) run damped Newton directly. Never returns a silently
// wrong answer: converged=false flags a fit that exhausted max_iters.
FitResult fit(const Histogram& hist, const PenaltySpec& pen, const BoxSpec& box = BoxSpec::disabled(),
              const SolverOptions& opts = SolverOptions{});

} // namespace htf
