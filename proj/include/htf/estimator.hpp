#pragma once

#include <optional>
#include <string>
#include <vector>

#include "htf/binning.hpp"
#include "htf/model_select.hpp"
#include "htf/solver.hpp"

namespace htf {

enum class TauRule { AutoGrid, AutoPath, Explicit };

struct HtfConfig {
    int k = 1;
    std::optional<int> bins;          // empty = default_num_bins(n)
    TauRule tau_rule = TauRule::AutoGrid;
    double tau = 0.0;                 // used when tau_rule == Explicit
    int path_points = 41;             // grid size for AutoPath
    // scale anchor for the automatic tau grid; the entrywise pseudo-inverse
    // norm keeps the anchor at 0.148 n for k = 1, which brackets the AIC
    // optimum (the induced norms land the whole grid far above it)
    OperatorNorm lambda_norm = OperatorNorm::MaxAbs;
    BoxSpec box{true, 0.25, std::nullopt};
    SolverOptions solver;
};

struct EstimateDiagnostics {
    double tau = 0.0;
    int bins = 0;
    double aic = 0.0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    long n = 0;
};

// Normalized, evaluable density: bin-center values exp(theta)/(n delta)
// renormalized so the bin-mass Riemann sum is exactly one.
struct DensityEstimate {
    Interval support;
    double delta = 0.0;
    int k = 0; // interpolation order tag
    std::vector<double> centers;
    std::vector<double> values;
    EstimateDiagnostics diagnostics;
};

DensityEstimate fit_density(const Sample& sample, const HtfConfig& cfg = HtfConfig{});

// Zero outside the support. Inside: k = 0 reads the containing bin; k >= 1
// interpolates log-linearly between the two nearest centers, clamping to the
// end value beyond the first/last center.
double evaluate(const DensityEstimate& est, double x);

// Versioned JSON document; round-trips exactly.
std::string serialize(const DensityEstimate& est);
DensityEstimate deserialize(const std::string& document);

} // namespace htf
