#include "htf/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "htf/errors.hpp"

namespace htf {

DensityEstimate fit_density(const Sample& sample, const HtfConfig& cfg) {
    const long n = static_cast<long>(sample.values.size());
    const int bins = cfg.bins ? *cfg.bins : default_num_bins(n);
    const Histogram hist = make_histogram(sample, bins);

    FitResult fr;
    double chosen_aic = std::numeric_limits<double>::quiet_NaN();
    if (cfg.tau_rule == TauRule::Explicit) {
        fr = fit(hist, PenaltySpec{cfg.k, cfg.tau, PenaltyNorm::L1}, cfg.box, cfg.solver);
        if (fr.converged) chosen_aic = aic(fr, cfg.k);
    } else {
        const double lstar = lambda_star(n, bins, cfg.k, cfg.lambda_norm);
        std::vector<double> taus;
        if (cfg.tau_rule == TauRule::AutoGrid) {
            taus = default_grid(lstar);
            std::reverse(taus.begin(), taus.end());
        } else {
            taus = dense_path_grid(lstar, cfg.path_points);
        }
        PathResult path = fit_path(hist, cfg.k, taus, cfg.box, cfg.solver);
        chosen_aic = path.best().aic;
        fr = path.best().fit;
    }

    DensityEstimate est;
    est.support = hist.support;
    est.delta = hist.delta;
    est.k = cfg.k;
    est.centers = hist.centers;
    est.values.resize(hist.bins());
    const double scale = static_cast<double>(n) * hist.delta;
    for (int j = 0; j < hist.bins(); ++j) est.values[j] = std::exp(fr.theta[j]) / scale;
    // explicit renormalization: a no-op up to tolerance when the box is
    // inactive, a guard when it binds or the fit stopped early
    double mass = 0.0;
    for (double v : est.values) mass += hist.delta * v;
    for (double& v : est.values) v /= mass;

    est.diagnostics.tau = fr.tau;
    est.diagnostics.bins = bins;
    est.diagnostics.aic = chosen_aic;
    est.diagnostics.kkt_residual = fr.kkt_residual;
    est.diagnostics.objective = fr.objective;
    est.diagnostics.iterations = fr.iterations;
    est.diagnostics.converged = fr.converged;
    est.diagnostics.n = n;
    return est;
}

double evaluate(const DensityEstimate& est, double x) {
    if (!est.support.contains(x)) return 0.0;
    const int d = static_cast<int>(est.values.size());
    if (est.k == 0) {
        int j = static_cast<int>(std::floor((x - est.support.lo) / est.delta));
        j = std::clamp(j, 0, d - 1);
        return est.values[j];
    }
    if (x <= est.centers.front()) return est.values.front();
    if (x >= est.centers.back()) return est.values.back();
    int j = static_cast<int>(std::floor((x - est.centers.front()) / est.delta));
    j = std::clamp(j, 0, d - 2);
    if (x < est.centers[j]) --j;
    if (x > est.centers[j + 1]) ++j;
    const double t = (x - est.centers[j]) / (est.centers[j + 1] - est.centers[j]);
    if (t <= 0.0) return est.values[j];
    if (t >= 1.0) return est.values[j + 1];
    return std::exp((1.0 - t) * std::log(est.values[j]) + t * std::log(est.values[j + 1]));
}

namespace {
constexpr int kSchemaVersion = 1;
}

std::string serialize(const DensityEstimate& est) {
    nlohmann::json doc;
    doc["version"] = kSchemaVersion;
    doc["support"] = {est.support.lo, est.support.hi};
    doc["delta"] = est.delta;
    doc["k"] = est.k;
    doc["centers"] = est.centers;
    doc["values"] = est.values;
    nlohmann::json aic_field;
    if (std::isfinite(est.diagnostics.aic)) aic_field = est.diagnostics.aic;
    doc["diagnostics"] = {
        {"tau", est.diagnostics.tau},
        {"bins", est.diagnostics.bins},
        {"aic", aic_field},
        {"kkt_residual", est.diagnostics.kkt_residual},
        {"objective", est.diagnostics.objective},
        {"iterations", est.diagnostics.iterations},
        {"converged", est.diagnostics.converged},
        {"n", est.diagnostics.n},
    };
    return doc.dump(2);
}

DensityEstimate deserialize(const std::string& document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw schema_error(std::string("estimate document is not valid JSON: ") + e.what());
    }
    if (!doc.contains("version")) throw schema_error("estimate document lacks a version field");
    if (doc["version"] != kSchemaVersion) {
        throw schema_error("unsupported estimate schema version");
    }
    for (const char* field : {"support", "delta", "k", "centers", "values"}) {
        if (!doc.contains(field))
            throw schema_error(std::string("estimate document lacks field: ") + field);
    }

    DensityEstimate est;
    try {
        est.support.lo = doc["support"].at(0).get<double>();
        est.support.hi = doc["support"].at(1).get<double>();
        est.delta = doc["delta"].get<double>();
        est.k = doc["k"].get<int>();
        est.centers = doc["centers"].get<std::vector<double>>();
        est.values = doc["values"].get<std::vector<double>>();
        if (doc.contains("diagnostics")) {
            const auto& dg = doc["diagnostics"];
            est.diagnostics.tau = dg.value("tau", 0.0);
            est.diagnostics.bins = dg.value("bins", 0);
            est.diagnostics.aic = (dg.contains("aic") && dg["aic"].is_number())
                                      ? dg["aic"].get<double>()
                                      : std::numeric_limits<double>::quiet_NaN();
            est.diagnostics.kkt_residual = dg.value("kkt_residual", 0.0);
            est.diagnostics.objective = dg.value("objective", 0.0);
            est.diagnostics.iterations = dg.value("iterations", 0);
            est.diagnostics.converged = dg.value("converged", false);
            est.diagnostics.n = dg.value("n", 0L);
        }
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("estimate document has malformed fields: ") + e.what());
    }

    if (est.centers.size() != est.values.size() || est.centers.size() < 2) {
        throw validation_error("centers and values must have equal length >= 2");
    }
    if (!(est.support.lo < est.support.hi)) throw validation_error("support interval is empty");
    if (!(est.delta > 0.0)) throw validation_error("delta must be positive");
    for (double v : est.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw validation_error("density values must be >= 0");
    }
    return est;
}

} // namespace htf
