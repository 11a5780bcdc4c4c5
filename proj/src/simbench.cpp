#include "htf/simbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <json.hpp>

#include "htf/errors.hpp"
#include "htf/estimator.hpp"
#include "htf/kde.hpp"
#include "htf/parallel.hpp"

namespace htf {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct NormalComp {
    double w, mu, sd;
};

} // namespace

TrueDensity density_f1() {
    // printed weights (0.9, 0.1, 0.1) renormalized by their sum
    static const std::vector<NormalComp> comps = {
        {0.9 / 1.1, 0.0, 1.0}, {0.1 / 1.1, -2.0, 0.1}, {0.1 / 1.1, 3.0, 0.5}};
    const Interval sup{-5.0, 6.0};
    double z = 0.0;
    for (const auto& c : comps) {
        z += c.w * (normal_cdf((sup.hi - c.mu) / c.sd) - normal_cdf((sup.lo - c.mu) / c.sd));
    }
    const double zinv = 1.0 / z;

    TrueDensity d;
    d.id = "f1";
    d.support = sup;
    d.pdf = [zinv, sup](double x) {
        if (!sup.contains(x)) return 0.0;
        double s = 0.0;
        for (const auto& c : comps) {
            const double u = (x - c.mu) / c.sd;
            s += c.w * 0.39894228040143267794 * std::exp(-0.5 * u * u) / c.sd;
        }
        return s * zinv;
    };
    d.draw = [sup](Rng& rng) {
        for (;;) {
            const double u = rng.uniform();
            double acc = 0.0;
            for (const auto& c : comps) {
                acc += c.w;
                if (u <= acc || &c == &comps.back()) {
                    const double x = rng.normal(c.mu, c.sd);
                    if (sup.contains(x)) return x;
                    break;
                }
            }
        }
    };
    return d;
}

TrueDensity density_f2() {
    static const std::vector<double> w = {1.0 / 7, 2.0 / 7, 1.0 / 7, 2.0 / 7, 1.0 / 7};
    static const std::vector<double> m = {-1.0, 0.0, 1.0, 2.0, 3.0};
    constexpr double rate = 2.0;
    const Interval sup{-1.0, 13.0};
    double z = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
        z += w[c] * (1.0 - std::exp(-rate * (sup.hi - m[c])));
    }
    const double zinv = 1.0 / z;

    TrueDensity d;
    d.id = "f2";
    d.support = sup;
    d.pdf = [zinv, sup](double x) {
        if (!sup.contains(x)) return 0.0;
        double s = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) {
            if (x >= m[c]) s += w[c] * rate * std::exp(-rate * (x - m[c]));
        }
        return s * zinv;
    };
    d.draw = [sup](Rng& rng) {
        for (;;) {
            const double u = rng.uniform();
            double acc = 0.0;
            for (std::size_t c = 0; c < w.size(); ++c) {
                acc += w[c];
                if (u <= acc || c + 1 == w.size()) {
                    const double x = m[c] + rng.exponential(rate);
                    if (x <= sup.hi) return x;
                    break;
                }
            }
        }
    };
    return d;
}

namespace {

// density of Beta(a, b) affinely mapped onto [lo, hi], in log space for the
// very large shape parameters
double scaled_beta_pdf(double x, double a, double b, double lo, double hi) {
    if (x <= lo || x >= hi) return 0.0;
    const double width = hi - lo;
    const double u = (x - lo) / width;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp((a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) - lbeta) / width;
}

} // namespace

TrueDensity density_f3() {
    TrueDensity d;
    d.id = "f3";
    d.support = {0.0, 1.0};
    d.pdf = [](double x) {
        if (x < 0.0 || x > 1.0) return 0.0;
        double s = 0.6 * scaled_beta_pdf(x, 4.0, 4.0, 0.0, 0.6);
        s += 0.1 * scaled_beta_pdf(x, 4000.0, 4000.0, 0.4, 1.0);
        s += 1.0 / 40.0;
        if (x >= 0.8) s += (11.0 / 40.0) * 5.0;
        return s;
    };
    d.draw = [](Rng& rng) {
        const double u = rng.uniform();
        if (u < 0.6) return 0.6 * rng.beta(4.0, 4.0);
        if (u < 0.7) return 0.4 + 0.6 * rng.beta(4000.0, 4000.0);
        if (u < 0.725) return rng.uniform();
        return 0.8 + 0.2 * rng.uniform();
    };
    return d;
}

TrueDensity density_by_id(const std::string& id) {
    if (id == "f1") return density_f1();
    if (id == "f2") return density_f2();
    if (id == "f3") return density_f3();
    throw std::invalid_argument("unknown density id: " + id);
}

double mse(const std::function<double(double)>& est, const TrueDensity& truth, int grid_size) {
    if (grid_size < 2) throw std::invalid_argument("mse: grid_size must be >= 2");
    std::vector<double> errs(grid_size);
    const double lo = truth.support.lo;
    const double step = truth.support.width() / (grid_size - 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < grid_size; ++i) {
        const double x = lo + i * step;
        const double e = est(x) - truth.pdf(x);
        errs[i] = e * e;
    }
    double s = 0.0;
    for (double e : errs) s += e;
    return s / grid_size;
}

namespace {

struct MethodSpec {
    std::string name;
    bool is_htf = false;
    int k = 1;
    bool full_path = false;
    bool is_kde_cv = false;
};

MethodSpec parse_method(const std::string& name) {
    MethodSpec ms;
    ms.name = name;
    if (name == "kde_ref") return ms;
    if (name == "kde_cv") {
        ms.is_kde_cv = true;
        return ms;
    }
    if (name.rfind("htf_k", 0) == 0) {
        std::string rest = name.substr(5);
        ms.full_path = rest.size() > 5 && rest.substr(rest.size() - 5) == "_path";
        if (ms.full_path) rest = rest.substr(0, rest.size() - 5);
        try {
            std::size_t pos = 0;
            ms.k = std::stoi(rest, &pos);
            if (pos == rest.size() && ms.k >= 0) {
                ms.is_htf = true;
                return ms;
            }
        } catch (const std::exception&) {
        }
    }
    throw std::invalid_argument("unknown benchmark method: " + name);
}

struct RepOutcome {
    double mse = 0.0;
    double seconds = 0.0;
    bool ok = false;
};

RepOutcome run_one(const TrueDensity& truth, const Sample& sample, const MethodSpec& ms,
                   std::uint64_t rep_seed, int grid_size) {
    RepOutcome out;
    try {
        std::function<double(double)> eval;
        const auto t0 = std::chrono::steady_clock::now();
        if (ms.is_htf) {
            HtfConfig cfg;
            cfg.k = ms.k;
            cfg.tau_rule = ms.full_path ? TauRule::AutoPath : TauRule::AutoGrid;
            auto est = std::make_shared<DensityEstimate>(fit_density(sample, cfg));
            eval = [est](double x) { return evaluate(*est, x); };
        } else {
            const double h = ms.is_kde_cv
                                 ? cv_bandwidth(sample, 5, {}, seed_mix(rep_seed, 0xC5ULL))
                                 : reference_bandwidth(sample);
            auto est = std::make_shared<KdeEstimate>(make_kde(sample, h));
            eval = [est](double x) { return kde_evaluate(*est, x); };
        }
        const auto t1 = std::chrono::steady_clock::now();
        out.seconds = std::chrono::duration<double>(t1 - t0).count();
        out.mse = mse(eval, truth, grid_size);
        out.ok = true;
    } catch (const std::exception&) {
        out.ok = false;
    }
    return out;
}

} // namespace

BenchReport run_benchmark(const BenchConfig& cfg) {
    if (cfg.replicates < 1) throw std::invalid_argument("bench: replicates must be >= 1");
    if (cfg.densities.empty() || cfg.sizes.empty() || cfg.methods.empty())
        throw std::invalid_argument("bench: densities, sizes and methods must be non-empty");
    std::vector<MethodSpec> methods;
    for (const auto& m : cfg.methods) methods.push_back(parse_method(m));
    std::vector<TrueDensity> densities;
    for (const auto& d : cfg.densities) densities.push_back(density_by_id(d));
    if (cfg.threads > 0) set_threads(cfg.threads);

    const int nd = static_cast<int>(densities.size());
    const int ns = static_cast<int>(cfg.sizes.size());
    const int nm = static_cast<int>(methods.size());
    const int nr = cfg.replicates;

    // one slot per (density, size, replicate, method)
    std::vector<RepOutcome> slots(static_cast<std::size_t>(nd) * ns * nr * nm);
    const long triples = static_cast<long>(nd) * ns * nr;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long t = 0; t < triples; ++t) {
        const int di = static_cast<int>(t / (static_cast<long>(ns) * nr));
        const int si = static_cast<int>((t / nr) % ns);
        const int r = static_cast<int>(t % nr);
        const TrueDensity& truth = densities[di];
        const long n = cfg.sizes[si];

        std::uint64_t s = seed_mix(cfg.seed, hash_string(truth.id));
        s = seed_mix(s, static_cast<std::uint64_t>(n));
        s = seed_mix(s, static_cast<std::uint64_t>(r));
        Rng rng(s);
        std::vector<double> values(n);
        for (long i = 0; i < n; ++i) values[i] = truth.draw(rng);
        Sample sample{std::move(values), truth.support};

        for (int mi = 0; mi < nm; ++mi) {
            const std::size_t slot =
                ((static_cast<std::size_t>(di) * ns + si) * static_cast<std::size_t>(nr) + r) * nm +
                mi;
            slots[slot] = run_one(truth, sample, methods[mi], seed_mix(s, 1000 + mi), cfg.grid_size);
        }
    }

    BenchReport report;
    report.config = cfg;
    for (int di = 0; di < nd; ++di) {
        for (int si = 0; si < ns; ++si) {
            for (int mi = 0; mi < nm; ++mi) {
                BenchCell cell;
                cell.density = cfg.densities[di];
                cell.n = cfg.sizes[si];
                cell.method = cfg.methods[mi];
                cell.scale = (cell.density == "f3") ? 10.0 : 100.0;
                double sum_mse = 0.0, sum_sec = 0.0;
                int done = 0, fail = 0;
                for (int r = 0; r < nr; ++r) {
                    const std::size_t slot =
                        ((static_cast<std::size_t>(di) * ns + si) * static_cast<std::size_t>(nr) +
                         r) *
                            nm +
                        mi;
                    const RepOutcome& o = slots[slot];
                    if (o.ok) {
                        sum_mse += o.mse;
                        sum_sec += o.seconds;
                        ++done;
                    } else {
                        ++fail;
                    }
                }
                cell.replicates = done;
                cell.failures = fail;
                if (done > 0) {
                    cell.mean_mse = sum_mse / done;
                    cell.scaled_mse = cell.mean_mse * cell.scale;
                    cell.mean_seconds = sum_sec / done;
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

BenchConfig bench_config_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw schema_error(std::string("bench config is not valid JSON: ") + e.what());
    }
    BenchConfig cfg;
    try {
        cfg.densities = doc.at("densities").get<std::vector<std::string>>();
        cfg.sizes = doc.at("sizes").get<std::vector<long>>();
        cfg.methods = doc.at("methods").get<std::vector<std::string>>();
        cfg.replicates = doc.value("replicates", 25);
        cfg.grid_size = doc.value("grid_size", 1000);
        cfg.seed = doc.value("seed", 0ULL);
        cfg.threads = doc.value("threads", 0);
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("bench config has malformed fields: ") + e.what());
    }
    for (const auto& d : cfg.densities) density_by_id(d);
    for (const auto& m : cfg.methods) parse_method(m);
    return cfg;
}

std::string bench_config_to_json(const BenchConfig& cfg) {
    nlohmann::json doc;
    doc["densities"] = cfg.densities;
    doc["sizes"] = cfg.sizes;
    doc["replicates"] = cfg.replicates;
    doc["methods"] = cfg.methods;
    doc["grid_size"] = cfg.grid_size;
    doc["seed"] = cfg.seed;
    doc["threads"] = cfg.threads;
    return doc.dump(2);
}

std::string report_to_json(const BenchReport& report) {
    nlohmann::json doc;
    doc["config"] = nlohmann::json::parse(bench_config_to_json(report.config));
    doc["cells"] = nlohmann::json::array();
    for (const auto& c : report.cells) {
        doc["cells"].push_back({{"density", c.density},
                                {"n", c.n},
                                {"method", c.method},
                                {"mean_mse", c.mean_mse},
                                {"scale", c.scale},
                                {"scaled_mse", c.scaled_mse},
                                {"mean_seconds", c.mean_seconds},
                                {"replicates", c.replicates},
                                {"failures", c.failures}});
    }
    return doc.dump(2);
}

std::string report_to_tsv(const BenchReport& report) {
    std::string out = "density\tn\tmethod\tmean_mse\tscaled_mse\tmean_seconds\treplicates\n";
    char line[256];
    for (const auto& c : report.cells) {
        std::snprintf(line, sizeof(line), "%s\t%ld\t%s\t%.17g\t%.17g\t%.4f\t%d\n",
                      c.density.c_str(), c.n, c.method.c_str(), c.mean_mse, c.scaled_mse,
                      c.mean_seconds, c.replicates);
        out += line;
    }
    return out;
}

} // namespace htf
