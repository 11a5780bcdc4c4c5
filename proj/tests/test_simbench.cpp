#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "htf/errors.hpp"
#include "htf/simbench.hpp"
#include "support/test_support.hpp"

using namespace htf;

namespace {

double ks_against_pdf(const TrueDensity& d, long n, std::uint64_t seed, int cdf_cells) {
    const testsup::QuadCdf cdf(d.pdf, d.support.lo, d.support.hi, cdf_cells);
    Rng rng(seed);
    std::vector<double> sample(n);
    for (auto& x : sample) x = d.draw(rng);
    return testsup::ks_statistic(std::move(sample), [&](double x) { return cdf(x); });
}

} // namespace

TEST_CASE("normal mixture density") {
    const auto d = density_f1();
    CHECK(testsup::simpson(d.pdf, d.support.lo, d.support.hi, 100000) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.pdf(-2.0) > d.pdf(0.0)); // the narrow spike dominates the main mode
    CHECK(d.pdf(-5.5) == 0.0);
}

TEST_CASE("translated exponential mixture density") {
    const auto d = density_f2();
    CHECK(d.pdf(-1.0 - 1e-12) == 0.0);
    CHECK(d.pdf(-1.0) == doctest::Approx(2.0 / 7.0).epsilon(1e-3));
    // the pdf jumps at each shift, so integrate between the breakpoints
    double mass = 0.0;
    const double breaks[] = {-1.0, 0.0, 1.0, 2.0, 3.0, 13.0};
    for (int i = 0; i + 1 < 6; ++i) {
        // stop just short of the right break so its jump is not double-counted
        mass += testsup::simpson(d.pdf, breaks[i], breaks[i + 1] - 1e-10, 50000);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("beta mixture density") {
    CHECK(3.0 / 5.0 + 1.0 / 10.0 + 1.0 / 40.0 + 11.0 / 40.0 == 1.0);
    const auto d = density_f3();
    // at 0.2 only the wide beta and the uniform background contribute
    const double expected = 0.6 * std::exp(3.0 * std::log(0.2 / 0.6) +
                                           3.0 * std::log1p(-0.2 / 0.6) -
                                           (std::lgamma(4.0) * 2 - std::lgamma(8.0))) /
                                0.6 +
                            1.0 / 40.0;
    CHECK(d.pdf(0.2) == doctest::Approx(expected).epsilon(1e-12));
    // component boundaries kink or jump the pdf; integrate piecewise
    double mass = 0.0;
    const double breaks[] = {0.0, 0.4, 0.6, 0.8, 1.0};
    for (int i = 0; i + 1 < 5; ++i) {
        mass += testsup::simpson(d.pdf, breaks[i], breaks[i + 1] - 1e-10, 100000);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("samplers match their densities (KS at n = 1e5)") {
    const double crit = 1.949 / std::sqrt(1e5); // alpha = 0.001
    CHECK(ks_against_pdf(density_f1(), 100000, 1001, 200000) < crit);
    CHECK(ks_against_pdf(density_f2(), 100000, 1002, 200000) < crit);
    CHECK(ks_against_pdf(density_f3(), 100000, 1003, 400000) < crit);
}

TEST_CASE("mse closed cases") {
    TrueDensity flat;
    flat.id = "flat";
    flat.support = {0.0, 1.0};
    flat.pdf = [](double) { return 1.0; };
    CHECK(mse([](double) { return 0.0; }, flat) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mse([](double) { return 0.5; }, flat) == doctest::Approx(0.25).epsilon(1e-12));

    const auto f1 = density_f1();
    CHECK(mse(f1.pdf, f1) == 0.0);
}

TEST_CASE("mse is stable under grid refinement for smooth estimates") {
    const auto f1 = density_f1();
    const auto est = [&](double x) { return 0.9 * f1.pdf(x) + 0.01; };
    const double a = mse(est, f1, 1000);
    const double b = mse(est, f1, 4000);
    CHECK(std::fabs(a - b) <= 0.01 * std::max(a, b));
}

TEST_CASE("benchmark bookkeeping on a tiny config") {
    BenchConfig cfg;
    cfg.densities = {"f1"};
    cfg.sizes = {500};
    cfg.replicates = 2;
    cfg.methods = {"kde_ref"};
    cfg.seed = 42;
    const auto report = run_benchmark(cfg);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.cells[0].replicates == 2);
    CHECK(report.cells[0].failures == 0);
    CHECK(report.cells[0].scale == 100.0);
    CHECK(report.cells[0].scaled_mse ==
          doctest::Approx(100.0 * report.cells[0].mean_mse).epsilon(1e-15));
    CHECK(report.cells[0].mean_mse > 0.0);
}

TEST_CASE("benchmark is deterministic given the seed") {
    BenchConfig cfg;
    cfg.densities = {"f3"};
    cfg.sizes = {400};
    cfg.replicates = 3;
    cfg.methods = {"htf_k1", "kde_ref"};
    cfg.seed = 7;
    const auto a = run_benchmark(cfg);
    const auto b = run_benchmark(cfg);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].mean_mse == b.cells[i].mean_mse); // bitwise
        CHECK(a.cells[i].replicates == b.cells[i].replicates);
    }
}

TEST_CASE("failures mark the cell partial without aborting") {
    BenchConfig cfg;
    cfg.densities = {"f1"};
    cfg.sizes = {3}; // below the fold count: kde_cv must fail per replicate
    cfg.replicates = 2;
    cfg.methods = {"kde_cv", "kde_ref"};
    cfg.seed = 5;
    const auto report = run_benchmark(cfg);
    REQUIRE(report.cells.size() == 2);
    CHECK(report.cells[0].replicates == 0);
    CHECK(report.cells[0].failures == 2);
    CHECK(report.cells[1].replicates == 2);
}

TEST_CASE("config and report serialization") {
    BenchConfig cfg;
    cfg.densities = {"f1", "f3"};
    cfg.sizes = {100, 200};
    cfg.replicates = 1;
    cfg.methods = {"htf_k1", "htf_k2_path", "kde_ref"};
    cfg.seed = 11;
    const auto text = bench_config_to_json(cfg);
    const auto back = bench_config_from_json(text);
    CHECK(back.densities == cfg.densities);
    CHECK(back.sizes == cfg.sizes);
    CHECK(back.methods == cfg.methods);
    CHECK(back.seed == cfg.seed);

    CHECK_THROWS_AS(bench_config_from_json("{"), schema_error);
    CHECK_THROWS_AS(bench_config_from_json("{}"), schema_error);
    CHECK_THROWS_AS(bench_config_from_json(R"({"densities":["f9"],"sizes":[10],"methods":["kde_ref"]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(bench_config_from_json(R"({"densities":["f1"],"sizes":[10],"methods":["nope"]})"),
                    std::invalid_argument);

    BenchConfig tiny;
    tiny.densities = {"f2"};
    tiny.sizes = {200};
    tiny.replicates = 1;
    tiny.methods = {"kde_ref"};
    const auto report = run_benchmark(tiny);
    const auto tsv = report_to_tsv(report);
    CHECK(tsv.rfind("density\tn\tmethod\tmean_mse\tscaled_mse\tmean_seconds\treplicates\n", 0) == 0);
    CHECK(tsv.find("f2\t200\tkde_ref") != std::string::npos);
    const auto j = report_to_json(report);
    CHECK(j.find("\"cells\"") != std::string::npos);
    CHECK(report.cells[0].scale == 100.0);
}
