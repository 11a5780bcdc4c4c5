#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "htf/errors.hpp"
#include "htf/model_select.hpp"
#include "htf/rng.hpp"
#include "support/test_support.hpp"

using namespace htf;
using testsup::hist_from_counts;

TEST_CASE("aic formula") {
    FitResult fr;
    fr.nll = 10.0;
    fr.active_diffs = 3;
    fr.converged = true;
    CHECK(aic(fr, 1) == doctest::Approx(15.0));

    fr.active_diffs = 0;
    CHECK(aic(fr, 0) == doctest::Approx(fr.nll + 1.0));
    CHECK(aic(fr, 0, true) == doctest::Approx(2.0 * fr.nll + 1.0)); // doubled variant, opt-in

    fr.converged = false;
    CHECK_THROWS_AS(aic(fr, 1), std::invalid_argument);
}

TEST_CASE("aic on a fitted instance uses the oracle support size") {
    const std::vector<long> counts{1, 6, 2, 8, 3, 9};
    const auto h = hist_from_counts(counts);
    const auto fr = fit(h, PenaltySpec{1, 2.0, PenaltyNorm::L1});
    REQUIRE(fr.converged);
    std::vector<double> oracle_theta;
    testsup::enumeration_oracle(counts, 1, 2.0, &oracle_theta);
    const DiffOperator op(2, 6);
    const int oracle_active = count_active_diffs(op, oracle_theta);
    CHECK(aic(fr, 1) ==
          doctest::Approx(poisson_nll(fr.theta, h.counts) + 2.0 + oracle_active).epsilon(1e-9));
}

TEST_CASE("lambda_star closed form and scaling") {
    CHECK(lambda_star(100, 2, 0) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(lambda_star(200, 2, 0) == doctest::Approx(2.0 * lambda_star(100, 2, 0)).epsilon(1e-15));
    CHECK_THROWS_AS(lambda_star(100, 2, 1), std::invalid_argument);

    // against the dense SVD oracle at the default-rule bin count
    const auto op = make_diff_operator(2, 229);
    const auto dense = testsup::svd_pinv_norms(op);
    CHECK(lambda_star(5000, 229, 1) == doctest::Approx(5000.0 * dense.one / 229.0).epsilon(1e-8));
    CHECK(lambda_star(5000, 229, 1, OperatorNorm::Inf) ==
          doctest::Approx(5000.0 * dense.inf / 229.0).epsilon(1e-8));
}

TEST_CASE("default grid") {
    const auto g = default_grid(1.0);
    REQUIRE(g.size() == 5);
    CHECK(g[0] == doctest::Approx(0.01));
    CHECK(g[1] == doctest::Approx(0.1));
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(g[3] == doctest::Approx(10.0));
    CHECK(g[4] == doctest::Approx(100.0));

    const auto g50 = default_grid(50.0);
    CHECK(g50 == std::vector<double>{0.5, 5.0, 50.0, 500.0, 5000.0});
    for (const double l : {0.3, 7.0, 1234.5}) {
        const auto gr = default_grid(l);
        CHECK(gr[2] == doctest::Approx(l));
        CHECK(gr[0] == doctest::Approx(gr[2] / 100.0).epsilon(1e-14));
        CHECK(gr[4] == doctest::Approx(gr[2] * 100.0).epsilon(1e-14));
        CHECK(std::is_sorted(gr.begin(), gr.end()));
    }
    CHECK_THROWS_AS(default_grid(0.0), std::invalid_argument);
}

TEST_CASE("dense path grid") {
    const auto d5 = dense_path_grid(1.0, 5);
    const auto g5 = default_grid(1.0);
    for (int i = 0; i < 5; ++i) CHECK(d5[i] == doctest::Approx(g5[4 - i]).epsilon(1e-14));

    const auto d2 = dense_path_grid(3.0, 2);
    CHECK(d2[0] == doctest::Approx(300.0).epsilon(1e-14));
    CHECK(d2[1] == doctest::Approx(0.03).epsilon(1e-14));

    const auto d41 = dense_path_grid(1.0, 41);
    CHECK(d41.front() == doctest::Approx(100.0).epsilon(1e-13));
    CHECK(d41.back() == doctest::Approx(0.01).epsilon(1e-13));
    for (int i = 0; i + 1 < 41; ++i) {
        CHECK(d41[i] / d41[i + 1] == doctest::Approx(std::pow(10.0, 0.1)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dense_path_grid(1.0, 1), std::invalid_argument);
}

TEST_CASE("single-tau path selects its only entry") {
    const auto h = hist_from_counts({3, 6, 2, 7});
    const auto path = fit_path(h, 0, {1.0});
    CHECK(path.selected == 0);
    CHECK(path.entries.size() == 1);
}

TEST_CASE("path AIC values match an independent recomputation") {
    const auto h = hist_from_counts({1, 6, 2, 8, 3, 9});
    const auto path = fit_path(h, 1, {10.0, 1.0, 0.1});
    REQUIRE(path.entries.size() == 3);
    for (const auto& e : path.entries) {
        REQUIRE(e.fit.converged);
        const double again =
            poisson_nll(e.fit.theta, h.counts) + 2.0 + e.fit.active_diffs;
        CHECK(e.aic == doctest::Approx(again).epsilon(1e-10));
    }
    CHECK(path.best().aic ==
          doctest::Approx(std::min({path.entries[0].aic, path.entries[1].aic,
                                    path.entries[2].aic})));
}

TEST_CASE("uniform data selects a constant estimate on the anchor grid") {
    Rng rng(42);
    std::vector<double> v(2000);
    for (auto& x : v) x = rng.uniform();
    const auto s = make_sample(std::move(v), Interval{0.0, 1.0});
    const int bins = default_num_bins(2000);
    const auto h = make_histogram(s, bins);
    auto taus = default_grid(lambda_star(2000, bins, 0));
    std::reverse(taus.begin(), taus.end());
    const auto path = fit_path(h, 0, taus, BoxSpec{true, 0.25, std::nullopt});
    CHECK(path.best().fit.active_diffs == 0);
}

TEST_CASE("warm-started entries match cold starts in objective") {
    const auto h = hist_from_counts({4, 0, 6, 3, 9, 2, 5, 5, 1, 7, 8, 2});
    auto taus = default_grid(5.0);
    std::reverse(taus.begin(), taus.end());
    const auto path = fit_path(h, 1, taus);
    for (const auto& e : path.entries) {
        REQUIRE(e.fit.converged);
        const auto cold = fit(h, PenaltySpec{1, e.tau, PenaltyNorm::L1});
        REQUIRE(cold.converged);
        CHECK(std::fabs(e.fit.objective - cold.objective) <=
              2.0 * 1e-6 * (1.0 + std::fabs(cold.objective)));
    }
}

TEST_CASE("duplicating a tau never changes the selected value") {
    const auto h = hist_from_counts({4, 1, 6, 3, 9, 2});
    const std::vector<double> taus{20.0, 2.0, 0.2};
    const auto base = fit_path(h, 1, taus);
    const double chosen = base.best().tau;
    const std::vector<double> dup{20.0, 2.0, 2.0, 0.2};
    const auto dup_path = fit_path(h, 1, dup);
    CHECK(dup_path.best().tau == chosen);
}

TEST_CASE("path preconditions and failure surface") {
    const auto h = hist_from_counts({3, 6, 2, 7});
    CHECK_THROWS_AS(fit_path(h, 0, {}), std::invalid_argument);
    CHECK_THROWS_AS(fit_path(h, 0, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_path(h, 0, {1.0, -2.0}), std::invalid_argument);

    SolverOptions impossible;
    impossible.tol = 1e-280; // certification at this level cannot happen
    impossible.max_iters = 3;
    CHECK_THROWS_AS(fit_path(h, 1, {5.0, 0.5}, BoxSpec::disabled(), impossible),
                    path_failure_error);
}
