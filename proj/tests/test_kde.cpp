#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "htf/errors.hpp"
#include "htf/kde.hpp"
#include "htf/rng.hpp"
#include "htf/simbench.hpp"
#include "support/test_support.hpp"

using namespace htf;

TEST_CASE("reference bandwidth on a seeded standard normal sample") {
    Rng rng(5);
    std::vector<double> v(1000);
    for (auto& x : v) x = rng.normal();
    const double h = reference_bandwidth(make_sample(std::move(v)));
    const double population = 0.9 * std::pow(1000.0, -0.2);
    CHECK(std::fabs(h - population) <= 0.1 * population);
}

TEST_CASE("reference bandwidth degenerate and scaling behavior") {
    CHECK_THROWS_AS(reference_bandwidth(make_sample({3.0, 3.0, 3.0, 3.0})),
                    degenerate_sample_error);

    Rng rng(6);
    std::vector<double> v(200);
    for (auto& x : v) x = rng.normal(1.0, 2.0);
    std::vector<double> doubled(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) doubled[i] = 2.0 * v[i];
    const double h1 = reference_bandwidth(make_sample(v));
    const double h2 = reference_bandwidth(make_sample(doubled));
    CHECK(h2 == 2.0 * h1); // scaling by a power of two is exact

    std::vector<double> scaled(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = 3.7 * v[i];
    CHECK(reference_bandwidth(make_sample(scaled)) == doctest::Approx(3.7 * h1).epsilon(1e-12));
}

TEST_CASE("kde pointwise values") {
    const auto est = make_kde(make_sample({0.0, 0.0}), 1.0);
    CHECK(kde_evaluate(est, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));

    const auto sym = make_kde(make_sample({-1.0, 1.0}), 0.7);
    for (double x : {0.1, 0.5, 1.3, 2.9}) {
        CHECK(kde_evaluate(sym, x) == doctest::Approx(kde_evaluate(sym, -x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(make_kde(make_sample({0.0, 1.0}), 0.0), std::invalid_argument);
}

TEST_CASE("kde integrates to one") {
    Rng rng(8);
    std::vector<double> v(50);
    for (auto& x : v) x = rng.normal(0.5, 1.5);
    const auto s = make_sample(std::move(v));
    const auto est = make_kde(s, 0.4);
    const double lo = *std::min_element(s.values.begin(), s.values.end()) - 10 * 0.4;
    const double hi = *std::max_element(s.values.begin(), s.values.end()) + 10 * 0.4;
    const double mass =
        testsup::simpson([&](double x) { return kde_evaluate(est, x); }, lo, hi, 20000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("grid evaluation agrees with pointwise evaluation") {
    Rng rng(10);
    std::vector<double> v(500);
    for (auto& x : v) x = rng.normal();
    const auto est = make_kde(make_sample(std::move(v)), 0.25);
    std::vector<double> xs(257);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = -4.0 + 8.0 * i / (xs.size() - 1);
    const auto grid = kde_evaluate_grid(est, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(grid[i] == kde_evaluate(est, xs[i]));
    }
}

TEST_CASE("cv bandwidth basics") {
    Rng rng(12);
    std::vector<double> v(300);
    for (auto& x : v) x = rng.normal();
    const auto s = make_sample(std::move(v));

    CHECK(cv_bandwidth(s, 5, {0.37}, 99) == 0.37); // singleton grid

    // an absurdly small bandwidth must lose to a sane one
    const double href = reference_bandwidth(s);
    CHECK(cv_bandwidth(s, 5, {1e-6 * href, href}, 4) == href);

    CHECK_THROWS_AS(cv_bandwidth(s, 1), std::invalid_argument);
    CHECK_THROWS_AS(cv_bandwidth(s, 5, {-1.0}), std::invalid_argument);
}

TEST_CASE("cv bandwidth undercuts the reference rule on the normal mixture") {
    const auto f1 = density_f1();
    Rng rng(2);
    std::vector<double> v(1000);
    for (auto& x : v) x = f1.draw(rng);
    const auto s = make_sample(std::move(v), f1.support);
    const double href = reference_bandwidth(s);
    const double hcv = cv_bandwidth(s, 5, {}, 2);
    CHECK(hcv < href);
}

TEST_CASE("cv bandwidth is permutation invariant given the seed") {
    Rng rng(14);
    std::vector<double> v(240);
    for (auto& x : v) x = rng.normal();
    const auto a = cv_bandwidth(make_sample(v), 5, {}, 7);
    std::vector<double> shuffled = v;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
        std::swap(shuffled[i], shuffled[rng.bits() % (i + 1)]);
    }
    const auto b = cv_bandwidth(make_sample(shuffled), 5, {}, 7);
    CHECK(a == b);
}
