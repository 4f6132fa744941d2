#include <doctest.h>

#include <cmath>
#include <random>

#include "counterscope/stats.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace counterscope;
using doctest::Approx;

TEST_CASE("pearson examples") {
    CHECK(stats::pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) == Approx(1.0).epsilon(1e-15));
    CHECK(stats::pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == Approx(-1.0).epsilon(1e-15));
    const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
    CHECK(std::abs(stats::pearson(x, y) - oracle::pearson(x, y)) < 1e-15);
    CHECK(stats::pearson(x, y) == Approx(0.8));
    CHECK(stats::pearson(std::vector<double>{5, 5, 5}, std::vector<double>{1, 2, 3}) == 0.0);
    CHECK_ERRC(stats::pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), Errc::length_mismatch);
    CHECK_ERRC(stats::pearson(std::vector<double>{1}, std::vector<double>{1}), Errc::too_short);
}

TEST_CASE("zscore examples") {
    auto z = stats::zscore_fit_apply(std::vector<double>{5, 5, 5}, std::vector<double>{5, 5});
    CHECK(z.values == std::vector<double>{0, 0});
    CHECK(z.stddev == 0.0);

    const std::vector<double> v{1, 2, 3};
    z = stats::zscore_fit_apply(v, v);
    const auto s = stats::summarize(z.values);
    CHECK(std::abs(s.mean) < 1e-15);
    CHECK(s.stddev == Approx(1.0).epsilon(1e-15));

    z = stats::zscore_fit_apply(std::vector<double>{0, 10}, std::vector<double>{5});
    CHECK(z.values == std::vector<double>{0});
    CHECK(z.mean == 5);
    CHECK(z.stddev == 5);
    CHECK_ERRC(stats::zscore_fit_apply(std::vector<double>{}, std::vector<double>{1}), Errc::empty_input);
}

TEST_CASE("linreg examples") {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
        x.push_back(i);
        y.push_back(2 * i + 1);
    }
    auto f = stats::linreg(x, y);
    CHECK(f.slope == Approx(2.0).epsilon(1e-14));
    CHECK(f.intercept == Approx(1.0).epsilon(1e-14));
    CHECK(f.r_squared == Approx(1.0).epsilon(1e-14));

    f = stats::linreg(x, std::vector<double>(10, 3.0));
    CHECK(f.slope == 0.0);
    CHECK(f.intercept == Approx(3.0));
    CHECK(f.r_squared == 1.0);

    CHECK_ERRC(stats::linreg(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), Errc::degenerate_x);

    std::mt19937_64 rng(50);
    x = testutil::uniform_vector(rng, 50, -5, 5);
    y = testutil::normal_vector(rng, 50);
    for (std::size_t i = 0; i < 50; ++i)
        y[i] += 0.7 * x[i];
    f = stats::linreg(x, y);
    const auto o = oracle::linreg(x, y);
    CHECK(std::abs(f.slope - o.slope) < 1e-10);
    CHECK(std::abs(f.intercept - o.intercept) < 1e-10);
    CHECK(std::abs(f.r_squared - o.r_squared) < 1e-10);
}

TEST_CASE("summarize examples") {
    auto s = stats::summarize(std::vector<double>{1, 2, 3});
    CHECK(s.mean == 2);
    CHECK(s.stddev == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(s.max == 3);
    CHECK(s.min == 1);
    s = stats::summarize(std::vector<double>{7});
    CHECK((s.mean == 7 && s.stddev == 0 && s.max == 7 && s.min == 7));
    s = stats::summarize(std::vector<double>{-1, 1});
    CHECK((s.mean == 0 && s.stddev == 1 && s.max == 1 && s.min == -1));
    CHECK_ERRC(stats::summarize(std::vector<double>{}), Errc::empty_input);
}

TEST_CASE("property: pearson symmetry, bounds, affine invariance, oracle") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 8 + rng() % 57;
        auto x = testutil::normal_vector(rng, n, 0, 1 + rng() % 100);
        auto y = testutil::normal_vector(rng, n, 5, 2);
        const double mix = std::uniform_real_distribution<double>(-1, 1)(rng);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += mix * x[i];
        const double r = stats::pearson(x, y);
        CHECK(r == stats::pearson(y, x));
        CHECK(std::abs(r) <= 1 + 1e-12);
        CHECK(std::abs(r - oracle::pearson(x, y)) < 1e-12);

        double a = std::uniform_real_distribution<double>(0.1, 10)(rng);
        if (rng() % 2)
            a = -a;
        const double b = std::uniform_real_distribution<double>(-100, 100)(rng);
        std::vector<double> ax(n);
        for (std::size_t i = 0; i < n; ++i)
            ax[i] = a * x[i] + b;
        CHECK(std::abs(stats::pearson(ax, y) - (a > 0 ? r : -r)) < 1e-10);

        const auto f = stats::linreg(x, y);
        CHECK(std::abs(f.r_squared - r * r) < 1e-10);
        CHECK(f.r_squared >= -1e-12);
        CHECK(f.r_squared <= 1 + 1e-12);
    }
}

TEST_CASE("property: summarize matches oracle") {
    std::mt19937_64 rng(78);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = testutil::normal_vector(rng, 1 + rng() % 100, 3, 10);
        const auto s = stats::summarize(x);
        const auto o = oracle::summarize(x);
        CHECK(std::abs(s.mean - o.mean) < 1e-12);
        CHECK(std::abs(s.stddev - o.stddev) < 1e-12);
        CHECK(s.max == o.max);
        CHECK(s.min == o.min);
        CHECK(stats::mean(x) == s.mean);
        CHECK(stats::pop_stddev(x) == s.stddev);
    }
}
