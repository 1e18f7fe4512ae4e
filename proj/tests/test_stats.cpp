#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "msim/stats.hpp"

using namespace msim;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(eng);
    return v;
}

}  // namespace

TEST_CASE("two-point symmetric series has excess kurtosis -2 and zero skewness") {
    std::vector<double> x;
    for (int i = 0; i < 16; ++i) x.push_back(i % 2 == 0 ? 1.0 : -1.0);
    CHECK(stats::excess_kurtosis(x) == doctest::Approx(-2.0));
    CHECK(stats::skewness(x) == doctest::Approx(0.0));
}

TEST_CASE("gaussian sample kurtosis sits within the asymptotic band") {
    const std::size_t n = 100000;
    const auto x = gaussian(n, 17);
    const double k = stats::excess_kurtosis(x);
    CHECK(std::abs(k) < 3.0 * std::sqrt(24.0 / static_cast<double>(n)));
    const double s = stats::skewness(x);
    CHECK(std::abs(s) < 3.0 * std::sqrt(6.0 / static_cast<double>(n)));
}

TEST_CASE("moment statistics reject degenerate inputs") {
    const std::vector<double> short_series{1.0, 2.0, 3.0};
    CHECK_THROWS_AS((void)stats::excess_kurtosis(short_series), std::invalid_argument);
    const std::vector<double> constant(20, 3.14);
    CHECK_THROWS_AS((void)stats::skewness(constant), std::invalid_argument);
    CHECK_THROWS_AS((void)stats::jarque_bera(constant), std::invalid_argument);
}

TEST_CASE("jarque-bera closed forms") {
    CHECK(stats::jb_statistic(100, 0.0, 0.0) == 0.0);
    CHECK(stats::chi2_sf_2dof(0.0) == 1.0);
    // n=600, S=0, K=1 -> JB = 25, p = exp(-12.5)
    const double jb = stats::jb_statistic(600, 0.0, 1.0);
    CHECK(jb == doctest::Approx(25.0));
    CHECK(stats::chi2_sf_2dof(jb) == doctest::Approx(3.7266531720786709e-06));
}

TEST_CASE("jarque-bera p-value is monotone decreasing in the statistic") {
    double prev = 1.1;
    for (double jb : {0.0, 0.5, 2.0, 10.0, 50.0}) {
        const double p = stats::chi2_sf_2dof(jb);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("jarque-bera rejects at 1% on roughly 1% of gaussian seeds") {
    int rejections = 0;
    const int n_seeds = 200;
    for (int s = 0; s < n_seeds; ++s) {
        const auto x = gaussian(10000, 1000 + s);
        if (stats::jarque_bera(x).p_value < 0.01) ++rejections;
    }
    // size of the test: expect about 2 of 200, allow a generous band
    CHECK(rejections <= 12);
}

TEST_CASE("tail exceedance against the gaussian benchmark") {
    const auto x = gaussian(200000, 5);
    const auto r = stats::tail_exceedance(x, 3.0);
    CHECK(r.gaussian == doctest::Approx(0.0026997960632602).epsilon(1e-9));
    const double se = std::sqrt(r.gaussian * (1.0 - r.gaussian) /
                                static_cast<double>(r.n));
    CHECK(std::abs(r.frequency - r.gaussian) < 3.0 * se);

    const auto all = stats::tail_exceedance(x, 0.0);
    CHECK(all.frequency == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(all.gaussian == doctest::Approx(1.0));
}

TEST_CASE("return series excludes halted-adjacent diffs") {
    const std::vector<double> prices{1.0, 2.0, 2.5, 2.5, 3.0, 4.0};
    const bool halted[] = {false, false, false, true, false, false};
    const auto s = stats::returns_from_prices(prices, halted, false);
    // diffs kept: 1->2, 2->2.5, 4->5 (indices around the halt drop out)
    REQUIRE(s.n() == 3);
    CHECK(s.diffs[0] == doctest::Approx(1.0));
    CHECK(s.diffs[1] == doctest::Approx(0.5));
    CHECK(s.diffs[2] == doctest::Approx(1.0));
}

TEST_CASE("log returns drop nonpositive endpoints and count them") {
    const std::vector<double> prices{1.0, -1.0, 2.0, 4.0};
    const auto s = stats::returns_from_prices(prices, {}, true);
    CHECK(s.n() == 1);
    CHECK(s.diffs[0] == doctest::Approx(std::log(2.0)));
    CHECK(s.dropped_nonpositive == 2);
}

TEST_CASE("excursion accounting over labeled steps") {
    using C = Condition;
    SUBCASE("all-normal run is all zeros") {
        const std::vector<C> c(10, C::normal);
        const std::vector<double> sizes(10, 0.0);
        const bool jumps[10] = {};
        const auto r = stats::excursions(c, std::span<const bool>(jumps, 10), sizes);
        CHECK(r.n_bubbles == 0);
        CHECK(r.n_depressions == 0);
        CHECK(r.n_jumps == 0);
        CHECK(r.time_fraction_outside == 0.0);
    }
    SUBCASE("N,B,B,N with one jump") {
        const std::vector<C> c{C::normal, C::bubble, C::bubble, C::normal};
        const bool jumps[] = {false, false, false, true};
        const std::vector<double> sizes{0.0, 0.0, 0.0, -2.0};
        const auto r = stats::excursions(c, std::span<const bool>(jumps, 4), sizes);
        CHECK(r.n_bubbles == 1);
        REQUIRE(r.durations.size() == 1);
        CHECK(r.durations[0] == 2);
        CHECK(r.n_jumps == 1);
        CHECK(r.jump_sizes[0] == doctest::Approx(-2.0));
        CHECK(r.time_fraction_outside == doctest::Approx(0.5));
    }
    SUBCASE("halted steps do not enter the outside fraction's denominator") {
        const std::vector<C> c{C::halted, C::bubble, C::depression, C::halted};
        const bool jumps[4] = {};
        const std::vector<double> sizes(4, 0.0);
        const auto r = stats::excursions(c, std::span<const bool>(jumps, 4), sizes);
        CHECK(r.n_bubbles == 1);
        CHECK(r.n_depressions == 1);
        CHECK(r.durations == std::vector<std::size_t>{1, 1});
        CHECK(r.time_fraction_outside == doctest::Approx(1.0));
    }
    SUBCASE("jump count is bounded by episode count plus one") {
        const std::vector<C> c{C::bubble, C::normal, C::depression, C::normal};
        const bool jumps[] = {false, true, false, true};
        const std::vector<double> sizes{0.0, -1.0, 0.0, 2.0};
        const auto r = stats::excursions(c, std::span<const bool>(jumps, 4), sizes);
        CHECK(r.n_jumps <= r.n_bubbles + r.n_depressions + 1);
    }
}

TEST_CASE("variance growth of a pure random walk is linear through the origin") {
    std::mt19937_64 eng(9);
    std::normal_distribution<double> d(0.0, 1.0);
    const std::size_t n_paths = 600, n_steps = 400;
    const double sigma = 0.7, dt = 1.0 / static_cast<double>(n_steps);
    std::vector<std::vector<double>> paths(n_paths);
    for (auto& p : paths) {
        p.resize(n_steps + 1);
        p[0] = 3.0;
        for (std::size_t k = 1; k <= n_steps; ++k)
            p[k] = p[k - 1] + sigma * std::sqrt(dt) * d(eng);
    }
    const std::size_t cps[] = {100, 200, 400};
    const auto vg = stats::variance_growth(paths, cps, dt);
    CHECK(vg.r2_origin > 0.99);
    CHECK(vg.slope_origin == doctest::Approx(sigma * sigma).epsilon(0.15));
}

TEST_CASE("constant paths have zero variance growth") {
    std::vector<std::vector<double>> paths(8, std::vector<double>(11, 2.0));
    const std::size_t cps[] = {5, 10};
    const auto vg = stats::variance_growth(paths, cps, 0.1);
    CHECK(vg.slope_origin == 0.0);
    CHECK(vg.variances[0] == 0.0);
}

TEST_CASE("MAD jump detector flags the planted outliers") {
    auto x = gaussian(5000, 23);
    x[100] = 30.0;
    x[2000] = -25.0;
    const auto hits = stats::detect_jumps_mad(x, 6.0);
    REQUIRE(hits.size() >= 2);
    bool saw100 = false, saw2000 = false;
    for (auto i : hits) {
        if (i == 100) saw100 = true;
        if (i == 2000) saw2000 = true;
    }
    CHECK(saw100);
    CHECK(saw2000);
}
