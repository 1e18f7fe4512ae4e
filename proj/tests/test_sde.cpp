#include <doctest.h>

#include <cmath>
#include <vector>

#include "msim/measure.hpp"
#include "msim/paths.hpp"
#include "msim/rng.hpp"

using namespace msim;

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(TimeGrid(0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(1.0, 0), std::invalid_argument);
    const TimeGrid g(2.0, 4);
    CHECK(g.dt == doctest::Approx(0.5));
    CHECK(g.time_at(4) == doctest::Approx(2.0));
}

TEST_CASE("brownian paths start at zero and a single step is standard normal") {
    const TimeGrid g(1.0, 1);
    const auto p = gen_brownian(g, 1, 99);
    CHECK(p.path(0)[0] == 0.0);
    CHECK(p.path(0).size() == 2);
}

TEST_CASE("identical seeds give bit-identical paths") {
    const TimeGrid g(1.0, 64);
    const auto a = gen_brownian(g, 8, 1234);
    const auto b = gen_brownian(g, 8, 1234);
    CHECK(a.b == b.b);
    const auto c = gen_brownian(g, 8, 1235);
    CHECK(a.b != c.b);
}

TEST_CASE("terminal moments of B_T match N(0, T)") {
    const TimeGrid g(1.0, 32);
    const std::size_t n = 100000;
    const auto p = gen_brownian(g, n, 7);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double bt = p.path(i)[g.n_steps];
        sum += bt;
        sum2 += bt * bt;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("semimartingale invariant z = z0 + sigma*b + drift*t holds exactly") {
    const TimeGrid g(2.0, 16);
    const auto s = gen_semimartingale(g, 5.0, 0.3, 1.7, 4, 21);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto path = s.extract(i);
        for (std::size_t k = 0; k <= g.n_steps; ++k) {
            CHECK(path.z[k] == 5.0 + 1.7 * path.b[k] + 0.3 * g.time_at(k));
        }
    }
    CHECK_THROWS_AS(gen_semimartingale(g, 0.0, 0.0, -1.0, 1, 3), std::invalid_argument);
}

TEST_CASE("degenerate diffusions") {
    const TimeGrid g(1.0, 10);
    const auto constant = gen_semimartingale_path(g, 5.0, 0.0, 0.0, 11);
    for (double z : constant.z) CHECK(z == doctest::Approx(5.0));
    const auto drifting = gen_semimartingale_path(g, 0.0, 0.2, 0.0, 11);
    CHECK(drifting.z.back() == doctest::Approx(0.2));
}

TEST_CASE("drifting ensemble mean matches the drift") {
    const TimeGrid g(1.0, 16);
    const std::size_t n = 100000;
    const auto s = gen_semimartingale(g, 0.0, 0.2, 1.0, n, 3);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double zt = s.z_at(i, g.n_steps);
        sum += zt;
        sum2 += zt * zt;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 0.2) < 3.0 * se);
}

TEST_CASE("variance grows like sigma^2 t across paths") {
    const TimeGrid g(1.0, 20);
    const std::size_t n = 100000;
    const double sigma = 0.8;
    const auto s = gen_semimartingale(g, 1.0, 0.0, sigma, n, 5);
    for (std::size_t k : {5u, 10u, 20u}) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = s.z_at(i, k);
            sum += z;
            sum2 += z * z;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        const double expected = sigma * sigma * g.time_at(k);
        CHECK(std::abs(var - expected) / expected < 0.05);
    }
}

TEST_CASE("conditional scenarios anchor correctly and length-0 tails are allowed") {
    const TimeGrid g(1.0, 8);
    std::vector<double> realized(g.n_points(), 3.25);
    const auto tail = conditional_scenarios(realized, g, g.n_steps, 0.1, 1.0, 5, 1);
    CHECK(tail.support.empty());
    CHECK(tail.anchor_value == 3.25);
    double wsum = 0.0;
    for (double w : tail.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(conditional_scenarios(realized, g, g.n_steps + 1, 0.1, 1.0, 5, 1),
                    std::invalid_argument);
}

TEST_CASE("sigma = 0 scenarios are the deterministic drift continuation") {
    const TimeGrid g(1.0, 10);
    std::vector<double> realized{2.0, 2.1, 2.2};
    const auto scen = conditional_scenarios(realized, g, 2, 0.5, 0.0, 7, 9);
    CHECK(scen.support.size() == 8);
    for (std::size_t i = 0; i < scen.n_paths; ++i)
        for (std::size_t j = 0; j < scen.support.size(); ++j) {
            const double tau = g.time_at(scen.support[j]) - g.time_at(2);
            CHECK(scen.value(i, j) == doctest::Approx(2.2 + 0.5 * tau).epsilon(1e-12));
        }
}

TEST_CASE("conditional scenario mean matches the arithmetic-BM formula") {
    const TimeGrid g(1.0, 10);
    std::vector<double> realized(4, 0.0);
    realized[3] = 1.5;
    const std::size_t m = 100000;
    const auto scen = conditional_scenarios(realized, g, 3, 0.4, 1.0, m, 17);
    const std::size_t last = scen.support.size() - 1;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double z = scen.value(i, last);
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / m;
    const double se = std::sqrt((sum2 / m - mean * mean) / m);
    const double tau = 1.0 - g.time_at(3);
    CHECK(std::abs(mean - (1.5 + 0.4 * tau)) < 3.0 * se);
}

TEST_CASE("sparse support sampling is rejected when malformed") {
    const TimeGrid g(1.0, 10);
    CHECK_THROWS_AS(sample_scenarios(g, 5, 1.0, 0.0, 1.0, {5}, 3, 1),
                    std::invalid_argument);  // support <= anchor
    CHECK_THROWS_AS(sample_scenarios(g, 5, 1.0, 0.0, 1.0, {11}, 3, 1),
                    std::invalid_argument);  // beyond horizon
    CHECK_THROWS_AS(sample_scenarios(g, 5, 1.0, 0.0, 1.0, {8, 7}, 3, 1),
                    std::invalid_argument);  // not ascending
}

// --- measure change ---------------------------------------------------------

TEST_CASE("stochastic exponential identities") {
    const TimeGrid g(2.0, 8);
    const auto b = gen_brownian(g, 1, 77).path(0);

    SUBCASE("h = 0 gives the identity measure change") {
        const auto mc = stochastic_exponential(0.0, b, g);
        for (double d : mc.density) CHECK(d == 1.0);
    }
    SUBCASE("closed form at the terminal date") {
        const double h = 0.37;
        const auto mc = stochastic_exponential(h, b, g);
        CHECK(mc.density[0] == 1.0);
        const double bt = b[g.n_steps];
        CHECK(mc.density[g.n_steps] ==
              doctest::Approx(std::exp(-h * bt - 0.5 * h * h * 2.0)).epsilon(1e-12));
        for (std::size_t k = 1; k <= g.n_steps; ++k) {
            CHECK(mc.density[k] > 0.0);
            CHECK(mc.qv_l[k] >= mc.qv_l[k - 1]);
        }
    }
}

TEST_CASE("novikov closed forms") {
    CHECK(novikov_value(0.0, 5.0) == 1.0);
    CHECK(novikov_value(1.0, 2.0) == doctest::Approx(std::exp(1.0)));
    CHECK(novikov_value(0.2, 1.0) == doctest::Approx(std::exp(0.02)));
}

TEST_CASE("density is a martingale: E_P[density_t] = 1 within 3 SE") {
    const TimeGrid g(1.0, 16);
    const auto s = gen_semimartingale(g, 0.0, 0.0, 1.0, 100000, 13);
    const std::size_t cps[] = {8, 16};
    const auto rep = martingale_diagnostic(s, 0.2, cps);
    CHECK(rep.all_density_unit());
}

TEST_CASE("drift removal under the equivalent measure") {
    const TimeGrid g(1.0, 100);
    const std::size_t n = 100000;
    const auto s = gen_semimartingale(g, 1.0, 0.2, 1.0, n, 19);
    const std::size_t cps[] = {50, 100};

    SUBCASE("h matching the drift removes it") {
        const auto rep = martingale_diagnostic(s, 0.2, cps);
        CHECK(rep.all_drift_removed());
        CHECK(rep.all_density_unit());
    }
    SUBCASE("h = 0 leaves the drift in place") {
        const auto rep = martingale_diagnostic(s, 0.0, cps);
        CHECK_FALSE(rep.all_drift_removed());
        // unweighted mean sits near z0 + drift * t instead
        const auto& last = rep.rows.back();
        CHECK(last.weighted_mean_z == doctest::Approx(1.0 + 0.2).epsilon(0.05));
    }
}

TEST_CASE("materialized-set diagnostic overload checks path counts") {
    const TimeGrid g(1.0, 4);
    const auto s = gen_semimartingale(g, 0.0, 0.0, 1.0, 3, 23);
    std::vector<SemimartingalePath> paths;
    std::vector<MeasureChange> mcs;
    for (std::size_t i = 0; i < 3; ++i) {
        paths.push_back(s.extract(i));
        mcs.push_back(stochastic_exponential(0.1, paths.back().b, g));
    }
    const std::size_t cps[] = {4};
    const auto rep = martingale_diagnostic(paths, mcs, cps);
    CHECK(rep.rows.size() == 1);

    mcs.pop_back();
    CHECK_THROWS_AS(martingale_diagnostic(paths, mcs, cps), std::invalid_argument);
}

TEST_CASE("stream derivation separates purposes and indices") {
    CHECK(derive_stream(1, kScenario, 0, 0) != derive_stream(1, kRegime, 0, 0));
    CHECK(derive_stream(1, kScenario, 1, 0) != derive_stream(1, kScenario, 2, 0));
    CHECK(derive_stream(1, kScenario, 1, 5) != derive_stream(1, kScenario, 1, 6));
    CHECK(derive_stream(1, kScenario, 1, 5) == derive_stream(1, kScenario, 1, 5));
}
