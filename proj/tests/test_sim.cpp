#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "msim/ensemble.hpp"
#include "msim/runner.hpp"

using namespace msim;

namespace {

const char* kFundamentalOnly = R"(
grid.horizon = 1.0
grid.steps = 60
underlying.z0 = 5.0
underlying.sigma = 0.2
scenarios.count = 64
clearing.kappa = 0.0
seed = 3
security.f0.kind = forward
security.f0.strike = 0
population.buyers.side = fb
population.buyers.count = 3
population.buyers.gamma = 0.3:1.0
population.sellers.side = fs
population.sellers.count = 3
population.sellers.gamma = 0.3:1.0
population.sellers.endowment = 1
)";

std::string with_technicals(double eps, double p_buy, double p_sell, double p_idle,
                            double cash, int count) {
    std::string cfg = kFundamentalOnly;
    cfg += "population.noise.side = technical\n";
    cfg += "population.noise.count = " + std::to_string(count) + "\n";
    cfg += "population.noise.epsilon = " + std::to_string(eps) + "\n";
    cfg += "population.noise.p_buy = " + std::to_string(p_buy) + "\n";
    cfg += "population.noise.p_sell = " + std::to_string(p_sell) + "\n";
    cfg += "population.noise.p_idle = " + std::to_string(p_idle) + "\n";
    cfg += "population.noise.cash = " + std::to_string(cash) + "\n";
    return cfg;
}

std::string csv_of(const RunRecord& rec) {
    std::ostringstream o;
    write_run_csv(o, rec.rows);
    return o.str();
}

}  // namespace

TEST_CASE("fundamental-only run stays inside the Pareto interval") {
    const auto cfg = RunConfig::from_string(kFundamentalOnly);
    const auto rec = run_simulation(cfg, cfg.seed);
    REQUIRE(rec.rows.size() == cfg.steps);
    std::size_t non_halted = 0;
    for (const auto& r : rec.rows) {
        if (r.halted) {
            CHECK(r.condition == Condition::halted);
            continue;
        }
        ++non_halted;
        CHECK(r.condition == Condition::non_speculative);
        CHECK(r.price >= r.pareto_lo);
        CHECK(r.price <= r.pareto_hi);
        CHECK_FALSE(r.jump);
        CHECK(r.n_tb + r.n_ts == 0);
    }
    CHECK(non_halted > 0);
    CHECK(rec.summary.stats.time_fraction_outside == 0.0);
    CHECK(rec.summary.stats.jumps == 0);
    CHECK(std::abs(rec.summary.conservation_residual) < 1e-9);
}

TEST_CASE("same config and seed give byte-identical outputs") {
    const auto cfg = RunConfig::from_string(kFundamentalOnly);
    const auto a = run_simulation(cfg, cfg.seed);
    const auto b = run_simulation(cfg, cfg.seed);
    CHECK(csv_of(a) == csv_of(b));
    CHECK(serialize_summary(a.summary) == serialize_summary(b.summary));
    const auto c = run_simulation(cfg, cfg.seed + 1);
    CHECK(csv_of(a) != csv_of(c));
}

TEST_CASE("csv round-trips exactly at 17 significant digits") {
    const auto cfg = RunConfig::from_string(with_technicals(0.05, 0.4, 0.4, 0.2, 50.0, 8));
    const auto rec = run_simulation(cfg, 11);
    std::stringstream io;
    write_run_csv(io, rec.rows);
    const auto rows = read_run_csv(io, "mem");
    REQUIRE(rows.size() == rec.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rec.rows[i];
        const auto& b = rows[i];
        CHECK(a.step == b.step);
        CHECK((a.price == b.price || (std::isnan(a.price) && std::isnan(b.price))));
        CHECK(a.condition == b.condition);
        CHECK(a.halted == b.halted);
        CHECK(a.jump == b.jump);
        CHECK(a.jump_size == b.jump_size);
        CHECK(a.n_tb == b.n_tb);
        CHECK((a.pareto_lo == b.pareto_lo ||
               (std::isnan(a.pareto_lo) && std::isnan(b.pareto_lo))));
        CHECK(a.trades == b.trades);
    }
    // and the recomputed statistics agree field-for-field with the summary
    const auto recomputed = stats_from_rows(rows, cfg.log_returns);
    CHECK(serialize_stats_block(recomputed, "") ==
          serialize_stats_block(rec.summary.stats, ""));
}

TEST_CASE("reading malformed csv fails loudly") {
    std::stringstream empty;
    CHECK_THROWS(read_run_csv(empty, "empty"));
    std::stringstream wrong("step,price\n1,2\n");
    CHECK_THROWS(read_run_csv(wrong, "wrong"));
}

TEST_CASE("technicals drive the price off the interval and labels follow") {
    const auto cfg =
        RunConfig::from_string(with_technicals(0.05, 0.45, 0.45, 0.1, 1e9, 40));
    const auto rec = run_simulation(cfg, 5);
    std::size_t outside = 0, with_tech = 0;
    for (const auto& r : rec.rows) {
        if (r.halted) continue;
        if (r.condition == Condition::bubble || r.condition == Condition::depression)
            ++outside;
        if (r.n_tb + r.n_ts > 0) ++with_tech;
    }
    CHECK(with_tech > 0);
    CHECK(outside > 0);  // 40 active technicals at eps 0.05 exit a ~0.02-wide band fast
    CHECK(rec.summary.stats.time_fraction_outside > 0.0);
}

TEST_CASE("a run kept alive by linear fundamentals recovers via jumps when the census dies") {
    // small technical cash: the census decays by bankruptcy; with linear
    // fundamentals E_t stays nonempty so re-anchors can land
    std::string cfg_text = with_technicals(0.05, 0.45, 0.45, 0.1, 12.0, 12);
    cfg_text += "population.buyers.utility = linear\n";
    cfg_text += "population.sellers.utility = linear\n";
    auto cfg = RunConfig::from_string(cfg_text).with("grid.steps", "400");
    const auto rec = run_simulation(cfg, 77);
    CHECK(rec.summary.stats.bankruptcies_total > 0);
    // every flagged jump re-enters the interval and follows an excursion with
    // the sustaining side empty
    for (std::size_t k = 1; k < rec.rows.size(); ++k) {
        const auto& r = rec.rows[k];
        if (!r.jump) continue;
        const auto& prev = rec.rows[k - 1];
        CHECK((prev.condition == Condition::bubble ||
               prev.condition == Condition::depression));
        CHECK(r.price >= r.pareto_lo);
        CHECK(r.price <= r.pareto_hi);
        if (prev.condition == Condition::bubble) CHECK(r.n_tb == 0);
        if (prev.condition == Condition::depression) CHECK(r.n_ts == 0);
    }
    CHECK(std::abs(rec.summary.conservation_residual) < 1e-9);
    // a jump always terminates an episode, so jumps cannot outnumber episodes
    CHECK(rec.summary.stats.jumps <=
          rec.summary.stats.bubbles + rec.summary.stats.depressions + 1);
}

TEST_CASE("epsilon-imbalance walk: across-seed variance grows linearly") {
    // sigma = 0 and linear utilities make the interval a fixed point at z0,
    // so the price is exactly the epsilon-imbalance walk
    std::string cfg_text = with_technicals(0.05, 0.5, 0.5, 0.0, 1e9, 20);
    cfg_text += "population.buyers.utility = linear\n";
    cfg_text += "population.sellers.utility = linear\n";
    auto cfg = RunConfig::from_string(cfg_text)
                   .with("underlying.sigma", "0")
                   .with("scenarios.count", "8")
                   .with("grid.steps", "200");
    const std::size_t n_seeds = 100;
    std::vector<std::vector<double>> price_paths;
    for (std::size_t s = 0; s < n_seeds; ++s) {
        const auto rec = run_simulation(cfg, 1000 + s);
        std::vector<double> prices;
        prices.push_back(5.0);  // step-0 bootstrap clears at z0
        for (const auto& r : rec.rows) prices.push_back(r.price);
        price_paths.push_back(std::move(prices));
    }
    const std::size_t cps[] = {50, 100, 200};
    const auto vg = stats::variance_growth(price_paths, cps, 1.0);
    CHECK(vg.r2_origin > 0.90);
    // walk variance oracle: eps^2 * Var(|TB|-|TS|) * k = eps^2 * n * k
    const double oracle = 0.05 * 0.05 * 20.0;
    CHECK(vg.slope_origin == doctest::Approx(oracle).epsilon(0.35));
}

TEST_CASE("fundamental-only across-seed variance obeys the interval bound") {
    // containment in [lo, hi] implies, by Popoviciu, that the across-seed
    // variance at a checkpoint is at most (max hi - min lo)^2 / 4
    const auto cfg = RunConfig::from_string(kFundamentalOnly);
    const std::size_t n_seeds = 30;
    std::vector<RunRecord> runs;
    for (std::size_t s = 0; s < n_seeds; ++s)
        runs.push_back(run_simulation(cfg, 100 + s));
    for (std::size_t k : {10u, 30u, 59u}) {
        std::vector<double> prices;
        double lo = 1e300, hi = -1e300;
        for (const auto& run : runs) {
            const auto& r = run.rows[k];
            if (r.halted) continue;
            prices.push_back(r.price);
            lo = std::min(lo, r.pareto_lo);
            hi = std::max(hi, r.pareto_hi);
        }
        if (prices.size() < 2) continue;
        double mean = 0.0;
        for (double p : prices) mean += p;
        mean /= static_cast<double>(prices.size());
        double var = 0.0;
        for (double p : prices) var += (p - mean) * (p - mean);
        var /= static_cast<double>(prices.size() - 1);
        CHECK(var <= (hi - lo) * (hi - lo) / 4.0 + 1e-12);
    }
}

TEST_CASE("issuance check rejects nonpositive expected payoffs") {
    std::string cfg_text = kFundamentalOnly;
    cfg_text += "security.put.kind = euro_put\n";
    cfg_text += "security.put.strike = 0.0\n";  // worthless put: E[x] = 0
    const auto cfg = RunConfig::from_string(cfg_text);
    CHECK_THROWS_AS(run_simulation(cfg, 1), ConfigError);
}

TEST_CASE("mid-run solver failure halts the step and is counted") {
    // a certain early coupon keeps E[x] positive at issuance; once it pays,
    // the remaining conditional expectation is negative and the solve fails
    std::string cfg_text = kFundamentalOnly;
    cfg_text += "security.sp.kind = step_payout\n";
    cfg_text += "security.sp.terms = 5:1:0;10:-0.6:1\n";
    auto cfg = RunConfig::from_string(cfg_text)
                   .with("underlying.z0", "0.5")
                   .with("underlying.sigma", "0")
                   .with("scenarios.count", "8")
                   .with("grid.steps", "10");
    const auto rec = run_simulation(cfg, 1);
    CHECK(rec.summary.solver_failures > 0);
    bool saw_late_halt = false;
    for (const auto& r : rec.rows)
        if (r.step >= 5 && r.halted) saw_late_halt = true;
    CHECK(saw_late_halt);
}

TEST_CASE("law-of-one-price audit: duplicates exact, composite within tolerance") {
    std::string cfg_text = kFundamentalOnly;
    cfg_text += "security.f1.kind = forward\n";
    cfg_text += "security.f1.strike = 0\n";
    cfg_text += "security.sp.kind = step_payout\n";
    cfg_text += "security.sp.terms = 60:0:1\n";  // pays Z_T, same table as f0/f1
    cfg_text += "audit.pairs = f0:f1,f0:sp\n";
    const auto cfg = RunConfig::from_string(cfg_text);
    const auto rec = run_simulation(cfg, 9);
    CHECK(rec.summary.audit.configured);
    CHECK(rec.summary.audit.applicable);
    CHECK(rec.summary.audit.steps_compared > 0);
    CHECK(rec.summary.audit.max_reservation_discrepancy == 0.0);
    CHECK(rec.summary.audit.max_clearing_discrepancy <= 1e-6);
}

TEST_CASE("audit is not applicable while technicals operate") {
    std::string cfg_text = with_technicals(0.05, 0.4, 0.4, 0.2, 100.0, 4);
    cfg_text += "security.f1.kind = forward\n";
    cfg_text += "security.f1.strike = 0\n";
    cfg_text += "audit.pairs = f0:f1\n";
    const auto cfg = RunConfig::from_string(cfg_text);
    const auto rec = run_simulation(cfg, 9);
    CHECK(rec.summary.audit.configured);
    CHECK_FALSE(rec.summary.audit.applicable);
    CHECK(rec.summary.audit.steps_compared == 0);
}

TEST_CASE("ensemble of one equals the single run and aggregation is thread-stable") {
    const auto cfg = RunConfig::from_string(kFundamentalOnly);
    const auto one = run_ensemble(cfg, 1, 1);
    const auto direct = run_simulation(cfg, one.run_seeds[0]);
    CHECK(serialize_summary(one.runs[0].summary) == serialize_summary(direct.summary));

    const auto seq = run_ensemble(cfg, 6, 1);
    const auto par = run_ensemble(cfg, 6, 4);
    CHECK(serialize_ensemble_summary(seq.summary) ==
          serialize_ensemble_summary(par.summary));
    for (std::size_t r = 0; r < 6; ++r)
        CHECK(csv_of(seq.runs[r]) == csv_of(par.runs[r]));
}

TEST_CASE("deterministic config collapses the ensemble across runs") {
    auto cfg = RunConfig::from_string(kFundamentalOnly)
                   .with("underlying.sigma", "0")
                   .with("scenarios.count", "8")
                   .with("population.buyers.gamma", "0.5")
                   .with("population.sellers.gamma", "0.5");
    const auto ens = run_ensemble(cfg, 4, 2);
    // all runs identical: pooled diffs are the per-run diffs repeated
    for (std::size_t r = 1; r < 4; ++r)
        CHECK(csv_of(ens.runs[r]) == csv_of(ens.runs[0]));
}

TEST_CASE("sweep over one value reproduces the ensemble") {
    const auto cfg = RunConfig::from_string(with_technicals(0.05, 0.4, 0.4, 0.2, 1e9, 6));
    const std::string values[] = {"0.05"};
    const auto sw = sweep(cfg, "population.noise.epsilon", values, 3, 2);
    REQUIRE(sw.rows.size() == 1);
    const auto ens = run_ensemble(cfg.with("population.noise.epsilon", "0.05"), 3, 2);
    CHECK(serialize_ensemble_summary(sw.rows[0].summary) ==
          serialize_ensemble_summary(ens.summary));
    CHECK(serialize_sweep(sw).find("sweep.param") == 0);
}

TEST_CASE("analyze recomputes the embedded statistics exactly") {
    const auto cfg = RunConfig::from_string(with_technicals(0.05, 0.45, 0.45, 0.1, 60.0, 10));
    const auto rec = run_simulation(cfg, 21);
    const auto tmp = std::string("/tmp/msim_test_run.csv");
    {
        std::ofstream out(tmp);
        write_run_csv(out, rec.rows);
    }
    const std::string paths[] = {tmp};
    const auto report = analyze_files(paths, cfg.log_returns);
    REQUIRE(report.per_run.size() == 1);
    CHECK(serialize_stats_block(report.per_run[0].second, "") ==
          serialize_stats_block(rec.summary.stats, ""));
    CHECK_FALSE(report.pooled_valid);

    // pooled over the same file twice doubles the sample
    const std::string both[] = {tmp, tmp};
    const auto pooled = analyze_files(both, cfg.log_returns);
    CHECK(pooled.pooled_valid);
    CHECK(pooled.pooled.returns_count == 2 * rec.summary.stats.returns_count);
}

TEST_CASE("step-0 bootstrap clears fundamentally even with technicals present") {
    const auto cfg = RunConfig::from_string(with_technicals(0.05, 0.5, 0.5, 0.0, 1e9, 10));
    const auto rec = run_simulation(cfg, 2);
    const auto& first = rec.rows[0];
    REQUIRE_FALSE(first.halted);
    // midpoint of the first interval, labeled by the census present
    CHECK(first.price >= first.pareto_lo);
    CHECK(first.price <= first.pareto_hi);
    CHECK((first.condition == Condition::normal ||
           first.condition == Condition::non_speculative));
}

TEST_CASE("interior step-payout terms accrue when their date arrives") {
    std::string cfg_text = kFundamentalOnly;
    cfg_text += "security.sp.kind = step_payout\n";
    cfg_text += "security.sp.terms = 30:1:0;60:0:1\n";  // certain 1 at step 30 + Z_T
    const auto cfg = RunConfig::from_string(cfg_text);
    const auto rec = run_simulation(cfg, 4);
    CHECK(rec.rows.size() == 60);
    CHECK(std::abs(rec.summary.conservation_residual) < 1e-9);
}
