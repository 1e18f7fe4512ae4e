#include "msim/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "msim/rng.hpp"

namespace msim {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

EnsembleSummary aggregate(const RunConfig& config, std::span<const RunRecord> runs) {
    EnsembleSummary s;
    s.n_runs = runs.size();
    s.pooled.returns_mode = config.log_returns ? "log" : "diff";

    std::vector<double> pooled;
    double kurt_sum = 0.0;
    bool first_kurt = true;
    std::size_t non_halted_total = 0;
    double outside_weighted = 0.0;
    for (const auto& run : runs) {
        const auto diffs = return_diffs(run.rows, config.log_returns);
        pooled.insert(pooled.end(), diffs.begin(), diffs.end());

        const auto& st = run.summary.stats;
        s.pooled.bubbles += st.bubbles;
        s.pooled.depressions += st.depressions;
        s.pooled.jumps += st.jumps;
        s.pooled.halted_steps += st.halted_steps;
        s.pooled.trades_total += st.trades_total;
        s.pooled.bankruptcies_total += st.bankruptcies_total;
        s.pooled.max_abs_jump = std::max(s.pooled.max_abs_jump, st.max_abs_jump);
        const std::size_t non_halted = run.rows.size() - st.halted_steps;
        non_halted_total += non_halted;
        outside_weighted += st.time_fraction_outside * static_cast<double>(non_halted);
        if (st.bubbles + st.depressions > 0) ++s.runs_with_excursions;
        if (!std::isnan(st.jb_p_value)) {
            ++s.runs_counted_jb;
            if (st.jb_p_value < 0.01) ++s.runs_rejecting_jb_1pct;
        }
        if (!std::isnan(st.excess_kurtosis)) {
            if (first_kurt) {
                s.kurtosis_min = s.kurtosis_max = st.excess_kurtosis;
                first_kurt = false;
            } else {
                s.kurtosis_min = std::min(s.kurtosis_min, st.excess_kurtosis);
                s.kurtosis_max = std::max(s.kurtosis_max, st.excess_kurtosis);
            }
            kurt_sum += st.excess_kurtosis;
        }
        s.solver_failures += run.summary.solver_failures;
    }
    if (non_halted_total > 0)
        s.pooled.time_fraction_outside =
            outside_weighted / static_cast<double>(non_halted_total);
    const std::size_t kurt_n = [&] {
        std::size_t n = 0;
        for (const auto& run : runs)
            if (!std::isnan(run.summary.stats.excess_kurtosis)) ++n;
        return n;
    }();
    if (kurt_n > 0) s.kurtosis_mean = kurt_sum / static_cast<double>(kurt_n);
    fill_return_stats(s.pooled, pooled);
    return s;
}

EnsembleResult run_ensemble(const RunConfig& config, std::size_t n_runs,
                            unsigned n_threads) {
    if (n_runs < 1) throw ConfigError("ensemble needs at least one run");
    EnsembleResult result;
    result.runs.resize(n_runs);
    result.run_seeds.resize(n_runs);
    for (std::size_t r = 0; r < n_runs; ++r)
        result.run_seeds[r] = derive_stream(config.seed, kEnsembleRun, r);

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(n_threads == 0 ? hw : n_threads,
                                                    n_runs));

    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto work = [&](unsigned w) {
        for (std::size_t r = w; r < n_runs; r += workers) {
            try {
                result.runs[r] = run_simulation(config, result.run_seeds[r]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    result.summary = aggregate(config, result.runs);
    return result;
}

std::string serialize_ensemble_summary(const EnsembleSummary& s) {
    std::ostringstream o;
    o << "ensemble.runs = " << s.n_runs << '\n'
      << "ensemble.runs_with_excursions = " << s.runs_with_excursions << '\n'
      << "ensemble.jb_counted_runs = " << s.runs_counted_jb << '\n'
      << "ensemble.jb_rejections_1pct = " << s.runs_rejecting_jb_1pct << '\n'
      << "ensemble.kurtosis.min = " << fmt17(s.kurtosis_min) << '\n'
      << "ensemble.kurtosis.mean = " << fmt17(s.kurtosis_mean) << '\n'
      << "ensemble.kurtosis.max = " << fmt17(s.kurtosis_max) << '\n'
      << "ensemble.solver_failures = " << s.solver_failures << '\n';
    o << serialize_stats_block(s.pooled, "pooled.");
    return o.str();
}

SweepResult sweep(const RunConfig& config, const std::string& param,
                  std::span<const std::string> values, std::size_t runs_per_value,
                  unsigned n_threads) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    SweepResult out;
    out.param = param;
    for (const auto& v : values) {
        const RunConfig cfg = config.with(param, v);
        SweepRow row;
        row.value = v;
        row.summary = run_ensemble(cfg, runs_per_value, n_threads).summary;
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::string serialize_sweep(const SweepResult& s) {
    std::ostringstream o;
    o << "sweep.param = " << s.param << '\n';
    o << "value,runs,runs_with_excursions,pooled_returns,pooled_excess_kurtosis,"
         "pooled_jb_p,time_fraction_outside,jumps,bankruptcies\n";
    for (const auto& r : s.rows) {
        o << r.value << ',' << r.summary.n_runs << ',' << r.summary.runs_with_excursions
          << ',' << r.summary.pooled.returns_count << ','
          << fmt17(r.summary.pooled.excess_kurtosis) << ','
          << fmt17(r.summary.pooled.jb_p_value) << ','
          << fmt17(r.summary.pooled.time_fraction_outside) << ','
          << r.summary.pooled.jumps << ',' << r.summary.pooled.bankruptcies_total
          << '\n';
    }
    return o.str();
}

AnalyzeReport analyze_files(std::span<const std::string> paths, bool log_returns) {
    if (paths.empty()) throw std::runtime_error("analyze: no input files");
    AnalyzeReport report;
    std::vector<double> pooled;
    std::size_t non_halted_total = 0;
    double outside_weighted = 0.0;
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("analyze: cannot open '" + p + "'");
        const auto rows = read_run_csv(in, p);
        StatsBlock block = stats_from_rows(rows, log_returns);
        const auto diffs = return_diffs(rows, log_returns);
        pooled.insert(pooled.end(), diffs.begin(), diffs.end());
        const std::size_t non_halted = rows.size() - block.halted_steps;
        non_halted_total += non_halted;
        outside_weighted += block.time_fraction_outside * static_cast<double>(non_halted);
        report.pooled.bubbles += block.bubbles;
        report.pooled.depressions += block.depressions;
        report.pooled.jumps += block.jumps;
        report.pooled.halted_steps += block.halted_steps;
        report.pooled.trades_total += block.trades_total;
        report.pooled.bankruptcies_total += block.bankruptcies_total;
        report.pooled.max_abs_jump =
            std::max(report.pooled.max_abs_jump, block.max_abs_jump);
        report.per_run.emplace_back(p, std::move(block));
    }
    report.pooled.returns_mode = log_returns ? "log" : "diff";
    if (non_halted_total > 0)
        report.pooled.time_fraction_outside =
            outside_weighted / static_cast<double>(non_halted_total);
    fill_return_stats(report.pooled, pooled);
    report.pooled_valid = paths.size() > 1;
    return report;
}

std::string serialize_analyze(const AnalyzeReport& r) {
    std::ostringstream o;
    o << "analyze.inputs = " << r.per_run.size() << '\n';
    for (std::size_t i = 0; i < r.per_run.size(); ++i) {
        o << "run." << i << ".source = " << r.per_run[i].first << '\n';
        o << serialize_stats_block(r.per_run[i].second,
                                   "run." + std::to_string(i) + ".");
    }
    if (r.pooled_valid) o << serialize_stats_block(r.pooled, "pooled.");
    return o.str();
}

}  // namespace msim
