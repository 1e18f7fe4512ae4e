#pragma once

#include <string>
#include <vector>

#include "msim/runner.hpp"

namespace msim {

struct EnsembleSummary {
    std::size_t n_runs = 0;
    StatsBlock pooled;  // pooled return series + summed episode counts
    std::size_t runs_with_excursions = 0;
    std::size_t runs_counted_jb = 0;      // runs with enough returns for JB
    std::size_t runs_rejecting_jb_1pct = 0;
    double kurtosis_min = 0.0, kurtosis_mean = 0.0, kurtosis_max = 0.0;
    std::size_t solver_failures = 0;
};

struct EnsembleResult {
    std::vector<RunRecord> runs;  // ordered by run index
    std::vector<std::uint64_t> run_seeds;
    EnsembleSummary summary;
};

/// Seeds derived as (master seed, run index); runs are independent and may
/// execute on a thread pool; aggregation is ordered by run index so the output
/// never depends on the schedule. n_threads = 0 picks the hardware count.
EnsembleResult run_ensemble(const RunConfig& config, std::size_t n_runs,
                            unsigned n_threads = 0);

EnsembleSummary aggregate(const RunConfig& config, std::span<const RunRecord> runs);

std::string serialize_ensemble_summary(const EnsembleSummary& s);

struct SweepRow {
    std::string value;
    EnsembleSummary summary;
};

struct SweepResult {
    std::string param;
    std::vector<SweepRow> rows;
};

SweepResult sweep(const RunConfig& config, const std::string& param,
                  std::span<const std::string> values, std::size_t runs_per_value,
                  unsigned n_threads = 0);

std::string serialize_sweep(const SweepResult& s);

struct AnalyzeReport {
    std::vector<std::pair<std::string, StatsBlock>> per_run;  // (source, stats)
    StatsBlock pooled;
    bool pooled_valid = false;  // more than one input
};

/// Recomputes the statistics summary from persisted per-step rows; idempotent
/// with the in-run summary for a single input, pooled across several.
AnalyzeReport analyze_files(std::span<const std::string> paths, bool log_returns);

std::string serialize_analyze(const AnalyzeReport& r);

}  // namespace msim
