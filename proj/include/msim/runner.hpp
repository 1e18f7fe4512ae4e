#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "msim/config.hpp"
#include "msim/engine.hpp"
#include "msim/stats.hpp"
#include "msim/traders.hpp"

namespace msim {

/// One per-step CSV row (fixed schema, see write_run_csv).
struct StepRow {
    std::size_t step = 0;
    double time = 0.0;
    double underlying = 0.0;
    double price = 0.0;  // NaN while the market has not opened
    Condition condition = Condition::halted;
    bool halted = true;
    bool jump = false;
    double jump_size = 0.0;
    std::size_t n_fb = 0, n_fs = 0, n_tb = 0, n_ts = 0;
    double pareto_lo = 0.0, pareto_hi = 0.0;  // NaN when the side is absent
    std::size_t trades = 0;
    std::size_t bankruptcies = 0;
};

/// Everything derivable from the persisted rows alone (analyze recomputes it).
struct StatsBlock {
    std::string returns_mode = "diff";
    std::size_t returns_count = 0;
    double mean = 0.0, stddev = 0.0;
    double skewness = 0.0, excess_kurtosis = 0.0;
    double jb_statistic = 0.0, jb_p_value = 0.0;
    double tail3_frequency = 0.0, tail3_gaussian = 0.0;
    std::size_t bubbles = 0, depressions = 0, jumps = 0;
    double time_fraction_outside = 0.0;
    double max_abs_jump = 0.0;
    std::size_t halted_steps = 0;
    std::size_t trades_total = 0;
    std::size_t bankruptcies_total = 0;
};

StatsBlock stats_from_rows(std::span<const StepRow> rows, bool log_returns);

/// Return series of the persisted rows (Halted-adjacent diffs excluded).
std::vector<double> return_diffs(std::span<const StepRow> rows, bool log_returns);

/// Fills the returns.* fields of a block from a diff series (NaNs below the
/// minimum sample size).
void fill_return_stats(StatsBlock& out, std::span<const double> diffs);

struct PairAudit {
    std::string a, b;
    double max_reservation_discrepancy = 0.0;
    double max_clearing_discrepancy = 0.0;
};

struct AuditSummary {
    bool configured = false;
    bool applicable = false;  // no-arbitrage audit applies to fundamental-only runs
    std::size_t steps_compared = 0;
    double max_reservation_discrepancy = 0.0;
    double max_clearing_discrepancy = 0.0;
    std::vector<PairAudit> pairs;
};

struct RunSummary {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    std::string security;
    StatsBlock stats;
    std::size_t solver_failures = 0;
    double conservation_residual = 0.0;
    AuditSummary audit;
};

struct RunRecord {
    std::vector<StepRow> rows;
    RunSummary summary;
};

/// Deterministic (config, seed) -> record; see README for the step order.
RunRecord run_simulation(const RunConfig& config, std::uint64_t seed);

/// Trader ids are contiguous: fundamentals 0..F-1 in group order, then technicals.
struct Population {
    std::vector<FundamentalTrader> fundamentals;
    std::vector<TechnicalTrader> technicals;
};

Population build_population(const RunConfig& config, std::uint64_t seed);

// --- persistence -----------------------------------------------------------

extern const char* const kCsvHeader;

void write_run_csv(std::ostream& out, std::span<const StepRow> rows);
std::vector<StepRow> read_run_csv(std::istream& in, const std::string& source_name);

std::string serialize_summary(const RunSummary& s);
std::string serialize_stats_block(const StatsBlock& s, const std::string& prefix);

}  // namespace msim
