#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "msim/book.hpp"
#include "msim/traders.hpp"

namespace msim {

enum class Condition { non_speculative, normal, bubble, depression, halted };

std::string_view condition_name(Condition c);
std::optional<Condition> condition_from_name(std::string_view name);

struct Census {
    std::size_t n_fb = 0;
    std::size_t n_fs = 0;
    std::size_t n_tb = 0;
    std::size_t n_ts = 0;

    std::size_t technicals() const { return n_tb + n_ts; }
};

struct Trade {
    int buyer = 0;
    int seller = 0;
    double price = 0.0;
    double qty = 1.0;
};

struct ClearParams {
    double kappa = 0.0;  // mean-reversion pull toward the E_t midpoint
};

struct ClearingStepResult {
    double price = 0.0;
    bool has_price = false;  // false until the market first opens
    Condition condition = Condition::halted;
    bool halted = true;
    bool jump = false;
    double jump_size = 0.0;
    Census census;
    ParetoSet pareto;
    std::vector<Trade> trades;
};

/// Midpoint rule for a fundamental-only clear; no value when E_t is empty or
/// one-sided (Halted: no trade is possible and the price is undefined).
std::optional<double> clear_nonspeculative(const ParetoSet& pareto);

/// Additive order-imbalance pressure plus optional pull toward the midpoint.
/// Unclamped: the result may leave [lo, hi].
double apply_pressure(double prev_price, const Census& census, double epsilon_bar,
                      double kappa, const ParetoSet& pareto);

Condition classify(double price, const ParetoSet& pareto, const Census& census);

/// One market step for one security: dispatches between the fundamental-only
/// midpoint clear, the sustaining-side jump re-anchor, and the pressure rule;
/// executes crossings at the clearing price (one unit per matched pair).
ClearingStepResult clear_step(const OrderBookSnapshot& book,
                              const std::optional<ClearingStepResult>& prev,
                              double epsilon_bar, const ClearParams& params);

struct JumpRecord {
    double size = 0.0;
};

/// Audit-side reconstruction of the jump rule from two adjacent results:
/// a jump is an excursion (Bubble/Depression) ended by the exit of all
/// technicals or of the sustaining side, with the new price back inside E_t.
std::optional<JumpRecord> detect_jump(const ClearingStepResult& prev,
                                      const ClearingStepResult& next);

/// Applies trade cash/position flows and accrual transfers, then marks any
/// trader with cash < 0 as bankrupt (excluded from future books). Returns the
/// number of newly bankrupt traders. Trader ids index the two spans through
/// `fundamental_count` (fundamentals first, technicals after).
std::size_t settle_and_bankrupt(std::span<const std::vector<Trade>> trades_per_security,
                                std::span<const std::pair<int, double>> accruals,
                                std::span<FundamentalTrader> fundamentals,
                                std::span<TechnicalTrader> technicals);

}  // namespace msim
