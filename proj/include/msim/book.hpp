#pragma once

#include <optional>
#include <vector>

namespace msim {

struct LimitOrder {
    int trader = 0;
    double price = 0.0;  // > 0 (reservation prices are strictly positive)
};

struct MarketOrder {
    int trader = 0;
    double quote = 0.0;  // standing price ± epsilon, bookkeeping only
};

/// Per-security, per-step order flow: limit orders from fundamental buyers and
/// sellers, market orders from the technical traders active this step. Each
/// alive trader contributes at most one order per security per step.
struct OrderBookSnapshot {
    std::vector<LimitOrder> bids;   // FB
    std::vector<LimitOrder> asks;   // FS
    std::vector<MarketOrder> buys;  // TB_t
    std::vector<MarketOrder> sells; // TS_t
};

/// The interval [min Ask, max Bid] of Pareto-efficient bargains. A side with
/// no orders leaves its bound absent (one-sided set).
struct ParetoSet {
    std::optional<double> lo;  // min over FS asks
    std::optional<double> hi;  // max over FB bids

    bool nonempty() const { return lo && hi && *hi >= *lo; }
    bool one_sided() const { return lo.has_value() != hi.has_value(); }
    std::optional<double> midpoint() const {
        if (!lo || !hi) return std::nullopt;
        return 0.5 * (*lo + *hi);
    }
    bool contains(double price) const { return nonempty() && *lo <= price && price <= *hi; }
};

ParetoSet pareto_set(const OrderBookSnapshot& book);

}  // namespace msim
