#include "msim/engine.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace msim {

std::string_view condition_name(Condition c) {
    switch (c) {
        case Condition::non_speculative: return "NonSpeculative";
        case Condition::normal: return "Normal";
        case Condition::bubble: return "Bubble";
        case Condition::depression: return "Depression";
        case Condition::halted: return "Halted";
    }
    return "Halted";
}

std::optional<Condition> condition_from_name(std::string_view name) {
    if (name == "NonSpeculative") return Condition::non_speculative;
    if (name == "Normal") return Condition::normal;
    if (name == "Bubble") return Condition::bubble;
    if (name == "Depression") return Condition::depression;
    if (name == "Halted") return Condition::halted;
    return std::nullopt;
}

std::optional<double> clear_nonspeculative(const ParetoSet& pareto) {
    if (!pareto.nonempty()) return std::nullopt;
    return pareto.midpoint();
}

double apply_pressure(double prev_price, const Census& census, double epsilon_bar,
                      double kappa, const ParetoSet& pareto) {
    if (census.technicals() == 0)
        throw std::invalid_argument("apply_pressure: no technical trader is active");
    const double imbalance =
        static_cast<double>(census.n_tb) - static_cast<double>(census.n_ts);
    double price = prev_price + epsilon_bar * imbalance;
    if (const auto mid = pareto.midpoint()) price += kappa * (*mid - prev_price);
    return price;
}

Condition classify(double price, const ParetoSet& pareto, const Census& census) {
    const bool above = pareto.hi && price > *pareto.hi;
    const bool below = pareto.lo && price < *pareto.lo;
    if (above && below) {
        // hi < lo: the interval is empty and the price sits in the gap.
        const double mid = 0.5 * (*pareto.lo + *pareto.hi);
        return price > mid ? Condition::bubble : Condition::depression;
    }
    if (above) return Condition::bubble;
    if (below) return Condition::depression;
    return census.technicals() > 0 ? Condition::normal : Condition::non_speculative;
}

namespace {

struct RankedOrder {
    int trader;
    double priority;  // higher first
};

/// Crossing at the clearing price: market orders first, then limit orders by
/// price priority; equal priority breaks on the lower trader id. One unit per
/// matched buyer/seller pair.
std::vector<Trade> execute_crossings(const OrderBookSnapshot& book, double price) {
    std::vector<RankedOrder> buyers, sellers;
    buyers.reserve(book.buys.size() + book.bids.size());
    sellers.reserve(book.sells.size() + book.asks.size());

    const double market_rank = std::numeric_limits<double>::infinity();
    for (const auto& o : book.buys) buyers.push_back({o.trader, market_rank});
    for (const auto& o : book.bids)
        if (o.price >= price) buyers.push_back({o.trader, o.price});
    for (const auto& o : book.sells) sellers.push_back({o.trader, market_rank});
    for (const auto& o : book.asks)
        if (o.price <= price) sellers.push_back({o.trader, -o.price});

    const auto rank = [](const RankedOrder& a, const RankedOrder& b) {
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.trader < b.trader;
    };
    std::sort(buyers.begin(), buyers.end(), rank);
    std::sort(sellers.begin(), sellers.end(), rank);

    const std::size_t n = std::min(buyers.size(), sellers.size());
    std::vector<Trade> trades;
    trades.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        trades.push_back({buyers[i].trader, sellers[i].trader, price, 1.0});
    return trades;
}

}  // namespace

ClearingStepResult clear_step(const OrderBookSnapshot& book,
                              const std::optional<ClearingStepResult>& prev,
                              double epsilon_bar, const ClearParams& params) {
    ClearingStepResult r;
    r.pareto = pareto_set(book);
    r.census = {book.bids.size(), book.asks.size(), book.buys.size(), book.sells.size()};

    const bool prev_priced = prev.has_value() && prev->has_price;
    const double prev_price = prev_priced ? prev->price : 0.0;
    const bool prev_excursion =
        prev_priced && (prev->condition == Condition::bubble ||
                        prev->condition == Condition::depression);
    const bool prev_still_outside =
        prev_priced && r.pareto.nonempty() && !r.pareto.contains(prev_price);

    if (r.census.technicals() == 0 || !prev_priced) {
        const auto p = clear_nonspeculative(r.pareto);
        if (!p) {
            // No trade is possible this step; the previous price carries.
            r.halted = true;
            r.condition = Condition::halted;
            r.has_price = prev_priced;
            r.price = prev_price;
            return r;
        }
        r.price = *p;
        r.has_price = true;
        r.halted = false;
        r.condition = classify(r.price, r.pareto, r.census);
        if (prev_excursion && prev_still_outside) {
            r.jump = true;
            r.jump_size = r.price - prev_price;
        }
    } else {
        const bool sustaining_side_gone =
            (prev->condition == Condition::bubble && r.census.n_tb == 0) ||
            (prev->condition == Condition::depression && r.census.n_ts == 0);
        if (prev_excursion && sustaining_side_gone && prev_still_outside) {
            // The side that held the price outside E_t is gone: re-anchor.
            r.price = *r.pareto.midpoint();
            r.has_price = true;
            r.halted = false;
            r.jump = true;
            r.jump_size = r.price - prev_price;
            r.condition = classify(r.price, r.pareto, r.census);
        } else {
            r.price = apply_pressure(prev_price, r.census, epsilon_bar, params.kappa,
                                     r.pareto);
            r.has_price = true;
            r.halted = false;
            r.condition = classify(r.price, r.pareto, r.census);
        }
    }

    r.trades = execute_crossings(book, r.price);
    return r;
}

std::optional<JumpRecord> detect_jump(const ClearingStepResult& prev,
                                      const ClearingStepResult& next) {
    if (!prev.has_price || next.halted || !next.has_price) return std::nullopt;
    if (prev.condition != Condition::bubble && prev.condition != Condition::depression)
        return std::nullopt;
    const bool side_gone =
        next.census.technicals() == 0 ||
        (prev.condition == Condition::bubble && next.census.n_tb == 0) ||
        (prev.condition == Condition::depression && next.census.n_ts == 0);
    if (!side_gone) return std::nullopt;
    if (next.pareto.contains(prev.price)) return std::nullopt;  // nothing to re-enter
    if (!next.pareto.contains(next.price)) return std::nullopt;
    return JumpRecord{next.price - prev.price};
}

std::size_t settle_and_bankrupt(std::span<const std::vector<Trade>> trades_per_security,
                                std::span<const std::pair<int, double>> accruals,
                                std::span<FundamentalTrader> fundamentals,
                                std::span<TechnicalTrader> technicals) {
    const int n_fund = static_cast<int>(fundamentals.size());
    const int n_all = n_fund + static_cast<int>(technicals.size());

    const auto cash_of = [&](int id) -> double& {
        if (id < 0 || id >= n_all)
            throw std::invalid_argument("settle_and_bankrupt: unknown trader id");
        return id < n_fund ? fundamentals[id].cash : technicals[id - n_fund].cash;
    };
    const auto positions_of = [&](int id) -> std::vector<double>& {
        return id < n_fund ? fundamentals[id].positions : technicals[id - n_fund].positions;
    };

    for (std::size_t s = 0; s < trades_per_security.size(); ++s) {
        for (const auto& t : trades_per_security[s]) {
            const double paid = t.price * t.qty;
            cash_of(t.buyer) -= paid;
            cash_of(t.seller) += paid;
            positions_of(t.buyer)[s] += t.qty;
            positions_of(t.seller)[s] -= t.qty;
        }
    }
    for (const auto& [id, amount] : accruals) cash_of(id) += amount;

    std::size_t bankrupt = 0;
    for (auto& f : fundamentals)
        if (f.alive && f.cash < 0.0) {
            f.alive = false;
            ++bankrupt;
        }
    for (auto& t : technicals)
        if (t.alive && t.cash < 0.0) {
            t.alive = false;
            ++bankrupt;
        }
    return bankrupt;
}

}  // namespace msim
