#include "msim/book.hpp"

#include <algorithm>

namespace msim {

ParetoSet pareto_set(const OrderBookSnapshot& book) {
    ParetoSet p;
    for (const auto& a : book.asks)
        if (!p.lo || a.price < *p.lo) p.lo = a.price;
    for (const auto& b : book.bids)
        if (!p.hi || b.price > *p.hi) p.hi = b.price;
    return p;
}

}  // namespace msim
