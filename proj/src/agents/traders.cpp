#include "msim/traders.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "msim/kernels.hpp"

namespace msim {

TechnicalTrader TechnicalTrader::make(int id, double epsilon, double p_buy,
                                      double p_sell, double p_idle, double cash,
                                      std::size_t n_securities,
                                      std::uint64_t regime_stream_seed) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("technical trader requires epsilon > 0");
    for (double p : {p_buy, p_sell, p_idle})
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("switch probabilities must lie in [0,1]");
    if (std::abs(p_buy + p_sell + p_idle - 1.0) > 1e-12)
        throw std::invalid_argument("switch probabilities must sum to 1");
    TechnicalTrader t;
    t.id = id;
    t.epsilon = epsilon;
    t.p_buy = p_buy;
    t.p_sell = p_sell;
    t.p_idle = p_idle;
    t.cash = cash;
    t.positions.assign(n_securities, 0.0);
    t.regime_rng.seed(regime_stream_seed);
    return t;
}

Regime switch_regime(TechnicalTrader& t) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(t.regime_rng);
    if (u < t.p_buy)
        t.regime = Regime::buyer;
    else if (u < t.p_buy + t.p_sell)
        t.regime = Regime::seller;
    else
        t.regime = Regime::idle_flat;
    return t.regime;
}

double quote_buy(const TechnicalTrader& t, double current_price) {
    if (t.regime != Regime::buyer)
        throw std::logic_error("quote_buy: trader is not in the Buyer regime");
    return current_price + t.epsilon;
}

double quote_sell(const TechnicalTrader& t, double current_price) {
    if (t.regime != Regime::seller)
        throw std::logic_error("quote_sell: trader is not in the Seller regime");
    return current_price - t.epsilon;
}

PayoffMatrix build_payoff_matrix(std::span<const SecuritySpec> universe,
                                 const ScenarioSet& scen) {
    PayoffMatrix m;
    m.n_scenarios = scen.n_paths;
    m.totals.reserve(universe.size());
    for (const auto& spec : universe) m.totals.push_back(payoff_totals(spec, scen));
    return m;
}

namespace {

constexpr double kBracketLimit = 1e6;
constexpr int kMaxIterations = 200;
constexpr double kInternalTol = 1e-11;

/// Mean CRRA utility over samples, -inf when any sample breaches the floor.
double crra_mean(const UtilityFn& u, double cash, std::span<const double> payoffs) {
    if (payoffs.empty()) {
        return u.defined_at(cash) ? u.value(cash)
                                  : -std::numeric_limits<double>::infinity();
    }
    double acc = 0.0;
    for (double x : payoffs) {
        const double w = cash + x;
        if (!u.defined_at(w)) return -std::numeric_limits<double>::infinity();
        acc += u.value(w);
    }
    return acc / static_cast<double>(payoffs.size());
}

}  // namespace

IndifferenceResult ReservationSolver::solve(const UtilityFn& u, double cash,
                                            bool selling,
                                            std::span<const double> positions,
                                            std::size_t sec, const PayoffMatrix& m) {
    const std::span<const double> x = m.security(sec);
    const double n = static_cast<double>(m.n_scenarios);
    const double mean_x = kernels::sum(x) / n;
    if (!(mean_x > 0.0))
        throw SolverError("reservation solve: conditional E[x] must be positive");

    // Linear utility: the indifference residual is affine in the price and the
    // root is the conditional mean itself; return it in closed form so that
    // ask and bid agree exactly.
    if (u.family == UtilityFn::Family::linear)
        return {mean_x, 0, true};

    // Current-holdings payoff per scenario (empty means identically zero).
    bool has_holdings = false;
    for (std::size_t j = 0; j < positions.size() && j < m.totals.size(); ++j)
        if (positions[j] != 0.0) has_holdings = true;
    holdings_.clear();
    if (has_holdings) {
        holdings_.assign(m.n_scenarios, 0.0);
        for (std::size_t j = 0; j < positions.size() && j < m.totals.size(); ++j) {
            const double pos = positions[j];
            if (pos == 0.0) continue;
            const auto xj = m.security(j);
            for (std::size_t i = 0; i < m.n_scenarios; ++i)
                holdings_[i] += pos * xj[i];
        }
    }
    const double trade_sign = selling ? -1.0 : 1.0;

    // Monotone-increasing residual g with g(0) < 0 and the reservation price as
    // its unique root. For CARA the common factor e^{-g*cash} is divided out;
    // same root, and the bisection path becomes exactly cash-invariant.
    std::function<double(double)> residual;

    if (u.family == UtilityFn::Family::cara) {
        const double g = u.gamma;
        const double m_hold =
            has_holdings ? kernels::exp_pair_sum(holdings_, {}, -g, 0.0) / n : 1.0;
        const double m_after =
            has_holdings
                ? kernels::exp_pair_sum(holdings_, x, -g, -g * trade_sign) / n
                : kernels::exp_pair_sum(x, {}, -g * trade_sign, 0.0) / n;
        if (!std::isfinite(m_hold) || !std::isfinite(m_after) || m_hold <= 0.0 ||
            m_after <= 0.0)
            throw SolverError("reservation solve: CARA utility overflowed");
        if (selling)
            residual = [=](double a) { return m_hold - std::exp(-g * a) * m_after; };
        else
            residual = [=](double b) { return -(m_hold - std::exp(g * b) * m_after); };
    } else {
        // CRRA: full scenario sum per iteration; utility may be flat near the
        // floor, which is why bisection is used instead of Newton.
        after_.assign(m.n_scenarios, 0.0);
        for (std::size_t i = 0; i < m.n_scenarios; ++i)
            after_[i] = (has_holdings ? holdings_[i] : 0.0) + trade_sign * x[i];
        const double u0 =
            crra_mean(u, cash, has_holdings ? std::span<const double>(holdings_)
                                            : std::span<const double>{});
        if (!std::isfinite(u0))
            throw SolverError("reservation solve: CRRA endowment below the wealth floor");
        const double cash_sign = selling ? 1.0 : -1.0;
        residual = [this, u, cash, cash_sign, u0, selling](double p) {
            const double v = crra_mean(u, cash + cash_sign * p, after_) - u0;
            return selling ? v : -v;
        };
    }

    IndifferenceResult out;
    if (!(residual(0.0) < 0.0))
        throw SolverError("reservation solve: agent would trade at a zero price");

    double lo = 0.0, hi = 1.0;
    while (residual(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        ++out.iterations;
        if (hi > kBracketLimit)
            throw SolverError("reservation solve: no bracket within 1e6");
    }
    while (hi - lo > kInternalTol && out.iterations < kMaxIterations) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // interval at floating-point resolution
        ++out.iterations;
        if (residual(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    out.price = 0.5 * (lo + hi);
    return out;
}

IndifferenceResult ReservationSolver::ask(const UtilityFn& u, double cash,
                                          std::span<const double> positions,
                                          std::size_t sec, const PayoffMatrix& m) {
    return solve(u, cash, /*selling=*/true, positions, sec, m);
}

IndifferenceResult ReservationSolver::bid(const UtilityFn& u, double cash,
                                          std::span<const double> positions,
                                          std::size_t sec, const PayoffMatrix& m) {
    return solve(u, cash, /*selling=*/false, positions, sec, m);
}

IndifferenceResult ReservationSolver::ask(const FundamentalTrader& t, std::size_t sec,
                                          const PayoffMatrix& m) {
    if (t.side != Side::fs)
        throw std::logic_error("reservation_ask: trader is not a fundamental seller");
    return ask(t.utility, t.cash, t.positions, sec, m);
}

IndifferenceResult ReservationSolver::bid(const FundamentalTrader& t, std::size_t sec,
                                          const PayoffMatrix& m) {
    if (t.side != Side::fb)
        throw std::logic_error("reservation_bid: trader is not a fundamental buyer");
    return bid(t.utility, t.cash, t.positions, sec, m);
}

}  // namespace msim
