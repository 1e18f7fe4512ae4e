#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "msim/paths.hpp"
#include "msim/security.hpp"
#include "msim/utility.hpp"

namespace msim {

enum class Side { fb, fs };

/// Risk-averse (or risk-neutral via Linear) agent quoting reservation prices
/// from expected-utility indifference. Side is fixed for life.
struct FundamentalTrader {
    int id = 0;
    Side side = Side::fb;
    double cash = 0.0;
    std::vector<double> positions;  // per security index
    UtilityFn utility;
    bool alive = true;
};

enum class Regime { idle_flat, buyer, seller };

/// Risk-neutral agent; regime is redrawn i.i.d. every step from switch_probs
/// and shifts quotes by ±epsilon around the standing price.
struct TechnicalTrader {
    int id = 0;
    Regime regime = Regime::idle_flat;
    double epsilon = 0.0;
    double p_buy = 0.0, p_sell = 0.0, p_idle = 1.0;
    double cash = 0.0;
    std::vector<double> positions;
    bool alive = true;
    std::mt19937_64 regime_rng;

    static TechnicalTrader make(int id, double epsilon, double p_buy, double p_sell,
                                double p_idle, double cash, std::size_t n_securities,
                                std::uint64_t regime_stream_seed);
};

Regime switch_regime(TechnicalTrader& t);

double quote_buy(const TechnicalTrader& t, double current_price);
double quote_sell(const TechnicalTrader& t, double current_price);

/// Signals a failed reservation-price solve (no bracket within hi <= 1e6,
/// nonpositive conditional expectation, or a CRRA bundle below the floor).
class SolverError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct IndifferenceResult {
    double price = 0.0;
    int iterations = 0;
    bool closed_form = false;
};

/// Per-scenario payoff totals for every security in the universe, evaluated on
/// the shared scenario set of the current step (common priors).
struct PayoffMatrix {
    std::size_t n_scenarios = 0;
    std::vector<std::vector<double>> totals;  // [security][scenario]

    std::span<const double> security(std::size_t s) const { return totals[s]; }
};

PayoffMatrix build_payoff_matrix(std::span<const SecuritySpec> universe,
                                 const ScenarioSet& scen);

/// Bracketed-bisection indifference solver. Holds scratch buffers so the
/// per-step hot path does not allocate.
class ReservationSolver {
  public:
    IndifferenceResult ask(const UtilityFn& u, double cash,
                           std::span<const double> positions, std::size_t sec,
                           const PayoffMatrix& m);
    IndifferenceResult bid(const UtilityFn& u, double cash,
                           std::span<const double> positions, std::size_t sec,
                           const PayoffMatrix& m);

    IndifferenceResult ask(const FundamentalTrader& t, std::size_t sec,
                           const PayoffMatrix& m);
    IndifferenceResult bid(const FundamentalTrader& t, std::size_t sec,
                           const PayoffMatrix& m);

  private:
    std::vector<double> holdings_;  // portfolio payoff per scenario
    std::vector<double> after_;    // portfolio payoff after the candidate trade

    IndifferenceResult solve(const UtilityFn& u, double cash, bool selling,
                             std::span<const double> positions, std::size_t sec,
                             const PayoffMatrix& m);
};

}  // namespace msim
