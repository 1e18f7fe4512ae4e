#include "msim/utility.hpp"

#include <cmath>

#include "msim/kernels.hpp"

namespace msim {

UtilityFn UtilityFn::cara(double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("CARA requires gamma > 0");
    UtilityFn u;
    u.family = Family::cara;
    u.gamma = gamma;
    return u;
}

UtilityFn UtilityFn::crra(double eta, double floor) {
    if (!(eta > 0.0)) throw std::invalid_argument("CRRA requires eta > 0");
    if (!(floor > 0.0)) throw std::invalid_argument("CRRA requires floor > 0");
    UtilityFn u;
    u.family = Family::crra;
    u.eta = eta;
    u.floor = floor;
    return u;
}

bool UtilityFn::defined_at(double wealth) const {
    return family != Family::crra || wealth + floor > 0.0;
}

double UtilityFn::value(double wealth) const {
    switch (family) {
        case Family::linear:
            return wealth;
        case Family::cara:
            return -std::exp(-gamma * wealth);
        case Family::crra: {
            const double w = wealth + floor;
            if (!(w > 0.0))
                throw std::domain_error("CRRA utility undefined at or below the wealth floor");
            if (eta == 1.0) return std::log(w);
            return (std::pow(w, 1.0 - eta) - 1.0) / (1.0 - eta);
        }
    }
    return wealth;
}

double expected_utility(const UtilityFn& u, double cash,
                        std::span<const double> payoff_totals) {
    if (payoff_totals.empty()) return u.value(cash);
    const double n = static_cast<double>(payoff_totals.size());
    switch (u.family) {
        case UtilityFn::Family::linear:
            return cash + kernels::sum(payoff_totals) / n;
        case UtilityFn::Family::cara:
            // mean of -exp(-g(cash + x)) without a temp array
            return -std::exp(-u.gamma * cash) *
                   (kernels::exp_pair_sum(payoff_totals, {}, -u.gamma, 0.0) / n);
        case UtilityFn::Family::crra: {
            double acc = 0.0;
            for (double x : payoff_totals) acc += u.value(cash + x);
            return acc / n;
        }
    }
    return 0.0;
}

Preference prefer(const UtilityFn& u, double cash_a, std::span<const double> payoff_a,
                  double cash_b, std::span<const double> payoff_b) {
    const double ua = expected_utility(u, cash_a, payoff_a);
    const double ub = expected_utility(u, cash_b, payoff_b);
    if (std::abs(ua - ub) <= kUtilityTol) return Preference::indifferent;
    return ua > ub ? Preference::first : Preference::second;
}

}  // namespace msim
