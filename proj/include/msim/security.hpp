#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msim/paths.hpp"

namespace msim {

/// One additive piece of a custom step-payout table: pays
/// constant + linear * z + sum of option legs on z, at grid step `step`.
struct OptionLeg {
    bool is_call = true;
    double weight = 1.0;
    double strike = 0.0;
};

struct StepTerm {
    std::size_t step = 0;
    double constant = 0.0;
    double linear = 0.0;
    std::vector<OptionLeg> legs;

    double eval(double z) const;
};

enum class PayoffKind { underlying, forward, euro_call, euro_put, step_payout };

/// A tradable vector: the underlying consumption flow or a derivative payoff
/// functional over underlying paths. Two specs with equal payoff tables are
/// distinct ids but payoff-identical.
struct SecuritySpec {
    std::string id;
    PayoffKind kind = PayoffKind::forward;
    double strike = 0.0;
    std::size_t expiry = 0;       // grid index; ignored for `underlying`
    std::vector<StepTerm> terms;  // step_payout only

    void validate(std::size_t n_steps) const;
    /// Grid indices whose underlying level the total payoff depends on.
    std::vector<std::size_t> marks(std::size_t n_steps) const;
};

/// Contingent consumption paid on the transition into step k (0 for k = 0).
double step_increment(const SecuritySpec& spec, std::size_t k, double z_prev,
                      double z_at_k);

/// Per-step consumption stream over (t_from, T] realized along one path.
struct CashflowStream {
    std::size_t from_k = 0;
    std::vector<double> increments;

    double total() const;
};

CashflowStream payoff_stream(const SecuritySpec& spec, const SemimartingalePath& path,
                             std::size_t from_k);

/// Remaining total payoff per scenario (scenario support must cover the
/// spec's marks beyond the anchor).
std::vector<double> payoff_totals(const SecuritySpec& spec, const ScenarioSet& scen);

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

Estimate expected_payoff(const SecuritySpec& spec, const ScenarioSet& scen);
Estimate estimate_of(std::span<const double> samples);

/// Accrual transfers for the transition into step k: positions[i] * increment.
std::vector<double> accrue(const SecuritySpec& spec, std::span<const double> positions,
                           std::size_t k, double z_prev, double z_at_k);

}  // namespace msim
