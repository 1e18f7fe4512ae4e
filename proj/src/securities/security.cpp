#include "msim/security.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "msim/kernels.hpp"

namespace msim {

double StepTerm::eval(double z) const {
    double v = constant + linear * z;
    for (const auto& leg : legs) {
        const double intrinsic = leg.is_call ? z - leg.strike : leg.strike - z;
        v += leg.weight * std::max(intrinsic, 0.0);
    }
    return v;
}

void SecuritySpec::validate(std::size_t n_steps) const {
    if (id.empty()) throw std::invalid_argument("security id must be nonempty");
    if (!std::isfinite(strike)) throw std::invalid_argument("security strike must be finite");
    if (kind == PayoffKind::step_payout) {
        if (terms.empty())
            throw std::invalid_argument("step_payout security needs at least one term");
        for (const auto& t : terms) {
            if (t.step < 1 || t.step > n_steps)
                throw std::invalid_argument("step_payout term step out of range");
            if (!std::isfinite(t.constant) || !std::isfinite(t.linear))
                throw std::invalid_argument("step_payout term coefficients must be finite");
            for (const auto& leg : t.legs)
                if (!std::isfinite(leg.weight) || !std::isfinite(leg.strike))
                    throw std::invalid_argument("step_payout option leg must be finite");
        }
    } else if (kind != PayoffKind::underlying) {
        if (expiry < 1 || expiry > n_steps)
            throw std::invalid_argument("security expiry out of range");
    }
}

std::vector<std::size_t> SecuritySpec::marks(std::size_t n_steps) const {
    std::vector<std::size_t> m;
    switch (kind) {
        case PayoffKind::underlying:
            m.push_back(n_steps);
            break;
        case PayoffKind::forward:
        case PayoffKind::euro_call:
        case PayoffKind::euro_put:
            m.push_back(expiry);
            break;
        case PayoffKind::step_payout:
            for (const auto& t : terms) m.push_back(t.step);
            std::sort(m.begin(), m.end());
            m.erase(std::unique(m.begin(), m.end()), m.end());
            break;
    }
    return m;
}

double step_increment(const SecuritySpec& spec, std::size_t k, double z_prev,
                      double z_at_k) {
    if (k == 0) return 0.0;
    switch (spec.kind) {
        case PayoffKind::underlying:
            return z_at_k - z_prev;
        case PayoffKind::forward:
            return k == spec.expiry ? z_at_k - spec.strike : 0.0;
        case PayoffKind::euro_call:
            return k == spec.expiry ? std::max(z_at_k - spec.strike, 0.0) : 0.0;
        case PayoffKind::euro_put:
            return k == spec.expiry ? std::max(spec.strike - z_at_k, 0.0) : 0.0;
        case PayoffKind::step_payout: {
            double v = 0.0;
            for (const auto& t : spec.terms)
                if (t.step == k) v += t.eval(z_at_k);
            return v;
        }
    }
    return 0.0;
}

double CashflowStream::total() const {
    return kernels::sum(increments);
}

CashflowStream payoff_stream(const SecuritySpec& spec, const SemimartingalePath& path,
                             std::size_t from_k) {
    const std::size_t n = path.grid.n_steps;
    if (from_k > n) throw std::invalid_argument("payoff_stream: from_k out of range");
    if (spec.kind != PayoffKind::underlying && spec.kind != PayoffKind::step_payout &&
        spec.expiry < from_k)
        throw std::invalid_argument("payoff_stream: security expired before from_k");
    CashflowStream s;
    s.from_k = from_k;
    s.increments.reserve(n - from_k);
    for (std::size_t k = from_k + 1; k <= n; ++k)
        s.increments.push_back(step_increment(spec, k, path.z[k - 1], path.z[k]));
    return s;
}

std::vector<double> payoff_totals(const SecuritySpec& spec, const ScenarioSet& scen) {
    const std::size_t m = scen.n_paths;
    std::vector<double> totals(m, 0.0);
    const auto need = spec.marks(scen.grid.n_steps);

    switch (spec.kind) {
        case PayoffKind::underlying: {
            const auto pos = scen.support_pos(scen.grid.n_steps);
            if (scen.anchor_index == scen.grid.n_steps) return totals;  // length-0 tail
            if (!pos) throw std::invalid_argument("payoff_totals: support misses horizon");
            for (std::size_t i = 0; i < m; ++i)
                totals[i] = scen.value(i, *pos) - scen.anchor_value;
            return totals;
        }
        case PayoffKind::forward:
        case PayoffKind::euro_call:
        case PayoffKind::euro_put: {
            if (spec.expiry <= scen.anchor_index) return totals;  // already paid out
            const auto pos = scen.support_pos(spec.expiry);
            if (!pos) throw std::invalid_argument("payoff_totals: support misses expiry");
            for (std::size_t i = 0; i < m; ++i) {
                const double z = scen.value(i, *pos);
                if (spec.kind == PayoffKind::forward)
                    totals[i] = z - spec.strike;
                else if (spec.kind == PayoffKind::euro_call)
                    totals[i] = std::max(z - spec.strike, 0.0);
                else
                    totals[i] = std::max(spec.strike - z, 0.0);
            }
            return totals;
        }
        case PayoffKind::step_payout: {
            for (const auto& t : spec.terms) {
                if (t.step <= scen.anchor_index) continue;
                const auto pos = scen.support_pos(t.step);
                if (!pos)
                    throw std::invalid_argument("payoff_totals: support misses term step");
                for (std::size_t i = 0; i < m; ++i)
                    totals[i] += t.eval(scen.value(i, *pos));
            }
            return totals;
        }
    }
    (void)need;
    return totals;
}

Estimate estimate_of(std::span<const double> samples) {
    Estimate e;
    const double n = static_cast<double>(samples.size());
    if (samples.empty()) return e;
    e.mean = kernels::sum(samples) / n;
    if (samples.size() > 1) {
        const auto mom = kernels::central_moments(samples, e.mean);
        e.se = std::sqrt(mom.m2 / (n - 1.0) / n);
    }
    return e;
}

Estimate expected_payoff(const SecuritySpec& spec, const ScenarioSet& scen) {
    const auto totals = payoff_totals(spec, scen);
    // Weights are uniform under P; the dot keeps the op honest about
    // "probability-weighted" if that ever changes.
    Estimate e = estimate_of(totals);
    e.mean = kernels::dot(scen.weights, totals);
    return e;
}

std::vector<double> accrue(const SecuritySpec& spec, std::span<const double> positions,
                           std::size_t k, double z_prev, double z_at_k) {
    const double inc = step_increment(spec, k, z_prev, z_at_k);
    std::vector<double> transfers(positions.size(), 0.0);
    if (inc == 0.0) return transfers;
    for (std::size_t i = 0; i < positions.size(); ++i) transfers[i] = positions[i] * inc;
    return transfers;
}

}  // namespace msim
