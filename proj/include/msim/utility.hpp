#pragma once

#include <span>
#include <stdexcept>

namespace msim {

/// Indifference comparisons treat |ΔU| <= kUtilityTol as equal.
inline constexpr double kUtilityTol = 1e-10;
/// Reservation prices are solved to this interval width (contract: <= 200
/// bisection iterations; the solver tightens to 1e-11 internally).
inline constexpr double kPriceTol = 1e-9;

/// von Neumann-Morgenstern utility over terminal wealth in numéraire units.
/// Linear is the risk-neutral member; CARA and CRRA are strictly concave.
struct UtilityFn {
    enum class Family { linear, cara, crra };

    Family family = Family::linear;
    double gamma = 0.0;  // CARA absolute risk aversion, > 0
    double eta = 0.0;    // CRRA curvature, > 0
    double floor = 0.0;  // CRRA wealth floor w0, > 0; defined for wealth > -w0

    static UtilityFn linear() { return {}; }
    static UtilityFn cara(double gamma);
    static UtilityFn crra(double eta, double floor);

    bool defined_at(double wealth) const;
    /// Throws std::domain_error outside the domain (CRRA below the floor).
    double value(double wealth) const;
    bool concave() const { return family != Family::linear; }
};

/// Mean over scenario samples of u(cash + total contingent consumption).
double expected_utility(const UtilityFn& u, double cash,
                        std::span<const double> payoff_totals);

enum class Preference { first, second, indifferent };

Preference prefer(const UtilityFn& u, double cash_a, std::span<const double> payoff_a,
                  double cash_b, std::span<const double> payoff_b);

}  // namespace msim
