#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "msim/engine.hpp"

namespace msim::stats {

/// Minimum sample size for any test statistic.
inline constexpr std::size_t kMinSamples = 8;

/// Per-step price changes with Halted steps excluded; a diff is kept only when
/// both of its endpoints are non-Halted. In log mode pairs with a nonpositive
/// endpoint are dropped (and counted).
struct ReturnSeries {
    std::vector<double> diffs;
    bool log_mode = false;
    std::size_t dropped_nonpositive = 0;

    std::size_t n() const { return diffs.size(); }
};

ReturnSeries returns_from_prices(std::span<const double> prices,
                                 std::span<const bool> halted, bool log_mode);

double skewness(std::span<const double> x);
double excess_kurtosis(std::span<const double> x);

struct JarqueBera {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// JB = n/6 (S^2 + K^2/4), p from chi-square with 2 dof (= exp(-JB/2)).
JarqueBera jarque_bera(std::span<const double> x);
double jb_statistic(std::size_t n, double skew, double ex_kurtosis);
double chi2_sf_2dof(double x);

struct TailReport {
    std::size_t count = 0;
    std::size_t n = 0;
    double frequency = 0.0;
    double gaussian = 0.0;  // 2(1 - Phi(z))
};

/// Fraction of |standardized value| > z against the Gaussian benchmark.
TailReport tail_exceedance(std::span<const double> x, double z);

struct ExcursionReport {
    std::size_t n_bubbles = 0;
    std::size_t n_depressions = 0;
    std::vector<std::size_t> durations;  // per episode, in step order
    double time_fraction_outside = 0.0;  // outside steps / non-Halted steps
    std::size_t n_jumps = 0;
    std::vector<double> jump_sizes;
};

/// Episode accounting over per-step condition labels and the engine's jump
/// flags; depends only on those columns, never on trader identities.
ExcursionReport excursions(std::span<const Condition> conditions,
                           std::span<const bool> jumps,
                           std::span<const double> jump_sizes);

struct VarianceGrowth {
    std::vector<double> times;
    std::vector<double> variances;
    double slope_origin = 0.0;  // least squares through the origin
    double r2_origin = 0.0;     // uncentered R^2 for the through-origin fit
    double slope = 0.0;         // free least squares
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Across-path variance at each checkpoint index and its linearity in time.
VarianceGrowth variance_growth(std::span<const std::vector<double>> paths,
                               std::span<const std::size_t> checkpoints, double dt);

/// Secondary jump detector for external data only (the simulator's own jump
/// flags come from the clearing engine): indices with |x - median| > mult * MAD
/// scale (MAD scaled by 1.4826 to be consistent for Gaussians).
std::vector<std::size_t> detect_jumps_mad(std::span<const double> x, double mult = 6.0);

}  // namespace msim::stats
