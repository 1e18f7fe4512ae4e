#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "msim/paths.hpp"
#include "msim/time_grid.hpp"

namespace msim {

/// Exponential change of measure for a constant integrand h:
/// L_t = -h * B_t, <L>_t = h^2 * t, density ℰ(L)_t = exp(L_t - <L>_t / 2).
struct MeasureChange {
    std::vector<double> l;
    std::vector<double> qv_l;
    std::vector<double> density;
};

MeasureChange stochastic_exponential(double h, std::span<const double> b,
                                     const TimeGrid& grid);

/// E[exp(<L>_T / 2)] = exp(h^2 T / 2); finite iff the Novikov condition holds.
double novikov_value(double h, double horizon);

struct CheckpointDiagnostic {
    std::size_t k = 0;
    double time = 0.0;
    double weighted_mean_z = 0.0;  // (1/n) sum_i density_i * z_i at t_k
    double se_z = 0.0;
    bool drift_removed = false;    // |weighted_mean_z - z0| <= 3 se_z
    double mean_density = 0.0;
    double se_density = 0.0;
    bool density_unit = false;     // |mean_density - 1| <= 3 se_density
};

struct MartingaleReport {
    double z0 = 0.0;
    double h = 0.0;
    std::size_t n_paths = 0;
    std::vector<CheckpointDiagnostic> rows;
    bool all_drift_removed() const;
    bool all_density_unit() const;
};

MartingaleReport martingale_diagnostic(const SemimartingaleSet& paths, double h,
                                       std::span<const std::size_t> checkpoints);

/// Materialized-set overload (errors on mismatched path counts).
MartingaleReport martingale_diagnostic(std::span<const SemimartingalePath> paths,
                                       std::span<const MeasureChange> changes,
                                       std::span<const std::size_t> checkpoints);

}  // namespace msim
