#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msim/time_grid.hpp"

namespace msim {

/// Batch of Brownian paths, cumulative levels row-major per path
/// (n_steps + 1 points each, b[0] = 0, increments ~ N(0, dt)).
struct PathSet {
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::vector<double> b;

    std::span<const double> path(std::size_t i) const {
        return std::span<const double>(b).subspan(i * grid.n_points(), grid.n_points());
    }
};

/// One realized price-level path z_k = z0 + sigma * b_k + drift_rate * t_k.
struct SemimartingalePath {
    TimeGrid grid;
    double z0 = 0.0;
    double drift_rate = 0.0;
    double sigma = 1.0;
    std::vector<double> b;
    std::vector<double> z;
};

/// Batch counterpart; z values are derived from the Brownian matrix on demand.
struct SemimartingaleSet {
    TimeGrid grid;
    double z0 = 0.0;
    double drift_rate = 0.0;
    double sigma = 1.0;
    PathSet brownian;

    std::size_t n_paths() const { return brownian.n_paths; }
    double b_at(std::size_t i, std::size_t k) const { return brownian.path(i)[k]; }
    double z_at(std::size_t i, std::size_t k) const {
        return z0 + sigma * b_at(i, k) + drift_rate * grid.time_at(k);
    }
    SemimartingalePath extract(std::size_t i) const;
};

PathSet gen_brownian(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed);

SemimartingaleSet gen_semimartingale(const TimeGrid& grid, double z0, double drift_rate,
                                     double sigma, std::size_t n_paths,
                                     std::uint64_t seed);

SemimartingalePath gen_semimartingale_path(const TimeGrid& grid, double z0,
                                           double drift_rate, double sigma,
                                           std::uint64_t seed);

/// Conditional re-simulation of the underlying from the anchor (t_k, z_k) to the
/// horizon: M sub-paths sampled under P at the `support` grid indices (ascending,
/// all > anchor unless the tail is empty). Transitions over support gaps are exact
/// for arithmetic Brownian motion. Weights are uniform under P.
struct ScenarioSet {
    TimeGrid grid;
    std::size_t anchor_index = 0;
    double anchor_value = 0.0;
    std::vector<std::size_t> support;
    std::size_t n_paths = 0;
    std::vector<double> values;  // n_paths x support.size(), row-major per path
    std::vector<double> weights;

    double value(std::size_t path, std::size_t support_pos) const {
        return values[path * support.size() + support_pos];
    }
    std::optional<std::size_t> support_pos(std::size_t grid_index) const;
};

/// General sampler with caller-chosen support.
ScenarioSet sample_scenarios(const TimeGrid& grid, std::size_t anchor_index,
                             double anchor_value, double drift_rate, double sigma,
                             std::vector<std::size_t> support, std::size_t n_paths,
                             std::uint64_t seed);

/// Dense tails over every remaining grid point, anchored on a realized prefix.
ScenarioSet conditional_scenarios(std::span<const double> realized_z,
                                  const TimeGrid& grid, std::size_t anchor_index,
                                  double drift_rate, double sigma, std::size_t n_paths,
                                  std::uint64_t seed);

}  // namespace msim
