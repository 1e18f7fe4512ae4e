#include "msim/paths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "msim/rng.hpp"

namespace msim {

SemimartingalePath SemimartingaleSet::extract(std::size_t i) const {
    SemimartingalePath p;
    p.grid = grid;
    p.z0 = z0;
    p.drift_rate = drift_rate;
    p.sigma = sigma;
    const auto src = brownian.path(i);
    p.b.assign(src.begin(), src.end());
    p.z.resize(p.b.size());
    for (std::size_t k = 0; k < p.b.size(); ++k) p.z[k] = z_at(i, k);
    return p;
}

PathSet gen_brownian(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
    if (n_paths < 1) throw std::invalid_argument("gen_brownian: n_paths must be >= 1");
    PathSet out;
    out.grid = grid;
    out.n_paths = n_paths;
    out.b.resize(n_paths * grid.n_points());
    const double sqrt_dt = std::sqrt(grid.dt);
    for (std::size_t i = 0; i < n_paths; ++i) {
        GaussStream g(derive_stream(seed, kBrownianPath, i));
        double* row = out.b.data() + i * grid.n_points();
        row[0] = 0.0;
        for (std::size_t k = 1; k <= grid.n_steps; ++k)
            row[k] = row[k - 1] + sqrt_dt * g();
    }
    return out;
}

SemimartingaleSet gen_semimartingale(const TimeGrid& grid, double z0, double drift_rate,
                                     double sigma, std::size_t n_paths,
                                     std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("gen_semimartingale: sigma must be >= 0");
    SemimartingaleSet out;
    out.grid = grid;
    out.z0 = z0;
    out.drift_rate = drift_rate;
    out.sigma = sigma;
    out.brownian = gen_brownian(grid, n_paths, seed);
    return out;
}

SemimartingalePath gen_semimartingale_path(const TimeGrid& grid, double z0,
                                           double drift_rate, double sigma,
                                           std::uint64_t seed) {
    return gen_semimartingale(grid, z0, drift_rate, sigma, 1, seed).extract(0);
}

std::optional<std::size_t> ScenarioSet::support_pos(std::size_t grid_index) const {
    const auto it = std::lower_bound(support.begin(), support.end(), grid_index);
    if (it == support.end() || *it != grid_index) return std::nullopt;
    return static_cast<std::size_t>(it - support.begin());
}

ScenarioSet sample_scenarios(const TimeGrid& grid, std::size_t anchor_index,
                             double anchor_value, double drift_rate, double sigma,
                             std::vector<std::size_t> support, std::size_t n_paths,
                             std::uint64_t seed) {
    if (anchor_index > grid.n_steps)
        throw std::invalid_argument("sample_scenarios: anchor index out of range");
    if (n_paths < 1) throw std::invalid_argument("sample_scenarios: n_paths must be >= 1");
    if (sigma < 0.0) throw std::invalid_argument("sample_scenarios: sigma must be >= 0");
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] <= anchor_index || support[i] > grid.n_steps)
            throw std::invalid_argument("sample_scenarios: support index out of range");
        if (i > 0 && support[i] <= support[i - 1])
            throw std::invalid_argument("sample_scenarios: support must be ascending");
    }

    ScenarioSet out;
    out.grid = grid;
    out.anchor_index = anchor_index;
    out.anchor_value = anchor_value;
    out.support = std::move(support);
    out.n_paths = n_paths;
    out.values.resize(n_paths * out.support.size());
    out.weights.assign(n_paths, 1.0 / static_cast<double>(n_paths));

    const std::size_t m = out.support.size();
    for (std::size_t i = 0; i < n_paths; ++i) {
        GaussStream g(derive_stream(seed, kScenario, anchor_index, i));
        double z = anchor_value;
        double t_prev = grid.time_at(anchor_index);
        double* row = out.values.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double t = grid.time_at(out.support[j]);
            const double tau = t - t_prev;
            z += drift_rate * tau + sigma * std::sqrt(tau) * g();
            row[j] = z;
            t_prev = t;
        }
    }
    return out;
}

ScenarioSet conditional_scenarios(std::span<const double> realized_z,
                                  const TimeGrid& grid, std::size_t anchor_index,
                                  double drift_rate, double sigma, std::size_t n_paths,
                                  std::uint64_t seed) {
    if (anchor_index > grid.n_steps)
        throw std::invalid_argument("conditional_scenarios: anchor index out of range");
    if (realized_z.size() <= anchor_index)
        throw std::invalid_argument("conditional_scenarios: prefix shorter than anchor");
    std::vector<std::size_t> support;
    support.reserve(grid.n_steps - anchor_index);
    for (std::size_t k = anchor_index + 1; k <= grid.n_steps; ++k) support.push_back(k);
    return sample_scenarios(grid, anchor_index, realized_z[anchor_index], drift_rate,
                            sigma, std::move(support), n_paths, seed);
}

}  // namespace msim
