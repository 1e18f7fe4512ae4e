#include "msim/measure.hpp"

#include <cmath>
#include <stdexcept>

#include "msim/kernels.hpp"

namespace msim {

MeasureChange stochastic_exponential(double h, std::span<const double> b,
                                     const TimeGrid& grid) {
    if (b.size() != grid.n_points())
        throw std::invalid_argument("stochastic_exponential: path/grid mismatch");
    MeasureChange mc;
    const std::size_t n = b.size();
    mc.l.resize(n);
    mc.qv_l.resize(n);
    mc.density.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        mc.l[k] = -h * b[k];
        mc.qv_l[k] = h * h * grid.time_at(k);
        mc.density[k] = std::exp(mc.l[k] - 0.5 * mc.qv_l[k]);
    }
    return mc;
}

double novikov_value(double h, double horizon) {
    return std::exp(0.5 * h * h * horizon);
}

bool MartingaleReport::all_drift_removed() const {
    for (const auto& r : rows)
        if (!r.drift_removed) return false;
    return true;
}

bool MartingaleReport::all_density_unit() const {
    for (const auto& r : rows)
        if (!r.density_unit) return false;
    return true;
}

namespace {

CheckpointDiagnostic diagnose_checkpoint(std::size_t k, double time, double z0,
                                         std::span<const double> weighted,
                                         std::span<const double> densities) {
    const double n = static_cast<double>(weighted.size());
    CheckpointDiagnostic row;
    row.k = k;
    row.time = time;
    row.weighted_mean_z = kernels::sum(weighted) / n;
    row.mean_density = kernels::sum(densities) / n;
    const auto mz = kernels::central_moments(weighted, row.weighted_mean_z);
    const auto md = kernels::central_moments(densities, row.mean_density);
    row.se_z = n > 1 ? std::sqrt(mz.m2 / (n - 1.0) / n) : 0.0;
    row.se_density = n > 1 ? std::sqrt(md.m2 / (n - 1.0) / n) : 0.0;
    row.drift_removed = std::abs(row.weighted_mean_z - z0) <= 3.0 * row.se_z;
    row.density_unit = std::abs(row.mean_density - 1.0) <= 3.0 * row.se_density;
    return row;
}

}  // namespace

MartingaleReport martingale_diagnostic(const SemimartingaleSet& paths, double h,
                                       std::span<const std::size_t> checkpoints) {
    MartingaleReport report;
    report.z0 = paths.z0;
    report.h = h;
    report.n_paths = paths.n_paths();
    const std::size_t n = paths.n_paths();
    std::vector<double> weighted(n), densities(n);
    for (std::size_t k : checkpoints) {
        if (k > paths.grid.n_steps)
            throw std::invalid_argument("martingale_diagnostic: checkpoint out of range");
        const double t = paths.grid.time_at(k);
        const double half_qv = 0.5 * h * h * t;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::exp(-h * paths.b_at(i, k) - half_qv);
            densities[i] = d;
            weighted[i] = d * paths.z_at(i, k);
        }
        report.rows.push_back(diagnose_checkpoint(k, t, paths.z0, weighted, densities));
    }
    return report;
}

MartingaleReport martingale_diagnostic(std::span<const SemimartingalePath> paths,
                                       std::span<const MeasureChange> changes,
                                       std::span<const std::size_t> checkpoints) {
    if (paths.size() != changes.size())
        throw std::invalid_argument("martingale_diagnostic: path/measure count mismatch");
    if (paths.empty())
        throw std::invalid_argument("martingale_diagnostic: no paths");
    MartingaleReport report;
    report.z0 = paths[0].z0;
    report.n_paths = paths.size();
    const std::size_t n = paths.size();
    std::vector<double> weighted(n), densities(n);
    for (std::size_t k : checkpoints) {
        if (k > paths[0].grid.n_steps)
            throw std::invalid_argument("martingale_diagnostic: checkpoint out of range");
        for (std::size_t i = 0; i < n; ++i) {
            densities[i] = changes[i].density[k];
            weighted[i] = densities[i] * paths[i].z[k];
        }
        report.rows.push_back(diagnose_checkpoint(k, paths[0].grid.time_at(k),
                                                  report.z0, weighted, densities));
    }
    return report;
}

}  // namespace msim
