#pragma once

#include <cstddef>
#include <stdexcept>

namespace msim {

/// Discrete trading grid t_k = k * dt, k = 0..n_steps, with dt = horizon / n_steps.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t n_steps = 1;
    double dt = 1.0;

    TimeGrid() = default;
    TimeGrid(double horizon_, std::size_t n_steps_)
        : horizon(horizon_), n_steps(n_steps_) {
        if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
        dt = horizon / static_cast<double>(n_steps);
    }

    double time_at(std::size_t k) const { return dt * static_cast<double>(k); }
    std::size_t n_points() const { return n_steps + 1; }
};

}  // namespace msim
