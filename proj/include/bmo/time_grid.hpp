#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "bmo/errors.hpp"

namespace bmo {

// Uniform grid on [0, T]. Steps are the n_steps intervals; grid points are
// the n_steps + 1 times t_k = k * dt.
struct TimeGrid {
    double horizon = 1.0;
    int n_steps = 2;

    static TimeGrid uniform(double horizon, int n_steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw InputError("TimeGrid: horizon must be positive and finite");
        if (n_steps < 2)
            throw InputError("TimeGrid: need at least 2 steps");
        return TimeGrid{horizon, n_steps};
    }

    double dt() const { return horizon / n_steps; }
    int n_times() const { return n_steps + 1; }
    double time(int k) const { return k == n_steps ? horizon : k * dt(); }

    Eigen::VectorXd times() const {
        Eigen::VectorXd t(n_times());
        for (int k = 0; k <= n_steps; ++k) t[k] = time(k);
        return t;
    }

    bool operator==(const TimeGrid& o) const {
        return horizon == o.horizon && n_steps == o.n_steps;
    }
};

}  // namespace bmo
