#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "bmo/integrand.hpp"
#include "bmo/time_grid.hpp"

namespace bmo {

// A block of simulated Brownian paths. Rows are paths, columns are grid
// steps (dw) or grid times (w); column slices are contiguous.
struct PathBundle {
    TimeGrid grid;
    std::uint64_t seed = 0;
    int block_size = 8192;          // rows generated per block
    Eigen::ArrayXXd dw;             // n_paths x n_steps, increments
    Eigen::ArrayXXd w;              // n_paths x (n_steps + 1), w.col(0) = 0

    Eigen::Index n_paths() const { return dw.rows(); }
};

PathBundle simulate_brownian(const TimeGrid& grid, Eigen::Index n_paths,
                             std::uint64_t seed, int block_size = 8192);

// Merge adjacent increments (factor must divide n_steps): the coarse bundle
// is the same Brownian motion viewed on the coarser grid. Used for
// weak-order refinement checks with common noise.
PathBundle coarsen(const PathBundle& bundle, int factor);

// Debug dump, columns: path,step,dw. Caps at max_paths rows of paths.
void write_csv(const PathBundle& bundle, std::ostream& os, Eigen::Index max_paths);

// The driving martingale M = integral theta dW, its square characteristic
// <M> = integral theta^2 dt (left-point rule, exact for deterministic theta)
// and, once filled, the stochastic exponential exp(M - <M>/2).
struct ProcessPaths {
    TimeGrid grid;
    Eigen::ArrayXXd m;        // n_paths x (n_steps + 1), m.col(0) = 0
    Eigen::ArrayXXd qv;       // same shape, qv.col(0) = 0, nondecreasing
    Eigen::ArrayXXd exp_m;    // empty until stochastic_exponential fills it
    std::vector<Eigen::Index> overflow_paths;  // |m| above cap, flagged not clamped

    Eigen::Index n_paths() const { return m.rows(); }
    bool has_exponential() const { return exp_m.size() > 0; }
};

ProcessPaths build_martingale(const PathBundle& bundle, const IntegrandSpec& spec);

// Fills proc.exp_m in place and returns proc. Paths where |M| exceeds the
// cap at any grid point are recorded in overflow_paths.
ProcessPaths& stochastic_exponential(ProcessPaths& proc, double cap = 700.0);

// Discrete cross-variation <X,M> with the same left-point rule.
Eigen::ArrayXXd cross_variation(const PathBundle& bundle, const IntegrandSpec& spec_x,
                                const IntegrandSpec& spec_m);

}  // namespace bmo
