#pragma once

#include <Eigen/Dense>

#include "bmo/paths.hpp"
#include "bmo/stats.hpp"

namespace bmo {

// Per-path Radon-Nikodym weights E_T(M) for the change of measure
// d(tilde P) = E_T(M) dP, with degeneracy diagnostics.
struct MeasureChange {
    Eigen::ArrayXd weights;     // strictly positive
    double mean = 0.0;          // should sit near 1 (martingale property)
    double se_mean = 0.0;
    double ess = 0.0;           // Kish effective sample size
    double ess_floor = 0.0;     // warn below this
    bool degenerate = false;
};

MeasureChange make_measure_change(const ProcessPaths& proc, double ess_floor_fraction = 0.1);

// tilde X = <X,M> - X for X and M built over the same bundle. The square
// characteristic of the transform equals the original one by construction
// (same left-point increments), and tilde M = <M> - M is the special case
// X = M.
struct TildeProcesses {
    ProcessPaths tilde_x;
    ProcessPaths tilde_m;
    Eigen::ArrayXXd cross_qv;   // <X,M>
};

TildeProcesses tilde_transform(const PathBundle& bundle, const ProcessPaths& x,
                               const ProcessPaths& m, const IntegrandSpec& spec_x,
                               const IntegrandSpec& spec_m);

// Expectation under tilde P by reweighting: mean of w * payoff, with the
// plain (not self-normalized) estimator and its standard error.
stats::MeanSe expect_tilde(const Eigen::ArrayXd& payoff, const MeasureChange& mc);

// Direct simulation of tilde X under tilde P: drive a fresh Brownian motion
// w_tilde, reconstruct the P-state W through dW = dW_tilde + theta_M dt and
// build tilde X via d(tilde X) = -theta_X dW_tilde.
struct TildeSimulation {
    ProcessPaths x_tilde;       // a tilde-P martingale, simulated directly
    Eigen::ArrayXXd w;          // reconstructed P-states (regression state)
};

TildeSimulation simulate_under_tilde(const TimeGrid& grid, const IntegrandSpec& spec_m,
                                     const IntegrandSpec& spec_x, Eigen::Index n_paths,
                                     std::uint64_t seed);

}  // namespace bmo
