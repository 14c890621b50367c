#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmo/conditional.hpp"
#include "bmo/paths.hpp"

namespace bmo {

struct BmoEstimate {
    double value = 0.0;            // policy estimate (max over paths and steps by default)
    double quantile_value = 0.0;   // high-quantile companion
    double se = 0.0;               // first-order SE at the maximizing slice
    int arg_step = 0;
    std::string method;
    std::vector<std::string> warnings;
    Eigen::Index n_paths = 0;
    int n_steps = 0;
};

// ||M||_BMO: sup over grid times of the essential supremum of
// E[<M>_T - <M>_t | F_t]^{1/2}. Pass density (a process with its
// exponential filled) to evaluate the norm under d(tilde P) = E_T dP by
// conditional reweighting; null density means the original measure.
BmoEstimate bmo_norm(const ProcessPaths& proc, const Eigen::ArrayXXd& states,
                     const SliceEstimator& est, const ProcessPaths* density = nullptr,
                     const EssSupPolicy& policy = {});

// Reverse Holder constant: sup over grid times of the essential supremum of
// E[{E_{t,T}(M)}^p | F_t]. Warns when the top 0.1% of paths dominate the
// moment mass.
BmoEstimate rp_constant(const ProcessPaths& exp_proc, double p, const Eigen::ArrayXXd& states,
                        const SliceEstimator& est, const EssSupPolicy& policy = {});

// Muckenhoupt constant: same with exponent -1/(p-1).
BmoEstimate ap_constant(const ProcessPaths& exp_proc, double p, const Eigen::ArrayXXd& states,
                        const SliceEstimator& est, const EssSupPolicy& policy = {});

}  // namespace bmo
