#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "bmo/time_grid.hpp"

namespace bmo {

// The integrand theta of M = integral of theta dW. Three flavours:
//   Constant             theta = lambda
//   PiecewiseDeterministic one value per grid interval
//   StateDependent       bounded theta(t, w), declared sup bound
// The declared bound keeps <M>_T <= bound^2 * T, which is what the whole
// test bed relies on (Novikov, martingale property of the exponential).
struct IntegrandSpec {
    enum class Kind { Constant, PiecewiseDeterministic, StateDependent };

    Kind kind = Kind::Constant;
    double value = 0.0;                             // Constant
    Eigen::VectorXd values;                         // Piecewise, one per interval
    std::function<double(double, double)> fn;       // StateDependent theta(t, w)
    double bound = 0.0;                             // sup |theta|
    std::string label;

    static IntegrandSpec constant(double lambda);
    static IntegrandSpec piecewise(Eigen::VectorXd per_interval);
    static IntegrandSpec state_dependent(std::function<double(double, double)> theta,
                                         double declared_bound, std::string label);
    // Named family theta(t, w) = base * (1 + swing * sin w); bound = |base|(1 + |swing|).
    static IntegrandSpec sine(double base, double swing);

    bool is_deterministic() const { return kind != Kind::StateDependent; }

    double at(int step, double t, double w) const;
    // theta(t_k, w) for a whole column of states (left-endpoint evaluation).
    Eigen::ArrayXd at(const TimeGrid& grid, int step, const Eigen::ArrayXd& w) const;

    // Throws InputError if the spec is malformed for this grid or if sampling
    // finds |theta| above the declared bound.
    void validate(const TimeGrid& grid) const;
};

}  // namespace bmo
