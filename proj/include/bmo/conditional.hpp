#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmo/paths.hpp"
#include "bmo/stats.hpp"
#include "bmo/time_grid.hpp"

namespace bmo {

// Conditional expectations E[Z | F_t] along simulated paths, slice by slice.
// All test integrands are Markov in W, so the conditioning state is
// (t_k, W_{t_k}) and each time slice is fitted independently.
//
// The regression route fits polynomials of the standardized state in an
// in-sample orthonormal basis and drops the top coefficients whose
// t-statistics fall below a significance cutoff: flat conditional kernels
// collapse to the slice mean, which keeps essential-suprema of fitted
// fields from being driven by extreme-state wiggle. Fitted values are
// evaluated with the state clamped to an inner quantile range.

struct RegressionOptions {
    int degree = 4;
    double t_threshold = 5.0;      // keep coefficient j while |t_j| >= threshold
    double clamp_quantile = 0.999; // evaluate within [1-q, q] state quantiles
};

// One fitted slice: polynomial in the standardized state.
struct SliceFit {
    double x_mean = 0.0, x_sd = 1.0;
    double x_lo = 0.0, x_hi = 0.0;     // raw-state evaluation clamp
    Eigen::VectorXd beta;              // monomial coefficients, standardized state
    Eigen::MatrixXd l_inv;             // inverse Cholesky factor of the Gram matrix
    double sigma = 0.0;                // residual standard deviation
    Eigen::Index n = 0;
    int kept_degree = 0;
    bool rank_reduced = false;         // degree lowered because the design lost rank

    double evaluate(double w) const;
    Eigen::ArrayXd evaluate(const Eigen::ArrayXd& w) const;
    // First-order standard error of the fitted value at state w.
    double fitted_se(double w) const;
};

SliceFit fit_slice(const Eigen::ArrayXd& states, const Eigen::ArrayXd& y,
                   const RegressionOptions& opt);

struct SliceEstimator {
    enum class Kind { ClosedForm, PolynomialRegression, NestedMonteCarlo };
    Kind kind = Kind::PolynomialRegression;
    std::function<double(double, double)> kernel;  // ClosedForm: (t, w) -> E[Z|F_t]
    RegressionOptions reg;
    int branch = 256;                              // NestedMonteCarlo branch factor

    static SliceEstimator closed_form(std::function<double(double, double)> kernel);
    static SliceEstimator regression(int degree = 4);
    static SliceEstimator nested(int branch);
};

struct ConditionalField {
    TimeGrid grid;
    Eigen::ArrayXXd values;        // n_paths x n_times, estimate of E[Z_k | F_{t_k}]
    Eigen::ArrayXXd se;            // per-point standard errors (nested route only)
    Eigen::VectorXd slice_max;
    Eigen::VectorXd slice_quantile;
    Eigen::VectorXd slice_mean;
    Eigen::VectorXd slice_se;      // SE of the fitted value at the slice argmax
    std::vector<std::string> warnings;
    std::string method;
};

// Payoff provider: payoff(k) returns the per-path payoff whose conditional
// expectation at t_k is wanted. It must be built from time-k-onward
// information (forward ratios, remaining integrals).
using SlicePayoff = std::function<Eigen::ArrayXd(int)>;

ConditionalField estimate_conditional(const Eigen::ArrayXXd& states, const TimeGrid& grid,
                                      const SlicePayoff& payoff, const SliceEstimator& est);

// Conditional expectation under d(tilde P) = E_T(M) dP via the ratio of two
// same-slice fits:  E~[Z|F_k] = E[E_{k,T} Z|F_k] / E[E_{k,T}|F_k].
// forward_weight(k) must return E_{k,T} = Exp_T / Exp_k per path.
ConditionalField estimate_conditional_tilde(const Eigen::ArrayXXd& states, const TimeGrid& grid,
                                            const SlicePayoff& payoff,
                                            const SlicePayoff& forward_weight,
                                            const SliceEstimator& est);

// Forward-weight provider from a filled exponential.
SlicePayoff forward_weights(const ProcessPaths& density);

// Structured payoffs the nested oracle can re-simulate from any (t_k, w).
enum class NestedPayoffKind {
    RemainingQV,       // <M>_T - <M>_t
    ForwardExpMoment,  // (E_{t,T})^exponent
};

ConditionalField estimate_conditional_nested(const PathBundle& bundle, const IntegrandSpec& spec,
                                             NestedPayoffKind kind, double exponent, int branch,
                                             std::uint64_t seed_tag = 0);

// One nested estimate at a single (step, state); exposes the inner standard
// error for convergence checks.
stats::MeanSe nested_point_estimate(const TimeGrid& grid, const IntegrandSpec& spec,
                                    NestedPayoffKind kind, double exponent, int step, double w0,
                                    int branch, std::uint64_t seed);

struct EssSupPolicy {
    bool use_max = true;       // default: max over paths and steps
    double quantile = 0.999;   // companion (or primary when use_max = false)
};

struct EssSup {
    double value = 0.0;          // per the policy
    double max_value = 0.0;
    double quantile_value = 0.0;
    int arg_step = 0;
    double se = 0.0;
};

EssSup ess_sup(const ConditionalField& field, const EssSupPolicy& policy = {});

}  // namespace bmo
