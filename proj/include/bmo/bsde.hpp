#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmo/conditional.hpp"
#include "bmo/girsanov.hpp"
#include "bmo/paths.hpp"

namespace bmo {

// Linear BSDE with generator affine in (Y, psi), integrated against d<M>:
//   Y_t = Y_0 - int_0^t [a Y_s + b psi_s] d<M>_s - F_t + int_0^t psi_s dM_s (+ N_t)
// where F is a nondecreasing forcing (d<X> where present) and Y_T is a
// constant. The backward step is implicit in Y and explicit in psi:
//   Y_k = ( E[Y_{k+1}|F_k] + b psi_k d<M>_k + dF_k ) / (1 - a d<M>_k)
//   psi_k = E[(Y_{k+1} - E[Y_{k+1}|F_k]) dM_k | F_k] / d<M>_k
struct LinearBsdeSpec {
    double coef_y = 0.0;       // a
    double coef_psi = 0.0;     // b
    double terminal = 1.0;
    SlicePayoff forcing;       // forcing(k) = per-path increment dF_k >= 0, may be null
    std::string label;

    // Y_t = E[{E_{t,T}(M)}^p | F_t]: a = p(p-1)/2, b = p, terminal 1.
    static LinearBsdeSpec reverse_holder(double p);
    // Negative-moment analogue: a = p/(2(p-1)^2), b = -1/(p-1), terminal 1.
    static LinearBsdeSpec muckenhoupt(double p);
    // Remaining-quadratic-variation process: a = 0, b = +1, terminal 0,
    // forcing d<X>.
    static LinearBsdeSpec quadratic_forcing(SlicePayoff d_qv_x);
};

struct BsdeSolution {
    TimeGrid grid;
    Eigen::ArrayXXd y;               // n_paths x (n_steps + 1); terminal pinned exactly
    Eigen::ArrayXXd psi;             // n_paths x n_steps
    Eigen::VectorXd residual_mean;   // orthogonal residual, mean per step
    Eigen::VectorXd residual_var;    // and its variance per step
    Eigen::VectorXd explained_var;   // variance of psi dM per step
    double y_sup = 0.0;              // ||Y||_inf estimate
    double psi_m_bmo = 0.0;          // ||psi . M||_BMO estimate
    std::vector<std::string> warnings;
};

// Solves backward along the simulated paths. `driver` is the martingale
// whose increments multiply psi (pass the tilde process to drive by it).
// With `density` the conditional expectations are taken under
// d(tilde P) = E_T dP via one-step reweighting.
BsdeSolution solve_backward(const LinearBsdeSpec& spec, const PathBundle& bundle,
                            const ProcessPaths& driver, const SliceEstimator& est,
                            const ProcessPaths* density = nullptr);

// BMO norm of int psi dM given the per-step integrand values.
double psi_martingale_bmo(const PathBundle& bundle, const ProcessPaths& driver,
                          const Eigen::ArrayXXd& psi, const SliceEstimator& est,
                          const ProcessPaths* density = nullptr);

// Numerical check of the two directions of the equivalence between the
// moment condition and the bounded positive solution.
struct Lemma1Report {
    bool forward = true;
    double max_abs_mean_residual = 0.0;  // forward: recursion residual, mean per step
    Eigen::VectorXd drift_z;             // backward: z-statistics of the Y E^p drift
    double max_abs_drift_z = 0.0;
    double y0_mean = 0.0;                // solved / built Y at time 0
    double moment_mean = 0.0;            // sample E[{E_{0,T}}^p]
    double moment_se = 0.0;
    std::vector<std::string> warnings;
};

Lemma1Report verify_lemma1(bool forward, double p, const PathBundle& bundle,
                           const ProcessPaths& exp_proc, const SliceEstimator& est);

// One application of the Picard map: (y, psi) -> (Y, Psi) through the
// conditional-expectation formula under tilde P with the driving martingale
// tilde M = <M> - M.
struct PicardState {
    Eigen::ArrayXXd y;     // n_paths x (n_steps + 1)
    Eigen::ArrayXXd psi;   // n_paths x n_steps
};

PicardState picard_operator(const PicardState& in, double p, const PathBundle& bundle,
                            const ProcessPaths& m_proc, const SliceEstimator& est);

PicardState picard_zero_state(Eigen::Index n_paths, const TimeGrid& grid);

struct PicardTrace {
    struct Row {
        int iter = 0;
        double dy_sup = 0.0;       // sup |delta Y| between successive iterates
        double dpsi_bmo = 0.0;     // BMO(tilde P) distance of int delta Psi d tilde M
        double dist2 = 0.0;        // dy_sup^2 + dpsi_bmo^2
        double ratio = 0.0;        // dist2 / previous dist2 (0 when at floor)
        bool at_floor = false;     // previous distance at noise floor, ratio not meaningful
    };
    std::vector<Row> rows;
    double alpha = 0.0, beta = 0.0;  // predicted contraction factors at (p, norm)
    bool converged = false;
};

struct PicardResult {
    PicardTrace trace;
    PicardState state;
};

// Iterates the map from `start` (zero state when null) until the combined
// distance falls below tol or k_max is reached. Throws NonContractionError
// when the predicted factors are not both below 1 at (p, tilde_norm), or
// when measured ratios persistently exceed 1.
PicardResult picard_iterate(double p, const PathBundle& bundle, const ProcessPaths& m_proc,
                            const SliceEstimator& est, double tilde_norm, int k_max = 12,
                            double tol = 1e-7, const PicardState* start = nullptr);

// The Y-process of the isomorphism theorem:
// Y_t = E~[<X>_T - <X>_t | F_t], with ||Y||_inf = ||tilde X||^2_BMO(tilde P),
// plus the residual of its backward equation as a consistency diagnostic.
struct QuadraticYProcess {
    ConditionalField y;
    double y_sup = 0.0;
    double y_sup_quantile = 0.0;
    double se = 0.0;
    double max_abs_mean_residual = 0.0;
};

QuadraticYProcess theorem2_y_process(const PathBundle& bundle, const ProcessPaths& x_proc,
                                     const ProcessPaths& m_proc, const SliceEstimator& est);

}  // namespace bmo
