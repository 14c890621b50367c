#include "bmo/bsde.hpp"

#include <cmath>
#include <utility>

#include "bmo/constants.hpp"

namespace bmo {

namespace {

constexpr double kQvTiny = 1e-300;

// One-step conditional machinery shared by the solver and the Picard map.
// With a density, expectations are taken under tilde P through the one-step
// weight ratio; resid is always computed against the fitted mean.
struct StepConditional {
    Eigen::ArrayXd mean;    // E[y_next | F_k]
    Eigen::ArrayXd resid;   // y_next - mean (the martingale increment)
};

StepConditional step_conditional(const Eigen::ArrayXd& states, const Eigen::ArrayXd& y_next,
                                 const RegressionOptions& reg, const Eigen::ArrayXd* w1,
                                 bool* rank_flag) {
    StepConditional out;
    if (w1) {
        const SliceFit den = fit_slice(states, *w1, reg);
        const SliceFit num = fit_slice(states, *w1 * y_next, reg);
        Eigen::ArrayXd d = den.evaluate(states).max(0.02);
        out.mean = num.evaluate(states) / d;
        if (rank_flag && (den.rank_reduced || num.rank_reduced)) *rank_flag = true;
    } else {
        const SliceFit fit = fit_slice(states, y_next, reg);
        out.mean = fit.evaluate(states);
        if (rank_flag && fit.rank_reduced) *rank_flag = true;
    }
    out.resid = y_next - out.mean;
    return out;
}

// E[resid * dm | F_k] (under the same measure as above), per path.
Eigen::ArrayXd step_covariance(const Eigen::ArrayXd& states, const Eigen::ArrayXd& resid,
                               const Eigen::ArrayXd& dm, const RegressionOptions& reg,
                               const Eigen::ArrayXd* w1) {
    if (w1) {
        const SliceFit den = fit_slice(states, *w1, reg);
        const SliceFit num = fit_slice(states, *w1 * resid * dm, reg);
        return num.evaluate(states) / den.evaluate(states).max(0.02);
    }
    const SliceFit fit = fit_slice(states, resid * dm, reg);
    return fit.evaluate(states);
}

double var_of(const Eigen::ArrayXd& x) {
    const double m = x.mean();
    return (x - m).square().mean();
}

}  // namespace

LinearBsdeSpec LinearBsdeSpec::reverse_holder(double p) {
    if (!(p > 1.0)) throw InputError("reverse_holder spec: need p > 1");
    LinearBsdeSpec s;
    s.coef_y = 0.5 * p * (p - 1.0);
    s.coef_psi = p;
    s.terminal = 1.0;
    s.label = "reverse_holder(p=" + std::to_string(p) + ")";
    return s;
}

LinearBsdeSpec LinearBsdeSpec::muckenhoupt(double p) {
    if (!(p > 1.0)) throw InputError("muckenhoupt spec: need p > 1");
    LinearBsdeSpec s;
    s.coef_y = 0.5 * p / ((p - 1.0) * (p - 1.0));
    s.coef_psi = -1.0 / (p - 1.0);
    s.terminal = 1.0;
    s.label = "muckenhoupt(p=" + std::to_string(p) + ")";
    return s;
}

LinearBsdeSpec LinearBsdeSpec::quadratic_forcing(SlicePayoff d_qv_x) {
    LinearBsdeSpec s;
    s.coef_y = 0.0;
    s.coef_psi = 1.0;
    s.terminal = 0.0;
    s.forcing = std::move(d_qv_x);
    s.label = "quadratic_forcing";
    return s;
}

BsdeSolution solve_backward(const LinearBsdeSpec& spec, const PathBundle& bundle,
                            const ProcessPaths& driver, const SliceEstimator& est,
                            const ProcessPaths* density) {
    if (!(driver.grid == bundle.grid)) throw InputError("solve_backward: grid mismatch");
    if (!std::isfinite(spec.terminal)) throw InputError("solve_backward: non-finite terminal");
    if (est.kind == SliceEstimator::Kind::NestedMonteCarlo)
        throw InputError("solve_backward: regression or closed-form estimator required");
    if (density && !density->has_exponential())
        throw InputError("solve_backward: density exponential not filled");

    const TimeGrid& grid = bundle.grid;
    const Eigen::Index n = bundle.n_paths();
    BsdeSolution sol;
    sol.grid = grid;
    sol.y.resize(n, grid.n_times());
    sol.psi.setZero(n, grid.n_steps);
    sol.residual_mean.setZero(grid.n_steps);
    sol.residual_var.setZero(grid.n_steps);
    sol.explained_var.setZero(grid.n_steps);
    sol.y.col(grid.n_steps).setConstant(spec.terminal);

    bool rank_flag = false;
    const double a = spec.coef_y, b = spec.coef_psi;
    for (int k = grid.n_steps - 1; k >= 0; --k) {
        const Eigen::ArrayXd dm = driver.m.col(k + 1) - driver.m.col(k);
        const Eigen::ArrayXd dqv = driver.qv.col(k + 1) - driver.qv.col(k);

        Eigen::ArrayXd w1;
        const Eigen::ArrayXd* w1p = nullptr;
        if (density) {
            w1 = density->exp_m.col(k + 1) / density->exp_m.col(k);
            w1p = &w1;
        }

        const Eigen::ArrayXd y_next = sol.y.col(k + 1);
        const StepConditional sc = step_conditional(bundle.w.col(k), y_next, est.reg, w1p,
                                                    &rank_flag);
        const Eigen::ArrayXd cov = step_covariance(bundle.w.col(k), sc.resid, dm, est.reg, w1p);
        sol.psi.col(k) = (dqv > kQvTiny).select(cov / dqv.max(kQvTiny), 0.0);

        const Eigen::ArrayXd denom = 1.0 - a * dqv;
        if (denom.minCoeff() <= 1e-9)
            throw SchemeError("solve_backward: implicit step unsolvable at step " +
                              std::to_string(k) + " (1 - a d<M> <= 0); refine the grid");

        Eigen::ArrayXd forcing_k = Eigen::ArrayXd::Zero(n);
        if (spec.forcing) {
            forcing_k = spec.forcing(k);
            if (forcing_k.minCoeff() < -1e-12)
                throw InputError("solve_backward: forcing must be nonnegative");
        }

        sol.y.col(k) = (sc.mean + b * sol.psi.col(k) * dqv + forcing_k) / denom;

        const Eigen::ArrayXd explained = sol.psi.col(k) * dm;
        const Eigen::ArrayXd orth = sc.resid - explained;
        sol.residual_mean[k] = orth.mean();
        sol.residual_var[k] = var_of(orth);
        sol.explained_var[k] = var_of(explained);
    }
    if (rank_flag)
        sol.warnings.push_back("rank-deficient slice design encountered, degree lowered");

    sol.y_sup = sol.y.abs().maxCoeff();
    sol.psi_m_bmo = psi_martingale_bmo(bundle, driver, sol.psi, est, density);
    return sol;
}

double psi_martingale_bmo(const PathBundle& bundle, const ProcessPaths& driver,
                          const Eigen::ArrayXXd& psi, const SliceEstimator& est,
                          const ProcessPaths* density) {
    const TimeGrid& grid = bundle.grid;
    Eigen::ArrayXXd suffix(bundle.n_paths(), grid.n_times());
    suffix.col(grid.n_steps).setZero();
    for (int k = grid.n_steps - 1; k >= 0; --k) {
        const Eigen::ArrayXd dqv = driver.qv.col(k + 1) - driver.qv.col(k);
        suffix.col(k) = suffix.col(k + 1) + psi.col(k).square() * dqv;
    }
    const SlicePayoff payoff = [&suffix](int k) -> Eigen::ArrayXd { return suffix.col(k); };

    ConditionalField field =
        density ? estimate_conditional_tilde(bundle.w, grid, payoff, forward_weights(*density), est)
                : estimate_conditional(bundle.w, grid, payoff, est);
    const EssSup es = ess_sup(field);
    return std::sqrt(std::max(0.0, es.value));
}

Lemma1Report verify_lemma1(bool forward, double p, const PathBundle& bundle,
                           const ProcessPaths& exp_proc, const SliceEstimator& est) {
    if (!(p > 1.0)) throw InputError("verify_lemma1: need p > 1");
    if (!exp_proc.has_exponential())
        throw InputError("verify_lemma1: stochastic exponential not filled");

    const TimeGrid& grid = bundle.grid;
    const int last = grid.n_steps;
    Lemma1Report rep;
    rep.forward = forward;
    const Eigen::ArrayXd terminal_moment =
        (exp_proc.exp_m.col(last) / exp_proc.exp_m.col(0)).pow(p);
    const auto ms = stats::mean_se(terminal_moment);
    rep.moment_mean = ms.mean;
    rep.moment_se = ms.se;

    const double a = 0.5 * p * (p - 1.0), b = p;

    if (forward) {
        // Build Y_t = E[{E_{t,T}}^p | F_t] and test the backward recursion on it.
        const SlicePayoff payoff = [&exp_proc, p, last](int k) -> Eigen::ArrayXd {
            return (exp_proc.exp_m.col(last) / exp_proc.exp_m.col(k)).pow(p);
        };
        ConditionalField field = estimate_conditional(bundle.w, grid, payoff, est);
        rep.warnings = field.warnings;
        rep.y0_mean = field.values.col(0).mean();

        double worst = 0.0;
        for (int k = 0; k < last; ++k) {
            const Eigen::ArrayXd dm = exp_proc.m.col(k + 1) - exp_proc.m.col(k);
            const Eigen::ArrayXd dqv = exp_proc.qv.col(k + 1) - exp_proc.qv.col(k);
            const Eigen::ArrayXd y_next = field.values.col(k + 1);
            const StepConditional sc =
                step_conditional(bundle.w.col(k), y_next, est.reg, nullptr, nullptr);
            const Eigen::ArrayXd cov =
                step_covariance(bundle.w.col(k), sc.resid, dm, est.reg, nullptr);
            const Eigen::ArrayXd psi_k = (dqv > kQvTiny).select(cov / dqv.max(kQvTiny), 0.0);
            const Eigen::ArrayXd resid =
                field.values.col(k) - (sc.mean + (a * field.values.col(k) + b * psi_k) * dqv);
            worst = std::max(worst, std::abs(resid.mean()));
        }
        rep.max_abs_mean_residual = worst;
        return rep;
    }

    // Backward: solve, then test that Y E^p has no drift step by step.
    const BsdeSolution sol = solve_backward(LinearBsdeSpec::reverse_holder(p), bundle,
                                            exp_proc, est);
    rep.warnings = sol.warnings;
    rep.y0_mean = sol.y.col(0).mean();
    rep.drift_z.resize(last);
    const Eigen::ArrayXXd& e = exp_proc.exp_m;
    for (int k = 0; k < last; ++k) {
        const Eigen::ArrayXd d =
            sol.y.col(k + 1) * e.col(k + 1).pow(p) - sol.y.col(k) * e.col(k).pow(p);
        const auto dms = stats::mean_se(d);
        rep.drift_z[k] = dms.se > 0.0 ? dms.mean / dms.se : 0.0;
    }
    rep.max_abs_drift_z = rep.drift_z.cwiseAbs().maxCoeff();
    return rep;
}

PicardState picard_zero_state(Eigen::Index n_paths, const TimeGrid& grid) {
    PicardState s;
    s.y.setZero(n_paths, grid.n_times());
    s.psi.setZero(n_paths, grid.n_steps);
    return s;
}

PicardState picard_operator(const PicardState& in, double p, const PathBundle& bundle,
                            const ProcessPaths& m_proc, const SliceEstimator& est) {
    if (!(p > 1.0)) throw InputError("picard_operator: need p > 1");
    if (!m_proc.has_exponential())
        throw InputError("picard_operator: stochastic exponential not filled");
    if (in.y.rows() != bundle.n_paths() || in.y.cols() != bundle.grid.n_times())
        throw InputError("picard_operator: input shape mismatch");

    const TimeGrid& grid = bundle.grid;
    const Eigen::Index n = bundle.n_paths();
    const double a = 0.5 * p * (p - 1.0);
    const double b_tilde = p - 1.0;  // psi coefficient once rewritten against tilde M

    // Payoff 1 + sum_{j>=k} (a y_j + b psi_j) d<M>_j, then conditioned under
    // tilde P at every slice.
    Eigen::ArrayXXd suffix(n, grid.n_times());
    suffix.col(grid.n_steps).setOnes();
    for (int k = grid.n_steps - 1; k >= 0; --k) {
        const Eigen::ArrayXd dqv = m_proc.qv.col(k + 1) - m_proc.qv.col(k);
        suffix.col(k) =
            suffix.col(k + 1) + (a * in.y.col(k) + b_tilde * in.psi.col(k)) * dqv;
    }
    const SlicePayoff payoff = [&suffix](int k) -> Eigen::ArrayXd { return suffix.col(k); };

    PicardState out;
    ConditionalField yf = estimate_conditional_tilde(bundle.w, grid, payoff,
                                                     forward_weights(m_proc), est);
    out.y = std::move(yf.values);

    // Psi from the covariation of the conditional-process increment with
    // d tilde M (one-step tilde-P regressions, centered).
    out.psi.resize(n, grid.n_steps);
    for (int k = 0; k < grid.n_steps; ++k) {
        const Eigen::ArrayXd dm_tilde = (m_proc.qv.col(k + 1) - m_proc.qv.col(k)) -
                                        (m_proc.m.col(k + 1) - m_proc.m.col(k));
        const Eigen::ArrayXd dqv = m_proc.qv.col(k + 1) - m_proc.qv.col(k);
        const Eigen::ArrayXd w1 = m_proc.exp_m.col(k + 1) / m_proc.exp_m.col(k);
        const Eigen::ArrayXd y_next = out.y.col(k + 1);
        const StepConditional sc =
            step_conditional(bundle.w.col(k), y_next, est.reg, &w1, nullptr);
        const Eigen::ArrayXd cov =
            step_covariance(bundle.w.col(k), sc.resid, dm_tilde, est.reg, &w1);
        out.psi.col(k) = (dqv > kQvTiny).select(-cov / dqv.max(kQvTiny), 0.0);
    }
    return out;
}

PicardResult picard_iterate(double p, const PathBundle& bundle, const ProcessPaths& m_proc,
                            const SliceEstimator& est, double tilde_norm, int k_max, double tol,
                            const PicardState* start) {
    const constants::AlphaBeta ab = constants::alpha_beta_rp(p, tilde_norm);
    if (std::max(ab.alpha, ab.beta) >= 1.0)
        throw NonContractionError(
            "picard_iterate: predicted factors not below 1 (alpha=" + std::to_string(ab.alpha) +
            ", beta=" + std::to_string(ab.beta) + ")");
    if (k_max < 2) throw InputError("picard_iterate: need k_max >= 2");

    PicardResult res;
    res.trace.alpha = ab.alpha;
    res.trace.beta = ab.beta;

    PicardState cur = start ? *start : picard_zero_state(bundle.n_paths(), bundle.grid);
    double prev_dist2 = -1.0;
    int bad_ratios = 0;
    for (int it = 1; it <= k_max; ++it) {
        PicardState next = picard_operator(cur, p, bundle, m_proc, est);

        PicardTrace::Row row;
        row.iter = it;
        row.dy_sup = (next.y - cur.y).abs().maxCoeff();
        row.dpsi_bmo = psi_martingale_bmo(bundle, m_proc, next.psi - cur.psi, est, &m_proc);
        row.dist2 = row.dy_sup * row.dy_sup + row.dpsi_bmo * row.dpsi_bmo;

        const double floor2 = 1e-18 * (1.0 + cur.y.abs().maxCoeff());
        if (prev_dist2 >= 0.0) {
            if (prev_dist2 > floor2) {
                row.ratio = row.dist2 / prev_dist2;
                if (row.ratio >= 1.0) {
                    if (++bad_ratios >= 2)
                        throw NonContractionError(
                            "picard_iterate: contraction ratio >= 1 persistently at iteration " +
                            std::to_string(it) + " (predicted alpha=" + std::to_string(ab.alpha) +
                            ", beta=" + std::to_string(ab.beta) + ")");
                } else {
                    bad_ratios = 0;
                }
            } else {
                row.at_floor = true;
            }
        }
        res.trace.rows.push_back(row);
        cur = std::move(next);
        prev_dist2 = row.dist2;

        if (std::sqrt(row.dist2) < tol) {
            res.trace.converged = true;
            break;
        }
    }
    res.state = std::move(cur);
    return res;
}

QuadraticYProcess theorem2_y_process(const PathBundle& bundle, const ProcessPaths& x_proc,
                                     const ProcessPaths& m_proc, const SliceEstimator& est) {
    if (!(x_proc.grid == m_proc.grid) || !(x_proc.grid == bundle.grid))
        throw InputError("theorem2_y_process: grid mismatch");
    if (!m_proc.has_exponential())
        throw InputError("theorem2_y_process: stochastic exponential not filled");

    const TimeGrid& grid = bundle.grid;
    const int last = grid.n_steps;
    const SlicePayoff remaining_qv = [&x_proc, last](int k) -> Eigen::ArrayXd {
        return x_proc.qv.col(last) - x_proc.qv.col(k);
    };

    QuadraticYProcess out;
    out.y = estimate_conditional_tilde(bundle.w, grid, remaining_qv,
                                       forward_weights(m_proc), est);
    const EssSup es = ess_sup(out.y);
    out.y_sup = es.value;
    out.y_sup_quantile = es.quantile_value;
    out.se = es.se;

    // Consistency: the field must satisfy the backward equation with a = 0,
    // b = +1 and forcing d<X> under the original measure.
    double worst = 0.0;
    for (int k = 0; k < last; ++k) {
        const Eigen::ArrayXd dm = m_proc.m.col(k + 1) - m_proc.m.col(k);
        const Eigen::ArrayXd dqv_m = m_proc.qv.col(k + 1) - m_proc.qv.col(k);
        const Eigen::ArrayXd dqv_x = x_proc.qv.col(k + 1) - x_proc.qv.col(k);
        const Eigen::ArrayXd y_next = out.y.values.col(k + 1);
        const StepConditional sc =
            step_conditional(bundle.w.col(k), y_next, est.reg, nullptr, nullptr);
        const Eigen::ArrayXd cov =
            step_covariance(bundle.w.col(k), sc.resid, dm, est.reg, nullptr);
        const Eigen::ArrayXd psi_k = (dqv_m > kQvTiny).select(cov / dqv_m.max(kQvTiny), 0.0);
        const Eigen::ArrayXd resid =
            out.y.values.col(k) - (sc.mean + psi_k * dqv_m + dqv_x);
        worst = std::max(worst, std::abs(resid.mean()));
    }
    out.max_abs_mean_residual = worst;
    return out;
}

}  // namespace bmo
