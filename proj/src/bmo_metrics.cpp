#include "bmo/bmo_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace bmo {

namespace {

BmoEstimate from_ess_sup(const ConditionalField& field, const EssSupPolicy& policy,
                         bool sqrt_values) {
    const EssSup es = ess_sup(field, policy);
    BmoEstimate b;
    if (sqrt_values) {
        b.value = std::sqrt(std::max(0.0, es.value));
        b.quantile_value = std::sqrt(std::max(0.0, es.quantile_value));
        b.se = b.value > 0.0 ? es.se / (2.0 * b.value) : es.se;
    } else {
        b.value = es.value;
        b.quantile_value = es.quantile_value;
        b.se = es.se;
    }
    b.arg_step = es.arg_step;
    b.method = field.method;
    b.warnings = field.warnings;
    b.n_paths = field.values.rows();
    b.n_steps = field.grid.n_steps;
    return b;
}

// Share of the slice-0 moment mass carried by the top 0.1% of paths.
bool heavy_tail(const Eigen::ArrayXd& z) {
    const Eigen::Index n = z.size();
    const Eigen::Index top = std::max<Eigen::Index>(1, (n + 999) / 1000);
    std::vector<double> v(z.data(), z.data() + n);
    std::nth_element(v.begin(), v.end() - top, v.end());
    double top_sum = 0.0;
    for (auto it = v.end() - top; it != v.end(); ++it) top_sum += *it;
    const double total = z.sum();
    return total > 0.0 && top_sum > 0.5 * total;
}

BmoEstimate moment_constant(const ProcessPaths& exp_proc, double exponent,
                            const Eigen::ArrayXXd& states, const SliceEstimator& est,
                            const EssSupPolicy& policy, const char* tail_label) {
    if (!exp_proc.has_exponential())
        throw InputError("moment constant: stochastic exponential not filled");
    const int last = exp_proc.grid.n_steps;
    SlicePayoff payoff = [&exp_proc, exponent, last](int k) -> Eigen::ArrayXd {
        return (exp_proc.exp_m.col(last) / exp_proc.exp_m.col(k)).pow(exponent);
    };
    ConditionalField field = estimate_conditional(states, exp_proc.grid, payoff, est);
    BmoEstimate b = from_ess_sup(field, policy, /*sqrt_values=*/false);
    if (est.kind != SliceEstimator::Kind::ClosedForm && heavy_tail(payoff(0)))
        b.warnings.push_back(std::string(tail_label) +
                             ": top 0.1% of paths dominate the moment sample");
    return b;
}

}  // namespace

BmoEstimate bmo_norm(const ProcessPaths& proc, const Eigen::ArrayXXd& states,
                     const SliceEstimator& est, const ProcessPaths* density,
                     const EssSupPolicy& policy) {
    const int last = proc.grid.n_steps;
    SlicePayoff payoff = [&proc, last](int k) -> Eigen::ArrayXd {
        return proc.qv.col(last) - proc.qv.col(k);
    };
    ConditionalField field;
    if (density) {
        if (!(density->grid == proc.grid))
            throw InputError("bmo_norm: density grid mismatch");
        field = estimate_conditional_tilde(states, proc.grid, payoff,
                                           forward_weights(*density), est);
    } else {
        field = estimate_conditional(states, proc.grid, payoff, est);
    }
    return from_ess_sup(field, policy, /*sqrt_values=*/true);
}

BmoEstimate rp_constant(const ProcessPaths& exp_proc, double p, const Eigen::ArrayXXd& states,
                        const SliceEstimator& est, const EssSupPolicy& policy) {
    if (!(p > 1.0)) throw InputError("rp_constant: need p > 1");
    return moment_constant(exp_proc, p, states, est, policy, "rp_constant");
}

BmoEstimate ap_constant(const ProcessPaths& exp_proc, double p, const Eigen::ArrayXXd& states,
                        const SliceEstimator& est, const EssSupPolicy& policy) {
    if (!(p > 1.0)) throw InputError("ap_constant: need p > 1");
    return moment_constant(exp_proc, -1.0 / (p - 1.0), states, est, policy, "ap_constant");
}

}  // namespace bmo
