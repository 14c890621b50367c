#include "bmo/conditional.hpp"

#include <algorithm>
#include <cmath>

#include "bmo/rng.hpp"

namespace bmo {

namespace {

Eigen::VectorXd monomials(double x, int degree) {
    Eigen::VectorXd b(degree + 1);
    b[0] = 1.0;
    for (int j = 1; j <= degree; ++j) b[j] = b[j - 1] * x;
    return b;
}

void slice_summaries(ConditionalField& f, int k, double se_at_max, double q) {
    const auto col = f.values.col(k);
    Eigen::Index arg = 0;
    f.slice_max[k] = col.maxCoeff(&arg);
    f.slice_mean[k] = col.mean();
    f.slice_quantile[k] = stats::quantile(col, q);
    f.slice_se[k] = se_at_max;
}

ConditionalField make_field(const TimeGrid& grid, Eigen::Index n_paths, const char* method) {
    ConditionalField f;
    f.grid = grid;
    f.values.resize(n_paths, grid.n_times());
    f.slice_max.resize(grid.n_times());
    f.slice_quantile.resize(grid.n_times());
    f.slice_mean.resize(grid.n_times());
    f.slice_se.setZero(grid.n_times());
    f.method = method;
    return f;
}

}  // namespace

double SliceFit::evaluate(double w) const {
    const double x = (std::clamp(w, x_lo, x_hi) - x_mean) / x_sd;
    double acc = 0.0, pw = 1.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        acc += beta[j] * pw;
        pw *= x;
    }
    return acc;
}

Eigen::ArrayXd SliceFit::evaluate(const Eigen::ArrayXd& w) const {
    Eigen::ArrayXd out(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = evaluate(w[i]);
    return out;
}

double SliceFit::fitted_se(double w) const {
    if (n < 2 || l_inv.size() == 0) return 0.0;
    const double x = (std::clamp(w, x_lo, x_hi) - x_mean) / x_sd;
    const Eigen::VectorXd phi = l_inv * monomials(x, static_cast<int>(l_inv.rows()) - 1);
    return sigma * phi.norm() / std::sqrt(static_cast<double>(n));
}

SliceFit fit_slice(const Eigen::ArrayXd& states, const Eigen::ArrayXd& y,
                   const RegressionOptions& opt) {
    const Eigen::Index n = states.size();
    if (n == 0 || y.size() != n) throw InputError("fit_slice: size mismatch");

    SliceFit fit;
    fit.n = n;
    fit.x_mean = states.mean();
    const double sd = std::sqrt(std::max(0.0, states.square().mean() - fit.x_mean * fit.x_mean));
    fit.x_sd = sd > 1e-12 * (1.0 + std::abs(fit.x_mean)) ? sd : 1.0;

    const bool constant_state = sd <= 1e-12 * (1.0 + std::abs(fit.x_mean));
    int degree = constant_state ? 0 : opt.degree;
    fit.x_lo = stats::quantile(states, 1.0 - opt.clamp_quantile);
    fit.x_hi = stats::quantile(states, opt.clamp_quantile);
    if (fit.x_lo > fit.x_hi) std::swap(fit.x_lo, fit.x_hi);

    const Eigen::ArrayXd x = (states - fit.x_mean) / fit.x_sd;

    while (true) {
        // Gram matrix from power sums of the standardized state.
        Eigen::VectorXd pow_sum(2 * degree + 1);
        Eigen::ArrayXd xp = Eigen::ArrayXd::Ones(n);
        for (int r = 0; r <= 2 * degree; ++r) {
            pow_sum[r] = xp.mean();
            if (r < 2 * degree) xp *= x;
        }
        Eigen::MatrixXd gram(degree + 1, degree + 1);
        for (int i = 0; i <= degree; ++i)
            for (int j = 0; j <= degree; ++j) gram(i, j) = pow_sum[i + j];

        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        bool ok = llt.info() == Eigen::Success;
        if (ok && degree > 0) {
            const Eigen::VectorXd diag = Eigen::MatrixXd(llt.matrixL()).diagonal();
            ok = diag.minCoeff() > 1e-7 * diag.maxCoeff();
        }
        if (!ok) {
            if (degree == 0) throw SchemeError("fit_slice: degenerate design");
            --degree;
            fit.rank_reduced = true;
            continue;
        }

        Eigen::VectorXd h(degree + 1);
        xp = Eigen::ArrayXd::Ones(n);
        for (int j = 0; j <= degree; ++j) {
            h[j] = (xp * y).mean();
            if (j < degree) xp *= x;
        }

        const Eigen::MatrixXd l = llt.matrixL();
        Eigen::MatrixXd l_inv = Eigen::MatrixXd::Identity(degree + 1, degree + 1);
        l.triangularView<Eigen::Lower>().solveInPlace(l_inv);

        Eigen::VectorXd c = l_inv * h;  // coefficients in the orthonormal basis
        const double mean_sq = y.square().mean();
        const double rss_over_n = std::max(0.0, mean_sq - c.squaredNorm());
        const double dof = std::max<double>(1.0, static_cast<double>(n - degree - 1));
        double sigma = std::sqrt(rss_over_n * static_cast<double>(n) / dof);

        // Significance floor so exactly-representable responses keep their fit.
        const double scale = std::sqrt(mean_sq) + 1e-300;
        const double sigma_eff = std::max(sigma, 1e-13 * scale);

        int kept = degree;
        const double root_n = std::sqrt(static_cast<double>(n));
        while (kept > 0 && std::abs(c[kept]) * root_n / sigma_eff < opt.t_threshold) --kept;
        for (int j = kept + 1; j <= degree; ++j) c[j] = 0.0;

        fit.kept_degree = kept;
        fit.sigma = sigma;
        fit.l_inv = l_inv;
        fit.beta = l_inv.transpose() * c;
        return fit;
    }
}

SliceEstimator SliceEstimator::closed_form(std::function<double(double, double)> kernel) {
    SliceEstimator e;
    e.kind = Kind::ClosedForm;
    e.kernel = std::move(kernel);
    return e;
}

SliceEstimator SliceEstimator::regression(int degree) {
    SliceEstimator e;
    e.kind = Kind::PolynomialRegression;
    e.reg.degree = degree;
    if (degree < 1) throw InputError("SliceEstimator: regression degree must be >= 1");
    return e;
}

SliceEstimator SliceEstimator::nested(int branch) {
    SliceEstimator e;
    e.kind = Kind::NestedMonteCarlo;
    e.branch = branch;
    if (branch < 2) throw InputError("SliceEstimator: nested branch must be >= 2");
    return e;
}

ConditionalField estimate_conditional(const Eigen::ArrayXXd& states, const TimeGrid& grid,
                                      const SlicePayoff& payoff, const SliceEstimator& est) {
    if (states.cols() != grid.n_times()) throw InputError("estimate_conditional: bad states");
    if (est.kind == SliceEstimator::Kind::NestedMonteCarlo)
        throw InputError("estimate_conditional: nested route needs the structured payoff API");

    ConditionalField f = make_field(grid, states.rows(),
                                    est.kind == SliceEstimator::Kind::ClosedForm
                                        ? "closed_form" : "regression");
    for (int k = 0; k < grid.n_times(); ++k) {
        double se_at_max = 0.0;
        if (est.kind == SliceEstimator::Kind::ClosedForm) {
            const double t = grid.time(k);
            for (Eigen::Index i = 0; i < states.rows(); ++i)
                f.values(i, k) = est.kernel(t, states(i, k));
        } else {
            const Eigen::ArrayXd y = payoff(k);
            const SliceFit fit = fit_slice(states.col(k), y, est.reg);
            if (fit.rank_reduced)
                f.warnings.push_back("slice " + std::to_string(k) +
                                     ": rank-deficient design, degree lowered to " +
                                     std::to_string(fit.kept_degree));
            f.values.col(k) = fit.evaluate(states.col(k));
            Eigen::Index arg = 0;
            f.values.col(k).maxCoeff(&arg);
            se_at_max = fit.fitted_se(states(arg, k));
        }
        slice_summaries(f, k, se_at_max, 0.999);
    }
    return f;
}

ConditionalField estimate_conditional_tilde(const Eigen::ArrayXXd& states, const TimeGrid& grid,
                                            const SlicePayoff& payoff,
                                            const SlicePayoff& forward_weight,
                                            const SliceEstimator& est) {
    if (states.cols() != grid.n_times()) throw InputError("estimate_conditional_tilde: bad states");
    if (est.kind != SliceEstimator::Kind::PolynomialRegression)
        throw InputError("estimate_conditional_tilde: ratio route is regression-based");

    ConditionalField f = make_field(grid, states.rows(), "regression_tilde");
    bool floored = false;
    for (int k = 0; k < grid.n_times(); ++k) {
        const Eigen::ArrayXd wgt = forward_weight(k);
        const Eigen::ArrayXd z = payoff(k);
        const SliceFit den = fit_slice(states.col(k), wgt, est.reg);
        const SliceFit num = fit_slice(states.col(k), wgt * z, est.reg);
        Eigen::ArrayXd d = den.evaluate(states.col(k));
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (d[i] < 0.02) { d[i] = 0.02; floored = true; }
        f.values.col(k) = num.evaluate(states.col(k)) / d;
        Eigen::Index arg = 0;
        f.values.col(k).maxCoeff(&arg);
        const double dmax = std::max(0.02, den.evaluate(states(arg, k)));
        slice_summaries(f, k, num.fitted_se(states(arg, k)) / dmax, 0.999);
    }
    if (floored) f.warnings.push_back("tilde ratio denominator floored at 0.02");
    return f;
}

SlicePayoff forward_weights(const ProcessPaths& density) {
    if (!density.has_exponential())
        throw InputError("forward_weights: stochastic exponential not filled");
    const int last = density.grid.n_steps;
    return [&density, last](int k) -> Eigen::ArrayXd {
        return density.exp_m.col(last) / density.exp_m.col(k);
    };
}

namespace {

double nested_branch_payoff(const TimeGrid& grid, const IntegrandSpec& spec,
                            NestedPayoffKind kind, double exponent, int step, double w0,
                            std::uint64_t branch_seed) {
    const double dt = grid.dt();
    double w = w0, m = 0.0, qv = 0.0;
    for (int j = step; j < grid.n_steps; ++j) {
        const double theta = spec.at(j, grid.time(j), w);
        const double dwj = std::sqrt(dt) * rng::normal(branch_seed, 0, static_cast<std::uint64_t>(j));
        m += theta * dwj;
        qv += theta * theta * dt;
        w += dwj;
    }
    switch (kind) {
        case NestedPayoffKind::RemainingQV: return qv;
        case NestedPayoffKind::ForwardExpMoment: return std::exp(exponent * (m - 0.5 * qv));
    }
    return 0.0;
}

}  // namespace

ConditionalField estimate_conditional_nested(const PathBundle& bundle, const IntegrandSpec& spec,
                                             NestedPayoffKind kind, double exponent, int branch,
                                             std::uint64_t seed_tag) {
    if (branch < 2) throw InputError("estimate_conditional_nested: branch must be >= 2");
    spec.validate(bundle.grid);

    const TimeGrid& grid = bundle.grid;
    ConditionalField f = make_field(grid, bundle.n_paths(), "nested");
    f.se.resize(bundle.n_paths(), grid.n_times());

    for (int k = 0; k < grid.n_times(); ++k) {
        for (Eigen::Index i = 0; i < bundle.n_paths(); ++i) {
            double acc = 0.0, acc2 = 0.0;
            for (int br = 0; br < branch; ++br) {
                const std::uint64_t bs = rng::derive_seed(bundle.seed ^ seed_tag,
                                                          static_cast<std::uint64_t>(i),
                                                          static_cast<std::uint64_t>(k),
                                                          static_cast<std::uint64_t>(br));
                const double v = nested_branch_payoff(grid, spec, kind, exponent, k,
                                                      bundle.w(i, k), bs);
                acc += v;
                acc2 += v * v;
            }
            const double mean = acc / branch;
            const double var = std::max(0.0, acc2 / branch - mean * mean);
            f.values(i, k) = mean;
            f.se(i, k) = std::sqrt(var / branch);
        }
        slice_summaries(f, k, 0.0, 0.999);
        Eigen::Index arg = 0;
        f.values.col(k).maxCoeff(&arg);
        f.slice_se[k] = f.se(arg, k);
    }
    return f;
}

stats::MeanSe nested_point_estimate(const TimeGrid& grid, const IntegrandSpec& spec,
                                    NestedPayoffKind kind, double exponent, int step, double w0,
                                    int branch, std::uint64_t seed) {
    Eigen::ArrayXd v(branch);
    for (int br = 0; br < branch; ++br) {
        const std::uint64_t bs = rng::derive_seed(seed, 0, static_cast<std::uint64_t>(step),
                                                  static_cast<std::uint64_t>(br));
        v[br] = nested_branch_payoff(grid, spec, kind, exponent, step, w0, bs);
    }
    return stats::mean_se(v);
}

EssSup ess_sup(const ConditionalField& field, const EssSupPolicy& policy) {
    EssSup r;
    Eigen::Index arg_max = 0, arg_q = 0;
    r.max_value = field.slice_max.maxCoeff(&arg_max);
    if (policy.quantile == 0.999) {
        r.quantile_value = field.slice_quantile.maxCoeff(&arg_q);
    } else {
        Eigen::VectorXd sq(field.grid.n_times());
        for (int k = 0; k < field.grid.n_times(); ++k)
            sq[k] = stats::quantile(field.values.col(k), policy.quantile);
        r.quantile_value = sq.maxCoeff(&arg_q);
    }
    r.value = policy.use_max ? r.max_value : r.quantile_value;
    r.arg_step = static_cast<int>(policy.use_max ? arg_max : arg_q);
    r.se = field.slice_se[r.arg_step];
    return r;
}

}  // namespace bmo
