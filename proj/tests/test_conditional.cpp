#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmo/conditional.hpp"
#include "bmo/paths.hpp"

using namespace bmo;

namespace {

struct Setup {
    TimeGrid grid;
    PathBundle bundle;
    ProcessPaths m;
};

Setup make(const IntegrandSpec& spec, Eigen::Index n_paths, int steps, std::uint64_t seed = 42) {
    Setup s{TimeGrid::uniform(1.0, steps), {}, {}};
    s.bundle = simulate_brownian(s.grid, n_paths, seed);
    s.m = build_martingale(s.bundle, spec);
    stochastic_exponential(s.m);
    return s;
}

SlicePayoff remaining_qv(const ProcessPaths& p) {
    const int last = p.grid.n_steps;
    return [&p, last](int k) -> Eigen::ArrayXd { return p.qv.col(last) - p.qv.col(k); };
}

SlicePayoff exp_moment(const ProcessPaths& p, double q) {
    const int last = p.grid.n_steps;
    return [&p, q, last](int k) -> Eigen::ArrayXd {
        return (p.exp_m.col(last) / p.exp_m.col(k)).pow(q);
    };
}

}  // namespace

TEST_CASE("constant payoff is exact under all three estimators") {
    Setup s = make(IntegrandSpec::constant(0.5), 400, 16);
    const SlicePayoff ones = [&](int) { return Eigen::ArrayXd::Ones(400); };

    const auto closed = estimate_conditional(
        s.bundle.w, s.grid, ones, SliceEstimator::closed_form([](double, double) { return 1.0; }));
    CHECK((closed.values - 1.0).abs().maxCoeff() == 0.0);

    const auto reg =
        estimate_conditional(s.bundle.w, s.grid, ones, SliceEstimator::regression(4));
    CHECK((reg.values - 1.0).abs().maxCoeff() < 1e-12);

    // exponent 0 turns the forward moment into the constant 1
    const auto nested = estimate_conditional_nested(s.bundle, IntegrandSpec::constant(0.5),
                                                    NestedPayoffKind::ForwardExpMoment, 0.0, 8);
    CHECK((nested.values - 1.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("remaining quadratic variation of a constant integrand is deterministic") {
    Setup s = make(IntegrandSpec::constant(0.5), 2000, 20);
    const auto field = estimate_conditional(s.bundle.w, s.grid, remaining_qv(s.m),
                                            SliceEstimator::regression(4));
    // at t = 0.5 every path reads lambda^2 (T - t) = 0.125
    const auto mid = field.values.col(10);
    CHECK(mid.maxCoeff() == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(mid.minCoeff() == doctest::Approx(0.125).epsilon(1e-12));

    SUBCASE("monotone payoff attains its sup at the first step") {
        const EssSup es = ess_sup(field);
        CHECK(es.arg_step == 0);
        CHECK(es.value == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("squared forward exponential matches the gaussian kernel") {
    Setup s = make(IntegrandSpec::constant(0.5), 100000, 50);
    const auto field = estimate_conditional(s.bundle.w, s.grid, exp_moment(s.m, 2.0),
                                            SliceEstimator::regression(4));
    CHECK(field.values.col(0).mean() == doctest::Approx(1.28402541668774148).epsilon(0.01));
}

TEST_CASE("closed form and regression agree for constant integrands") {
    Setup s = make(IntegrandSpec::constant(0.5), 100000, 50);

    SUBCASE("remaining quadratic variation") {
        const auto kernel = [](double t, double) { return 0.25 * (1.0 - t); };
        const auto a = estimate_conditional(s.bundle.w, s.grid, remaining_qv(s.m),
                                            SliceEstimator::closed_form(kernel));
        const auto b = estimate_conditional(s.bundle.w, s.grid, remaining_qv(s.m),
                                            SliceEstimator::regression(4));
        CHECK(ess_sup(a).value == doctest::Approx(ess_sup(b).value).epsilon(0.01));
    }
    SUBCASE("squared forward exponential") {
        const auto kernel = [](double t, double) { return std::exp(0.25 * (1.0 - t)); };
        const auto a = estimate_conditional(s.bundle.w, s.grid, exp_moment(s.m, 2.0),
                                            SliceEstimator::closed_form(kernel));
        const auto b = estimate_conditional(s.bundle.w, s.grid, exp_moment(s.m, 2.0),
                                            SliceEstimator::regression(4));
        CHECK(ess_sup(a).value == doctest::Approx(ess_sup(b).value).epsilon(0.01));
    }
}

TEST_CASE("tower property on a polynomial payoff") {
    Setup s = make(IntegrandSpec::constant(1.0), 50000, 20);
    const int last = s.grid.n_steps;
    const SlicePayoff terminal_sq = [&](int) -> Eigen::ArrayXd {
        return s.bundle.w.col(last).square();
    };
    const auto field = estimate_conditional(s.bundle.w, s.grid, terminal_sq,
                                            SliceEstimator::regression(4));
    // E[W_T^2 | W_t] = W_t^2 + (T - t); fitted values are winsorized at the
    // extreme state quantiles, so compare on the interior of the state range.
    const int k = 10;
    const Eigen::ArrayXd expect = s.bundle.w.col(k).square() + (1.0 - s.grid.time(k));
    double worst_inner = 0.0;
    for (Eigen::Index i = 0; i < s.bundle.n_paths(); ++i)
        if (std::abs(s.bundle.w(i, k)) < 2.0)
            worst_inner = std::max(worst_inner, std::abs(field.values(i, k) - expect[i]) /
                                                    (1.0 + std::abs(expect[i])));
    CHECK(worst_inner < 0.03);

    // project the time-s field back to time t < s
    const int t = 5;
    const SlicePayoff from_s = [&](int) -> Eigen::ArrayXd { return field.values.col(k); };
    const auto back = estimate_conditional(s.bundle.w, s.grid, from_s,
                                           SliceEstimator::regression(4));
    double worst_tower = 0.0;
    for (Eigen::Index i = 0; i < s.bundle.n_paths(); ++i)
        if (std::abs(s.bundle.w(i, t)) < 1.5)
            worst_tower = std::max(worst_tower,
                                   std::abs(back.values(i, t) - field.values(i, t)) /
                                       (1.0 + std::abs(field.values(i, t))));
    CHECK(worst_tower < 0.03);
}

TEST_CASE("regression field tracks the nested oracle for a state-dependent integrand") {
    const IntegrandSpec spec = IntegrandSpec::sine(0.5, 0.5);
    Setup s = make(spec, 1024, 25, 7);
    const auto reg = estimate_conditional(s.bundle.w, s.grid, remaining_qv(s.m),
                                          SliceEstimator::regression(4));
    const auto oracle = estimate_conditional_nested(s.bundle, spec,
                                                    NestedPayoffKind::RemainingQV, 0.0, 512);
    const double a = ess_sup(reg).value;
    const double b = ess_sup(oracle).value;
    CHECK(a == doctest::Approx(b).epsilon(0.05));
}

TEST_CASE("nested standard errors shrink as branch^{-1/2}") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 20);
    const IntegrandSpec spec = IntegrandSpec::sine(0.5, 0.5);
    const std::vector<int> branches{64, 256, 1024};
    std::vector<double> log_sd;
    for (int branch : branches) {
        Eigen::ArrayXd est(100);
        for (int r = 0; r < 100; ++r)
            est[r] = nested_point_estimate(grid, spec, NestedPayoffKind::RemainingQV, 0.0,
                                           10, 0.3, branch, 1000 + r).mean;
        log_sd.push_back(std::log(std::sqrt(stats::sample_variance(est))));
    }
    const double slope01 = (log_sd[1] - log_sd[0]) / std::log(4.0);
    const double slope12 = (log_sd[2] - log_sd[1]) / std::log(4.0);
    const double slope = 0.5 * (slope01 + slope12);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("nested estimates are reproducible") {
    const IntegrandSpec spec = IntegrandSpec::sine(0.5, 0.5);
    Setup s = make(spec, 64, 10, 5);
    const auto a = estimate_conditional_nested(s.bundle, spec, NestedPayoffKind::RemainingQV,
                                               0.0, 64);
    const auto b = estimate_conditional_nested(s.bundle, spec, NestedPayoffKind::RemainingQV,
                                               0.0, 64);
    CHECK((a.values == b.values).all());
}

TEST_CASE("rank-deficient designs fall back with a warning") {
    Eigen::ArrayXd x(64), y(64);
    for (int i = 0; i < 64; ++i) {
        x[i] = i % 2 ? 1.0 : -1.0;  // two distinct states: quadratic basis collapses
        y[i] = 0.5 * x[i] + 1.0;
    }
    RegressionOptions opt;
    opt.degree = 4;
    const SliceFit fit = fit_slice(x, y, opt);
    CHECK(fit.rank_reduced);
    CHECK(fit.kept_degree <= 1);
    CHECK(fit.evaluate(1.0) == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(fit.evaluate(-1.0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("significance pruning flattens noise-only slices") {
    // response independent of the state: fitted field must be the slice mean
    const Eigen::Index n = 20000;
    Eigen::ArrayXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = std::sin(0.1 * static_cast<double>(i)) * 2.0;
        y[i] = (i % 7 == 0 ? 1.9 : 0.7);
    }
    RegressionOptions opt;
    const SliceFit fit = fit_slice(x, y, opt);
    CHECK(fit.kept_degree == 0);
    CHECK(fit.evaluate(1.7) == doctest::Approx(y.mean()).epsilon(1e-12));
}

TEST_CASE("ess_sup policies") {
    Setup s = make(IntegrandSpec::constant(0.5), 500, 8);
    const SlicePayoff c = [&](int) { return Eigen::ArrayXd::Constant(500, 2.5); };
    const auto field =
        estimate_conditional(s.bundle.w, s.grid, c, SliceEstimator::regression(2));
    const EssSup max_policy = ess_sup(field);
    CHECK(max_policy.value == doctest::Approx(2.5).epsilon(1e-12));
    EssSupPolicy q;
    q.use_max = false;
    q.quantile = 0.9;
    const EssSup quant = ess_sup(field, q);
    CHECK(quant.value == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(quant.quantile_value == doctest::Approx(2.5).epsilon(1e-12));
}
