#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmo/girsanov.hpp"
#include "bmo/paths.hpp"
#include "bmo/stats.hpp"

using namespace bmo;

namespace {

struct Setup {
    TimeGrid grid;
    PathBundle bundle;
    ProcessPaths m;
    IntegrandSpec spec_m;
};

Setup make(double lambda, Eigen::Index n_paths = 100000, int steps = 200,
           std::uint64_t seed = 42) {
    Setup s{TimeGrid::uniform(1.0, steps), {}, {}, IntegrandSpec::constant(lambda)};
    s.bundle = simulate_brownian(s.grid, n_paths, seed);
    s.m = build_martingale(s.bundle, s.spec_m);
    stochastic_exponential(s.m);
    return s;
}

}  // namespace

TEST_CASE("identity measure change for the zero integrand") {
    Setup s = make(0.0, 500, 16);
    const MeasureChange mc = make_measure_change(s.m);
    CHECK((mc.weights == 1.0).all());
    CHECK(mc.ess == doctest::Approx(500.0));
    CHECK(!mc.degenerate);
}

TEST_CASE("weight mean and lognormal variance") {
    Setup s = make(0.5);
    const MeasureChange mc = make_measure_change(s.m);
    CHECK(std::abs(mc.mean - 1.0) < 3.0 * mc.se_mean);
    // E[E_T^2] = e^{lambda^2 T} so Var = e^{0.25} - 1.
    const double var = stats::sample_variance(mc.weights);
    CHECK(var == doctest::Approx(0.284025416687741484).epsilon(0.05));
}

TEST_CASE("effective sample size floor flags weight degeneracy") {
    Setup s = make(2.0, 20000, 100);
    const MeasureChange mc = make_measure_change(s.m);
    CHECK(mc.degenerate);  // Var(w) = e^4 - 1, ESS well below 0.1 n
}

TEST_CASE("tilde transform identities") {
    Setup s = make(0.5, 2000, 64);
    const IntegrandSpec spec_x = IntegrandSpec::constant(1.2);
    const ProcessPaths x = build_martingale(s.bundle, spec_x);
    const TildeProcesses tp = tilde_transform(s.bundle, x, s.m, spec_x, s.spec_m);

    SUBCASE("constant case is exact gaussian algebra") {
        // tilde X_t = mu lambda t - mu W_t
        for (int k : {0, 10, 64}) {
            const Eigen::ArrayXd expect =
                1.2 * 0.5 * s.grid.time(k) - 1.2 * s.bundle.w.col(k);
            CHECK((tp.tilde_x.m.col(k) - expect).abs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("self transform gives tilde M") {
        const TildeProcesses self = tilde_transform(s.bundle, s.m, s.m, s.spec_m, s.spec_m);
        CHECK((self.tilde_x.m - self.tilde_m.m).abs().maxCoeff() < 1e-14);
    }
    SUBCASE("square characteristic is preserved exactly") {
        CHECK((tp.tilde_x.qv - x.qv).abs().maxCoeff() == 0.0);
    }
    SUBCASE("double transform returns the original process") {
        // <tilde X, tilde M> = <X, M>, so the transform of the transform is X.
        const Eigen::ArrayXXd back = tp.cross_qv - tp.tilde_x.m;
        CHECK((back - x.m).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("inverse density is the exponential of the transform") {
        ProcessPaths tm = tp.tilde_m;
        stochastic_exponential(tm);
        const Eigen::ArrayXd product =
            tm.exp_m.col(64) * s.m.exp_m.col(64);
        CHECK((product - 1.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("orthogonal integrands make the transform a pure reflection") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 4);
    const PathBundle b = simulate_brownian(grid, 100, 3);
    Eigen::VectorXd vx(4), vm(4);
    vx << 1.0, 1.0, 0.0, 0.0;
    vm << 0.0, 0.0, 0.7, 0.7;
    const IntegrandSpec sx = IntegrandSpec::piecewise(vx);
    const IntegrandSpec sm = IntegrandSpec::piecewise(vm);
    const ProcessPaths x = build_martingale(b, sx);
    const ProcessPaths m = build_martingale(b, sm);
    const TildeProcesses tp = tilde_transform(b, x, m, sx, sm);
    CHECK(tp.cross_qv.abs().maxCoeff() == 0.0);
    CHECK((tp.tilde_x.m + x.m).abs().maxCoeff() == 0.0);
}

TEST_CASE("mismatched grids are rejected") {
    Setup s = make(0.5, 100, 16);
    const PathBundle other = simulate_brownian(TimeGrid::uniform(1.0, 8), 100, 1);
    const ProcessPaths x = build_martingale(other, IntegrandSpec::constant(1.0));
    CHECK_THROWS_AS(tilde_transform(s.bundle, x, s.m, IntegrandSpec::constant(1.0), s.spec_m),
                    InputError);
}

TEST_CASE("reweighted expectations") {
    Setup s = make(0.5);
    const MeasureChange mc = make_measure_change(s.m);

    SUBCASE("constant payoff") {
        const Eigen::ArrayXd z = Eigen::ArrayXd::Constant(s.bundle.n_paths(), 3.0);
        const auto r = expect_tilde(z, mc);
        CHECK(std::abs(r.mean - 3.0) < 3.0 * r.se);
    }
    SUBCASE("deterministic quadratic variation") {
        const ProcessPaths x = build_martingale(s.bundle, IntegrandSpec::constant(1.0));
        const auto r = expect_tilde(x.qv.col(200), mc);
        CHECK(std::abs(r.mean - 1.0) < 3.0 * r.se);
    }
    SUBCASE("girsanov mean shift") {
        const auto r = expect_tilde(s.bundle.w.col(200), mc);
        CHECK(std::abs(r.mean - 0.5) < 3.0 * r.se);  // E~[W_T] = lambda T
    }
}

TEST_CASE("direct simulation under the new measure") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 200);
    const IntegrandSpec sm = IntegrandSpec::constant(0.5);
    const IntegrandSpec sx = IntegrandSpec::constant(1.2);

    SUBCASE("terminal variance of the transform") {
        const TildeSimulation sim = simulate_under_tilde(grid, sm, sx, 100000, 99);
        const double var = stats::sample_variance(sim.x_tilde.m.col(200));
        CHECK(var == doctest::Approx(1.44).epsilon(0.02));  // mu^2 T
    }
    SUBCASE("zero integrand reduces to the original law") {
        const TildeSimulation sim =
            simulate_under_tilde(grid, IntegrandSpec::constant(0.0), sx, 50000, 99);
        const double var = stats::sample_variance(sim.x_tilde.m.col(200));
        CHECK(var == doctest::Approx(1.44).epsilon(0.02));
        CHECK(std::abs(sim.x_tilde.m.col(200).mean()) < 0.02);
    }
}

TEST_CASE("two-route distributional agreement (weighted KS)") {
    Setup s = make(0.5);
    const IntegrandSpec sx = IntegrandSpec::constant(1.0);
    const ProcessPaths x = build_martingale(s.bundle, sx);
    const TildeProcesses tp = tilde_transform(s.bundle, x, s.m, sx, s.spec_m);
    const MeasureChange mc = make_measure_change(s.m);

    const TildeSimulation sim = simulate_under_tilde(s.grid, s.spec_m, sx, 100000, 4242);
    const auto ks = stats::weighted_two_sample_ks(tp.tilde_x.m.col(200), mc.weights,
                                                  sim.x_tilde.m.col(200));
    CHECK(ks.pass);

    SUBCASE("moment agreement on a polynomial functional") {
        const Eigen::ArrayXd sq = tp.tilde_x.m.col(200).square();
        const auto rew = expect_tilde(sq, mc);
        const auto dir = stats::mean_se(Eigen::ArrayXd(sim.x_tilde.m.col(200).square()));
        CHECK(std::abs(rew.mean - dir.mean) <
              3.0 * std::sqrt(rew.se * rew.se + dir.se * dir.se));
    }
}
