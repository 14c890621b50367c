#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmo/paths.hpp"
#include "bmo/stats.hpp"

using namespace bmo;

TEST_CASE("gaussian increments have the right moments") {
    // dt = 1 so the increments are standard normals.
    const TimeGrid grid = TimeGrid::uniform(2.0, 2);
    const PathBundle b = simulate_brownian(grid, 100000, 42);
    Eigen::Map<const Eigen::ArrayXd> all(b.dw.data(), b.dw.size());
    CHECK(std::abs(all.mean()) < 4e-2);
    CHECK(stats::sample_variance(all) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("identical seed and layout reproduce bit-identical bundles") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 16);
    const PathBundle a = simulate_brownian(grid, 500, 7, 64);
    const PathBundle b = simulate_brownian(grid, 500, 7, 64);
    CHECK((a.dw == b.dw).all());
    CHECK((a.w == b.w).all());
    // Block layout does not matter either: draws are counter-based.
    const PathBundle c = simulate_brownian(grid, 500, 7, 3);
    CHECK((a.dw == c.dw).all());
}

TEST_CASE("realized variance matches the horizon") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 200);
    const PathBundle b = simulate_brownian(grid, 100000, 42);
    const double mean_sum_sq = b.dw.square().rowwise().sum().mean();
    CHECK(mean_sum_sq == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(TimeGrid::uniform(1.0, 1), InputError);
    CHECK_THROWS_AS(TimeGrid::uniform(0.0, 10), InputError);
    CHECK_THROWS_AS(TimeGrid::uniform(-1.0, 10), InputError);
    const TimeGrid grid = TimeGrid::uniform(1.0, 4);
    CHECK_THROWS_AS(simulate_brownian(grid, 0, 1), InputError);
}

TEST_CASE("zero integrand gives the zero martingale") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 32);
    const PathBundle b = simulate_brownian(grid, 200, 3);
    const ProcessPaths p = build_martingale(b, IntegrandSpec::constant(0.0));
    CHECK(p.m.abs().maxCoeff() == 0.0);
    CHECK(p.qv.abs().maxCoeff() == 0.0);
}

TEST_CASE("constant integrand has exact deterministic square characteristic") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 200);
    const PathBundle b = simulate_brownian(grid, 300, 11);
    const ProcessPaths p = build_martingale(b, IntegrandSpec::constant(0.5));
    // identical on every path, equal to lambda^2 T up to accumulation ulps
    CHECK(p.qv.col(200).maxCoeff() == p.qv.col(200).minCoeff());
    CHECK(p.qv.col(200).maxCoeff() == doctest::Approx(0.25).epsilon(1e-13));
    // exact lambda^2 t at every grid point
    for (int k : {0, 50, 137}) {
        const double expect = 0.25 * grid.time(k);
        CHECK(p.qv.col(k).maxCoeff() == doctest::Approx(expect).epsilon(1e-14));
        CHECK(p.qv.col(k).minCoeff() == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("state-dependent integrand respects its envelope") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 64);
    const PathBundle b = simulate_brownian(grid, 2000, 5);
    const ProcessPaths p = build_martingale(b, IntegrandSpec::sine(0.5, 0.5));
    CHECK(p.qv.col(64).minCoeff() >= 0.0625 - 1e-12);
    CHECK(p.qv.col(64).maxCoeff() <= 0.5625 + 1e-12);
    SUBCASE("square characteristic is nondecreasing") {
        for (int k = 0; k < 64; ++k)
            CHECK((p.qv.col(k + 1) >= p.qv.col(k)).all());
    }
}

TEST_CASE("declared bound is checked by sampling") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 8);
    auto lying = IntegrandSpec::state_dependent(
        [](double, double w) { return 2.0 * std::sin(w) + 2.5; }, 1.0, "lying");
    const PathBundle b = simulate_brownian(grid, 10, 1);
    CHECK_THROWS_AS(build_martingale(b, lying), InputError);
}

TEST_CASE("stochastic exponential: zero integrand") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 16);
    const PathBundle b = simulate_brownian(grid, 100, 9);
    ProcessPaths p = build_martingale(b, IntegrandSpec::constant(0.0));
    stochastic_exponential(p);
    CHECK((p.exp_m == 1.0).all());
}

TEST_CASE("stochastic exponential: direct formula value") {
    ProcessPaths p;
    p.grid = TimeGrid::uniform(1.0, 2);
    p.m.resize(1, 3);
    p.qv.resize(1, 3);
    p.m << 0.0, 0.1, 0.3;
    p.qv << 0.0, 0.1, 0.25;
    stochastic_exponential(p);
    CHECK(p.exp_m(0, 2) == doctest::Approx(1.19124621661235812).epsilon(1e-14));
}

TEST_CASE("stochastic exponential: unit mean and positivity") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 200);
    const PathBundle b = simulate_brownian(grid, 100000, 42);
    ProcessPaths p = build_martingale(b, IntegrandSpec::constant(0.5));
    stochastic_exponential(p);
    CHECK((p.exp_m > 0.0).all());
    const auto ms = stats::mean_se(Eigen::ArrayXd(p.exp_m.col(200)));
    CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.se);
    CHECK(p.overflow_paths.empty());
}

TEST_CASE("overflow cap flags rather than clamps") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 32);
    const PathBundle b = simulate_brownian(grid, 500, 13);
    ProcessPaths p = build_martingale(b, IntegrandSpec::constant(0.5));
    stochastic_exponential(p, 0.5);  // tiny cap: many paths exceed |M| = 0.5
    CHECK(!p.overflow_paths.empty());
    CHECK((p.exp_m > 0.0).all());    // values still computed
}

TEST_CASE("piecewise integrand needs one value per interval") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 4);
    const PathBundle b = simulate_brownian(grid, 10, 1);
    Eigen::VectorXd three(3);
    three << 1.0, 2.0, 3.0;
    CHECK_THROWS_AS(build_martingale(b, IntegrandSpec::piecewise(three)), InputError);
    Eigen::VectorXd four(4);
    four << 0.1, 0.2, 0.3, 0.4;
    const ProcessPaths p = build_martingale(b, IntegrandSpec::piecewise(four));
    const double qv_t = (0.01 + 0.04 + 0.09 + 0.16) * 0.25;
    CHECK(p.qv.col(4).maxCoeff() == doctest::Approx(qv_t).epsilon(1e-14));
}

TEST_CASE("coarsening sums adjacent increments") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 16);
    const PathBundle b = simulate_brownian(grid, 50, 21);
    const PathBundle c = coarsen(b, 4);
    CHECK(c.grid.n_steps == 4);
    CHECK((c.w.col(4) - b.w.col(16)).abs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(coarsen(b, 5), InputError);
}

TEST_CASE("weak-order-1 refinement on a fixed functional") {
    // Common-noise refinement: one fine bundle, coarser views of it. The
    // successive estimator differences for E[exp(M_T)] should shrink
    // about linearly in dt.
    const TimeGrid fine = TimeGrid::uniform(1.0, 400);
    const PathBundle b400 = simulate_brownian(fine, 40000, 42);
    const IntegrandSpec spec = IntegrandSpec::sine(0.5, 0.8);

    const auto estimate = [&](const PathBundle& bundle) {
        const ProcessPaths p = build_martingale(bundle, spec);
        return Eigen::ArrayXd(p.m.col(bundle.grid.n_steps)).exp().mean();
    };
    const double e25 = estimate(coarsen(b400, 16));
    const double e50 = estimate(coarsen(b400, 8));
    const double e100 = estimate(coarsen(b400, 4));
    const double d1 = std::abs(e25 - e50);
    const double d2 = std::abs(e50 - e100);
    CHECK(d2 < d1);
    CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.75));  // first-order band
}
