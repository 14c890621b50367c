#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmo/bmo_metrics.hpp"
#include "bmo/girsanov.hpp"
#include "bmo/paths.hpp"

using namespace bmo;

namespace {

struct Setup {
    TimeGrid grid;
    PathBundle bundle;
    ProcessPaths m;
    IntegrandSpec spec;
};

Setup make(double lambda, Eigen::Index n_paths = 100000, int steps = 50,
           std::uint64_t seed = 42) {
    Setup s{TimeGrid::uniform(1.0, steps), {}, {}, IntegrandSpec::constant(lambda)};
    s.bundle = simulate_brownian(s.grid, n_paths, seed);
    s.m = build_martingale(s.bundle, s.spec);
    stochastic_exponential(s.m);
    return s;
}

const SliceEstimator kReg = SliceEstimator::regression(4);

}  // namespace

TEST_CASE("BMO norm of a scaled Brownian motion") {
    for (double lambda : {0.1, 0.25, 0.5}) {
        Setup s = make(lambda, 20000, 50);
        const BmoEstimate b = bmo_norm(s.m, s.bundle.w, kReg);
        CHECK(b.value == doctest::Approx(lambda).epsilon(0.02));
        CHECK(b.arg_step == 0);
    }
}

TEST_CASE("zero integrand has zero norm") {
    Setup s = make(0.0, 1000, 16);
    CHECK(bmo_norm(s.m, s.bundle.w, kReg).value == 0.0);
}

TEST_CASE("norm of the transform under the new measure") {
    Setup s = make(0.5, 50000, 50);
    const TildeProcesses tp = tilde_transform(s.bundle, s.m, s.m, s.spec, s.spec);
    const BmoEstimate b = bmo_norm(tp.tilde_m, s.bundle.w, kReg, &s.m);
    CHECK(b.value == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("norm is invariant under reflection of the integrand") {
    Setup pos = make(0.5, 20000, 32);
    Setup neg = make(-0.5, 20000, 32);
    const double a = bmo_norm(pos.m, pos.bundle.w, kReg).value;
    const double b = bmo_norm(neg.m, neg.bundle.w, kReg).value;
    CHECK(a == doctest::Approx(b).epsilon(0.01));
}

TEST_CASE("step-0 conditional value equals the squared norm") {
    Setup s = make(0.5, 20000, 50);
    const BmoEstimate b = bmo_norm(s.m, s.bundle.w, kReg);
    const double step0 = s.m.qv.col(50).mean();  // E[<M>_T] = lambda^2 T
    CHECK(b.value * b.value == doctest::Approx(step0).epsilon(0.02));
}

TEST_CASE("reverse Holder constant against the gaussian oracle") {
    Setup s = make(0.5);
    SUBCASE("p = 2") {
        const BmoEstimate c = rp_constant(s.m, 2.0, s.bundle.w, kReg);
        CHECK(c.value == doctest::Approx(1.28402541668774148).epsilon(0.03));
        CHECK(c.value >= 0.99);
    }
    SUBCASE("p = 4, heavier tail") {
        const BmoEstimate c = rp_constant(s.m, 4.0, s.bundle.w, kReg);
        CHECK(c.value == doctest::Approx(4.48168907033806482).epsilon(0.05));
    }
    SUBCASE("nondecreasing in p") {
        double prev = 0.0;
        for (double p : {1.5, 2.0, 3.0}) {
            const double v = rp_constant(s.m, p, s.bundle.w, kReg).value;
            CHECK(v >= prev - 1e-9);
            prev = v;
        }
    }
}

TEST_CASE("reverse Holder constant of the zero integrand is one") {
    Setup s = make(0.0, 2000, 16);
    CHECK(rp_constant(s.m, 2.0, s.bundle.w, kReg).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ap_constant(s.m, 3.0, s.bundle.w, kReg).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Muckenhoupt constant against the gaussian oracle") {
    Setup s = make(0.5);
    SUBCASE("p = 2") {
        const BmoEstimate d = ap_constant(s.m, 2.0, s.bundle.w, kReg);
        CHECK(d.value == doctest::Approx(1.28402541668774148).epsilon(0.03));
        CHECK(d.value >= 0.99);
    }
    SUBCASE("p = 3") {
        const BmoEstimate d = ap_constant(s.m, 3.0, s.bundle.w, kReg);
        CHECK(d.value == doctest::Approx(1.09828514030782585).epsilon(0.03));
    }
}

TEST_CASE("p > 1 is required") {
    Setup s = make(0.5, 500, 8);
    CHECK_THROWS_AS(rp_constant(s.m, 1.0, s.bundle.w, kReg), InputError);
    CHECK_THROWS_AS(ap_constant(s.m, 0.5, s.bundle.w, kReg), InputError);
}

TEST_CASE("heavy-tail guard") {
    SUBCASE("quiet at moderate moments") {
        Setup s = make(0.5, 20000, 32);
        const BmoEstimate c = rp_constant(s.m, 2.0, s.bundle.w, kReg);
        for (const auto& w : c.warnings) CHECK(w.find("dominate") == std::string::npos);
    }
    SUBCASE("warns when the top slice dominates") {
        Setup s = make(1.5, 20000, 32);
        const BmoEstimate c = rp_constant(s.m, 8.0, s.bundle.w, kReg);
        bool warned = false;
        for (const auto& w : c.warnings)
            if (w.find("dominate") != std::string::npos) warned = true;
        CHECK(warned);
    }
}
