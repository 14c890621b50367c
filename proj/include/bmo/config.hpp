#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bmo/conditional.hpp"
#include "bmo/integrand.hpp"

namespace bmo {

// Flat key = value configuration with [section] headers; '#' starts a
// comment. Unknown sections or keys are errors, and serialize() /
// parse() round-trip losslessly (doubles written with 17 digits).

struct IntegrandConfig {
    std::string kind = "constant";    // constant | piecewise | sine
    double lambda = 0.5;
    std::vector<double> values;       // piecewise, one per interval
    double base = 0.5, swing = 0.5;   // sine family

    IntegrandSpec to_spec() const;
};

struct ToleranceConfig {
    double bmo_rel = 0.02;       // relative error of BMO norms vs oracle
    double moment_rel = 0.03;    // relative error of R_p / A_p constants
    double bsde_y0_rel = 0.01;   // relative error of the solved Y_0
    double psi_sup = 0.02;       // sup |psi| for flat solutions
    double route_rel = 0.04;     // agreement of the two norm routes
    double ratio_slack = 0.1;    // contraction-ratio allowance over max(alpha, beta)
    double se_mult = 3.0;        // standard-error multiplier for statistical checks
};

struct ExperimentConfig {
    double horizon = 1.0;
    int steps = 200;
    long long n_paths = 100000;
    std::uint64_t seed = 42;
    int block = 8192;

    IntegrandConfig m;
    IntegrandConfig x{.kind = "constant", .lambda = 1.0};

    std::string estimator = "regression";  // closed_form | regression | nested
    int degree = 4;
    double t_threshold = 5.0;
    double clamp_quantile = 0.999;
    int branch = 256;

    double p = 2.0;
    std::vector<double> p_list{1.5, 2.0, 3.0};
    double beta = 4.0;
    std::vector<double> norm_list{0.1, 0.25, 0.5, 1.0, 2.0};
    std::vector<double> lambda_list{0.1, 0.25, 0.5};
    int corollary_n = 8;
    double ess_floor = 0.1;
    double overflow_cap = 700.0;
    double ess_quantile = 0.999;

    ToleranceConfig tol;

    std::string out_dir = "out";

    TimeGrid grid() const { return TimeGrid::uniform(horizon, steps); }
    SliceEstimator slice_estimator() const;
    void validate() const;  // throws InputError on nonsense
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig parse_config_file(const std::string& path);
void serialize_config(const ExperimentConfig& cfg, std::ostream& os);

}  // namespace bmo
