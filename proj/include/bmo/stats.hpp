#pragma once

#include <Eigen/Dense>

namespace bmo::stats {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const Eigen::ArrayXd& x);

double sample_variance(const Eigen::ArrayXd& x);

// Kish effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(const Eigen::ArrayXd& weights);

// Empirical q-quantile (linear interpolation between order statistics).
double quantile(const Eigen::ArrayXd& x, double q);

// Two-sample Kolmogorov-Smirnov distance between a weighted sample (x, wx)
// and an unweighted sample y, plus the alpha-level threshold using the
// effective sample size of the weighted side.
struct KsResult {
    double distance = 0.0;
    double threshold = 0.0;
    bool pass = false;
};
KsResult weighted_two_sample_ks(const Eigen::ArrayXd& x, const Eigen::ArrayXd& wx,
                                const Eigen::ArrayXd& y, double alpha = 0.05);

}  // namespace bmo::stats
