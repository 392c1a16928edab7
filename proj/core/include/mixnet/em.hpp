#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mixnet/gaussian_mixture.hpp"

namespace mixnet {

struct EmConfig {
    int max_iterations = 200;
    double rel_tol = 1e-7;
    int restarts = 3;
    double cov_floor = 1e-6;
    std::vector<int> component_grid = {1, 2, 3, 5, 8, 12, 20};
    std::uint64_t seed = 0;
};

struct EmResult {
    GaussianMixture mixture;
    double log_likelihood = 0.0;  // total over rows, for the returned mixture
    std::vector<double> trace;    // per-iteration ll of the winning run
    bool converged = false;
};

// Fits a mixture of `components` Gaussians to the rows of `data` (one row per
// observation); `variables` names the columns. Runs config.restarts seeded
// initializations and keeps the highest-likelihood fit. When `init` is given
// it seeds a single run instead and `components` is ignored. Components whose
// weight falls below 1e-6/M are dropped mid-run, so the result may have fewer
// than `components` components.
EmResult em_fit(const Eigen::MatrixXd& data, const std::vector<std::string>& variables,
                int components, const EmConfig& config,
                const GaussianMixture* init = nullptr);

// BIC score: total log-likelihood minus (ln R / 2) * param_count.
double bic(double log_likelihood, std::int64_t params, std::size_t rows);
double bic(const GaussianMixture& gm, const Eigen::MatrixXd& data);

// Fits one mixture per grid entry and keeps the BIC-best (ties go to fewer
// components). Grid entries larger than the row count are skipped; if none
// survive the filter, the row count itself is used as the single candidate.
EmResult select_mixture(const Eigen::MatrixXd& data, const std::vector<std::string>& variables,
                        const EmConfig& config);

}  // namespace mixnet
