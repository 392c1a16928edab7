#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mixnet {

struct GaussianComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

// Multivariate Gaussian mixture over an ordered set of continuous variables.
// Immutable after construction; per-component Cholesky factors are computed
// once so density evaluation stays cheap in fitting and scoring loops.
//
// d = 0 is a valid state: a single component whose density is the constant 1.
class GaussianMixture {
public:
    // The d = 0 unit mixture.
    GaussianMixture();

    // Validates weights (positive, summing to 1 within 1e-12), dimensions and
    // positive definiteness. Throws std::invalid_argument on violation.
    GaussianMixture(std::vector<std::string> variables,
                    std::vector<GaussianComponent> components);

    const std::vector<std::string>& variables() const { return variables_; }
    std::size_t dimension() const { return variables_.size(); }
    std::size_t component_count() const { return components_.size(); }
    const std::vector<GaussianComponent>& components() const { return components_; }

    // log sum_k alpha_k N(x; mu_k, Sigma_k), evaluated with log-sum-exp over
    // per-component terms. d = 0 returns 0.
    double log_density(const Eigen::VectorXd& x) const;

    // Restriction of means/covariances to the kept variables (result keeps
    // this mixture's variable order). keep = {} yields the unit mixture.
    GaussianMixture marginalize(const std::vector<std::string>& keep) const;

    // Conditional mixture over the unobserved variables. Component weights are
    // reweighted by the evidence likelihood; means/covariances follow the
    // conditional-Gaussian formulas. Observing every variable returns the unit
    // mixture; evidence with numerically zero marginal density throws.
    GaussianMixture condition(const std::vector<std::pair<std::string, double>>& observed) const;

    // n draws (rows), each: component k ~ alpha, then mu_k + L_k z with L_k the
    // Cholesky factor of Sigma_k. Deterministic given seed.
    Eigen::MatrixXd sample(std::size_t n, std::uint64_t seed) const;

private:
    struct ComponentCache {
        Eigen::MatrixXd chol;  // lower-triangular factor of the covariance
        double log_norm = 0.0;  // -d/2 log(2 pi) - log|L|
        double log_weight = 0.0;
    };

    std::vector<std::string> variables_;
    std::vector<GaussianComponent> components_;
    std::vector<ComponentCache> cache_;

    int index_of(const std::string& name) const;
    void build_cache();
};

// Free parameters of the mixture: (M-1) weights + M*d means + M*d(d+1)/2
// covariance entries.
std::int64_t param_count(const GaussianMixture& gm);

// Convex combination of mixtures over an identical variable list: components
// are concatenated with mixture j's weights scaled by weights[j]; components
// with scaled weight < 1e-12 are dropped before renormalization.
GaussianMixture combine(std::span<const GaussianMixture> mixtures,
                        std::span<const double> weights);

}  // namespace mixnet
