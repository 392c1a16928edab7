#include "mixnet/gaussian_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mixnet/rng.hpp"

namespace mixnet {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> terms) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double t : terms) hi = std::max(hi, t);
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - hi);
    return hi + std::log(acc);
}

}  // namespace

GaussianMixture::GaussianMixture() {
    GaussianComponent unit;
    unit.weight = 1.0;
    components_.push_back(std::move(unit));
    build_cache();
}

GaussianMixture::GaussianMixture(std::vector<std::string> variables,
                                 std::vector<GaussianComponent> components)
    : variables_(std::move(variables)), components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("mixture: needs at least one component");
    const auto d = static_cast<Eigen::Index>(variables_.size());
    double weight_sum = 0.0;
    for (const auto& comp : components_) {
        if (!(comp.weight > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
        weight_sum += comp.weight;
        if (comp.mean.size() != d || comp.covariance.rows() != d || comp.covariance.cols() != d) {
            throw std::invalid_argument("mixture: component dimension mismatch");
        }
    }
    if (std::abs(weight_sum - 1.0) > 1e-12) {
        throw std::invalid_argument("mixture: weights must sum to 1");
    }
    build_cache();
}

void GaussianMixture::build_cache() {
    cache_.clear();
    cache_.reserve(components_.size());
    const auto d = static_cast<Eigen::Index>(variables_.size());
    for (const auto& comp : components_) {
        ComponentCache c;
        c.log_weight = std::log(comp.weight);
        if (d > 0) {
            if (!comp.covariance.isApprox(comp.covariance.transpose(), 1e-9)) {
                throw std::invalid_argument("mixture: covariance not symmetric");
            }
            Eigen::LLT<Eigen::MatrixXd> llt(comp.covariance);
            if (llt.info() != Eigen::Success) {
                throw std::invalid_argument("mixture: covariance not positive definite");
            }
            c.chol = llt.matrixL();
            double log_det_l = 0.0;
            for (Eigen::Index i = 0; i < d; ++i) log_det_l += std::log(c.chol(i, i));
            c.log_norm = -0.5 * static_cast<double>(d) * kLog2Pi - log_det_l;
        }
        cache_.push_back(std::move(c));
    }
}

int GaussianMixture::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i] == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("mixture: unknown variable '" + name + "'");
}

double GaussianMixture::log_density(const Eigen::VectorXd& x) const {
    const auto d = static_cast<Eigen::Index>(variables_.size());
    if (x.size() != d) throw std::invalid_argument("mixture: point dimension mismatch");
    if (d == 0) return 0.0;
    std::vector<double> terms(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& cache = cache_[k];
        Eigen::VectorXd y = x - components_[k].mean;
        cache.chol.triangularView<Eigen::Lower>().solveInPlace(y);
        terms[k] = cache.log_weight + cache.log_norm - 0.5 * y.squaredNorm();
    }
    return log_sum_exp(terms);
}

GaussianMixture GaussianMixture::marginalize(const std::vector<std::string>& keep) const {
    std::vector<int> kept_idx;
    for (const auto& name : keep) index_of(name);  // reject unknown names
    std::vector<std::string> kept_names;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (std::find(keep.begin(), keep.end(), variables_[i]) != keep.end()) {
            kept_idx.push_back(static_cast<int>(i));
            kept_names.push_back(variables_[i]);
        }
    }
    if (kept_idx.empty()) return GaussianMixture();

    const auto m = static_cast<Eigen::Index>(kept_idx.size());
    std::vector<GaussianComponent> comps;
    comps.reserve(components_.size());
    for (const auto& comp : components_) {
        GaussianComponent out;
        out.weight = comp.weight;
        out.mean.resize(m);
        out.covariance.resize(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            out.mean(i) = comp.mean(kept_idx[i]);
            for (Eigen::Index j = 0; j < m; ++j) {
                out.covariance(i, j) = comp.covariance(kept_idx[i], kept_idx[j]);
            }
        }
        comps.push_back(std::move(out));
    }
    return GaussianMixture(std::move(kept_names), std::move(comps));
}

GaussianMixture GaussianMixture::condition(
    const std::vector<std::pair<std::string, double>>& observed) const {
    std::vector<int> obs_idx;
    std::vector<double> obs_val;
    for (const auto& [name, value] : observed) {
        if (!std::isfinite(value)) throw std::invalid_argument("condition: non-finite evidence");
        int idx = index_of(name);
        if (std::find(obs_idx.begin(), obs_idx.end(), idx) != obs_idx.end()) {
            throw std::invalid_argument("condition: variable observed twice");
        }
        obs_idx.push_back(idx);
        obs_val.push_back(value);
    }
    if (obs_idx.empty()) return *this;

    std::vector<int> free_idx;
    std::vector<std::string> free_names;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (std::find(obs_idx.begin(), obs_idx.end(), static_cast<int>(i)) == obs_idx.end()) {
            free_idx.push_back(static_cast<int>(i));
            free_names.push_back(variables_[i]);
        }
    }

    const auto no = static_cast<Eigen::Index>(obs_idx.size());
    const auto nu = static_cast<Eigen::Index>(free_idx.size());
    Eigen::VectorXd o(no);
    for (Eigen::Index i = 0; i < no; ++i) o(i) = obs_val[i];

    std::vector<double> log_w(components_.size());
    std::vector<Eigen::VectorXd> cond_mean(components_.size());
    std::vector<Eigen::MatrixXd> cond_cov(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& comp = components_[k];
        Eigen::VectorXd mu_o(no);
        Eigen::MatrixXd sigma_oo(no, no);
        for (Eigen::Index i = 0; i < no; ++i) {
            mu_o(i) = comp.mean(obs_idx[i]);
            for (Eigen::Index j = 0; j < no; ++j) {
                sigma_oo(i, j) = comp.covariance(obs_idx[i], obs_idx[j]);
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(sigma_oo);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument("condition: observed covariance not positive definite");
        }
        double log_det_l = 0.0;
        for (Eigen::Index i = 0; i < no; ++i) log_det_l += std::log(llt.matrixL()(i, i));
        Eigen::VectorXd diff = o - mu_o;
        Eigen::VectorXd y = diff;
        llt.matrixL().solveInPlace(y);
        log_w[k] = std::log(comp.weight) - 0.5 * static_cast<double>(no) * kLog2Pi - log_det_l -
                   0.5 * y.squaredNorm();

        if (nu > 0) {
            Eigen::VectorXd mu_u(nu);
            Eigen::MatrixXd sigma_uu(nu, nu);
            Eigen::MatrixXd sigma_uo(nu, no);
            for (Eigen::Index i = 0; i < nu; ++i) {
                mu_u(i) = comp.mean(free_idx[i]);
                for (Eigen::Index j = 0; j < nu; ++j) {
                    sigma_uu(i, j) = comp.covariance(free_idx[i], free_idx[j]);
                }
                for (Eigen::Index j = 0; j < no; ++j) {
                    sigma_uo(i, j) = comp.covariance(free_idx[i], obs_idx[j]);
                }
            }
            Eigen::MatrixXd gain = llt.solve(sigma_uo.transpose()).transpose();  // Sigma_uo Sigma_oo^-1
            cond_mean[k] = mu_u + gain * diff;
            Eigen::MatrixXd cov = sigma_uu - gain * sigma_uo.transpose();
            cond_cov[k] = 0.5 * (cov + cov.transpose());
        }
    }

    // "Impossible" means the observed marginal density underflows to zero as
    // a double, not merely that it is small.
    const double total = log_sum_exp(log_w);
    if (!std::isfinite(total) || std::exp(total) == 0.0) {
        throw std::runtime_error("conditioning on impossible evidence");
    }
    if (nu == 0) return GaussianMixture();

    std::vector<GaussianComponent> comps;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const double w = std::exp(log_w[k] - total);
        if (!(w > 0.0)) continue;  // underflowed far-away component
        GaussianComponent out;
        out.weight = w;
        out.mean = std::move(cond_mean[k]);
        out.covariance = std::move(cond_cov[k]);
        comps.push_back(std::move(out));
    }
    double sum = 0.0;
    for (const auto& comp : comps) sum += comp.weight;
    for (auto& comp : comps) comp.weight /= sum;
    return GaussianMixture(std::move(free_names), std::move(comps));
}

Eigen::MatrixXd GaussianMixture::sample(std::size_t n, std::uint64_t seed) const {
    const auto d = static_cast<Eigen::Index>(variables_.size());
    Eigen::MatrixXd out(n, d);
    std::vector<double> weights(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) weights[k] = components_[k].weight;
    Rng rng(seed);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = rng.pick(weights);
        Eigen::VectorXd z(d);
        for (Eigen::Index i = 0; i < d; ++i) z(i) = rng.normal();
        out.row(r) = (components_[k].mean + cache_[k].chol * z).transpose();
    }
    return out;
}

std::int64_t param_count(const GaussianMixture& gm) {
    const auto m = static_cast<std::int64_t>(gm.component_count());
    const auto d = static_cast<std::int64_t>(gm.dimension());
    return (m - 1) + m * d + m * d * (d + 1) / 2;
}

GaussianMixture combine(std::span<const GaussianMixture> mixtures,
                        std::span<const double> weights) {
    if (mixtures.empty() || mixtures.size() != weights.size()) {
        throw std::invalid_argument("combine: mixtures/weights size mismatch");
    }
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0) throw std::invalid_argument("combine: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("combine: weights must sum to 1");
    const auto& vars = mixtures[0].variables();
    for (const auto& gm : mixtures) {
        if (gm.variables() != vars) throw std::invalid_argument("combine: variable-list mismatch");
    }
    if (vars.empty()) return GaussianMixture();

    std::vector<GaussianComponent> comps;
    for (std::size_t j = 0; j < mixtures.size(); ++j) {
        for (const auto& comp : mixtures[j].components()) {
            const double scaled = comp.weight * weights[j];
            if (scaled < 1e-12) continue;
            GaussianComponent out = comp;
            out.weight = scaled;
            comps.push_back(std::move(out));
        }
    }
    if (comps.empty()) throw std::invalid_argument("combine: all components vanished");
    double total = 0.0;
    for (const auto& comp : comps) total += comp.weight;
    for (auto& comp : comps) comp.weight /= total;
    return GaussianMixture(vars, std::move(comps));
}

}  // namespace mixnet
