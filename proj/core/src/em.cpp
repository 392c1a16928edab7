#include "mixnet/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixnet/rng.hpp"

namespace mixnet {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Component {
    double weight;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd chol;      // lower factor of cov
    double log_norm;           // -d/2 log 2pi - log|L|
};

void refresh_cholesky(Component& c) {
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("em_fit: floored covariance lost positive definiteness");
    }
    c.chol = llt.matrixL();
    double log_det_l = 0.0;
    for (Eigen::Index i = 0; i < c.chol.rows(); ++i) log_det_l += std::log(c.chol(i, i));
    c.log_norm = -0.5 * static_cast<double>(c.chol.rows()) * kLog2Pi - log_det_l;
}

void floor_eigenvalues(Eigen::MatrixXd& sigma, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
    sigma = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
}

// Returns the total ll and fills log_resp (R x M) with unnormalized
// per-component log posteriors.
double e_step(const Eigen::MatrixXd& data, const std::vector<Component>& comps,
              Eigen::MatrixXd& log_resp) {
    const Eigen::Index rows = data.rows();
    const auto m = static_cast<Eigen::Index>(comps.size());
    log_resp.resize(rows, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& c = comps[k];
        Eigen::MatrixXd y = (data.rowwise() - c.mean.transpose()).transpose();
        c.chol.triangularView<Eigen::Lower>().solveInPlace(y);
        log_resp.col(k) = (-0.5 * y.colwise().squaredNorm().transpose().array() +
                           (std::log(c.weight) + c.log_norm))
                              .matrix();
    }
    double total = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double hi = log_resp.row(r).maxCoeff();
        const double lse = hi + std::log((log_resp.row(r).array() - hi).exp().sum());
        log_resp.row(r) = (log_resp.row(r).array() - lse).exp();
        total += lse;
    }
    return total;  // log_resp now holds normalized responsibilities
}

void m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& resp,
            std::vector<Component>& comps, double cov_floor) {
    const auto rows = static_cast<double>(data.rows());
    const Eigen::VectorXd nk = resp.colwise().sum();
    const double drop_below = 1e-6 / static_cast<double>(comps.size());

    std::vector<Component> survivors;
    survivors.reserve(comps.size());
    double kept_mass = 0.0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        const double alpha = nk(static_cast<Eigen::Index>(k)) / rows;
        if (alpha < drop_below) continue;
        Component c = std::move(comps[k]);
        const Eigen::VectorXd w =
            resp.col(static_cast<Eigen::Index>(k)) / nk(static_cast<Eigen::Index>(k));
        c.weight = alpha;
        c.mean = data.transpose() * w;
        Eigen::MatrixXd centered = data.rowwise() - c.mean.transpose();
        c.cov = centered.transpose() * (centered.array().colwise() * w.array()).matrix();
        c.cov = 0.5 * (c.cov + c.cov.transpose()).eval();
        floor_eigenvalues(c.cov, cov_floor);
        refresh_cholesky(c);
        kept_mass += alpha;
        survivors.push_back(std::move(c));
    }
    for (auto& c : survivors) c.weight /= kept_mass;
    comps = std::move(survivors);
}

struct Run {
    std::vector<Component> comps;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::vector<double> trace;
    bool converged = false;
};

Run run_em(const Eigen::MatrixXd& data, std::vector<Component> comps, const EmConfig& config) {
    Run run;
    Eigen::MatrixXd resp;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < config.max_iterations; ++it) {
        const double ll = e_step(data, comps, resp);
        run.trace.push_back(ll);
        if (it > 0 && ll - prev < config.rel_tol * std::max(std::abs(prev), 1e-10)) {
            run.converged = true;
            break;
        }
        prev = ll;
        m_step(data, resp, comps, config.cov_floor);
    }
    if (!run.converged) {
        // The last M-step went unevaluated; score it so the reported ll
        // matches the returned parameters.
        run.trace.push_back(e_step(data, comps, resp));
    }
    run.log_likelihood = run.trace.back();
    run.comps = std::move(comps);
    return run;
}

std::vector<Component> seeded_init(const Eigen::MatrixXd& data, int m, double cov_floor,
                                   std::uint64_t seed) {
    const Eigen::Index rows = data.rows();
    const Eigen::Index d = data.cols();

    std::vector<Eigen::Index> order(rows);
    for (Eigen::Index i = 0; i < rows; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < d; ++c) {
            if (data(a, c) != data(b, c)) return data(a, c) < data(b, c);
        }
        return false;
    });
    std::vector<Eigen::Index> distinct;
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (i == 0 || (data.row(order[i]).array() != data.row(order[i - 1]).array()).any()) {
            distinct.push_back(order[i]);
        }
    }

    Eigen::VectorXd mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
    Eigen::MatrixXd base_cov =
        (centered.transpose() * centered / static_cast<double>(rows)) / static_cast<double>(m);
    base_cov = 0.5 * (base_cov + base_cov.transpose()).eval();
    floor_eigenvalues(base_cov, cov_floor);

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    if (static_cast<int>(distinct.size()) >= m) {
        chosen = rng.sample_without_replacement(distinct.size(), static_cast<std::size_t>(m));
    } else {
        for (int k = 0; k < m; ++k) chosen.push_back(k % distinct.size());
    }

    std::vector<Component> comps(m);
    for (int k = 0; k < m; ++k) {
        comps[k].weight = 1.0 / m;
        comps[k].mean = data.row(distinct[chosen[k]]).transpose();
        comps[k].cov = base_cov;
        refresh_cholesky(comps[k]);
    }
    return comps;
}

GaussianMixture to_mixture(const std::vector<Component>& comps,
                           const std::vector<std::string>& variables) {
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    std::vector<GaussianComponent> out(comps.size());
    for (std::size_t k = 0; k < comps.size(); ++k) {
        out[k].weight = comps[k].weight / total;
        out[k].mean = comps[k].mean;
        out[k].covariance = comps[k].cov;
    }
    return GaussianMixture(variables, std::move(out));
}

}  // namespace

EmResult em_fit(const Eigen::MatrixXd& data, const std::vector<std::string>& variables,
                int components, const EmConfig& config, const GaussianMixture* init) {
    const Eigen::Index rows = data.rows();
    const Eigen::Index d = data.cols();
    if (rows == 0 || d == 0) throw std::invalid_argument("em_fit: empty data");
    if (variables.size() != static_cast<std::size_t>(d)) {
        throw std::invalid_argument("em_fit: variable count does not match columns");
    }
    if (config.max_iterations < 1 || config.restarts < 1 || !(config.rel_tol > 0)) {
        throw std::invalid_argument("em_fit: bad config");
    }

    Run best;
    if (init != nullptr) {
        if (init->dimension() != static_cast<std::size_t>(d)) {
            throw std::invalid_argument("em_fit: init dimension mismatch");
        }
        std::vector<Component> comps(init->component_count());
        for (std::size_t k = 0; k < comps.size(); ++k) {
            comps[k].weight = init->components()[k].weight;
            comps[k].mean = init->components()[k].mean;
            comps[k].cov = init->components()[k].covariance;
            floor_eigenvalues(comps[k].cov, config.cov_floor);
            refresh_cholesky(comps[k]);
        }
        best = run_em(data, std::move(comps), config);
    } else {
        if (components < 1 || static_cast<Eigen::Index>(components) > rows) {
            throw std::invalid_argument("em_fit: component count must be in [1, rows]");
        }
        for (int r = 0; r < config.restarts; ++r) {
            Run run = run_em(
                data,
                seeded_init(data, components, config.cov_floor,
                            mix_seed(config.seed, static_cast<std::uint64_t>(r))),
                config);
            if (run.log_likelihood > best.log_likelihood) best = std::move(run);
        }
    }

    EmResult result;
    result.mixture = to_mixture(best.comps, variables);
    result.log_likelihood = best.log_likelihood;
    result.trace = std::move(best.trace);
    result.converged = best.converged;
    return result;
}

double bic(double log_likelihood, std::int64_t params, std::size_t rows) {
    if (rows == 0) throw std::invalid_argument("bic: empty data");
    return log_likelihood - 0.5 * std::log(static_cast<double>(rows)) * static_cast<double>(params);
}

double bic(const GaussianMixture& gm, const Eigen::MatrixXd& data) {
    if (data.rows() == 0) throw std::invalid_argument("bic: empty data");
    double ll = 0.0;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        ll += gm.log_density(data.row(r).transpose());
    }
    return bic(ll, param_count(gm), static_cast<std::size_t>(data.rows()));
}

EmResult select_mixture(const Eigen::MatrixXd& data, const std::vector<std::string>& variables,
                        const EmConfig& config) {
    if (data.rows() == 0 || data.cols() == 0) throw std::invalid_argument("select_mixture: empty data");
    if (config.component_grid.empty()) {
        throw std::invalid_argument("select_mixture: empty component grid");
    }
    std::vector<int> grid;
    for (int m : config.component_grid) {
        if (static_cast<Eigen::Index>(m) <= data.rows()) grid.push_back(m);
    }
    if (grid.empty()) grid.push_back(static_cast<int>(data.rows()));

    EmResult best;
    double best_bic = -std::numeric_limits<double>::infinity();
    for (int m : grid) {
        EmConfig cfg = config;
        cfg.seed = mix_seed(config.seed, static_cast<std::uint64_t>(m));
        EmResult fit = em_fit(data, variables, m, cfg);
        const double score =
            bic(fit.log_likelihood, param_count(fit.mixture), static_cast<std::size_t>(data.rows()));
        if (score > best_bic) {
            best_bic = score;
            best = std::move(fit);
        }
    }
    return best;
}

}  // namespace mixnet
