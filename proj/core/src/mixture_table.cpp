#include "mixnet/mixture_table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "mixnet/parallel.hpp"
#include "mixnet/rng.hpp"

namespace mixnet {

MixtureTable::MixtureTable(std::vector<std::string> discrete_vars, std::vector<int> arities,
                           std::vector<std::string> continuous_vars, std::vector<double> probs,
                           std::vector<std::shared_ptr<const GaussianMixture>> mixtures)
    : discrete_vars_(std::move(discrete_vars)),
      arities_(std::move(arities)),
      continuous_vars_(std::move(continuous_vars)),
      probs_(std::move(probs)),
      mixtures_(std::move(mixtures)) {
    if (discrete_vars_.size() != arities_.size()) {
        throw std::invalid_argument("table: arity list does not match discrete variables");
    }
    std::size_t cells = 1;
    for (int a : arities_) {
        if (a < 2) throw std::invalid_argument("table: arity must be >= 2");
        cells *= static_cast<std::size_t>(a);
    }
    if (probs_.size() != cells || mixtures_.size() != cells) {
        throw std::invalid_argument("table: cell count does not match arities");
    }
    double total = 0.0;
    for (double p : probs_) {
        if (p < 0.0 || !std::isfinite(p)) throw std::invalid_argument("table: bad probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("table: probabilities must sum to 1");
    }
    for (const auto& gm : mixtures_) {
        if (!gm || gm->variables() != continuous_vars_) {
            throw std::invalid_argument("table: cell mixture variables must match the table");
        }
    }
}

std::size_t MixtureTable::cell_index(std::span<const int> assignment) const {
    if (assignment.size() != discrete_vars_.size()) {
        throw std::invalid_argument("table: assignment length mismatch");
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < arities_.size(); ++i) {
        if (assignment[i] < 0 || assignment[i] >= arities_[i]) {
            throw std::out_of_range("table: assignment out of arity range");
        }
        idx = idx * static_cast<std::size_t>(arities_[i]) + static_cast<std::size_t>(assignment[i]);
    }
    return idx;
}

std::vector<int> MixtureTable::cell_assignment(std::size_t cell) const {
    std::vector<int> assignment(arities_.size());
    for (std::size_t i = arities_.size(); i-- > 0;) {
        const auto a = static_cast<std::size_t>(arities_[i]);
        assignment[i] = static_cast<int>(cell % a);
        cell /= a;
    }
    return assignment;
}

double MixtureTable::log_density(std::span<const int> q, const Eigen::VectorXd& c) const {
    const std::size_t cell = cell_index(q);
    return std::log(probs_[cell]) + mixtures_[cell]->log_density(c);
}

MixtureTable fit_table(const Dataset& data, const std::vector<std::string>& discrete_vars,
                       const std::vector<std::string>& continuous_vars,
                       const TableConfig& config) {
    if (data.rows() == 0) throw std::invalid_argument("fit_table: empty data");
    if (config.pseudocount < 0 || config.min_cell_rows < 1) {
        throw std::invalid_argument("fit_table: bad config");
    }
    const Schema& schema = data.schema();
    std::vector<int> q_cols, c_cols;
    std::vector<int> arities;
    for (const auto& name : discrete_vars) {
        const int col = schema.index_of(name);
        if (!schema.is_discrete(col)) {
            throw std::invalid_argument("fit_table: '" + name + "' is not discrete");
        }
        q_cols.push_back(col);
        arities.push_back(schema.arity(col));
    }
    for (const auto& name : continuous_vars) {
        const int col = schema.index_of(name);
        if (schema.is_discrete(col)) {
            throw std::invalid_argument("fit_table: '" + name + "' is not continuous");
        }
        if (std::find(q_cols.begin(), q_cols.end(), col) != q_cols.end()) {
            throw std::invalid_argument("fit_table: variable listed twice");
        }
        c_cols.push_back(col);
    }

    std::size_t cells = 1;
    for (int a : arities) cells *= static_cast<std::size_t>(a);

    std::vector<std::vector<std::size_t>> cell_rows(cells);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < q_cols.size(); ++i) {
            idx = idx * static_cast<std::size_t>(arities[i]) +
                  static_cast<std::size_t>(data.at(r, q_cols[i]));
        }
        cell_rows[idx].push_back(r);
    }

    const double rows = static_cast<double>(data.rows());
    const double denom = rows + config.pseudocount * static_cast<double>(cells);
    std::vector<double> probs(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        probs[cell] = (static_cast<double>(cell_rows[cell].size()) + config.pseudocount) / denom;
    }

    std::vector<std::shared_ptr<const GaussianMixture>> mixtures(cells);
    if (continuous_vars.empty()) {
        auto unit = std::make_shared<const GaussianMixture>();
        for (auto& gm : mixtures) gm = unit;
        return MixtureTable(discrete_vars, arities, continuous_vars, std::move(probs),
                            std::move(mixtures));
    }

    auto extract = [&](const std::vector<std::size_t>& ids) {
        Eigen::MatrixXd m(ids.size(), c_cols.size());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            for (std::size_t c = 0; c < c_cols.size(); ++c) m(r, c) = data.at(ids[r], c_cols[c]);
        }
        return m;
    };

    std::shared_ptr<const GaussianMixture> fallback;
    bool need_fallback = false;
    for (const auto& ids : cell_rows) {
        if (static_cast<int>(ids.size()) < config.min_cell_rows) need_fallback = true;
    }
    if (need_fallback) {
        std::vector<std::size_t> all(data.rows());
        for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
        EmConfig cfg = config.em;
        cfg.seed = mix_seed(config.em.seed, "fallback");
        fallback = std::make_shared<const GaussianMixture>(
            select_mixture(extract(all), continuous_vars, cfg).mixture);
    }

    parallel_for(cells, [&](std::size_t cell) {
        if (static_cast<int>(cell_rows[cell].size()) < config.min_cell_rows) {
            mixtures[cell] = fallback;
            return;
        }
        EmConfig cfg = config.em;
        cfg.seed = mix_seed(config.em.seed, static_cast<std::uint64_t>(cell));
        mixtures[cell] = std::make_shared<const GaussianMixture>(
            select_mixture(extract(cell_rows[cell]), continuous_vars, cfg).mixture);
    });

    return MixtureTable(discrete_vars, arities, continuous_vars, std::move(probs),
                        std::move(mixtures));
}

MixtureTable marginalize_out(const MixtureTable& table, const std::string& variable) {
    const auto& q = table.discrete_variables();
    const auto& c = table.continuous_variables();

    const auto q_pos = std::find(q.begin(), q.end(), variable);
    if (q_pos != q.end()) {
        const auto drop = static_cast<std::size_t>(q_pos - q.begin());
        std::vector<std::string> kept_vars;
        std::vector<int> kept_arities;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (i == drop) continue;
            kept_vars.push_back(q[i]);
            kept_arities.push_back(table.arities()[i]);
        }
        std::size_t kept_cells = 1;
        for (int a : kept_arities) kept_cells *= static_cast<std::size_t>(a);

        const int dropped_arity = table.arities()[drop];
        std::vector<double> probs(kept_cells, 0.0);
        std::vector<std::shared_ptr<const GaussianMixture>> mixtures(kept_cells);
        for (std::size_t cell = 0; cell < kept_cells; ++cell) {
            std::vector<int> kept_assignment(kept_arities.size());
            // Recover the assignment in the reduced radix system.
            {
                std::size_t rest = cell;
                for (std::size_t i = kept_arities.size(); i-- > 0;) {
                    kept_assignment[i] = static_cast<int>(rest % kept_arities[i]);
                    rest /= static_cast<std::size_t>(kept_arities[i]);
                }
            }
            std::vector<GaussianMixture> group;
            std::vector<double> group_probs;
            for (int v = 0; v < dropped_arity; ++v) {
                std::vector<int> full(q.size());
                for (std::size_t i = 0, j = 0; i < q.size(); ++i) {
                    full[i] = (i == drop) ? v : kept_assignment[j++];
                }
                const std::size_t src = table.cell_index(full);
                group.push_back(table.mixture(src));
                group_probs.push_back(table.prob(src));
                probs[cell] += table.prob(src);
            }
            std::vector<double> weights(group_probs.size());
            if (probs[cell] > 0.0) {
                for (std::size_t i = 0; i < weights.size(); ++i) {
                    weights[i] = group_probs[i] / probs[cell];
                }
            } else {
                // Zero-mass group (only reachable with pseudocount 0); the
                // combined mixture is never weighted into a density.
                std::fill(weights.begin(), weights.end(), 1.0 / weights.size());
            }
            mixtures[cell] =
                std::make_shared<const GaussianMixture>(combine(group, weights));
        }
        return MixtureTable(std::move(kept_vars), std::move(kept_arities), c, std::move(probs),
                            std::move(mixtures));
    }

    if (std::find(c.begin(), c.end(), variable) != c.end()) {
        std::vector<std::string> keep;
        for (const auto& name : c) {
            if (name != variable) keep.push_back(name);
        }
        std::vector<double> probs(table.cell_count());
        std::vector<std::shared_ptr<const GaussianMixture>> mixtures(table.cell_count());
        std::map<const GaussianMixture*, std::shared_ptr<const GaussianMixture>> seen;
        for (std::size_t cell = 0; cell < table.cell_count(); ++cell) {
            probs[cell] = table.prob(cell);
            auto& cached = seen[table.mixture_ptr(cell).get()];
            if (!cached) {
                cached = std::make_shared<const GaussianMixture>(table.mixture(cell).marginalize(keep));
            }
            mixtures[cell] = cached;  // thin cells keep sharing one object
        }
        return MixtureTable(table.discrete_variables(), table.arities(), std::move(keep),
                            std::move(probs), std::move(mixtures));
    }

    throw std::invalid_argument("marginalize_out: unknown variable '" + variable + "'");
}

std::int64_t param_count(const MixtureTable& table) {
    std::int64_t total = static_cast<std::int64_t>(table.cell_count()) - 1;
    for (std::size_t cell = 0; cell < table.cell_count(); ++cell) {
        total += param_count(table.mixture(cell));
    }
    return total;
}

}  // namespace mixnet
