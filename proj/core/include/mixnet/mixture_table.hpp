#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixnet/dataset.hpp"
#include "mixnet/em.hpp"
#include "mixnet/gaussian_mixture.hpp"

namespace mixnet {

struct TableConfig {
    double pseudocount = 0.5;
    int min_cell_rows = 10;
    EmConfig em;
};

// Lookup table over the full assignments of a set of discrete variables.
// Each cell carries a smoothed probability and a Gaussian mixture over the
// table's continuous variables. Cells are indexed in mixed radix with the
// first discrete variable most significant; with no discrete variables there
// is a single cell of probability 1.
class MixtureTable {
public:
    MixtureTable() = default;

    MixtureTable(std::vector<std::string> discrete_vars, std::vector<int> arities,
                 std::vector<std::string> continuous_vars, std::vector<double> probs,
                 std::vector<std::shared_ptr<const GaussianMixture>> mixtures);

    const std::vector<std::string>& discrete_variables() const { return discrete_vars_; }
    const std::vector<int>& arities() const { return arities_; }
    const std::vector<std::string>& continuous_variables() const { return continuous_vars_; }

    std::size_t cell_count() const { return probs_.size(); }
    std::size_t cell_index(std::span<const int> assignment) const;
    std::vector<int> cell_assignment(std::size_t cell) const;

    double prob(std::size_t cell) const { return probs_[cell]; }
    const GaussianMixture& mixture(std::size_t cell) const { return *mixtures_[cell]; }
    const std::shared_ptr<const GaussianMixture>& mixture_ptr(std::size_t cell) const {
        return mixtures_[cell];
    }

    // log prob(q) + log density of q's mixture at c.
    double log_density(std::span<const int> q, const Eigen::VectorXd& c) const;

private:
    std::vector<std::string> discrete_vars_;
    std::vector<int> arities_;
    std::vector<std::string> continuous_vars_;
    std::vector<double> probs_;
    std::vector<std::shared_ptr<const GaussianMixture>> mixtures_;
};

// Fits a table on the dataset: cell probabilities are additively smoothed
// counts, (count + pseudocount) / (rows + pseudocount * cells); each cell with
// at least min_cell_rows rows gets its own select_mixture fit over the
// continuous variables, thinner cells share one fallback mixture fitted on all
// rows. Per-cell EM seeds derive from config.em.seed and the cell index only,
// so tables over the same variables and data are identical regardless of which
// caller fits them.
MixtureTable fit_table(const Dataset& data, const std::vector<std::string>& discrete_vars,
                       const std::vector<std::string>& continuous_vars,
                       const TableConfig& config);

// Sums a discrete variable out (cells grouped over the remaining assignments,
// mixtures convexly combined), or marginalizes a continuous variable out of
// every cell's mixture. Cell probabilities are untouched in the continuous
// case.
MixtureTable marginalize_out(const MixtureTable& table, const std::string& variable);

// (cells - 1) free probabilities plus each cell mixture's parameters.
std::int64_t param_count(const MixtureTable& table);

}  // namespace mixnet
