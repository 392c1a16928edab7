#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixnet/dataset.hpp"
#include "mixnet/network.hpp"
#include "mixnet/structure.hpp"

namespace mixnet {

// Histogram-density network: every continuous variable is replaced by its
// equal-frequency bucket index and each node carries a CPT over its buckets
// given the bucketized parents. Continuous density is the bucket probability
// spread uniformly over the bucket's width; discrete nodes skip the
// translation.
struct PseudoDiscreteNet {
    Schema schema;  // the original mixed schema
    MixNetStructure structure;
    int f = 0;
    DiscretizationMap map;  // training-time value cuts per continuous column
    // Density bucket edges per continuous column: 0, midpoints between each
    // cut and the next higher distinct training value, 1. Widths come from
    // here so the density integrates to exactly 1.
    std::vector<std::vector<double>> boundaries;

    struct Node {
        int arity = 0;                   // own bucket/value count
        std::vector<int> parent_arities;  // in structure parent order
        std::vector<double> cpt;          // row-major [parent cells x arity]
    };
    std::vector<Node> nodes;

    // Bucket of a scaled value under the density-edge convention.
    int density_bucket(int col, double x) const;
    double bucket_width(int col, int bucket) const;
};

// Empty structure fitted with the doubled baseline EM restart budget.
MixNet fit_independent(const Dataset& data, const SearchConfig& config);

// greedy_search constrained to MAXPARS = 1 (doubled restart budget).
MixNet fit_tree(const Dataset& data, const SearchConfig& config);

// greedy_search with component_grid = {1}, MAXPARS = K = N - 1, and
// importances computed on the continuous data.
MixNet fit_single_gaussian_net(const Dataset& data, const SearchConfig& config);

// For each F in the grid: discretize, compute importances, run the greedy arc
// addition over CPT nodes (local BIC counts parent_cells * (arity - 1) free
// parameters), and keep the F whose network BIC in density terms is highest,
// ties to the smaller F.
PseudoDiscreteNet fit_pseudo_discrete(const Dataset& data, const std::vector<int>& f_grid,
                                      const SearchConfig& config);

double pseudo_discrete_log_density(const PseudoDiscreteNet& net, std::span<const double> row);
double pseudo_discrete_log_likelihood(const PseudoDiscreteNet& net, const Dataset& data);

// Density-domain BIC of the whole net with the CPT parameter convention.
double pseudo_discrete_bic(const PseudoDiscreteNet& net, const Dataset& data);

}  // namespace mixnet
