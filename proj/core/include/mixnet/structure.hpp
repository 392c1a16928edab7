#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mixnet/dataset.hpp"
#include "mixnet/network.hpp"

namespace mixnet {

// Pairwise arc scores. values(i, j) scores the arc i -> j, i.e. the gain in
// node j's local BIC from adopting i as its only parent.
struct ImportanceMatrix {
    std::vector<std::string> variables;
    Eigen::MatrixXd values;
    bool symmetric = false;
    bool discretized = true;  // provenance of the fitting data
    int bins = 0;             // bucket count when discretized
};

struct SearchConfig {
    int maxpars = 3;
    int k = 6;
    bool assume_symmetric = true;
    // Importances are computed on an equal-frequency discretized copy of the
    // data by default; the continuous mode exists for the single-Gaussian
    // baseline and the spanning-forest equivalence checks.
    bool discretize_importance = true;
    int importance_bins = 16;
    TableConfig table;
};

struct GreedyTrace {
    std::size_t initial_fits = 0;
    std::size_t candidate_refits = 0;
    // Summed node BIC after each accepted arc (strictly increasing).
    std::vector<double> accepted_bic_sums;
};

// Local BIC difference for node j between parent set {i} and no parents,
// fitted on the importance dataset selected by config (all terms for other
// nodes cancel). values(i, j) of importance_matrix is this quantity.
double importance(const Dataset& data, int i, int j, const SearchConfig& config);

// All pairwise importances. With assume_symmetric only i < j is computed
// (the higher index acts as child) and the matrix is mirrored.
ImportanceMatrix importance_matrix(const Dataset& data, const SearchConfig& config);

// DONE/PENDING greedy arc addition guided by the importance matrix; each
// candidate arc refits only the receiving node and is kept iff its local BIC
// strictly increases. Returns the fully fitted network.
MixNet greedy_search(const Dataset& data, const ImportanceMatrix& imp, const SearchConfig& config,
                     GreedyTrace* trace = nullptr);

// Maximum-weight spanning forest over the positive entries of a symmetric
// importance matrix (Kruskal, ties broken by index pair), oriented from the
// lowest-index variable of each component outward.
MixNetStructure max_spanning_forest(const ImportanceMatrix& imp);

// Audit exports: CSV with variable-name headers, and a "parent -> child" arc
// list, one per line.
void export_importance_csv(const ImportanceMatrix& imp, const std::string& path);
void export_arc_list(const MixNetStructure& structure, const std::string& path);

// Conditional log-likelihood of one node over the dataset: sum of clamped
// joint-table terms minus clamped parent-marginal terms, exactly as MixNet
// scoring computes it.
double node_conditional_ll(const MixtureTable& joint, const MixtureTable& parent_marginal,
                           const Dataset& data);

namespace detail {

// The arc-addition loop shared by the mix-net and pseudo-discrete learners.
// `fit(child, parent_indices)` fits one node and must expose `.node_bic`;
// fits of accepted arcs are retained so nothing is refit after the search.
template <typename Fitter>
auto greedy_core(const ImportanceMatrix& imp, int maxpars, int k, Fitter&& fit,
                 GreedyTrace* trace) {
    using FitT = std::decay_t<decltype(fit(0, std::declval<const std::vector<int>&>()))>;
    struct Result {
        std::vector<std::vector<int>> parents;
        std::vector<FitT> fits;
    };

    const int n = static_cast<int>(imp.values.rows());
    Result result;
    result.parents.resize(n);
    result.fits.reserve(n);
    for (int i = 0; i < n; ++i) result.fits.push_back(fit(i, std::vector<int>{}));
    if (trace) trace->initial_fits = static_cast<std::size_t>(n);

    double bic_sum = 0.0;
    for (const auto& f : result.fits) bic_sum += f.node_bic;

    std::vector<bool> done(n, false);
    int done_count = 0;
    while (done_count < n) {
        int target = -1;
        if (done_count == 0) {
            // Seed DONE with the strongest potential parent.
            double best = -std::numeric_limits<double>::infinity();
            for (int p = 0; p < n; ++p) {
                double row_max = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < n; ++j) {
                    if (j != p) row_max = std::max(row_max, imp.values(p, j));
                }
                if (row_max > best) {
                    best = row_max;
                    target = p;
                }
            }
            if (target < 0) target = 0;  // n == 1
        } else {
            // Highest importance over DONE x PENDING; ties by lowest child
            // index, then lowest parent index.
            double best = -std::numeric_limits<double>::infinity();
            for (int p = 0; p < n; ++p) {
                if (done[p]) continue;
                for (int d = 0; d < n; ++d) {
                    if (!done[d]) continue;
                    if (imp.values(d, p) > best) {
                        best = imp.values(d, p);
                        target = p;
                    }
                }
            }

            std::vector<int> candidates;
            for (int d = 0; d < n; ++d) {
                if (done[d]) candidates.push_back(d);
            }
            std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
                if (imp.values(a, target) != imp.values(b, target)) {
                    return imp.values(a, target) > imp.values(b, target);
                }
                return a < b;
            });
            const int budget = std::min<int>(k, static_cast<int>(candidates.size()));

            for (int c = 0; c < budget; ++c) {
                if (static_cast<int>(result.parents[target].size()) >= maxpars) break;
                if (imp.values(candidates[c], target) < 0) break;
                std::vector<int> trial_parents = result.parents[target];
                trial_parents.push_back(candidates[c]);
                FitT trial = fit(target, trial_parents);
                if (trace) ++trace->candidate_refits;
                if (trial.node_bic > result.fits[target].node_bic) {
                    bic_sum += trial.node_bic - result.fits[target].node_bic;
                    result.parents[target] = std::move(trial_parents);
                    result.fits[target] = std::move(trial);
                    if (trace) trace->accepted_bic_sums.push_back(bic_sum);
                }
            }
        }
        done[target] = true;
        ++done_count;
    }
    return result;
}

}  // namespace detail

}  // namespace mixnet
