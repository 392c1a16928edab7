#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mixnet/baselines.hpp"
#include "mixnet/dataset.hpp"
#include "mixnet/network.hpp"
#include "mixnet/structure.hpp"

namespace mixnet {

enum class LearnerKind { mixnet, independent, tree, single_gaussian, pseudo_discrete };

// Names as used on the command line and in reports: "mixnet", "independent",
// "tree", "single-gaussian", "pseudo-discrete". Parsing throws on anything
// else.
std::string learner_name(LearnerKind kind);
LearnerKind parse_learner(const std::string& name);

// Everything a fit run needs. The seed in search.table.em seeds all fitting;
// derived streams (subsampling, per-cell EM, sampling) mix it with structural
// salts so no two uses collide.
struct RunConfig {
    SearchConfig search;
    std::vector<int> f_grid = {2, 4, 8, 16, 32, 64};
    std::size_t subsample_cap = 10000;
    NoiseSpec noise{1e-6, true};
    int folds = 10;
};

// A fitted model of any learner kind, scored through one dispatching surface
// so every learner shares the evaluation conventions.
struct FittedNet {
    LearnerKind kind = LearnerKind::mixnet;
    std::variant<MixNet, PseudoDiscreteNet> model;

    const Schema& schema() const;
    double row_log_density(std::span<const double> row) const;
    double log_likelihood(const Dataset& data) const;
    double bic(const Dataset& data) const;
    std::int64_t parameter_total() const;
    const MixNetStructure& structure() const;
};

// Dispatches to the learner. All learners except single-gaussian fit on a
// capped subsample of the rows; single-gaussian uses them all.
FittedNet fit_learner(LearnerKind kind, const Dataset& train, const RunConfig& config);

}  // namespace mixnet
