#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixnet/dataset.hpp"
#include "mixnet/learner.hpp"
#include "mixnet/network.hpp"

namespace mixnet {

struct LearnerResult {
    std::string learner;
    std::vector<double> fold_total_ll;       // summed test log-likelihood per fold
    std::vector<std::size_t> fold_test_rows;
    double mean = 0.0;
    double stddev_of_mean = 0.0;  // stddev(folds) / sqrt(folds)
    double stddev_folds = 0.0;    // the unscaled alternative, kept for the report
    double mean_per_row = 0.0;    // total over all folds / rows over all folds
};

struct EvalReport {
    std::vector<LearnerResult> learners;
    int folds = 0;
    std::uint64_t seed = 0;
    RunConfig config;
};

// Cross-validated comparison. Per fold and learner, preprocessing statistics
// and every fit come from the training fold only; the test fold is scaled
// through the fitted transform and scored. Job seeds mix (seed, fold,
// learner name) so jobs are independent and the report is reproducible.
EvalReport run_cv(const Dataset& data, const std::vector<LearnerKind>& learners, int folds,
                  std::uint64_t seed, const RunConfig& config);

// Equal-frequency discretization followed by uniform redrawing inside each
// value's bucket interval (interval ends are the neighboring cut points,
// padded with the column min/max). Discrete cells pass through.
Dataset synth_bucket_resample(const Dataset& data, int f, std::uint64_t seed);

struct SynthResult {
    Dataset data;
    std::size_t clamped = 0;  // continuous draws pulled back into [0, 1]
};

// Ancestral samples from a fitted net, clamped into the unit interval.
SynthResult synth_from_model(const MixNet& net, std::size_t n, std::uint64_t seed);

}  // namespace mixnet
