#include "mixnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixnet/parallel.hpp"
#include "mixnet/rng.hpp"

namespace mixnet {

EvalReport run_cv(const Dataset& data, const std::vector<LearnerKind>& learners, int folds,
                  std::uint64_t seed, const RunConfig& config) {
    if (folds < 2) throw std::invalid_argument("run_cv: folds must be >= 2");
    if (static_cast<std::size_t>(folds) > data.rows()) {
        throw std::invalid_argument("run_cv: more folds than rows");
    }
    if (learners.empty()) throw std::invalid_argument("run_cv: no learners");

    const std::vector<CvSplit> splits = cv_splits(data, folds, mix_seed(seed, "cv"));

    EvalReport report;
    report.folds = folds;
    report.seed = seed;
    report.config = config;
    report.learners.resize(learners.size());
    for (std::size_t l = 0; l < learners.size(); ++l) {
        report.learners[l].learner = learner_name(learners[l]);
        report.learners[l].fold_total_ll.resize(folds);
        report.learners[l].fold_test_rows.resize(folds);
    }

    parallel_for(learners.size() * static_cast<std::size_t>(folds), [&](std::size_t job) {
        const std::size_t l = job / static_cast<std::size_t>(folds);
        const int fold = static_cast<int>(job % static_cast<std::size_t>(folds));
        const std::uint64_t job_seed =
            mix_seed(mix_seed(seed, static_cast<std::uint64_t>(fold)), report.learners[l].learner);

        auto [train, transform] =
            preprocess_fit(splits[fold].train, config.noise, mix_seed(job_seed, "noise"));
        const Dataset test = apply_scaling(splits[fold].test, transform);

        RunConfig cfg = config;
        cfg.search.table.em.seed = job_seed;
        const FittedNet net = fit_learner(learners[l], train, cfg);

        report.learners[l].fold_total_ll[fold] = net.log_likelihood(test);
        report.learners[l].fold_test_rows[fold] = test.rows();
    });

    for (auto& lr : report.learners) {
        double total = 0.0;
        for (const double v : lr.fold_total_ll) total += v;
        lr.mean = total / folds;
        double ss = 0.0;
        for (const double v : lr.fold_total_ll) ss += (v - lr.mean) * (v - lr.mean);
        lr.stddev_folds = folds > 1 ? std::sqrt(ss / (folds - 1)) : 0.0;
        lr.stddev_of_mean = lr.stddev_folds / std::sqrt(static_cast<double>(folds));
        std::size_t rows = 0;
        for (const std::size_t r : lr.fold_test_rows) rows += r;
        lr.mean_per_row = rows > 0 ? total / static_cast<double>(rows) : 0.0;
    }
    return report;
}

Dataset synth_bucket_resample(const Dataset& data, int f, std::uint64_t seed) {
    const auto [map, ddata] = discretize_equal_frequency(data, f);
    const Schema& schema = data.schema();
    const std::size_t n = schema.size();

    // Bucket interval ends per continuous column: column min, cuts, column max.
    std::vector<std::vector<double>> ends(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (schema.is_discrete(static_cast<int>(c))) continue;
        double lo = data.at(0, c), hi = data.at(0, c);
        for (std::size_t r = 1; r < data.rows(); ++r) {
            lo = std::min(lo, data.at(r, c));
            hi = std::max(hi, data.at(r, c));
        }
        ends[c].push_back(lo);
        for (const double cut : map.cuts[c]) ends[c].push_back(cut);
        ends[c].push_back(hi);
    }

    Rng rng(seed);
    std::vector<double> cells(data.cells());
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (schema.is_discrete(static_cast<int>(c))) continue;
            const auto bucket = static_cast<std::size_t>(ddata.at(r, c));
            const double lo = ends[c][bucket];
            const double hi = ends[c][bucket + 1];
            // Draw in (lo, hi]: the half-open side matches the bucket rule
            // "ties with a cut map below", so redrawn values rebucketize
            // identically.
            cells[r * n + c] = hi - rng.uniform() * (hi - lo);
        }
    }
    return Dataset(schema, std::move(cells), data.symbols());
}

SynthResult synth_from_model(const MixNet& net, std::size_t n, std::uint64_t seed) {
    Dataset raw = sample_network(net, n, seed);
    const Schema& schema = raw.schema();
    std::vector<double> cells(raw.cells());
    std::size_t clamped = 0;
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (schema.is_discrete(static_cast<int>(c))) continue;
            double& v = cells[r * schema.size() + c];
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                ++clamped;
            }
        }
    }
    return SynthResult{Dataset(schema, std::move(cells)), clamped};
}

}  // namespace mixnet
