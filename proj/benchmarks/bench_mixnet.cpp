#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mixnet/dataset.hpp"
#include "mixnet/em.hpp"
#include "mixnet/learner.hpp"
#include "mixnet/mixture_table.hpp"
#include "mixnet/network.hpp"
#include "mixnet/rng.hpp"
#include "mixnet/structure.hpp"

using namespace mixnet;

namespace {

// Mixed benchmark table: one binary column, the rest continuous with chained
// dependencies so fits see realistic correlation.
Dataset bench_data(std::size_t rows, int continuous, std::uint64_t seed) {
    Schema s;
    s.columns.push_back({"q", ColumnKind::discrete, 2});
    for (int i = 0; i < continuous; ++i) {
        s.columns.push_back({"c" + std::to_string(i), ColumnKind::continuous, 0});
    }
    Rng rng(seed);
    std::vector<double> cells;
    cells.reserve(rows * (continuous + 1));
    for (std::size_t r = 0; r < rows; ++r) {
        const double q = rng.uniform() < 0.5 ? 1.0 : 0.0;
        cells.push_back(q);
        double prev = 0.3 + 0.2 * q + 0.08 * rng.normal();
        cells.push_back(prev);
        for (int i = 1; i < continuous; ++i) {
            prev = 0.2 + 0.6 * prev + 0.06 * rng.normal();
            cells.push_back(prev);
        }
    }
    return Dataset(s, std::move(cells));
}

EmConfig quick_em(std::uint64_t seed) {
    EmConfig cfg;
    cfg.component_grid = {1, 2, 3};
    cfg.restarts = 2;
    cfg.seed = seed;
    return cfg;
}

void BM_EmFit(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    Eigen::MatrixXd data(rows, 2);
    for (std::size_t r = 0; r < rows; ++r) {
        const double mode = rng.uniform() < 0.5 ? 0.3 : 0.7;
        data(static_cast<Eigen::Index>(r), 0) = mode + 0.06 * rng.normal();
        data(static_cast<Eigen::Index>(r), 1) = mode + 0.08 * rng.normal();
    }
    EmConfig cfg = quick_em(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(em_fit(data, {"x", "y"}, 2, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_EmFit)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_TableFit(benchmark::State& state) {
    const Dataset data = bench_data(static_cast<std::size_t>(state.range(0)), 3, 11);
    TableConfig cfg;
    cfg.em = quick_em(11);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_table(data, {"q"}, {"c0", "c1", "c2"}, cfg));
    }
}
BENCHMARK(BM_TableFit)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_RowScoring(benchmark::State& state) {
    const Dataset data = bench_data(2000, 5, 13);
    RunConfig cfg;
    cfg.search.table.em = quick_em(13);
    const FittedNet net = fit_learner(LearnerKind::mixnet, data, cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.log_likelihood(data));
    }
    state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_RowScoring)->Unit(benchmark::kMillisecond);

void BM_SampleNetwork(benchmark::State& state) {
    const Dataset data = bench_data(2000, 5, 17);
    RunConfig cfg;
    cfg.search.table.em = quick_em(17);
    const FittedNet fitted = fit_learner(LearnerKind::mixnet, data, cfg);
    const MixNet& net = std::get<MixNet>(fitted.model);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_network(net, n, ++seed));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SampleNetwork)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ImportanceMatrix(benchmark::State& state) {
    const Dataset data = bench_data(2000, static_cast<int>(state.range(0)) - 1, 19);
    SearchConfig cfg;
    cfg.table.em = quick_em(19);
    for (auto _ : state) {
        benchmark::DoNotOptimize(importance_matrix(data, cfg));
    }
}
BENCHMARK(BM_ImportanceMatrix)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_GreedySearch(benchmark::State& state) {
    const Dataset data = bench_data(2000, 5, 23);
    SearchConfig cfg;
    cfg.table.em = quick_em(23);
    const ImportanceMatrix imp = importance_matrix(data, cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(greedy_search(data, imp, cfg));
    }
}
BENCHMARK(BM_GreedySearch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
