#include <benchmark/benchmark.h>

#include <random>

#include "cbpt/boosting.hpp"
#include "cbpt/model_io.hpp"
#include "cbpt/pruning.hpp"

namespace {

// Gaussian blobs, one per class, in v dimensions.
cbpt::Dataset blobs(std::size_t n, std::size_t v, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> x;
    std::vector<int> y;
    std::vector<std::string> features, classes;
    for (std::size_t f = 0; f < v; ++f) features.push_back("f" + std::to_string(f));
    for (std::size_t k = 0; k < c; ++k) classes.push_back("c" + std::to_string(k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto label = static_cast<int>(i % c);
        for (std::size_t f = 0; f < v; ++f) x.push_back(noise(rng) + (f % c == static_cast<std::size_t>(label) ? 1.5 : 0.0));
        y.push_back(label);
    }
    return cbpt::Dataset(std::move(x), std::move(y), std::move(features), std::move(classes));
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

void BM_GrowFullTree(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto d = blobs(n, 10, 4, 1);
    const auto w = uniform(n);
    for (auto _ : state) benchmark::DoNotOptimize(cbpt::grow_full_tree(d, w));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GrowFullTree)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_PruneSequence(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto tree = cbpt::grow_full_tree(blobs(n, 10, 4, 2), uniform(n));
    for (auto _ : state) benchmark::DoNotOptimize(cbpt::PruneSequence(tree));
    state.counters["leaves"] = static_cast<double>(tree.n_leaves());
}
BENCHMARK(BM_PruneSequence)->RangeMultiplier(4)->Range(256, 16384);

void BM_BestPrunedTree(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto d = blobs(n, 10, 4, 3);
    const auto w = uniform(n);
    for (auto _ : state) benchmark::DoNotOptimize(cbpt::best_pruned_tree(d, w, 5, 0));
}
BENCHMARK(BM_BestPrunedTree)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);

void BM_TrainTenRounds(benchmark::State& state) {
    const auto d = blobs(1000, 10, 4, 4);
    cbpt::BoostConfig cfg;
    cfg.algorithm = static_cast<cbpt::Algorithm>(state.range(0));
    cfg.n_trees = 10;
    for (auto _ : state) benchmark::DoNotOptimize(cbpt::train_model(d, cfg));
    state.SetLabel(std::string(cbpt::to_string(cfg.algorithm)));
}
BENCHMARK(BM_TrainTenRounds)
    ->Arg(static_cast<int>(cbpt::Algorithm::cbpt))
    ->Arg(static_cast<int>(cbpt::Algorithm::adaboost))
    ->Arg(static_cast<int>(cbpt::Algorithm::adaboost_pt))
    ->Unit(benchmark::kMillisecond);

void BM_PredictEnsemble(benchmark::State& state) {
    const auto d = blobs(2000, 10, 4, 5);
    cbpt::BoostConfig cfg;
    cfg.n_trees = static_cast<std::size_t>(state.range(0));
    cfg.algorithm = cbpt::Algorithm::adaboost;
    const auto model = cbpt::train_model(d, cfg);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict(d.row(i)));
        i = (i + 1) % d.n_samples();
    }
    state.counters["estimators"] = static_cast<double>(model.size());
}
BENCHMARK(BM_PredictEnsemble)->Arg(10)->Arg(100)->Arg(500);

void BM_SerializeModel(benchmark::State& state) {
    const auto d = blobs(1000, 10, 4, 6);
    cbpt::BoostConfig cfg;
    cfg.n_trees = 50;
    const auto model = cbpt::train_model(d, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(cbpt::deserialize_model(cbpt::serialize_model(model)));
}
BENCHMARK(BM_SerializeModel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
