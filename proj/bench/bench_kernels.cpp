// Serial reference vs OpenMP kernels. The Exec argument is the benchmark's
// second range value: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "prefab/clustering.hpp"
#include "prefab/kernels.hpp"
#include "prefab/model.hpp"
#include "prefab/pairing.hpp"
#include "prefab/synth.hpp"

using namespace prefab;

namespace {

kernels::Exec exec_of(const benchmark::State& state) {
    return state.range(1) == 0 ? kernels::Exec::Serial : kernels::Exec::Parallel;
}

const synth::ArchetypeCorpus& archetypes() {
    static const auto corpus = [] {
        synth::ArchetypeCorpusOptions opt;
        opt.per_archetype = 10;
        opt.seed = 1;
        auto c = synth::make_archetype_corpus(opt);
        for (auto& t : c.traces) t.resize(128);
        return c;
    }();
    return corpus;
}

const Corpus& world() {
    static const auto corpus = [] {
        synth::WorldOptions opt;
        opt.train_sessions = 4;
        opt.test_sessions = 0;
        opt.seed = 1;
        return synth::make_world(opt);
    }();
    return corpus;
}

void BM_DtwMatrix(benchmark::State& state) {
    const auto& all = archetypes().traces;
    const std::vector<std::vector<double>> traces(all.begin(), all.begin() + state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(dtw_matrix(traces, {}, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}

void BM_PairGradients(benchmark::State& state) {
    const auto& corpus = world();
    const auto& s = corpus.sessions.front();
    NetworkConfig config;
    const auto weights = init_weights(config, s.feature_names.size(), s.biography.size());
    const auto pairs = build_pairs(s);
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(state.range(0)), pairs.size());
    std::vector<double> grad(weights.params.size());
    for (auto _ : state) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const double loss = kernels::accumulate_gradients(
            exec_of(state), n, grad.size(),
            [&](std::size_t k, std::span<double> g) {
                const auto& p = pairs[k];
                return pair_objective(weights, segment_at(s, p.i), segment_at(s, p.j), label_to_class(p.label), 0, g);
            },
            grad);
        benchmark::DoNotOptimize(loss);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_Reconstruct(benchmark::State& state) {
    const auto& s = world().sessions.front();
    NetworkConfig config;
    const auto weights = init_weights(config, s.feature_names.size(), s.biography.size());
    for (auto _ : state) benchmark::DoNotOptimize(reconstruct(s, weights, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.length()));
}

}  // namespace

BENCHMARK(BM_DtwMatrix)->ArgsProduct({{20, 40}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairGradients)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Reconstruct)->ArgsProduct({{0}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
