#include "streamdiar/features.hpp"
#include "streamdiar/model.hpp"
#include "streamdiar/pipeline.hpp"
#include "streamdiar/scoring.hpp"
#include "streamdiar/simulator.hpp"
#include "streamdiar/stb.hpp"
#include "streamdiar/synthetic_backend.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace streamdiar;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

// Default architecture; frames = buffer + chunk.
void BM_SaForward(benchmark::State &state) {
    EncoderConfig cfg;
    const auto w = EncoderWeights::random(cfg, 1, 0.05);
    const Matrix x = random_matrix(cfg.input_dim, state.range(0), 2);
    for (auto _ : state) benchmark::DoNotOptimize(sa_forward(cfg, w, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SaForward)->Arg(10)->Arg(110)->Arg(510)->Unit(benchmark::kMillisecond);

// Full tracing-buffer step with a buffer already at l_max.
void BM_ProcessChunk(benchmark::State &state) {
    EncoderConfig cfg;
    EncoderBackend backend({cfg, EncoderWeights::random(cfg, 3, 0.05)});
    const auto l_max = static_cast<int>(state.range(0));
    TracingBuffer buffer({l_max, SelectionStrategy::WeightedSampling, 4});
    buffer.assign(Matrix::Zero(cfg.input_dim, l_max), Posteriors::Constant(2, l_max, 0.5));
    const Matrix chunk = random_matrix(cfg.input_dim, 10, 5);
    for (auto _ : state) benchmark::DoNotOptimize(buffer.process_chunk(chunk, backend));
}
BENCHMARK(BM_ProcessChunk)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_BestPermutation(benchmark::State &state) {
    const auto s = state.range(0);
    const Matrix a = random_matrix(s, 500, 6), b = random_matrix(s, 500, 7);
    for (auto _ : state) benchmark::DoNotOptimize(best_permutation(a, b));
}
BENCHMARK(BM_BestPermutation)->DenseRange(2, 4);

void BM_ComputeDer(benchmark::State &state) {
    SimulationConfig sim;
    sim.total_frames = state.range(0);
    sim.seed = 8;
    const LabelMatrix ref = simulate_labels(sim);
    sim.seed = 9;
    const LabelMatrix hyp = simulate_labels(sim);
    for (auto _ : state) benchmark::DoNotOptimize(recording_wise_der(ref, hyp));
}
BENCHMARK(BM_ComputeDer)->Arg(6000)->Arg(36000)->Unit(benchmark::kMillisecond);

void BM_ComputeLogmel(benchmark::State &state) {
    AudioBuffer audio;
    audio.samples.resize(static_cast<std::size_t>(state.range(0)) * 8000);
    std::mt19937 rng(10);
    std::uniform_real_distribution<float> u(-3000.f, 3000.f);
    for (auto &x : audio.samples) x = std::round(u(rng));
    for (auto _ : state) benchmark::DoNotOptimize(extract_features(audio));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeLogmel)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
