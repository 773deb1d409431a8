#pragma once

#include "streamdiar/stb.hpp"
#include "streamdiar/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace streamdiar {

// ─── Conversation simulation ─────────────────────────────────────────────────

struct SimulationConfig {
    int n_speakers = 2;
    Eigen::Index total_frames = 6000;
    double overlap_ratio = 0.2;    // overlapped speech / total speech
    double mean_utterance = 30.0;  // frames
    double mean_gap = 10.0;        // frames
    std::uint64_t seed = 0;
    double frame_stride = 0.1;

    void validate() const;
};

// Turn-taking conversation on a frame grid. Turns alternate between speakers
// with utterance lengths 1 + Geometric(1/mean_utterance). Between turns the
// generator either inserts a Geometric gap (mean mean_gap) or starts the next
// turn early, inside the previous one, by just enough frames to pull the
// running overlap ratio back to the target. Deterministic per seed.
// Throws ConfigError when the target ratio cannot be reached.
LabelMatrix simulate_labels(const SimulationConfig &cfg);

// Frames with >= 2 active speakers over frames with >= 1 (0 without speech).
double measure_overlap_ratio(const LabelMatrix &labels);

// D×T synthetic features. Row kFrameIndexRow holds the frame index (read by
// SyntheticBackend); the remaining rows are the sum of the active speakers'
// Gaussian signature vectors plus N(0, 0.1²) noise.
FeatureMatrix labels_to_features(const LabelMatrix &labels, int dim, std::uint64_t seed);

// ─── Variable chunk sizes ────────────────────────────────────────────────────

struct VctConfig {
    int min_chunk = 50;
    int max_chunk = 500;
    std::uint64_t seed = 0;
};

// Partitions T frames into chunks whose sizes are drawn uniformly from
// {min_chunk..max_chunk}; the tail that no longer fits becomes the last chunk.
std::vector<int> vct_chunk_boundaries(Eigen::Index total_frames, const VctConfig &cfg);

// ─── Parameter sweep ─────────────────────────────────────────────────────────

// std::nullopt runs chunk-wise inference without the tracing buffer.
using StrategyChoice = std::optional<SelectionStrategy>;
std::string strategy_name(const StrategyChoice &s);  // "none" for nullopt

struct SweepConfig {
    std::vector<int> deltas{10};
    std::vector<int> l_maxes{100};
    std::vector<StrategyChoice> strategies{SelectionStrategy::WeightedSampling};
    SimulationConfig sim;
    int n_recordings = 1;
    double flip_noise = 0.05;
    double collar = 0.25;
    int feature_dim = 8;
    std::uint64_t seed = 0;
    // Worker threads; 0 reads STREAMDIAR_BENCH_THREADS and falls back to 1.
    int threads = 0;
};

struct SweepRow {
    int delta = 0;
    int l_max = 0;
    std::string strategy;
    double der_recording = 0.0;
    double der_chunk_oracle = 0.0;
    double rtf = 0.0;
};

// Runs the online pipeline with the scrambled synthetic backend for every
// (delta, l_max, strategy) combination, in that nesting order. All cells see
// the same simulated recordings and the same scramble seeds; DER components
// are pooled across recordings.
std::vector<SweepRow> sweep_bench(const SweepConfig &cfg);

inline constexpr const char *kSweepCsvHeader = "delta,l_max,strategy,der_recording,der_chunk_oracle,rtf";
void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows);

} // namespace streamdiar
