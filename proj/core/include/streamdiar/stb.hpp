#pragma once

#include "streamdiar/model.hpp"
#include "streamdiar/permutation.hpp"
#include "streamdiar/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace streamdiar {

// ─── Correlation and permutation resolution ──────────────────────────────────

// Pearson correlation of the two S×L matrices flattened over all entries,
// each centered on its global mean. Returns 0 when either matrix is constant.
// Throws ShapeError on mismatched or empty inputs.
double correlation_coefficient(const Matrix &y_buf, const Matrix &y_hat);

// Scores closer than this count as tied in best_permutation.
inline constexpr double kCcTieTolerance = 1e-12;

// Row permutation ψ of y_hat_buf maximizing correlation_coefficient(y_buf,
// apply_permutation(y_hat_buf, ψ)). All S! candidates are evaluated in
// lexicographic order and only a score larger by more than kCcTieTolerance
// replaces the current best, so ties resolve to the lexicographically
// smallest permutation.
Permutation best_permutation(const Matrix &y_buf, const Matrix &y_hat_buf);

// Per-frame speaker dominance: |y1 - y2| for two speakers; for more speakers
// the gap between the largest and second-largest posterior.
// Throws UnsupportedError for fewer than two speakers.
Vector delta_scores(const Matrix &y);

// ─── Buffer ──────────────────────────────────────────────────────────────────

enum class SelectionStrategy {
    FirstInFirstOut,
    UniformSampling,
    DeterministicSelection,
    WeightedSampling,
};

std::string_view to_string(SelectionStrategy s);
// Accepts "fifo", "uniform", "deterministic", "weighted" (and the enum names).
std::optional<SelectionStrategy> parse_strategy(std::string_view name);
inline constexpr SelectionStrategy kAllStrategies[] = {
    SelectionStrategy::FirstInFirstOut, SelectionStrategy::UniformSampling,
    SelectionStrategy::DeterministicSelection, SelectionStrategy::WeightedSampling};

struct BufferConfig {
    int l_max = 100;
    SelectionStrategy strategy = SelectionStrategy::WeightedSampling;
    std::uint64_t rng_seed = 0;
};

// Chooses which of n candidate frames survive. Returns min(n, l_max) indices
// in increasing (chronological) order.
//
//   FirstInFirstOut         the last l_max frames
//   UniformSampling         uniform without replacement
//   DeterministicSelection  top l_max by delta, ties to the earlier frame
//   WeightedSampling        without replacement, draw probability ∝ delta;
//                           zero-delta frames fill any remaining slots uniformly
//
// Both sampling strategies use one exponential-key draw per candidate
// (key = log(u) / w, keep the largest keys), consuming the RNG identically;
// weights are normalized by their maximum, so all-equal deltas reproduce
// UniformSampling exactly under the same RNG state.
std::vector<Eigen::Index> select_buffer_frames(const Vector &delta, int l_max,
                                               SelectionStrategy strategy, std::mt19937_64 &rng);

// Speaker-tracing buffer: paired past features and the permutation-corrected
// posteriors emitted for them. Single owner; chunks must arrive in order.
class TracingBuffer {
public:
    explicit TracingBuffer(BufferConfig cfg);

    const BufferConfig &config() const { return cfg_; }
    const Matrix &features() const { return x_; }
    const Posteriors &posteriors() const { return y_; }
    Eigen::Index size() const { return x_.cols(); }
    bool empty() const { return x_.cols() == 0; }

    // Permutation applied to the most recent chunk (identity when the buffer
    // was empty).
    const Permutation &last_permutation() const { return last_perm_; }

    // Keeps every column when the candidates fit, otherwise l_max paired
    // columns chosen by the configured strategy. Throws PairingError when the
    // column counts differ.
    void update(const Matrix &x_cat, const Posteriors &y_cat);

    // One step of online diarization: run the backend on [buffer; chunk],
    // align the chunk's speaker order to the buffer, update the buffer and
    // return the aligned chunk posteriors.
    Posteriors process_chunk(const Matrix &x_chunk, DiarizerBackend &backend);

    // Replaces the contents without selection (used for dummy pre-fill).
    void assign(Matrix x, Posteriors y);
    void clear();

private:
    BufferConfig cfg_;
    Matrix x_;
    Posteriors y_;
    std::mt19937_64 rng_;
    Permutation last_perm_;
};

} // namespace streamdiar
