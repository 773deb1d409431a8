#pragma once

#include "streamdiar/model.hpp"
#include "streamdiar/permutation.hpp"
#include "streamdiar/types.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <random>

namespace streamdiar {

// Row of the synthetic feature stream that carries the absolute frame index.
// The synthetic backend resolves every input column through this row, so it
// works for buffer frames as well as for the current chunk.
inline constexpr Eigen::Index kFrameIndexRow = 0;

// Test backend emulating a diarizer that is accurate within each call but
// emits speakers in an arbitrary order per call.
//
// Every infer() call draws one fresh row permutation for the whole call
// (unless a scripted permutation is queued), softens the ground truth to
// {eps, 1 - eps}, and with probability flip_noise per frame inverts the label
// of one uniformly chosen speaker. Permutations and noise come from two
// separate RNG streams seeded from scramble_seed, so the permutation sequence
// does not depend on flip_noise.
class SyntheticBackend final : public DiarizerBackend {
public:
    SyntheticBackend(LabelMatrix truth, std::uint64_t scramble_seed, double flip_noise,
                     double soft_eps = 0.05);

    Posteriors infer(const Matrix &x) override;
    int n_speakers() const override { return static_cast<int>(truth_.n_speakers()); }

    // Queued permutations are used (in order) before random draws resume.
    void push_permutation(Permutation p);
    const Permutation &last_permutation() const { return last_; }
    double soft_eps() const { return soft_eps_; }

private:
    LabelMatrix truth_;
    double flip_noise_;
    double soft_eps_;
    std::mt19937_64 perm_rng_;
    std::mt19937_64 noise_rng_;
    std::deque<Permutation> script_;
    Permutation last_;
};

std::unique_ptr<SyntheticBackend> make_synthetic_backend(const LabelMatrix &truth,
                                                         std::uint64_t scramble_seed,
                                                         double flip_noise);

// Softened truth rows for frames [begin, end): label 1 -> 1 - eps, 0 -> eps.
Posteriors soften_labels(const LabelMatrix &labels, Eigen::Index begin, Eigen::Index end,
                         double eps);

} // namespace streamdiar
