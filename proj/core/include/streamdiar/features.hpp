#pragma once

#include "streamdiar/audio.hpp"
#include "streamdiar/types.hpp"

#include <filesystem>

namespace streamdiar {

struct FeatureConfig {
    int sample_rate = 8000;       // audio must match; no resampling is done
    int n_mels = 23;
    double frame_length = 0.025;  // seconds
    double frame_shift = 0.010;   // seconds
    int context_left = 7;
    int context_right = 7;
    int subsample_factor = 10;
    double log_floor = 1e-10;

    int window_samples() const;
    int shift_samples() const;
    // FFT length: smallest power of two >= window_samples().
    int fft_size() const;
    // Row count after splicing: n_mels * (context_left + context_right + 1).
    int spliced_dim() const { return n_mels * (context_left + context_right + 1); }

    // Throws ConfigError when invariants do not hold.
    void validate() const;
};

// n_mels × n_fft/2+1 triangular filters spaced on the HTK mel scale between
// 0 Hz and Nyquist.
Matrix mel_filterbank(const FeatureConfig &cfg);

// Log mel energies of Hann-windowed frames: n_mels × frames with
// frames = floor((len - win) / shift) + 1.
FeatureMatrix compute_logmel(const AudioBuffer &audio, const FeatureConfig &cfg);

// Stacks each column with its left/right context; out-of-range neighbours
// replicate the first/last column.
FeatureMatrix splice_context(const FeatureMatrix &feat, const FeatureConfig &cfg);

// Keeps columns 0, k, 2k, ... and scales frame_stride by k.
FeatureMatrix subsample(const FeatureMatrix &feat, const FeatureConfig &cfg);

// compute_logmel -> splice_context -> subsample.
FeatureMatrix extract_features(const AudioBuffer &audio, const FeatureConfig &cfg = {});

// Feature dumps reuse the weight container (single tensor "features", D×N).
void save_features(const std::filesystem::path &path, const FeatureMatrix &feat);
FeatureMatrix load_features(const std::filesystem::path &path);

} // namespace streamdiar
