#pragma once

#include "streamdiar/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace streamdiar {

// ─── Configuration ───────────────────────────────────────────────────────────

struct EncoderConfig {
    int input_dim = 345;  // D, spliced feature dimension
    int n_blocks = 4;
    int d_model = 256;
    int n_heads = 4;
    int d_ff = 1024;
    int n_speakers = 2;
    bool use_residual = false;
    bool use_positional_encoding = false;
    double layer_norm_eps = 1e-5;

    int head_dim() const { return d_model / n_heads; }
    // Throws ConfigError.
    void validate() const;

    bool operator==(const EncoderConfig &) const = default;
};

// ─── Weights ─────────────────────────────────────────────────────────────────

struct Linear {
    Matrix weight;  // out × in
    Vector bias;    // out
};

struct LayerNormParams {
    Vector gain;
    Vector bias;
};

struct EncoderBlockWeights {
    LayerNormParams attn_norm;
    Linear query, key, value, output;
    LayerNormParams ff_norm;
    Linear ff1;  // d_ff × d_model
    Linear ff2;  // d_model × d_ff
};

struct EncoderWeights {
    Linear input;  // d_model × input_dim
    std::vector<EncoderBlockWeights> blocks;
    LayerNormParams final_norm;
    Linear output;  // n_speakers × d_model

    // Every tensor zero (gains included).
    static EncoderWeights zeros(const EncoderConfig &cfg);
    // Gaussian init with std scale/sqrt(fan_in); layer norm gains 1, biases 0.
    // Values are rounded to float so they survive a save/load round trip.
    static EncoderWeights random(const EncoderConfig &cfg, std::uint64_t seed, double scale = 1.0);

    // Throws ConfigError on any tensor shape inconsistent with cfg and
    // CorruptWeightsError on non-finite values.
    void validate(const EncoderConfig &cfg) const;
};

struct EncoderModel {
    EncoderConfig config;
    EncoderWeights weights;
};

// Weight files use the tensor container (see tensor_file.hpp); the config,
// including architecture flags, is stored in the attribute table.
void save_weights(const std::filesystem::path &path, const EncoderConfig &cfg,
                  const EncoderWeights &weights);
EncoderModel load_weights(const std::filesystem::path &path);

// ─── Forward pass ────────────────────────────────────────────────────────────

// Posteriors are clamped to [eps, 1 - eps] so they stay strictly inside (0, 1).
inline constexpr double kPosteriorEps = 1e-7;

// Column-wise layer normalization over the rows of x.
Matrix layer_norm(const Matrix &x, const LayerNormParams &p, double eps);

// Scaled dot-product multi-head self-attention over the columns of h
// (d_model × N). Softmax runs over frames; heads are concatenated and passed
// through the output projection.
Matrix multi_head_attention(const EncoderConfig &cfg, const EncoderBlockWeights &block,
                            const Matrix &h);

// Sinusoidal encoding, d_model × n.
Matrix positional_encoding(int d_model, Eigen::Index n);

// Full network: input projection, n_blocks pre-norm encoder blocks (attention
// then ReLU feed-forward, residual optional), final norm, output projection,
// sigmoid. X is input_dim × N; result is n_speakers × N.
Posteriors sa_forward(const EncoderConfig &cfg, const EncoderWeights &weights, const Matrix &x);

// ─── Backends ────────────────────────────────────────────────────────────────

// Maps a D×M feature block to S×M posteriors. Implementations must return
// exactly one output column per input column.
class DiarizerBackend {
public:
    virtual ~DiarizerBackend() = default;
    virtual Posteriors infer(const Matrix &x) = 0;
    virtual int n_speakers() const = 0;
};

class EncoderBackend final : public DiarizerBackend {
public:
    explicit EncoderBackend(EncoderModel model);
    Posteriors infer(const Matrix &x) override;
    int n_speakers() const override { return model_.config.n_speakers; }
    const EncoderModel &model() const { return model_; }

private:
    EncoderModel model_;
};

} // namespace streamdiar
