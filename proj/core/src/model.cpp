#include "streamdiar/model.hpp"

#include "streamdiar/error.hpp"
#include "streamdiar/tensor_file.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <type_traits>

namespace streamdiar {

void EncoderConfig::validate() const {
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (n_blocks < 0) throw ConfigError("n_blocks must be >= 0");
    if (d_model < 1 || n_heads < 1) throw ConfigError("d_model and n_heads must be >= 1");
    if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    if (d_ff < 1) throw ConfigError("d_ff must be >= 1");
    if (n_speakers < 1) throw ConfigError("n_speakers must be >= 1");
    if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be positive");
}

// ─── Construction ────────────────────────────────────────────────────────────

namespace {

Linear zero_linear(int out, int in) { return {Matrix::Zero(out, in), Vector::Zero(out)}; }
LayerNormParams zero_norm(int d) { return {Vector::Zero(d), Vector::Zero(d)}; }

template <typename Visitor>
void visit_tensors(const EncoderConfig &cfg, Visitor &&visit) {
    // Shared by save/load/validate so the three agree on names and shapes.
    const int d = cfg.d_model;
    visit("input", [](auto &w) -> auto & { return w.input; }, d, cfg.input_dim);
    for (int b = 0; b < cfg.n_blocks; ++b) {
        const std::string p = "blocks." + std::to_string(b) + ".";
        visit(p + "attn_norm", [b](auto &w) -> auto & { return w.blocks[b].attn_norm; }, d, 0);
        visit(p + "attn.query", [b](auto &w) -> auto & { return w.blocks[b].query; }, d, d);
        visit(p + "attn.key", [b](auto &w) -> auto & { return w.blocks[b].key; }, d, d);
        visit(p + "attn.value", [b](auto &w) -> auto & { return w.blocks[b].value; }, d, d);
        visit(p + "attn.output", [b](auto &w) -> auto & { return w.blocks[b].output; }, d, d);
        visit(p + "ff_norm", [b](auto &w) -> auto & { return w.blocks[b].ff_norm; }, d, 0);
        visit(p + "ff.linear1", [b](auto &w) -> auto & { return w.blocks[b].ff1; }, cfg.d_ff, d);
        visit(p + "ff.linear2", [b](auto &w) -> auto & { return w.blocks[b].ff2; }, d, cfg.d_ff);
    }
    visit("final_norm", [](auto &w) -> auto & { return w.final_norm; }, d, 0);
    visit("output", [](auto &w) -> auto & { return w.output; }, cfg.n_speakers, d);
}

} // namespace

EncoderWeights EncoderWeights::zeros(const EncoderConfig &cfg) {
    cfg.validate();
    EncoderWeights w;
    w.input = zero_linear(cfg.d_model, cfg.input_dim);
    w.blocks.resize(cfg.n_blocks);
    for (auto &b : w.blocks) {
        b.attn_norm = zero_norm(cfg.d_model);
        b.query = zero_linear(cfg.d_model, cfg.d_model);
        b.key = zero_linear(cfg.d_model, cfg.d_model);
        b.value = zero_linear(cfg.d_model, cfg.d_model);
        b.output = zero_linear(cfg.d_model, cfg.d_model);
        b.ff_norm = zero_norm(cfg.d_model);
        b.ff1 = zero_linear(cfg.d_ff, cfg.d_model);
        b.ff2 = zero_linear(cfg.d_model, cfg.d_ff);
    }
    w.final_norm = zero_norm(cfg.d_model);
    w.output = zero_linear(cfg.n_speakers, cfg.d_model);
    return w;
}

EncoderWeights EncoderWeights::random(const EncoderConfig &cfg, std::uint64_t seed, double scale) {
    EncoderWeights w = zeros(cfg);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](double stddev) { return static_cast<double>(static_cast<float>(normal(rng) * stddev)); };

    visit_tensors(cfg, [&](const std::string &, auto get, int, int in) {
        auto &t = get(w);
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Linear>) {
            const double stddev = scale / std::sqrt(static_cast<double>(in));
            for (Eigen::Index i = 0; i < t.weight.size(); ++i) t.weight.data()[i] = draw(stddev);
            for (Eigen::Index i = 0; i < t.bias.size(); ++i) t.bias[i] = draw(0.02 * scale);
        } else {
            t.gain.setOnes();
            t.bias.setZero();
        }
    });
    return w;
}

void EncoderWeights::validate(const EncoderConfig &cfg) const {
    cfg.validate();
    if (static_cast<int>(blocks.size()) != cfg.n_blocks) {
        throw ConfigError("weights have " + std::to_string(blocks.size()) + " blocks, config says " +
                          std::to_string(cfg.n_blocks));
    }
    auto check = [](const std::string &name, const auto &m, Eigen::Index rows, Eigen::Index cols) {
        if (m.rows() != rows || m.cols() != cols) {
            throw ConfigError("tensor '" + name + "' has shape " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                              std::to_string(cols));
        }
        if (!m.allFinite()) throw CorruptWeightsError("tensor '" + name + "' has non-finite entries");
    };
    visit_tensors(cfg, [&](const std::string &name, auto get, int out, int in) {
        const auto &t = get(*this);
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Linear>) {
            check(name + ".weight", t.weight, out, in);
            check(name + ".bias", t.bias, out, 1);
        } else {
            check(name + ".gain", t.gain, out, 1);
            check(name + ".bias", t.bias, out, 1);
        }
    });
}

// ─── Serialization ───────────────────────────────────────────────────────────

namespace {

Tensor to_tensor(const Matrix &m) {
    Tensor t;
    t.shape = {m.rows(), m.cols()};
    t.values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(static_cast<float>(m(r, c)));
    }
    return t;
}

Tensor to_tensor(const Vector &v) {
    Tensor t;
    t.shape = {v.size()};
    t.values.reserve(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) t.values.push_back(static_cast<float>(v[i]));
    return t;
}

const Tensor &find_tensor(const TensorFile &file, const std::string &name,
                          std::vector<std::int64_t> shape) {
    const auto it = file.tensors.find(name);
    if (it == file.tensors.end()) throw ConfigError("missing tensor '" + name + "'");
    if (it->second.shape != shape) throw ConfigError("tensor '" + name + "' has unexpected shape");
    for (float v : it->second.values) {
        if (!std::isfinite(v)) throw CorruptWeightsError("tensor '" + name + "' has non-finite entries");
    }
    return it->second;
}

Matrix matrix_from(const TensorFile &file, const std::string &name, int rows, int cols) {
    const Tensor &t = find_tensor(file, name, {rows, cols});
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = t.values[i++];
    }
    return m;
}

Vector vector_from(const TensorFile &file, const std::string &name, int n) {
    const Tensor &t = find_tensor(file, name, {n});
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = t.values[static_cast<std::size_t>(i)];
    return v;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const std::string &require_attr(const TensorFile &file, const std::string &key) {
    const auto it = file.attributes.find(key);
    if (it == file.attributes.end()) throw FormatError("weight file lacks attribute '" + key + "'");
    return it->second;
}

int int_attr(const TensorFile &file, const std::string &key) {
    const std::string &s = require_attr(file, key);
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception &) {
        throw FormatError("attribute '" + key + "' is not an integer: " + s);
    }
}

bool bool_attr(const TensorFile &file, const std::string &key) {
    const std::string &s = require_attr(file, key);
    if (s == "true") return true;
    if (s == "false") return false;
    throw FormatError("attribute '" + key + "' is not a boolean: " + s);
}

} // namespace

void save_weights(const std::filesystem::path &path, const EncoderConfig &cfg,
                  const EncoderWeights &weights) {
    weights.validate(cfg);
    TensorFile file;
    file.attributes = {
        {"kind", "eend-encoder"},
        {"input_dim", std::to_string(cfg.input_dim)},
        {"n_blocks", std::to_string(cfg.n_blocks)},
        {"d_model", std::to_string(cfg.d_model)},
        {"n_heads", std::to_string(cfg.n_heads)},
        {"d_ff", std::to_string(cfg.d_ff)},
        {"n_speakers", std::to_string(cfg.n_speakers)},
        {"use_residual", cfg.use_residual ? "true" : "false"},
        {"use_positional_encoding", cfg.use_positional_encoding ? "true" : "false"},
        {"layer_norm_eps", format_double(cfg.layer_norm_eps)},
    };
    visit_tensors(cfg, [&](const std::string &name, auto get, int, int) {
        const auto &t = get(weights);
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Linear>) {
            file.tensors.emplace(name + ".weight", to_tensor(t.weight));
            file.tensors.emplace(name + ".bias", to_tensor(t.bias));
        } else {
            file.tensors.emplace(name + ".gain", to_tensor(t.gain));
            file.tensors.emplace(name + ".bias", to_tensor(t.bias));
        }
    });
    write_tensor_file(path, file);
}

EncoderModel load_weights(const std::filesystem::path &path) {
    const TensorFile file = read_tensor_file(path);
    if (auto it = file.attributes.find("kind"); it == file.attributes.end() || it->second != "eend-encoder") {
        throw FormatError("not an encoder weight file: " + path.string());
    }

    EncoderModel model;
    EncoderConfig &cfg = model.config;
    cfg.input_dim = int_attr(file, "input_dim");
    cfg.n_blocks = int_attr(file, "n_blocks");
    cfg.d_model = int_attr(file, "d_model");
    cfg.n_heads = int_attr(file, "n_heads");
    cfg.d_ff = int_attr(file, "d_ff");
    cfg.n_speakers = int_attr(file, "n_speakers");
    cfg.use_residual = bool_attr(file, "use_residual");
    cfg.use_positional_encoding = bool_attr(file, "use_positional_encoding");
    try {
        cfg.layer_norm_eps = std::stod(require_attr(file, "layer_norm_eps"));
    } catch (const std::invalid_argument &) {
        throw FormatError("attribute 'layer_norm_eps' is not a number");
    }
    cfg.validate();

    model.weights.blocks.resize(cfg.n_blocks);
    visit_tensors(cfg, [&](const std::string &name, auto get, int out, int in) {
        auto &t = get(model.weights);
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, Linear>) {
            t.weight = matrix_from(file, name + ".weight", out, in);
            t.bias = vector_from(file, name + ".bias", out);
        } else {
            t.gain = vector_from(file, name + ".gain", out);
            t.bias = vector_from(file, name + ".bias", out);
        }
    });
    return model;
}

// ─── Forward pass ────────────────────────────────────────────────────────────

namespace {

Matrix affine(const Linear &l, const Matrix &x) {
    Matrix y = l.weight * x;
    y.colwise() += l.bias;
    return y;
}

} // namespace

Matrix layer_norm(const Matrix &x, const LayerNormParams &p, double eps) {
    Matrix y(x.rows(), x.cols());
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
        const double mean = x.col(t).mean();
        const Vector centered = x.col(t).array() - mean;
        const double var = centered.squaredNorm() / static_cast<double>(x.rows());
        y.col(t) = (centered / std::sqrt(var + eps)).cwiseProduct(p.gain) + p.bias;
    }
    return y;
}

Matrix multi_head_attention(const EncoderConfig &cfg, const EncoderBlockWeights &block,
                            const Matrix &h) {
    if (h.rows() != cfg.d_model) {
        throw ShapeError("attention input has " + std::to_string(h.rows()) + " rows, expected " +
                         std::to_string(cfg.d_model));
    }
    const Matrix q = affine(block.query, h);
    const Matrix k = affine(block.key, h);
    const Matrix v = affine(block.value, h);
    const int hd = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Matrix context(cfg.d_model, h.cols());
    for (int head = 0; head < cfg.n_heads; ++head) {
        const auto qh = q.middleRows(head * hd, hd);
        const auto kh = k.middleRows(head * hd, hd);
        const auto vh = v.middleRows(head * hd, hd);

        // Row i holds the attention distribution of query frame i.
        Matrix weights = (qh.transpose() * kh) * scale;
        for (Eigen::Index i = 0; i < weights.rows(); ++i) {
            auto row = weights.row(i);
            row.array() -= row.maxCoeff();
            row = row.array().exp().matrix();
            row /= row.sum();
        }
        context.middleRows(head * hd, hd).noalias() = vh * weights.transpose();
    }
    return affine(block.output, context);
}

Matrix positional_encoding(int d_model, Eigen::Index n) {
    Matrix pe(d_model, n);
    for (Eigen::Index t = 0; t < n; ++t) {
        for (int i = 0; i < d_model; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(i - (i % 2)) / d_model);
            pe(i, t) = (i % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
        }
    }
    return pe;
}

Posteriors sa_forward(const EncoderConfig &cfg, const EncoderWeights &weights, const Matrix &x) {
    if (x.rows() != cfg.input_dim) {
        throw ShapeError("feature dim " + std::to_string(x.rows()) + " does not match model input dim " +
                         std::to_string(cfg.input_dim));
    }
    Matrix h = affine(weights.input, x);
    if (cfg.use_positional_encoding) h += positional_encoding(cfg.d_model, x.cols());

    for (const auto &block : weights.blocks) {
        Matrix att = multi_head_attention(cfg, block, layer_norm(h, block.attn_norm, cfg.layer_norm_eps));
        h = cfg.use_residual ? Matrix(h + att) : std::move(att);

        Matrix ff = affine(block.ff1, layer_norm(h, block.ff_norm, cfg.layer_norm_eps)).cwiseMax(0.0);
        ff = affine(block.ff2, ff);
        h = cfg.use_residual ? Matrix(h + ff) : std::move(ff);
    }

    const Matrix logits = affine(weights.output, layer_norm(h, weights.final_norm, cfg.layer_norm_eps));
    return logits.unaryExpr([](double z) {
        const double p = 1.0 / (1.0 + std::exp(-z));
        return std::clamp(p, kPosteriorEps, 1.0 - kPosteriorEps);
    });
}

// ─── EncoderBackend ──────────────────────────────────────────────────────────

EncoderBackend::EncoderBackend(EncoderModel model) : model_(std::move(model)) {
    model_.weights.validate(model_.config);
}

Posteriors EncoderBackend::infer(const Matrix &x) {
    return sa_forward(model_.config, model_.weights, x);
}

} // namespace streamdiar
