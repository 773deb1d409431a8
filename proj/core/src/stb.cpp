#include "streamdiar/stb.hpp"

#include "streamdiar/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace streamdiar {

double correlation_coefficient(const Matrix &y_buf, const Matrix &y_hat) {
    if (y_buf.rows() != y_hat.rows() || y_buf.cols() != y_hat.cols()) {
        throw ShapeError("correlation inputs differ in shape");
    }
    if (y_buf.size() == 0) throw ShapeError("correlation of empty matrices");

    auto constant = [](const Matrix &m) { return (m.array() == m(0, 0)).all(); };
    if (constant(y_buf) || constant(y_hat)) return 0.0;

    const Eigen::ArrayXXd a = y_buf.array() - y_buf.mean();
    const Eigen::ArrayXXd b = y_hat.array() - y_hat.mean();
    const double num = (a * b).sum();
    const double den = std::sqrt(a.square().sum()) * std::sqrt(b.square().sum());
    return std::clamp(num / den, -1.0, 1.0);
}

Permutation best_permutation(const Matrix &y_buf, const Matrix &y_hat_buf) {
    if (y_buf.rows() != y_hat_buf.rows() || y_buf.cols() != y_hat_buf.cols()) {
        throw ShapeError("buffer posteriors and recomputed posteriors differ in shape");
    }
    const auto n = static_cast<int>(y_buf.rows());
    if (n < 1) throw ShapeError("need at least one speaker");

    // Permuted candidates sum in different orders, so exact ties can come out
    // a few ulps apart; anything within kCcTieTolerance keeps the earlier one.
    Permutation best;
    double best_cc = -std::numeric_limits<double>::infinity();
    for (const auto &p : all_permutations(n)) {
        const double cc = correlation_coefficient(y_buf, apply_permutation(y_hat_buf, p));
        if (cc > best_cc + kCcTieTolerance) {
            best_cc = cc;
            best = p;
        }
    }
    return best;
}

Vector delta_scores(const Matrix &y) {
    if (y.rows() < 2) throw UnsupportedError("delta scores need at least two speakers");
    Vector delta(y.cols());
    if (y.rows() == 2) {
        delta = (y.row(0) - y.row(1)).cwiseAbs().transpose();
        return delta;
    }
    for (Eigen::Index m = 0; m < y.cols(); ++m) {
        double first = -std::numeric_limits<double>::infinity(), second = first;
        for (Eigen::Index s = 0; s < y.rows(); ++s) {
            const double v = y(s, m);
            if (v > first) {
                second = first;
                first = v;
            } else if (v > second) {
                second = v;
            }
        }
        delta[m] = first - second;
    }
    return delta;
}

// ─── Strategy names ──────────────────────────────────────────────────────────

std::string_view to_string(SelectionStrategy s) {
    switch (s) {
    case SelectionStrategy::FirstInFirstOut: return "fifo";
    case SelectionStrategy::UniformSampling: return "uniform";
    case SelectionStrategy::DeterministicSelection: return "deterministic";
    case SelectionStrategy::WeightedSampling: return "weighted";
    }
    return "unknown";
}

std::optional<SelectionStrategy> parse_strategy(std::string_view name) {
    if (name == "fifo" || name == "FirstInFirstOut") return SelectionStrategy::FirstInFirstOut;
    if (name == "uniform" || name == "UniformSampling") return SelectionStrategy::UniformSampling;
    if (name == "deterministic" || name == "DeterministicSelection") {
        return SelectionStrategy::DeterministicSelection;
    }
    if (name == "weighted" || name == "WeightedSampling") return SelectionStrategy::WeightedSampling;
    return std::nullopt;
}

// ─── Selection ───────────────────────────────────────────────────────────────

namespace {

// Uniform on (0, 1]; never zero so log() stays finite.
double open_unit(std::mt19937_64 &rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

std::vector<Eigen::Index> top_k_by_key(const std::vector<std::pair<int, double>> &keys, Eigen::Index k) {
    std::vector<Eigen::Index> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return keys[static_cast<std::size_t>(a)] > keys[static_cast<std::size_t>(b)];
    });
    order.resize(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.end());
    return order;
}

} // namespace

std::vector<Eigen::Index> select_buffer_frames(const Vector &delta, int l_max, SelectionStrategy strategy,
                                               std::mt19937_64 &rng) {
    if (l_max < 1) throw ConfigError("l_max must be >= 1");
    const Eigen::Index n = delta.size();
    const Eigen::Index k = std::min<Eigen::Index>(n, l_max);

    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    if (n <= l_max) return all;

    switch (strategy) {
    case SelectionStrategy::FirstInFirstOut:
        return {all.end() - k, all.end()};

    case SelectionStrategy::DeterministicSelection: {
        std::vector<std::pair<int, double>> keys(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) keys[static_cast<std::size_t>(i)] = {0, delta[i]};
        return top_k_by_key(keys, k);
    }

    case SelectionStrategy::UniformSampling:
    case SelectionStrategy::WeightedSampling: {
        const bool weighted = strategy == SelectionStrategy::WeightedSampling;
        const double max_delta = delta.maxCoeff();
        std::vector<std::pair<int, double>> keys(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double log_u = std::log(open_unit(rng));
            const double w = weighted ? (max_delta > 0.0 ? delta[i] / max_delta : 0.0) : 1.0;
            // Tier 1 competes by weight; tier 0 (zero weight) only fills leftovers.
            keys[static_cast<std::size_t>(i)] = w > 0.0 ? std::pair{1, log_u / w} : std::pair{0, log_u};
        }
        return top_k_by_key(keys, k);
    }
    }
    throw ConfigError("unknown selection strategy");
}

// ─── TracingBuffer ───────────────────────────────────────────────────────────

TracingBuffer::TracingBuffer(BufferConfig cfg) : cfg_(cfg), rng_(cfg.rng_seed) {
    if (cfg_.l_max < 1) throw ConfigError("l_max must be >= 1");
}

void TracingBuffer::update(const Matrix &x_cat, const Posteriors &y_cat) {
    if (x_cat.cols() != y_cat.cols()) {
        throw PairingError("feature and posterior candidates differ in column count (" +
                           std::to_string(x_cat.cols()) + " vs " + std::to_string(y_cat.cols()) + ")");
    }
    if (x_cat.cols() <= cfg_.l_max) {
        x_ = x_cat;
        y_ = y_cat;
        return;
    }

    const Vector delta = cfg_.strategy == SelectionStrategy::FirstInFirstOut ||
                                 cfg_.strategy == SelectionStrategy::UniformSampling
                             ? Vector::Zero(y_cat.cols())
                             : delta_scores(y_cat);
    const auto keep = select_buffer_frames(delta, cfg_.l_max, cfg_.strategy, rng_);

    Matrix x(x_cat.rows(), static_cast<Eigen::Index>(keep.size()));
    Posteriors y(y_cat.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        x.col(static_cast<Eigen::Index>(j)) = x_cat.col(keep[j]);
        y.col(static_cast<Eigen::Index>(j)) = y_cat.col(keep[j]);
    }
    x_ = std::move(x);
    y_ = std::move(y);
}

Posteriors TracingBuffer::process_chunk(const Matrix &x_chunk, DiarizerBackend &backend) {
    const Eigen::Index n_buf = size();
    if (n_buf > 0 && x_chunk.rows() != x_.rows()) {
        throw ShapeError("chunk feature dim " + std::to_string(x_chunk.rows()) +
                         " does not match buffer dim " + std::to_string(x_.rows()));
    }

    Matrix x_cat(x_chunk.rows(), n_buf + x_chunk.cols());
    if (n_buf > 0) x_cat.leftCols(n_buf) = x_;
    x_cat.rightCols(x_chunk.cols()) = x_chunk;
    const Posteriors y_all = backend.infer(x_cat);
    if (y_all.cols() != x_cat.cols()) {
        throw BackendContractError("backend returned " + std::to_string(y_all.cols()) + " frames for " +
                                   std::to_string(x_cat.cols()) + " inputs");
    }
    if (n_buf > 0 && y_all.rows() != y_.rows()) {
        throw BackendContractError("backend speaker count changed between chunks");
    }

    Posteriors y_chunk = y_all.rightCols(x_chunk.cols());
    last_perm_ = Permutation::identity(static_cast<int>(y_all.rows()));
    if (n_buf > 0) {
        last_perm_ = best_permutation(y_, y_all.leftCols(n_buf));
        if (!last_perm_.is_identity()) y_chunk = apply_permutation(y_chunk, last_perm_);
    }

    Posteriors y_cat(y_all.rows(), x_cat.cols());
    if (n_buf > 0) y_cat.leftCols(n_buf) = y_;
    y_cat.rightCols(x_chunk.cols()) = y_chunk;
    update(x_cat, y_cat);
    return y_chunk;
}

void TracingBuffer::assign(Matrix x, Posteriors y) {
    if (x.cols() != y.cols()) throw PairingError("feature and posterior columns differ");
    if (x.cols() > cfg_.l_max) throw ConfigError("assigned contents exceed l_max");
    x_ = std::move(x);
    y_ = std::move(y);
}

void TracingBuffer::clear() {
    x_.resize(0, 0);
    y_.resize(0, 0);
    last_perm_ = Permutation{};
}

} // namespace streamdiar
