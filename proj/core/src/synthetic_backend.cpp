#include "streamdiar/synthetic_backend.hpp"

#include "streamdiar/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace streamdiar {

// ─── SyntheticBackend ────────────────────────────────────────────────────────

Posteriors soften_labels(const LabelMatrix &labels, Eigen::Index begin, Eigen::Index end, double eps) {
    if (begin < 0 || end > labels.n_frames() || begin > end) throw RangeError("frame range out of bounds");
    Posteriors y(labels.n_speakers(), end - begin);
    for (Eigen::Index t = begin; t < end; ++t) {
        for (Eigen::Index s = 0; s < labels.n_speakers(); ++s) {
            y(s, t - begin) = labels.data(s, t) ? 1.0 - eps : eps;
        }
    }
    return y;
}

SyntheticBackend::SyntheticBackend(LabelMatrix truth, std::uint64_t scramble_seed, double flip_noise,
                                   double soft_eps)
    : truth_(std::move(truth)),
      flip_noise_(flip_noise),
      soft_eps_(soft_eps),
      perm_rng_(scramble_seed),
      noise_rng_(scramble_seed ^ 0x9e3779b97f4a7c15ULL),
      last_(Permutation::identity(static_cast<int>(truth_.n_speakers()))) {
    if (truth_.n_speakers() < 1) throw ConfigError("synthetic backend needs at least one speaker");
    if (!(flip_noise >= 0.0 && flip_noise <= 1.0)) throw ConfigError("flip_noise must be in [0, 1]");
    if (!(soft_eps > 0.0 && soft_eps < 0.5)) throw ConfigError("soft_eps must be in (0, 0.5)");
}

void SyntheticBackend::push_permutation(Permutation p) {
    if (p.size() != n_speakers() || !p.is_valid()) throw ShapeError("scripted permutation does not fit");
    script_.push_back(std::move(p));
}

Posteriors SyntheticBackend::infer(const Matrix &x) {
    if (x.rows() <= kFrameIndexRow) throw ShapeError("synthetic features need a frame-index row");
    const Eigen::Index n_spk = truth_.n_speakers();

    if (!script_.empty()) {
        last_ = std::move(script_.front());
        script_.pop_front();
    } else {
        last_ = Permutation::identity(static_cast<int>(n_spk));
        std::shuffle(last_.map.begin(), last_.map.end(), perm_rng_);
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<Eigen::Index> pick_speaker(0, n_spk - 1);
    Posteriors soft(n_spk, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double raw = x(kFrameIndexRow, j);
        if (!(raw >= 0.0) || raw >= static_cast<double>(truth_.n_frames()) || raw != std::floor(raw)) {
            throw RangeError("requested frame " + std::to_string(raw) + " outside truth range [0, " +
                             std::to_string(truth_.n_frames()) + ")");
        }
        const auto t = static_cast<Eigen::Index>(raw);
        Eigen::Index flipped = -1;
        if (flip_noise_ > 0.0 && unit(noise_rng_) < flip_noise_) flipped = pick_speaker(noise_rng_);
        for (Eigen::Index s = 0; s < n_spk; ++s) {
            const bool active = (truth_.data(s, t) != 0) != (s == flipped);
            soft(s, j) = active ? 1.0 - soft_eps_ : soft_eps_;
        }
    }
    return apply_permutation(soft, last_);
}

std::unique_ptr<SyntheticBackend> make_synthetic_backend(const LabelMatrix &truth,
                                                         std::uint64_t scramble_seed, double flip_noise) {
    return std::make_unique<SyntheticBackend>(truth, scramble_seed, flip_noise);
}

} // namespace streamdiar
