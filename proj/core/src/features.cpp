#include "streamdiar/features.hpp"

#include "streamdiar/error.hpp"
#include "streamdiar/tensor_file.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace streamdiar {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex g_fftw_planner_mutex;

double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

class RealFft {
public:
    explicit RealFft(int n) : n_(n) {
        in_ = static_cast<double *>(fftw_malloc(sizeof(double) * n));
        out_ = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        std::lock_guard lock(g_fftw_planner_mutex);
        plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard lock(g_fftw_planner_mutex);
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft &) = delete;
    RealFft &operator=(const RealFft &) = delete;

    double *input() { return in_; }

    // Power spectrum |X_k|^2 for k = 0..n/2.
    void power(Eigen::Ref<Vector> dst) {
        fftw_execute(plan_);
        for (int k = 0; k <= n_ / 2; ++k) dst[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }

private:
    int n_;
    double *in_ = nullptr;
    fftw_complex *out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

} // namespace

int FeatureConfig::window_samples() const {
    return static_cast<int>(std::lround(frame_length * sample_rate));
}

int FeatureConfig::shift_samples() const {
    return static_cast<int>(std::lround(frame_shift * sample_rate));
}

int FeatureConfig::fft_size() const {
    int n = 1;
    while (n < window_samples()) n <<= 1;
    return n;
}

void FeatureConfig::validate() const {
    if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
    if (n_mels <= 0) throw ConfigError("n_mels must be positive");
    if (!(frame_shift > 0.0) || frame_length < frame_shift) {
        throw ConfigError("need frame_length >= frame_shift > 0");
    }
    if (shift_samples() < 1) throw ConfigError("frame_shift is shorter than one sample");
    if (context_left < 0 || context_right < 0) throw ConfigError("context must be non-negative");
    if (subsample_factor < 1) throw ConfigError("subsample_factor must be >= 1");
    if (!(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
}

Matrix mel_filterbank(const FeatureConfig &cfg) {
    const int n_fft = cfg.fft_size();
    const int n_bins = n_fft / 2 + 1;
    const double nyquist = cfg.sample_rate / 2.0;
    const double mel_hi = hz_to_mel(nyquist);

    std::vector<double> edges(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i) {
        edges[i] = mel_to_hz(mel_hi * i / (cfg.n_mels + 1));
    }

    Matrix fb = Matrix::Zero(cfg.n_mels, n_bins);
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * cfg.sample_rate / n_fft;
            if (f > lo && f <= center) {
                fb(m, k) = (f - lo) / (center - lo);
            } else if (f > center && f < hi) {
                fb(m, k) = (hi - f) / (hi - center);
            }
        }
    }
    return fb;
}

FeatureMatrix compute_logmel(const AudioBuffer &audio, const FeatureConfig &cfg) {
    cfg.validate();
    if (audio.sample_rate != cfg.sample_rate) {
        throw InvalidInputError("audio sample rate " + std::to_string(audio.sample_rate) +
                                " Hz does not match feature config " +
                                std::to_string(cfg.sample_rate) + " Hz");
    }
    for (float s : audio.samples) {
        if (!std::isfinite(s)) throw InvalidInputError("audio contains non-finite samples");
    }

    const int win = cfg.window_samples();
    const int shift = cfg.shift_samples();
    const auto len = static_cast<std::int64_t>(audio.samples.size());
    if (len < win) throw EmptyInputError("audio is shorter than one analysis frame");

    const auto n_frames = static_cast<Eigen::Index>((len - win) / shift + 1);
    const int n_fft = cfg.fft_size();
    const Matrix fb = mel_filterbank(cfg);

    Vector window(win);
    for (int n = 0; n < win; ++n) {
        window[n] = win > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (win - 1)) : 1.0;
    }

    RealFft fft(n_fft);
    Vector spectrum(n_fft / 2 + 1);
    FeatureMatrix out;
    out.frame_stride = cfg.frame_shift;
    out.data.resize(cfg.n_mels, n_frames);

    double *buf = fft.input();
    for (Eigen::Index t = 0; t < n_frames; ++t) {
        const float *frame = audio.samples.data() + t * shift;
        for (int n = 0; n < win; ++n) buf[n] = frame[n] * window[n];
        std::fill(buf + win, buf + n_fft, 0.0);
        fft.power(spectrum);
        const Vector energy = fb * spectrum;
        for (int m = 0; m < cfg.n_mels; ++m) {
            out.data(m, t) = std::log(std::max(energy[m], cfg.log_floor));
        }
    }
    return out;
}

FeatureMatrix splice_context(const FeatureMatrix &feat, const FeatureConfig &cfg) {
    const Eigen::Index rows = feat.dim();
    const Eigen::Index n = feat.n_frames();
    const int width = cfg.context_left + cfg.context_right + 1;

    FeatureMatrix out;
    out.frame_stride = feat.frame_stride;
    out.data.resize(rows * width, n);
    for (Eigen::Index t = 0; t < n; ++t) {
        for (int j = 0; j < width; ++j) {
            const Eigen::Index src = std::clamp<Eigen::Index>(t - cfg.context_left + j, 0, n - 1);
            out.data.block(j * rows, t, rows, 1) = feat.data.col(src);
        }
    }
    return out;
}

FeatureMatrix subsample(const FeatureMatrix &feat, const FeatureConfig &cfg) {
    if (cfg.subsample_factor < 1) throw ConfigError("subsample_factor must be >= 1");
    const int k = cfg.subsample_factor;
    const Eigen::Index n_out = (feat.n_frames() + k - 1) / k;

    FeatureMatrix out;
    out.frame_stride = feat.frame_stride * k;
    out.data.resize(feat.dim(), n_out);
    for (Eigen::Index i = 0; i < n_out; ++i) out.data.col(i) = feat.data.col(i * k);
    return out;
}

FeatureMatrix extract_features(const AudioBuffer &audio, const FeatureConfig &cfg) {
    return subsample(splice_context(compute_logmel(audio, cfg), cfg), cfg);
}

void save_features(const std::filesystem::path &path, const FeatureMatrix &feat) {
    Tensor t;
    t.shape = {feat.dim(), feat.n_frames()};
    t.values.reserve(static_cast<std::size_t>(feat.data.size()));
    for (Eigen::Index r = 0; r < feat.dim(); ++r) {
        for (Eigen::Index c = 0; c < feat.n_frames(); ++c) {
            t.values.push_back(static_cast<float>(feat.data(r, c)));
        }
    }
    TensorFile file;
    file.attributes["kind"] = "features";
    file.attributes["frame_stride"] = std::to_string(feat.frame_stride);
    file.tensors.emplace("features", std::move(t));
    write_tensor_file(path, file);
}

FeatureMatrix load_features(const std::filesystem::path &path) {
    const TensorFile file = read_tensor_file(path);
    const auto it = file.tensors.find("features");
    if (it == file.tensors.end()) throw FormatError("no 'features' tensor in " + path.string());
    const Tensor &t = it->second;
    if (t.shape.size() != 2) throw FormatError("'features' tensor must be 2-D");

    FeatureMatrix feat;
    if (auto s = file.attributes.find("frame_stride"); s != file.attributes.end()) {
        try {
            feat.frame_stride = std::stod(s->second);
        } catch (const std::exception &) {
            throw FormatError("bad frame_stride attribute");
        }
    }
    feat.data.resize(t.shape[0], t.shape[1]);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < feat.dim(); ++r) {
        for (Eigen::Index c = 0; c < feat.n_frames(); ++c) {
            const float v = t.values[i++];
            if (!std::isfinite(v)) throw InvalidInputError("feature file contains non-finite values");
            feat.data(r, c) = v;
        }
    }
    return feat;
}

} // namespace streamdiar
