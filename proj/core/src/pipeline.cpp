#include "streamdiar/pipeline.hpp"

#include "streamdiar/error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

namespace streamdiar {

void PipelineConfig::validate() const {
    if (chunk_size < 1) throw ConfigError("chunk size must be >= 1");
    if (buffer.l_max < 1) throw ConfigError("l_max must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must be in (0, 1)");
    if (median_window < 1 || median_window % 2 == 0) throw ConfigError("median window must be odd and >= 1");
}

std::vector<FeatureChunk> chunk_stream(const Matrix &feat, int chunk_size) {
    if (chunk_size < 1) throw ConfigError("chunk size must be >= 1");
    std::vector<FeatureChunk> chunks;
    for (Eigen::Index begin = 0; begin < feat.cols(); begin += chunk_size) {
        const Eigen::Index len = std::min<Eigen::Index>(chunk_size, feat.cols() - begin);
        chunks.push_back({chunks.size(), begin, feat.middleCols(begin, len)});
    }
    return chunks;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

Posteriors run_online(const FeatureMatrix &feat, DiarizerBackend &backend, const PipelineConfig &cfg,
                      std::vector<double> *chunk_seconds) {
    cfg.validate();
    if (feat.n_frames() == 0) throw EmptyInputError("no feature frames to diarize");

    TracingBuffer buffer(cfg.buffer);
    Posteriors out(backend.n_speakers(), feat.n_frames());
    if (chunk_seconds) chunk_seconds->clear();

    for (const auto &chunk : chunk_stream(feat.data, cfg.chunk_size)) {
        const auto start = Clock::now();
        Posteriors y = cfg.use_tracing_buffer ? buffer.process_chunk(chunk.data, backend) : backend.infer(chunk.data);
        if (chunk_seconds) chunk_seconds->push_back(seconds_since(start));
        if (y.rows() != out.rows() || y.cols() != chunk.data.cols()) {
            throw BackendContractError("backend output does not match the chunk shape");
        }
        out.middleCols(chunk.begin, chunk.data.cols()) = y;
    }
    return out;
}

LabelMatrix binarize(const Posteriors &y, const PipelineConfig &cfg, double frame_stride) {
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw ConfigError("threshold must be in (0, 1)");
    if (cfg.median_window < 1 || cfg.median_window % 2 == 0) {
        throw ConfigError("median window must be odd and >= 1");
    }

    LabelMatrix labels;
    labels.frame_stride = frame_stride;
    labels.data = (y.array() > cfg.threshold).cast<std::uint8_t>();
    if (cfg.median_window == 1 || y.cols() == 0) return labels;

    // Median of binary values = majority vote over the window.
    const Eigen::Index half = cfg.median_window / 2;
    const Eigen::Index n = y.cols();
    auto smoothed = labels.data;
    for (Eigen::Index s = 0; s < y.rows(); ++s) {
        for (Eigen::Index t = 0; t < n; ++t) {
            int ones = 0;
            for (Eigen::Index k = t - half; k <= t + half; ++k) ones += labels.data(s, std::clamp<Eigen::Index>(k, 0, n - 1));
            smoothed(s, t) = ones > half ? 1 : 0;
        }
    }
    labels.data = std::move(smoothed);
    return labels;
}

std::string RtfReport::to_text() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "chunks=%zu\naudio_duration=%.3f\ntotal_compute=%.6f\nrtf=%.4f\nalgorithmic_latency=%.3f\n"
                  "actual_latency=%.3f\n",
                  n_chunks, audio_duration, total_compute, rtf, algorithmic_latency, actual_latency);
    return buf;
}

RtfReport measure_rtf(const FeatureMatrix &feat, DiarizerBackend &backend, const PipelineConfig &cfg) {
    cfg.validate();
    const auto chunks = chunk_stream(feat.data, cfg.chunk_size);
    if (chunks.size() < kMinRtfChunks) {
        throw MeasurementError("RTF needs at least " + std::to_string(kMinRtfChunks) + " chunks, input has " +
                               std::to_string(chunks.size()));
    }

    TracingBuffer buffer(cfg.buffer);
    if (cfg.use_tracing_buffer) {
        buffer.assign(Matrix::Zero(feat.dim(), cfg.buffer.l_max),
                      Posteriors::Constant(backend.n_speakers(), cfg.buffer.l_max, 0.5));
    }

    RtfReport report;
    report.n_chunks = chunks.size();
    for (const auto &chunk : chunks) {
        const auto start = Clock::now();
        if (cfg.use_tracing_buffer) {
            buffer.process_chunk(chunk.data, backend);
        } else {
            backend.infer(chunk.data);
        }
        report.total_compute += seconds_since(start);
    }
    report.audio_duration = static_cast<double>(feat.n_frames()) * feat.frame_stride;
    report.rtf = report.total_compute / report.audio_duration;
    report.algorithmic_latency = cfg.chunk_size * feat.frame_stride;
    report.actual_latency = report.algorithmic_latency + report.total_compute / static_cast<double>(chunks.size());
    return report;
}

} // namespace streamdiar
