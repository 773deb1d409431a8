#pragma once

#include "streamdiar/model.hpp"
#include "streamdiar/rttm.hpp"
#include "streamdiar/stb.hpp"
#include "streamdiar/types.hpp"

#include <string>
#include <vector>

namespace streamdiar {

struct PipelineConfig {
    int chunk_size = 10;  // frames; 1 s at a 100 ms stride
    BufferConfig buffer;
    // Off: every chunk is diarized on its own (no cross-chunk alignment).
    bool use_tracing_buffer = true;
    double threshold = 0.5;
    int median_window = 1;  // odd; 1 disables smoothing

    // Throws ConfigError.
    void validate() const;
};

struct FeatureChunk {
    std::size_t index;
    Eigen::Index begin;  // first frame
    Matrix data;         // D × chunk length
};

// Contiguous chunks of `chunk_size` columns in order; the last one may be
// shorter. Empty input gives no chunks.
std::vector<FeatureChunk> chunk_stream(const Matrix &feat, int chunk_size);

// Runs the chunked online loop and returns the stitched S×N posteriors. When
// chunk_seconds is non-null it receives the wall time spent on each chunk.
Posteriors run_online(const FeatureMatrix &feat, DiarizerBackend &backend, const PipelineConfig &cfg,
                      std::vector<double> *chunk_seconds = nullptr);

// label = posterior > threshold, then a per-speaker running median over
// median_window frames with edge replication.
LabelMatrix binarize(const Posteriors &y, const PipelineConfig &cfg, double frame_stride = 0.1);

struct RtfReport {
    double total_compute = 0.0;        // seconds, summed over chunks
    double audio_duration = 0.0;       // seconds
    double rtf = 0.0;                  // total_compute / audio_duration
    double algorithmic_latency = 0.0;  // chunk_size × frame stride
    double actual_latency = 0.0;       // algorithmic + mean per-chunk compute
    std::size_t n_chunks = 0;

    std::string to_text() const;
};

inline constexpr std::size_t kMinRtfChunks = 10;

// Pre-fills the buffer to l_max with zero features paired with 0.5
// posteriors, then times each chunk with a monotonic clock.
// Throws MeasurementError when the input spans fewer than kMinRtfChunks chunks.
RtfReport measure_rtf(const FeatureMatrix &feat, DiarizerBackend &backend, const PipelineConfig &cfg);

} // namespace streamdiar
