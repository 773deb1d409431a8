#include "streamdiar/error.hpp"
#include "streamdiar/pipeline.hpp"
#include "streamdiar/rttm.hpp"
#include "streamdiar/simulator.hpp"
#include "streamdiar/synthetic_backend.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <thread>

using namespace streamdiar;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

EncoderModel small_model(std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.input_dim = 6;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.d_ff = 16;
    cfg.n_blocks = 2;
    return {cfg, EncoderWeights::random(cfg, seed)};
}

FeatureMatrix features(Matrix m) {
    FeatureMatrix f;
    f.data = std::move(m);
    return f;
}

LabelMatrix label_rows(std::initializer_list<std::initializer_list<int>> rows) {
    LabelMatrix l;
    l.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto &row : rows) {
        Eigen::Index c = 0;
        for (int v : row) l.data(r, c++) = static_cast<std::uint8_t>(v);
        ++r;
    }
    return l;
}

class CountingBackend final : public DiarizerBackend {
public:
    explicit CountingBackend(std::chrono::milliseconds sleep = {}) : sleep_(sleep) {}
    Posteriors infer(const Matrix &x) override {
        column_counts.push_back(x.cols());
        first_inputs.push_back(x);
        if (sleep_.count() > 0) std::this_thread::sleep_for(sleep_);
        return Posteriors::Constant(2, x.cols(), 0.5);
    }
    int n_speakers() const override { return 2; }
    std::vector<Eigen::Index> column_counts;
    std::vector<Matrix> first_inputs;

private:
    std::chrono::milliseconds sleep_;
};

} // namespace

// ─── Chunking ────────────────────────────────────────────────────────────────

TEST(ChunkStream, Sizes) {
    auto sizes = [](Eigen::Index n, int delta) {
        std::vector<Eigen::Index> out;
        for (const auto &c : chunk_stream(Matrix::Zero(3, n), delta)) out.push_back(c.data.cols());
        return out;
    };
    EXPECT_EQ(sizes(25, 10), (std::vector<Eigen::Index>{10, 10, 5}));
    EXPECT_EQ(sizes(10, 10), (std::vector<Eigen::Index>{10}));
    EXPECT_TRUE(sizes(0, 10).empty());
    EXPECT_THROW(chunk_stream(Matrix::Zero(3, 5), 0), ConfigError);
}

TEST(ChunkStream, ConcatenationIsInput) {
    const auto m = random_matrix(4, 37, 1);
    Matrix joined(4, 37);
    Eigen::Index next = 0;
    std::size_t index = 0;
    for (const auto &c : chunk_stream(m, 8)) {
        EXPECT_EQ(c.index, index++);
        EXPECT_EQ(c.begin, next);
        joined.middleCols(c.begin, c.data.cols()) = c.data;
        next += c.data.cols();
    }
    EXPECT_EQ(joined, m);
}

// ─── Online loop ─────────────────────────────────────────────────────────────

TEST(RunOnline, SingleChunkEqualsBackend) {
    auto model = small_model(2);
    const auto x = random_matrix(6, 8, 3);
    EncoderBackend backend(model);
    PipelineConfig cfg;
    EXPECT_EQ(run_online(features(x), backend, cfg), sa_forward(model.config, model.weights, x));
}

TEST(RunOnline, WholeRecordingChunkIsOffline) {
    auto model = small_model(4);
    const auto x = random_matrix(6, 45, 5);
    EncoderBackend backend(model);
    PipelineConfig cfg;
    cfg.chunk_size = 45;
    EXPECT_EQ(run_online(features(x), backend, cfg), sa_forward(model.config, model.weights, x));
}

TEST(RunOnline, EqualsManualProcessChunkLoop) {
    auto model = small_model(6);
    const auto x = random_matrix(6, 53, 7);
    PipelineConfig cfg;
    cfg.chunk_size = 7;
    cfg.buffer = {12, SelectionStrategy::WeightedSampling, 8};
    EncoderBackend a(model), b(model);
    const auto online = run_online(features(x), a, cfg);

    TracingBuffer buf(cfg.buffer);
    Posteriors manual(2, 53);
    for (const auto &c : chunk_stream(x, 7)) manual.middleCols(c.begin, c.data.cols()) = buf.process_chunk(c.data, b);
    EXPECT_EQ(online, manual);
}

TEST(RunOnline, Causality) {
    auto model = small_model(9);
    const auto x = random_matrix(6, 60, 10);
    PipelineConfig cfg;
    cfg.chunk_size = 10;
    cfg.buffer = {15, SelectionStrategy::UniformSampling, 11};
    EncoderBackend backend(model);
    const auto full = run_online(features(x), backend, cfg);
    for (int k = 1; k <= 5; ++k) {
        const auto part = run_online(features(x.leftCols(10 * k)), backend, cfg);
        EXPECT_EQ(part, full.leftCols(10 * k)) << k << " chunks";
    }
}

TEST(RunOnline, WithoutBufferChunksAreIndependent) {
    auto model = small_model(12);
    const auto x = random_matrix(6, 30, 13);
    PipelineConfig cfg;
    cfg.use_tracing_buffer = false;
    EncoderBackend backend(model);
    const auto y = run_online(features(x), backend, cfg);
    for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(y.middleCols(10 * c, 10), sa_forward(model.config, model.weights, x.middleCols(10 * c, 10)));
    }
}

TEST(RunOnline, ReportsChunkTimings) {
    CountingBackend backend;
    std::vector<double> seconds;
    run_online(features(Matrix::Zero(2, 25)), backend, PipelineConfig{}, &seconds);
    EXPECT_EQ(seconds.size(), 3u);
    EXPECT_EQ(backend.column_counts, (std::vector<Eigen::Index>{10, 20, 25}));
}

TEST(RunOnline, Errors) {
    CountingBackend backend;
    EXPECT_THROW(run_online(features(Matrix::Zero(2, 0)), backend, PipelineConfig{}), EmptyInputError);
    PipelineConfig bad;
    bad.chunk_size = 0;
    EXPECT_THROW(run_online(features(Matrix::Zero(2, 5)), backend, bad), ConfigError);
}

// ─── Binarization ────────────────────────────────────────────────────────────

TEST(Binarize, StrictThreshold) {
    PipelineConfig cfg;
    EXPECT_EQ(binarize(Posteriors::Constant(2, 5, 0.5), cfg).data.cast<int>().sum(), 0);
    Posteriors y(2, 3);
    y << 0.9, 0.9, 0.9, 0.1, 0.1, 0.1;
    const auto l = binarize(y, cfg);
    EXPECT_EQ(l.data.row(0).cast<int>().sum(), 3);
    EXPECT_EQ(l.data.row(1).cast<int>().sum(), 0);
    EXPECT_DOUBLE_EQ(l.frame_stride, 0.1);
}

TEST(Binarize, MedianRemovesIsolatedFrame) {
    PipelineConfig cfg;
    cfg.median_window = 3;
    Posteriors y = Posteriors::Constant(1, 7, 0.1);
    y(0, 3) = 0.9;
    EXPECT_EQ(binarize(y, cfg).data.cast<int>().sum(), 0);

    // Hand trace, window 3, edges replicated: 1 1 0 1 1 0 0 -> 1 1 1 1 1 0 0
    Posteriors z(1, 7);
    z << 0.9, 0.9, 0.1, 0.9, 0.9, 0.1, 0.1;
    const auto l = binarize(z, cfg);
    std::vector<int> got(l.data.data(), l.data.data() + 7);
    EXPECT_EQ(got, (std::vector<int>{1, 1, 1, 1, 1, 0, 0}));
}

TEST(Binarize, ConfigErrors) {
    PipelineConfig cfg;
    cfg.median_window = 4;
    EXPECT_THROW(binarize(Posteriors::Zero(2, 3), cfg), ConfigError);
    cfg.median_window = 1;
    cfg.threshold = 1.0;
    EXPECT_THROW(binarize(Posteriors::Zero(2, 3), cfg), ConfigError);
}

// ─── RTTM ────────────────────────────────────────────────────────────────────

TEST(LabelsToRttm, Runs) {
    LabelMatrix l = label_rows({{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0}, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}});
    auto segs = labels_to_rttm(l, "rec");
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_NEAR(segs[0].onset, 0.0, 1e-12);
    EXPECT_NEAR(segs[0].duration, 1.0, 1e-12);
    EXPECT_EQ(segs[0].speaker, "spk1");

    l.data.setZero();
    EXPECT_TRUE(labels_to_rttm(l, "rec").empty());

    l.data.block(0, 5, 2, 5).setOnes();
    segs = labels_to_rttm(l, "rec");
    ASSERT_EQ(segs.size(), 2u);
    for (const auto &s : segs) {
        EXPECT_NEAR(s.onset, 0.5, 1e-12);
        EXPECT_NEAR(s.duration, 0.5, 1e-12);
    }
    EXPECT_NE(segs[0].speaker, segs[1].speaker);
}

TEST(LabelsToRttm, RasterizeRoundTrip) {
    std::mt19937_64 rng(14);
    std::bernoulli_distribution b(0.4);
    for (int trial = 0; trial < 50; ++trial) {
        LabelMatrix l;
        l.data.resize(3, 80);
        for (Eigen::Index i = 0; i < l.data.size(); ++i) l.data.data()[i] = b(rng);
        const auto back = rttm_to_labels(labels_to_rttm(l, "r"), {"spk1", "spk2", "spk3"}, 80, 0.1);
        ASSERT_EQ(back.data, l.data);
    }
}

TEST(Rttm, LineFormat) {
    EXPECT_EQ(format_rttm_line({"rec1", 1.0, 2.5, "spk1"}), "SPEAKER rec1 1 1.00 2.50 <NA> <NA> spk1 <NA> <NA>");
}

TEST(Rttm, WriteReadRoundTrip) {
    std::vector<RttmSegment> segs = {{"a", 0.0, 1.2, "spk1"}, {"a", 0.5, 0.3, "spk2"}, {"b", 3.1, 0.1, "spk1"}};
    std::stringstream io;
    write_rttm(io, segs);
    EXPECT_EQ(read_rttm(io), segs);
}

TEST(Rttm, ParseErrorsCarryLineNumbers) {
    std::istringstream in("SPEAKER a 1 0.00 1.00 <NA> <NA> s1 <NA> <NA>\n\nSPEAKER a 1 zero 1.00 <NA> <NA> s1 <NA> <NA>\n");
    try {
        read_rttm(in);
        FAIL() << "expected a parse error";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream short_line("SPEAKER a 1 0.0\n");
    EXPECT_THROW(read_rttm(short_line), ParseError);
    std::istringstream skipped("# comment\nSPKR-INFO a 1 <NA> <NA> <NA> unknown s1 <NA> <NA>\n");
    EXPECT_TRUE(read_rttm(skipped).empty());
}

// ─── RTF ─────────────────────────────────────────────────────────────────────

TEST(MeasureRtf, ZeroWorkStub) {
    CountingBackend backend;
    PipelineConfig cfg;
    FeatureMatrix feat = features(Matrix::Ones(3, 200));
    const auto r = measure_rtf(feat, backend, cfg);
    EXPECT_EQ(r.n_chunks, 20u);
    EXPECT_DOUBLE_EQ(r.audio_duration, 20.0);
    EXPECT_LT(r.rtf, 0.01);
    EXPECT_EQ(r.algorithmic_latency, cfg.chunk_size * 0.1);
    EXPECT_DOUBLE_EQ(r.rtf, r.total_compute / r.audio_duration);
    EXPECT_GE(r.actual_latency, r.algorithmic_latency);
}

TEST(MeasureRtf, PrefillsBufferWithDummyFrames) {
    CountingBackend backend;
    PipelineConfig cfg;
    cfg.buffer.l_max = 30;
    measure_rtf(features(Matrix::Ones(3, 100)), backend, cfg);
    ASSERT_EQ(backend.column_counts.front(), 40);
    EXPECT_TRUE(backend.first_inputs.front().leftCols(30).isZero());
    EXPECT_TRUE((backend.first_inputs.front().rightCols(10).array() == 1.0).all());
}

TEST(MeasureRtf, SleepingStub) {
    CountingBackend backend(std::chrono::milliseconds(50));
    PipelineConfig cfg;
    const auto r = measure_rtf(features(Matrix::Ones(3, 100)), backend, cfg);
    EXPECT_GE(r.rtf, 0.045);
    EXPECT_LE(r.rtf, 0.06);
    EXPECT_EQ(r.algorithmic_latency, 1.0);
    EXPECT_NEAR(r.actual_latency, 1.05, 0.01);
}

TEST(MeasureRtf, NeedsTenChunks) {
    CountingBackend backend;
    EXPECT_THROW(measure_rtf(features(Matrix::Ones(3, 90)), backend, PipelineConfig{}), MeasurementError);
}
