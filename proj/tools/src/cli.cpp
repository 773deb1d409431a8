#include "cli.hpp"

#include "streamdiar/audio.hpp"
#include "streamdiar/error.hpp"
#include "streamdiar/features.hpp"
#include "streamdiar/model.hpp"
#include "streamdiar/pipeline.hpp"
#include "streamdiar/rttm.hpp"
#include "streamdiar/scoring.hpp"
#include "streamdiar/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace streamdiar::cli {

namespace {

std::string format(const char *fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    return buf;
}

StrategyChoice parse_choice(const std::string &name) {
    if (name == "none") return std::nullopt;
    if (auto s = parse_strategy(name)) return *s;
    throw ConfigError("unknown strategy '" + name + "'");
}

void apply_choice(PipelineConfig &pc, const StrategyChoice &choice) {
    pc.use_tracing_buffer = choice.has_value();
    if (choice) pc.buffer.strategy = *choice;
}

// Weight problems of any kind are reported as format errors; a missing file
// stays an input error.
EncoderModel load_model(const fs::path &path) {
    if (!fs::exists(path)) throw InvalidInputError("cannot open weights " + path.string());
    try {
        return load_weights(path);
    } catch (const FormatError &) {
        throw;
    } catch (const Error &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

FeatureMatrix load_input(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open input " + path.string());
    char magic[5] = {};
    in.read(magic, sizeof(magic));
    in.close();
    if (std::string_view(magic, 4) == "RIFF") return extract_features(read_wav(path));
    if (std::string_view(magic, 5) == "EENDW") return load_features(path);
    throw InvalidInputError(path.string() + " is neither a WAV file nor a feature file");
}

// ─── diarize ─────────────────────────────────────────────────────────────────

struct DiarizeArgs {
    std::string input, weights, out, recording_id, strategy = "weighted";
    int delta = 10, l_max = 100, median = 1;
    double threshold = 0.5;
    std::uint64_t seed = kDefaultSeed;
};

int cmd_diarize(const DiarizeArgs &a, std::ostream &out) {
    PipelineConfig pc;
    pc.chunk_size = a.delta;
    pc.buffer.l_max = a.l_max;
    pc.buffer.rng_seed = a.seed;
    pc.threshold = a.threshold;
    pc.median_window = a.median;
    apply_choice(pc, parse_choice(a.strategy));
    pc.validate();

    const FeatureMatrix feat = load_input(a.input);
    EncoderBackend backend(load_model(a.weights));
    if (feat.dim() != backend.model().config.input_dim) {
        throw InvalidInputError("input has " + std::to_string(feat.dim()) + " feature rows, model expects " +
                                std::to_string(backend.model().config.input_dim));
    }

    std::vector<double> chunk_seconds;
    const Posteriors y = run_online(feat, backend, pc, &chunk_seconds);
    const LabelMatrix labels = binarize(y, pc, feat.frame_stride);
    const std::string rec = a.recording_id.empty() ? fs::path(a.input).stem().string() : a.recording_id;
    const auto segments = labels_to_rttm(labels, rec);
    write_rttm(fs::path(a.out), segments);

    const double compute = std::accumulate(chunk_seconds.begin(), chunk_seconds.end(), 0.0);
    const double duration = static_cast<double>(feat.n_frames()) * feat.frame_stride;
    const double algorithmic = pc.chunk_size * feat.frame_stride;
    out << format("frames=%ld chunks=%zu segments=%zu rtf=%.4f algorithmic_latency=%.3f actual_latency=%.3f\n",
                  static_cast<long>(feat.n_frames()), chunk_seconds.size(), segments.size(), compute / duration,
                  algorithmic, algorithmic + compute / static_cast<double>(chunk_seconds.size()));
    return kExitOk;
}

// ─── score ───────────────────────────────────────────────────────────────────

struct ScoreArgs {
    std::string ref, hyp;
    double collar = kDefaultCollar;
    int delta = 0;
    bool json = false;
};

std::vector<RttmSegment> read_rttm_file(const fs::path &path) {
    if (!fs::exists(path)) throw InvalidInputError("cannot open " + path.string());
    return read_rttm(path);
}

std::vector<std::string> speakers_of(const std::vector<RttmSegment> &segs) {
    std::set<std::string> names;
    for (const auto &s : segs) names.insert(s.speaker);
    return {names.begin(), names.end()};
}

// Chunk-wise oracle on the 100 ms frame grid, per recording.
DerReport oracle_from_rttm(const std::vector<RttmSegment> &ref, const std::vector<RttmSegment> &hyp, int delta,
                           double collar) {
    constexpr double stride = 0.1;
    std::set<std::string> recordings;
    for (const auto &s : ref) recordings.insert(s.recording_id);
    for (const auto &s : hyp) recordings.insert(s.recording_id);

    DerReport total{.collar = collar};
    for (const auto &rec : recordings) {
        std::vector<RttmSegment> r, h;
        double end = 0.0;
        for (const auto &s : ref) {
            if (s.recording_id == rec) r.push_back(s), end = std::max(end, s.end());
        }
        for (const auto &s : hyp) {
            if (s.recording_id == rec) h.push_back(s), end = std::max(end, s.end());
        }
        const auto n = static_cast<Eigen::Index>(std::ceil(end / stride - 1e-9));
        total = accumulate(total, chunk_wise_oracle_der(rttm_to_labels(r, speakers_of(r), n, stride),
                                                        rttm_to_labels(h, speakers_of(h), n, stride), delta, collar));
    }
    return total;
}

int cmd_score(const ScoreArgs &a, std::ostream &out) {
    const auto ref = read_rttm_file(a.ref);
    const auto hyp = read_rttm_file(a.hyp);
    const DerReport report = compute_der(ref, hyp, a.collar);
    if (a.json) {
        out << report.to_json() << '\n';
    } else {
        out << report.to_text();
    }
    if (a.delta > 0) {
        const DerReport oracle = oracle_from_rttm(ref, hyp, a.delta, a.collar);
        out << format("chunk_size=%d\nchunk_oracle_der=%.4f\n", a.delta, oracle.der);
    }
    return kExitOk;
}

// ─── simulate ────────────────────────────────────────────────────────────────

struct SimulateArgs {
    SimulationConfig sim;
    std::string out, features, recording_id = "sim";
    int dim = 8;
    std::uint64_t seed = kDefaultSeed;
};

int cmd_simulate(SimulateArgs a, std::ostream &out) {
    a.sim.seed = a.seed;
    const LabelMatrix labels = simulate_labels(a.sim);
    write_rttm(fs::path(a.out), labels_to_rttm(labels, a.recording_id));
    if (!a.features.empty()) save_features(a.features, labels_to_features(labels, a.dim, a.seed));
    out << format("frames=%ld speakers=%d overlap_ratio=%.4f\n", static_cast<long>(labels.n_frames()),
                  static_cast<int>(labels.n_speakers()), measure_overlap_ratio(labels));
    return kExitOk;
}

// ─── bench ───────────────────────────────────────────────────────────────────

struct BenchArgs {
    std::vector<int> deltas{10}, l_maxes{100};
    std::vector<std::string> strategies{"weighted"};
    SimulationConfig sim;
    int recordings = 1, dim = 8, threads = 0;
    double flip_noise = 0.05, collar = kDefaultCollar;
    std::uint64_t seed = kDefaultSeed;
    std::string out;
};

int cmd_bench(const BenchArgs &a, std::ostream &out) {
    SweepConfig cfg;
    cfg.deltas = a.deltas;
    cfg.l_maxes = a.l_maxes;
    cfg.strategies.clear();
    for (const auto &name : a.strategies) {
        if (name == "all") {
            cfg.strategies.insert(cfg.strategies.end(), std::begin(kAllStrategies), std::end(kAllStrategies));
        } else {
            cfg.strategies.push_back(parse_choice(name));
        }
    }
    for (int d : cfg.deltas) {
        if (d < 1) throw ConfigError("--delta values must be >= 1");
    }
    for (int l : cfg.l_maxes) {
        if (l < 1) throw ConfigError("--lmax values must be >= 1");
    }
    if (!(a.flip_noise >= 0.0 && a.flip_noise <= 1.0)) throw ConfigError("--flip-noise must be in [0, 1]");
    cfg.sim = a.sim;
    cfg.sim.seed = a.seed;
    cfg.n_recordings = a.recordings;
    cfg.flip_noise = a.flip_noise;
    cfg.collar = a.collar;
    cfg.feature_dim = a.dim;
    cfg.seed = a.seed;
    cfg.threads = a.threads;

    const auto rows = sweep_bench(cfg);
    if (a.out.empty()) {
        write_sweep_csv(out, rows);
    } else {
        std::ofstream file(a.out);
        if (!file) throw InvalidInputError("cannot write " + a.out);
        write_sweep_csv(file, rows);
    }
    return kExitOk;
}

// ─── rtf ─────────────────────────────────────────────────────────────────────

struct RtfArgs {
    std::string input, weights, save_weights, strategy = "weighted";
    bool random_model = false;
    EncoderConfig model;
    int delta = 10, l_max = 100, frames = 600;
    std::uint64_t seed = kDefaultSeed;
};

int cmd_rtf(const RtfArgs &a, std::ostream &out) {
    PipelineConfig pc;
    pc.chunk_size = a.delta;
    pc.buffer.l_max = a.l_max;
    pc.buffer.rng_seed = a.seed;
    apply_choice(pc, parse_choice(a.strategy));
    pc.validate();

    EncoderModel model;
    if (a.random_model) {
        model.config = a.model;
        model.config.validate();
        model.weights = EncoderWeights::random(model.config, a.seed, 0.1);
    } else if (!a.weights.empty()) {
        model = load_model(a.weights);
    } else {
        throw ConfigError("rtf needs --weights or --random-model");
    }
    if (!a.save_weights.empty()) save_weights(a.save_weights, model.config, model.weights);

    FeatureMatrix feat;
    if (!a.input.empty()) {
        feat = load_input(a.input);
    } else {
        std::mt19937_64 rng(a.seed);
        std::normal_distribution<double> normal;
        feat.data.resize(model.config.input_dim, a.frames);
        for (Eigen::Index i = 0; i < feat.data.size(); ++i) feat.data.data()[i] = normal(rng);
    }
    if (feat.dim() != model.config.input_dim) {
        throw InvalidInputError("input has " + std::to_string(feat.dim()) + " feature rows, model expects " +
                                std::to_string(model.config.input_dim));
    }

    EncoderBackend backend(std::move(model));
    out << measure_rtf(feat, backend, pc).to_text();
    return kExitOk;
}

int exit_code_for(const Error &e) {
    if (dynamic_cast<const ParseError *>(&e)) return kExitParseError;
    if (dynamic_cast<const FormatError *>(&e)) return kExitFormatError;
    return kExitInputError;
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Streaming speaker diarization with a speaker-tracing buffer", "streamdiar"};
    app.require_subcommand(1);

    DiarizeArgs diarize;
    auto *d = app.add_subcommand("diarize", "Diarize a WAV or feature file and write RTTM");
    d->add_option("input", diarize.input, "WAV (PCM16 mono) or feature file")->required();
    d->add_option("-w,--weights", diarize.weights, "Encoder weight file")->required();
    d->add_option("-o,--out", diarize.out, "Output RTTM path")->required();
    d->add_option("--delta", diarize.delta, "Chunk size in frames")->capture_default_str();
    d->add_option("--lmax", diarize.l_max, "Tracing buffer size in frames")->capture_default_str();
    d->add_option("--strategy", diarize.strategy, "fifo, uniform, deterministic, weighted or none")
        ->capture_default_str();
    d->add_option("--threshold", diarize.threshold, "Posterior threshold")->capture_default_str();
    d->add_option("--median", diarize.median, "Median filter window (odd)")->capture_default_str();
    d->add_option("--recording-id", diarize.recording_id, "RTTM recording id (default: input stem)");
    d->add_option("--seed", diarize.seed, "Buffer sampling seed")->capture_default_str();

    ScoreArgs score;
    auto *s = app.add_subcommand("score", "Compute DER between two RTTM files");
    s->add_option("ref", score.ref, "Reference RTTM")->required();
    s->add_option("hyp", score.hyp, "Hypothesis RTTM")->required();
    s->add_option("--collar", score.collar, "Collar in seconds")->capture_default_str();
    s->add_option("--delta", score.delta, "Also report the chunk-wise oracle DER for this chunk size (frames)");
    s->add_flag("--json", score.json, "Emit JSON instead of key=value lines");

    SimulateArgs simulate;
    auto *m = app.add_subcommand("simulate", "Simulate a conversation and write its reference RTTM");
    m->add_option("-o,--out", simulate.out, "Output RTTM path")->required();
    m->add_option("--features", simulate.features, "Also write synthetic features here");
    m->add_option("--dim", simulate.dim, "Synthetic feature dimension")->capture_default_str();
    m->add_option("--frames", simulate.sim.total_frames, "Length in 100 ms frames")->capture_default_str();
    m->add_option("--speakers", simulate.sim.n_speakers, "Number of speakers")->capture_default_str();
    m->add_option("--overlap", simulate.sim.overlap_ratio, "Target overlap ratio")->capture_default_str();
    m->add_option("--mean-utterance", simulate.sim.mean_utterance, "Mean utterance length (frames)")
        ->capture_default_str();
    m->add_option("--mean-gap", simulate.sim.mean_gap, "Mean gap length (frames)")->capture_default_str();
    m->add_option("--recording-id", simulate.recording_id, "RTTM recording id")->capture_default_str();
    m->add_option("--seed", simulate.seed, "Random seed")->capture_default_str();

    BenchArgs bench;
    auto *b = app.add_subcommand("bench", "Sweep chunk size, buffer size and strategy on synthetic data");
    b->add_option("--delta", bench.deltas, "Chunk sizes")->delimiter(',')->capture_default_str();
    b->add_option("--lmax", bench.l_maxes, "Buffer sizes")->delimiter(',')->capture_default_str();
    b->add_option("--strategy", bench.strategies, "Strategies, 'none' or 'all'")
        ->delimiter(',')
        ->capture_default_str();
    b->add_option("--recordings", bench.recordings, "Simulated recordings per cell")->capture_default_str();
    b->add_option("--frames", bench.sim.total_frames, "Frames per recording")->capture_default_str();
    b->add_option("--overlap", bench.sim.overlap_ratio, "Target overlap ratio")->capture_default_str();
    b->add_option("--flip-noise", bench.flip_noise, "Synthetic backend flip probability")->capture_default_str();
    b->add_option("--collar", bench.collar, "Scoring collar in seconds")->capture_default_str();
    b->add_option("--dim", bench.dim, "Synthetic feature dimension")->capture_default_str();
    b->add_option("--threads", bench.threads, "Worker threads (0: STREAMDIAR_BENCH_THREADS or 1)")
        ->capture_default_str();
    b->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
    b->add_option("-o,--out", bench.out, "CSV output path (default: stdout)");

    RtfArgs rtf;
    auto *r = app.add_subcommand("rtf", "Measure real-time factor and latency");
    r->add_option("input", rtf.input, "WAV or feature file (default: random features)");
    r->add_option("-w,--weights", rtf.weights, "Encoder weight file");
    r->add_flag("--random-model", rtf.random_model, "Use randomly initialized weights");
    r->add_option("--save-weights", rtf.save_weights, "Write the model used to this path");
    r->add_option("--frames", rtf.frames, "Frames of random input")->capture_default_str();
    r->add_option("--delta", rtf.delta, "Chunk size in frames")->capture_default_str();
    r->add_option("--lmax", rtf.l_max, "Tracing buffer size in frames")->capture_default_str();
    r->add_option("--strategy", rtf.strategy, "fifo, uniform, deterministic, weighted or none")
        ->capture_default_str();
    r->add_option("--blocks", rtf.model.n_blocks, "Random model: encoder blocks")->capture_default_str();
    r->add_option("--d-model", rtf.model.d_model, "Random model: attention units")->capture_default_str();
    r->add_option("--heads", rtf.model.n_heads, "Random model: attention heads")->capture_default_str();
    r->add_option("--d-ff", rtf.model.d_ff, "Random model: feed-forward units")->capture_default_str();
    r->add_option("--seed", rtf.seed, "Random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*d) return cmd_diarize(diarize, out);
        if (*s) return cmd_score(score, out);
        if (*m) return cmd_simulate(simulate, out);
        if (*b) return cmd_bench(bench, out);
        if (*r) return cmd_rtf(rtf, out);
    } catch (const Error &e) {
        err << "streamdiar: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception &e) {
        err << "streamdiar: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

} // namespace streamdiar::cli
