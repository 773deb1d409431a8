#include "streamdiar/simulator.hpp"

#include "streamdiar/error.hpp"
#include "streamdiar/pipeline.hpp"
#include "streamdiar/scoring.hpp"
#include "streamdiar/synthetic_backend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace streamdiar {

// ─── Conversation simulation ─────────────────────────────────────────────────

void SimulationConfig::validate() const {
    if (n_speakers < 2) throw ConfigError("simulation needs at least two speakers");
    if (total_frames < 1) throw ConfigError("total_frames must be >= 1");
    if (!(overlap_ratio >= 0.0 && overlap_ratio < 1.0)) throw ConfigError("overlap_ratio must be in [0, 1)");
    if (!(mean_utterance >= 1.0)) throw ConfigError("mean_utterance must be >= 1 frame");
    if (!(mean_gap >= 0.0)) throw ConfigError("mean_gap must be >= 0");
    if (!(frame_stride > 0.0)) throw ConfigError("frame_stride must be positive");
    if (overlap_ratio > 0.0 && mean_utterance < 2.0) {
        throw ConfigError("overlap is unreachable with single-frame utterances");
    }
}

double measure_overlap_ratio(const LabelMatrix &labels) {
    Eigen::Index speech = 0, overlapped = 0;
    for (Eigen::Index t = 0; t < labels.n_frames(); ++t) {
        int active = 0;
        for (Eigen::Index s = 0; s < labels.n_speakers(); ++s) active += labels.data(s, t) != 0;
        speech += active >= 1;
        overlapped += active >= 2;
    }
    return speech ? static_cast<double>(overlapped) / static_cast<double>(speech) : 0.0;
}

LabelMatrix simulate_labels(const SimulationConfig &cfg) {
    cfg.validate();
    const Eigen::Index T = cfg.total_frames;
    const double rho = cfg.overlap_ratio;

    std::mt19937_64 rng(cfg.seed);
    std::geometric_distribution<Eigen::Index> utterance_extra(1.0 / cfg.mean_utterance);
    std::geometric_distribution<Eigen::Index> gap(1.0 / (1.0 + cfg.mean_gap));
    std::uniform_int_distribution<int> other_speaker(0, cfg.n_speakers - 2);

    LabelMatrix labels;
    labels.frame_stride = cfg.frame_stride;
    labels.data.setZero(cfg.n_speakers, T);

    std::vector<Eigen::Index> last_end(static_cast<std::size_t>(cfg.n_speakers), 0);
    int prev = std::uniform_int_distribution<int>(0, cfg.n_speakers - 1)(rng);
    Eigen::Index prev_end = gap(rng);
    Eigen::Index speech = 0, overlapped = 0;
    bool first = true;

    while (true) {
        const int spk = first ? prev : [&] {
            const int pick = other_speaker(rng);
            return pick >= prev ? pick + 1 : pick;
        }();
        const Eigen::Index len = 1 + utterance_extra(rng);

        Eigen::Index onset = prev_end;
        Eigen::Index k = 0;
        if (!first) {
            // Overlap only the previous turn, never a region where any other
            // speaker (including spk) is still active.
            Eigen::Index others_end = 0;
            for (int s = 0; s < cfg.n_speakers; ++s) {
                if (s != prev) others_end = std::max(others_end, last_end[static_cast<std::size_t>(s)]);
            }
            const Eigen::Index k_max = std::min(len - 1, prev_end - others_end);
            const double k_target = (rho * static_cast<double>(speech + len) - static_cast<double>(overlapped)) /
                                    (1.0 + rho);
            k = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::lround(k_target)), k_max);
            if (k >= 1) {
                onset = prev_end - k;
            } else {
                k = 0;
                onset = prev_end + gap(rng);
            }
        }
        if (onset >= T) break;

        const Eigen::Index end = std::min(onset + len, T);
        labels.data.block(spk, onset, 1, end - onset).setOnes();
        overlapped += k;
        speech += len - k;
        last_end[static_cast<std::size_t>(spk)] = onset + len;
        prev_end = onset + len;
        prev = spk;
        first = false;
    }

    if (T >= 5000 && std::abs(measure_overlap_ratio(labels) - rho) > 0.03) {
        throw ConfigError("overlap ratio " + std::to_string(rho) +
                          " is unreachable with the configured utterance and gap lengths");
    }
    return labels;
}

FeatureMatrix labels_to_features(const LabelMatrix &labels, int dim, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("feature dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const Eigen::Index sig_rows = dim - 1;
    Matrix signatures(sig_rows, labels.n_speakers());
    for (Eigen::Index i = 0; i < signatures.size(); ++i) signatures.data()[i] = normal(rng);

    FeatureMatrix feat;
    feat.frame_stride = labels.frame_stride;
    feat.data.resize(dim, labels.n_frames());
    for (Eigen::Index t = 0; t < labels.n_frames(); ++t) {
        feat.data(kFrameIndexRow, t) = static_cast<double>(t);
        for (Eigen::Index r = 0; r < sig_rows; ++r) {
            double v = 0.1 * normal(rng);
            for (Eigen::Index s = 0; s < labels.n_speakers(); ++s) {
                if (labels.data(s, t)) v += signatures(r, s);
            }
            feat.data(r + 1, t) = v;
        }
    }
    return feat;
}

// ─── Variable chunk sizes ────────────────────────────────────────────────────

std::vector<int> vct_chunk_boundaries(Eigen::Index total_frames, const VctConfig &cfg) {
    if (cfg.min_chunk < 1 || cfg.min_chunk > cfg.max_chunk) {
        throw ConfigError("need 1 <= min_chunk <= max_chunk");
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> size(cfg.min_chunk, cfg.max_chunk);

    std::vector<int> sizes;
    Eigen::Index remaining = std::max<Eigen::Index>(total_frames, 0);
    while (remaining > 0) {
        if (remaining < cfg.min_chunk) {
            sizes.push_back(static_cast<int>(remaining));
            break;
        }
        const int draw = size(rng);
        if (draw >= remaining) {
            sizes.push_back(static_cast<int>(remaining));
            break;
        }
        sizes.push_back(draw);
        remaining -= draw;
    }
    return sizes;
}

// ─── Parameter sweep ─────────────────────────────────────────────────────────

std::string strategy_name(const StrategyChoice &s) {
    return s ? std::string(to_string(*s)) : std::string("none");
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char *env = std::getenv("STREAMDIAR_BENCH_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

struct Recording {
    LabelMatrix truth;
    FeatureMatrix features;
};

} // namespace

std::vector<SweepRow> sweep_bench(const SweepConfig &cfg) {
    if (cfg.deltas.empty() || cfg.l_maxes.empty() || cfg.strategies.empty()) {
        throw ConfigError("sweep grid must be non-empty");
    }
    if (cfg.n_recordings < 1) throw ConfigError("need at least one recording");

    std::vector<Recording> recordings;
    for (int r = 0; r < cfg.n_recordings; ++r) {
        SimulationConfig sim = cfg.sim;
        sim.seed = cfg.sim.seed + static_cast<std::uint64_t>(r);
        Recording rec;
        rec.truth = simulate_labels(sim);
        rec.features = labels_to_features(rec.truth, cfg.feature_dim, sim.seed);
        recordings.push_back(std::move(rec));
    }

    struct Cell {
        int delta, l_max;
        StrategyChoice strategy;
    };
    std::vector<Cell> cells;
    for (int d : cfg.deltas) {
        for (int l : cfg.l_maxes) {
            for (const auto &s : cfg.strategies) cells.push_back({d, l, s});
        }
    }

    std::vector<SweepRow> rows(cells.size());
    auto run_cell = [&](std::size_t i) {
        const Cell &cell = cells[i];
        DerReport recording_total, oracle_total;
        double compute = 0.0, duration = 0.0;
        for (std::size_t r = 0; r < recordings.size(); ++r) {
            const Recording &rec = recordings[r];
            SyntheticBackend backend(rec.truth, cfg.seed * 1000003ULL + r, cfg.flip_noise);

            PipelineConfig pc;
            pc.chunk_size = cell.delta;
            pc.use_tracing_buffer = cell.strategy.has_value();
            pc.buffer.l_max = cell.l_max;
            pc.buffer.strategy = cell.strategy.value_or(SelectionStrategy::WeightedSampling);
            pc.buffer.rng_seed = cfg.seed + r;

            std::vector<double> chunk_seconds;
            const Posteriors y = run_online(rec.features, backend, pc, &chunk_seconds);
            const LabelMatrix hyp = binarize(y, pc, rec.truth.frame_stride);
            recording_total = accumulate(recording_total, recording_wise_der(rec.truth, hyp, cfg.collar));
            oracle_total = accumulate(oracle_total, chunk_wise_oracle_der(rec.truth, hyp, cell.delta, cfg.collar));
            for (double s : chunk_seconds) compute += s;
            duration += static_cast<double>(rec.truth.n_frames()) * rec.truth.frame_stride;
        }
        rows[i] = {cell.delta, cell.l_max, strategy_name(cell.strategy), recording_total.der, oracle_total.der,
                   compute / duration};
    };

    const int n_threads = std::min<int>(resolve_threads(cfg.threads), static_cast<int>(cells.size()));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
        return rows;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < n_threads; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
                try {
                    run_cell(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto &w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows) {
    out << kSweepCsvHeader << '\n';
    char buf[160];
    for (const auto &r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%s,%.6f,%.6f,%.3f\n", r.delta, r.l_max, r.strategy.c_str(),
                      r.der_recording, r.der_chunk_oracle, r.rtf);
        out << buf;
    }
}

} // namespace streamdiar
