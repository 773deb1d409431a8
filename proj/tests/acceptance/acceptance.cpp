// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "oracles.hpp"

#include "streamdiar/error.hpp"
#include "streamdiar/model.hpp"
#include "streamdiar/permutation.hpp"
#include "streamdiar/pipeline.hpp"
#include "streamdiar/rttm.hpp"
#include "streamdiar/scoring.hpp"
#include "streamdiar/simulator.hpp"
#include "streamdiar/stb.hpp"
#include "streamdiar/synthetic_backend.hpp"
#include "streamdiar/tensor_file.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace streamdiar;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

SweepConfig sweep_base(int recordings) {
    SweepConfig cfg;
    cfg.n_recordings = recordings;
    cfg.flip_noise = 0.05;
    cfg.sim.total_frames = 6000;
    cfg.sim.overlap_ratio = 0.2;
    cfg.seed = 1;
    return cfg;
}

// ─── 1 ───────────────────────────────────────────────────────────────────────

Outcome scrambled_backend_and_buffer() {
    const auto start = std::chrono::steady_clock::now();
    auto cfg = sweep_base(10);
    cfg.deltas = {10};
    cfg.l_maxes = {100};
    cfg.strategies = {std::nullopt, SelectionStrategy::WeightedSampling};
    const auto rows = sweep_bench(cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto &none = rows.at(0), &stb = rows.at(1);

    Outcome o;
    o.pass = none.der_recording >= 0.30 && none.der_chunk_oracle <= 0.08 &&
             std::abs(stb.der_recording - stb.der_chunk_oracle) <= 0.02 && seconds < 60.0;
    o.detail = fmt("no buffer: recording %.2f%% oracle %.2f%%; weighted l_max=100: recording %.2f%% oracle %.2f%%; %.1f s",
                   100 * none.der_recording, 100 * none.der_chunk_oracle, 100 * stb.der_recording,
                   100 * stb.der_chunk_oracle, seconds);
    return o;
}

// ─── 2 ───────────────────────────────────────────────────────────────────────

Outcome trends_over_buffer_and_chunk_size() {
    auto cfg = sweep_base(10);
    cfg.deltas = {10, 20};
    cfg.l_maxes = {10, 50, 100, 200};
    const auto rows = sweep_bench(cfg);
    auto der = [&](std::size_t d, std::size_t l) { return rows.at(d * 4 + l).der_recording; };

    Outcome o;
    double worst_rise = -1, worst_delta = -1;
    for (std::size_t d = 0; d < 2; ++d) {
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = i + 1; j < 4; ++j) worst_rise = std::max(worst_rise, der(d, j) - der(d, i));
        }
    }
    for (std::size_t l = 0; l < 4; ++l) worst_delta = std::max(worst_delta, der(1, l) - der(0, l));
    o.pass = worst_rise <= 0.005 && worst_delta <= 0.005;
    std::ostringstream s;
    for (std::size_t d = 0; d < 2; ++d) {
        s << "delta=" << cfg.deltas[d] << " [";
        for (std::size_t l = 0; l < 4; ++l) s << (l ? " " : "") << fmt("%.2f", 100 * der(d, l));
        s << "] ";
    }
    s << fmt("max rise over l_max %.2f pt, max delta20-delta10 %.2f pt", 100 * worst_rise, 100 * worst_delta);
    o.detail = s.str();
    return o;
}

// ─── 3 ───────────────────────────────────────────────────────────────────────

Outcome correlation_and_permutation_search() {
    std::mt19937_64 rng(3);
    int cc_bad = 0, perm_bad = 0;
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int s = 2 + trial % 2;
        const auto l = std::uniform_int_distribution<Eigen::Index>(1, 200)(rng);
        const auto a = uniform_matrix(s, l, rng), b = uniform_matrix(s, l, rng);
        const double err = std::abs(correlation_coefficient(a, b) - oracle::pearson_flat(oracle::to_grid(a), oracle::to_grid(b)));
        worst = std::max(worst, err);
        cc_bad += err > 1e-12;
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const int s = 2 + trial % 3;
        const auto l = std::uniform_int_distribution<Eigen::Index>(1, 60)(rng);
        const auto y_buf = uniform_matrix(s, l, rng);
        Matrix y_hat;
        if (trial % 2 == 0) {
            y_hat = uniform_matrix(s, l, rng);
        } else {
            // A scrambled noisy copy, so the best permutation is not arbitrary.
            auto perms = all_permutations(s);
            const auto &p = perms[std::uniform_int_distribution<std::size_t>(0, perms.size() - 1)(rng)];
            y_hat = apply_permutation(y_buf, p) + 0.3 * uniform_matrix(s, l, rng);
        }
        const auto got = best_permutation(y_buf, y_hat).map;
        perm_bad += got != oracle::brute_best_permutation(oracle::to_grid(y_buf), oracle::to_grid(y_hat));
    }
    return {cc_bad == 0 && perm_bad == 0,
            fmt("CC: %d/1000 beyond 1e-12 (max err %.1e); permutation: %d/1000 disagreements", cc_bad, worst, perm_bad)};
}

// ─── 4 ───────────────────────────────────────────────────────────────────────

RttmSegment seg(const std::string &spk, double on, double off) { return {"r", on, off - on, spk}; }

LabelMatrix blocky_labels(int speakers, Eigen::Index frames, std::mt19937_64 &rng) {
    std::uniform_int_distribution<int> len(1, 12);
    std::bernoulli_distribution on(0.5);
    LabelMatrix l;
    l.data.resize(speakers, frames);
    for (int s = 0; s < speakers; ++s) {
        for (Eigen::Index t = 0; t < frames;) {
            const Eigen::Index n = std::min<Eigen::Index>(len(rng), frames - t);
            l.data.block(s, t, 1, n).setConstant(on(rng));
            t += n;
        }
    }
    return l;
}

Outcome scorer() {
    struct Case {
        std::vector<RttmSegment> ref, hyp;
        double collar, missed, false_alarm, confusion;
    };
    const std::vector<Case> table = {
        {{seg("A", 0, 5), seg("B", 5, 9)}, {seg("x", 0, 5), seg("y", 5, 9)}, 0.0, 0, 0, 0},
        {{seg("A", 0, 10)}, {}, 0.0, 10, 0, 0},
        {{seg("A", 0, 10)}, {seg("A", 0, 8), seg("B", 8, 10)}, 0.0, 0, 0, 2},
        {{seg("A", 0, 10)}, {seg("A", 0, 9.5)}, 0.0, 0.5, 0, 0},
        {{seg("A", 0, 10)}, {seg("A", 0, 9.5)}, 0.25, 0.25, 0, 0},
        {{seg("A", 0, 6), seg("B", 4, 10)}, {seg("X", 0, 10)}, 0.0, 2, 0, 4},
        {{seg("A", 0, 5)}, {seg("A", 0, 5), seg("B", 5, 7)}, 0.0, 0, 2, 0},
        {{seg("A", 0, 5), seg("B", 5, 7), seg("A", 7, 12)}, {seg("x", 0, 6), seg("y", 6, 12)}, 0.5, 0, 0, 4.5},
    };
    int table_bad = 0;
    for (const auto &c : table) {
        const auto r = compute_der(c.ref, c.hyp, c.collar);
        table_bad += std::abs(r.missed - c.missed) > 1e-9 || std::abs(r.false_alarm - c.false_alarm) > 1e-9 ||
                     std::abs(r.confusion - c.confusion) > 1e-9;
    }
    const bool twenty = std::abs(compute_der(table[2].ref, table[2].hyp, 0.0).der - 0.2) < 1e-12;

    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> delta(1, 50);
    std::bernoulli_distribution flip(0.1);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int s = 2 + trial % 2;
        const auto ref = blocky_labels(s, 200, rng);
        LabelMatrix hyp;
        if (trial % 2 == 0) {
            hyp = blocky_labels(s, 200, rng);
        } else {
            hyp = ref;
            for (Eigen::Index i = 0; i < hyp.data.size(); ++i) hyp.data.data()[i] ^= flip(rng);
        }
        const int d = delta(rng);
        const double collar = (trial % 3) * 0.1;
        violations += chunk_wise_oracle_der(ref, hyp, d, collar).der > recording_wise_der(ref, hyp, collar).der + 1e-12;
    }
    return {table_bad == 0 && twenty && violations == 0,
            fmt("hand table %zu cases, %d mismatches; 20%% confusion %s; oracle > recording in %d/1000 pairs",
                table.size(), table_bad, twenty ? "ok" : "wrong", violations)};
}

// ─── 5 ───────────────────────────────────────────────────────────────────────

Outcome forward_pass() {
    std::mt19937_64 rng(5);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto random_config = [&] {
        EncoderConfig cfg;
        cfg.n_heads = pick(1, 4);
        cfg.d_model = cfg.n_heads * pick(1, 16 / cfg.n_heads);
        cfg.input_dim = pick(1, 12);
        cfg.d_ff = pick(1, 32);
        cfg.n_blocks = pick(1, 3);
        cfg.n_speakers = pick(1, 3);
        cfg.use_residual = pick(0, 1) == 1;
        return cfg;
    };

    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto cfg = random_config();
        cfg.use_positional_encoding = trial % 4 == 3;
        const auto w = EncoderWeights::random(cfg, 1000 + trial);
        const auto x = normal_matrix(cfg.input_dim, pick(1, 32), rng);
        const auto y = sa_forward(cfg, w, x);
        const auto expected = oracle::forward(cfg, w, x);
        for (Eigen::Index s = 0; s < y.rows(); ++s) {
            for (Eigen::Index t = 0; t < y.cols(); ++t) worst = std::max(worst, std::abs(y(s, t) - expected[s][t]));
        }
    }

    double worst_eq = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto cfg = random_config();
        const auto w = EncoderWeights::random(cfg, 5000 + trial);
        const auto n = pick(2, 32);
        const auto x = normal_matrix(cfg.input_dim, n, rng);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Matrix xp(x.rows(), n);
        for (Eigen::Index j = 0; j < n; ++j) xp.col(j) = x.col(order[j]);
        const auto y = sa_forward(cfg, w, x), yp = sa_forward(cfg, w, xp);
        for (Eigen::Index j = 0; j < n; ++j) worst_eq = std::max(worst_eq, (yp.col(j) - y.col(order[j])).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-5 && worst_eq <= 1e-6,
            fmt("200 configs, max |sa_forward - oracle| %.1e; 100 shuffles, max equivariance error %.1e", worst, worst_eq)};
}

// ─── 6 ───────────────────────────────────────────────────────────────────────

Outcome selection_strategies() {
    std::mt19937_64 rng(6);
    int fifo_bad = 0, top_bad = 0, equal_bad = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 300)(rng);
        const int l_max = std::uniform_int_distribution<int>(1, 150)(rng);
        Vector delta(n);
        // Coarse values so ties are common.
        for (int i = 0; i < n; ++i) delta[i] = std::uniform_int_distribution<int>(0, 10)(rng) / 10.0;

        std::vector<Eigen::Index> expect_fifo;
        for (int i = std::max(0, n - l_max); i < n; ++i) expect_fifo.push_back(i);
        fifo_bad += select_buffer_frames(delta, l_max, SelectionStrategy::FirstInFirstOut, rng) != expect_fifo;

        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return delta[a] > delta[b] || (delta[a] == delta[b] && a < b); });
        order.resize(static_cast<std::size_t>(std::min(n, l_max)));
        std::sort(order.begin(), order.end());
        top_bad += select_buffer_frames(delta, l_max, SelectionStrategy::DeterministicSelection, rng) != order;

        const Vector flat = Vector::Constant(n, 0.1 + trial % 7 / 10.0);
        std::mt19937_64 a(trial), b(trial);
        equal_bad += select_buffer_frames(flat, l_max, SelectionStrategy::WeightedSampling, a) !=
                     select_buffer_frames(flat, l_max, SelectionStrategy::UniformSampling, b);
    }

    Vector delta(8);
    delta << 0.02, 0.05, 0.08, 0.1, 0.15, 0.2, 0.4, 0.0;
    const int trials = 10000;
    std::vector<int> hits(8, 0);
    for (int i = 0; i < trials; ++i) {
        std::mt19937_64 r(20210 + i);
        ++hits[static_cast<std::size_t>(select_buffer_frames(delta, 1, SelectionStrategy::WeightedSampling, r)[0])];
    }
    double worst_z = 0;
    for (int i = 0; i < 8; ++i) {
        const double p = delta[i] / delta.sum();
        const double se = std::sqrt(p * (1 - p) / trials);
        const double dev = std::abs(hits[static_cast<std::size_t>(i)] / double(trials) - p);
        worst_z = std::max(worst_z, se > 0 ? dev / se : (dev > 0 ? 1e9 : 0.0));
    }
    return {fifo_bad == 0 && top_bad == 0 && equal_bad == 0 && worst_z <= 3.0,
            fmt("fifo %d/500 wrong, deterministic %d/500 wrong, weighted vs uniform on equal delta %d/500 differ, "
                "weighted frequency max %.2f SE",
                fifo_bad, top_bad, equal_bad, worst_z)};
}

// ─── 7 ───────────────────────────────────────────────────────────────────────

Outcome zero_noise_recovery() {
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SimulationConfig sim;
        sim.total_frames = 200;
        sim.seed = 7000 + seed;
        const auto truth = simulate_labels(sim);
        const auto feat = labels_to_features(truth, 8, seed);
        SyntheticBackend backend(truth, 9000 + seed, 0.0);
        PipelineConfig cfg;
        cfg.chunk_size = 10;
        cfg.buffer = {100, SelectionStrategy::WeightedSampling, seed};
        const auto y = run_online(feat, backend, cfg);
        const auto soft = soften_labels(truth, 0, 200, 0.05);
        bool global = false;
        for (const auto &p : all_permutations(2)) global = global || apply_permutation(y, p) == soft;
        const auto der = recording_wise_der(truth, binarize(y, cfg), 0.0);
        failures += !global || der.der != 0.0;
    }
    return {failures == 0, fmt("100 seeds x 20 chunks, %d failures", failures)};
}

// ─── 8 ───────────────────────────────────────────────────────────────────────

class SleepingBackend final : public DiarizerBackend {
  public:
    Posteriors infer(const Matrix &x) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        return Posteriors::Constant(2, x.cols(), 0.5);
    }
    int n_speakers() const override { return 2; }
};

Outcome rtf_harness() {
    SleepingBackend backend;
    PipelineConfig cfg;
    cfg.chunk_size = 10;
    FeatureMatrix feat{Matrix::Ones(4, 200), 0.1};
    const auto r = measure_rtf(feat, backend, cfg);
    return {r.rtf >= 0.045 && r.rtf <= 0.06 && r.algorithmic_latency == 10 * 0.1,
            fmt("rtf %.4f over %zu chunks, algorithmic latency %.17g s, actual latency %.3f s", r.rtf, r.n_chunks,
                r.algorithmic_latency, r.actual_latency)};
}

// ─── 9 ───────────────────────────────────────────────────────────────────────

Outcome vct_sampler() {
    const auto sizes = vct_chunk_boundaries(4'000'000, {50, 500, 9});
    std::vector<double> counts(451, 0.0);
    for (std::size_t i = 0; i < 10000; ++i) counts[static_cast<std::size_t>(sizes.at(i) - 50)] += 1;
    const double expected = 10000.0 / 451.0;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(450), chi2));

    std::mt19937_64 rng(9);
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const long t = std::uniform_int_distribution<long>(1, 50000)(rng);
        const auto part = vct_chunk_boundaries(t, {50, 500, static_cast<std::uint64_t>(trial)});
        bool ok = std::accumulate(part.begin(), part.end(), 0L) == t;
        for (std::size_t i = 0; i + 1 < part.size(); ++i) ok = ok && part[i] >= 50 && part[i] <= 500;
        ok = ok && !part.empty() && part.back() >= 1 && part.back() <= 500;
        bad += !ok;
    }
    return {p > 0.001 && bad == 0, fmt("chi2 %.1f on 450 df, p = %.3f; partition failures %d/1000", chi2, p, bad)};
}

// ─── 10 ──────────────────────────────────────────────────────────────────────

template <class M> bool same_as_f32(const M &loaded, const M &original) {
    return loaded.rows() == original.rows() && loaded.cols() == original.cols() &&
           loaded == original.template cast<float>().template cast<double>();
}

bool same_linear(const Linear &a, const Linear &b) { return same_as_f32(a.weight, b.weight) && same_as_f32(a.bias, b.bias); }
bool same_norm(const LayerNormParams &a, const LayerNormParams &b) { return same_as_f32(a.gain, b.gain) && same_as_f32(a.bias, b.bias); }

bool same_weights(const EncoderWeights &loaded, const EncoderWeights &original) {
    bool ok = same_linear(loaded.input, original.input) && same_norm(loaded.final_norm, original.final_norm) &&
              same_linear(loaded.output, original.output) && loaded.blocks.size() == original.blocks.size();
    for (std::size_t b = 0; ok && b < loaded.blocks.size(); ++b) {
        const auto &x = loaded.blocks[b], &y = original.blocks[b];
        ok = same_norm(x.attn_norm, y.attn_norm) && same_linear(x.query, y.query) && same_linear(x.key, y.key) &&
             same_linear(x.value, y.value) && same_linear(x.output, y.output) && same_norm(x.ff_norm, y.ff_norm) &&
             same_linear(x.ff1, y.ff1) && same_linear(x.ff2, y.ff2);
    }
    return ok;
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome weight_container() {
    const auto dir = std::filesystem::temp_directory_path() / "streamdiar_acceptance";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(10);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        EncoderConfig cfg;
        cfg.n_heads = pick(1, 4);
        cfg.d_model = cfg.n_heads * pick(1, 8);
        cfg.input_dim = pick(1, 20);
        cfg.d_ff = pick(1, 40);
        cfg.n_blocks = pick(1, 4);
        cfg.n_speakers = pick(1, 4);
        cfg.use_residual = pick(0, 1) == 1;
        cfg.use_positional_encoding = pick(0, 1) == 1;
        // Stored as f32: loaded values must equal the f32-rounded originals bit for bit.
        const auto w = EncoderWeights::random(cfg, 100 + trial);
        save_weights(dir / "a.eendw", cfg, w);
        const auto loaded = load_weights(dir / "a.eendw");
        save_weights(dir / "b.eendw", loaded.config, loaded.weights);
        bad += !(loaded.config == cfg) || !same_weights(loaded.weights, w) ||
               slurp(dir / "a.eendw") != slurp(dir / "b.eendw");
    }

    EncoderConfig cfg;
    cfg.input_dim = 4;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.d_ff = 8;
    cfg.n_blocks = 1;
    save_weights(dir / "good.eendw", cfg, EncoderWeights::random(cfg, 1));
    auto bytes = slurp(dir / "good.eendw");
    bytes[0] = 'X';
    std::ofstream(dir / "magic.eendw", std::ios::binary) << bytes;
    bool magic = false;
    try {
        load_weights(dir / "magic.eendw");
    } catch (const CorruptWeightsError &) {
    } catch (const FormatError &) {
        magic = true;
    }

    auto file = read_tensor_file(dir / "good.eendw");
    file.tensors.at("blocks.0.attn.query.weight").values[2] = std::numeric_limits<float>::quiet_NaN();
    write_tensor_file(dir / "nan.eendw", file);
    bool nan = false;
    try {
        load_weights(dir / "nan.eendw");
    } catch (const CorruptWeightsError &) {
        nan = true;
    }
    std::filesystem::remove_all(dir);
    return {bad == 0 && magic && nan,
            fmt("%d/100 round trips differ; bad magic -> FormatError %s; NaN -> CorruptWeightsError %s", bad,
                magic ? "yes" : "no", nan ? "yes" : "no")};
}

} // namespace

int main() {
    const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
        {"scrambled backend vs tracing buffer", scrambled_backend_and_buffer},
        {"DER trends over l_max and chunk size", trends_over_buffer_and_chunk_size},
        {"correlation and permutation search exactness", correlation_and_permutation_search},
        {"DER scorer", scorer},
        {"encoder forward pass", forward_pass},
        {"buffer selection strategies", selection_strategies},
        {"zero-noise end-to-end recovery", zero_noise_recovery},
        {"RTF harness", rtf_harness},
        {"variable chunk size sampler", vct_sampler},
        {"weight container", weight_container},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %2zu %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
