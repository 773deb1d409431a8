#include "streamdiar/scoring.hpp"

#include "streamdiar/assignment.hpp"
#include "streamdiar/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

namespace streamdiar {

namespace {

// Per-window accumulators. Mapping-independent parts are summed directly;
// confusion needs the overlap matrix and the optimal speaker mapping.
struct WindowStats {
    Matrix overlap;        // ref speaker × hyp speaker, scored seconds
    double missed = 0.0;
    double false_alarm = 0.0;
    double min_sum = 0.0;  // Σ min(N_ref, N_hyp) · dt
    double scored = 0.0;   // Σ N_ref · dt
};

enum class EventKind { Window, RefOn, RefOff, HypOn, HypOff, CollarOn, CollarOff };

struct Event {
    double time;
    EventKind kind;
    int index;
};

std::map<std::string, int> index_speakers(const std::vector<RttmSegment> &segs) {
    std::map<std::string, int> ids;
    for (const auto &s : segs) ids.emplace(s.speaker, 0);
    int i = 0;
    for (auto &[name, id] : ids) id = i++;
    return ids;
}

// Sweeps the timeline once. `edges` are interior window boundaries (sorted);
// window w covers [edges[w-1], edges[w]).
std::vector<WindowStats> score_windows(const std::vector<RttmSegment> &ref, const std::vector<RttmSegment> &hyp,
                                       double collar, const std::vector<double> &edges) {
    const auto ref_ids = index_speakers(ref);
    const auto hyp_ids = index_speakers(hyp);
    const auto n_ref = static_cast<Eigen::Index>(ref_ids.size());
    const auto n_hyp = static_cast<Eigen::Index>(hyp_ids.size());

    std::vector<Event> events;
    events.reserve(2 * (ref.size() * 2 + hyp.size()) + edges.size());
    for (double e : edges) events.push_back({e, EventKind::Window, 0});
    for (const auto &s : ref) {
        if (s.duration <= 0.0) continue;
        const int id = ref_ids.at(s.speaker);
        events.push_back({s.onset, EventKind::RefOn, id});
        events.push_back({s.end(), EventKind::RefOff, id});
        if (collar > 0.0) {
            for (double b : {s.onset, s.end()}) {
                events.push_back({b - collar, EventKind::CollarOn, 0});
                events.push_back({b + collar, EventKind::CollarOff, 0});
            }
        }
    }
    for (const auto &s : hyp) {
        if (s.duration <= 0.0) continue;
        const int id = hyp_ids.at(s.speaker);
        events.push_back({s.onset, EventKind::HypOn, id});
        events.push_back({s.end(), EventKind::HypOff, id});
    }
    std::sort(events.begin(), events.end(), [](const Event &a, const Event &b) { return a.time < b.time; });

    std::vector<WindowStats> windows(edges.size() + 1);
    for (auto &w : windows) w.overlap = Matrix::Zero(n_ref, n_hyp);

    std::vector<int> ref_count(static_cast<std::size_t>(n_ref), 0), hyp_count(static_cast<std::size_t>(n_hyp), 0);
    int active_ref = 0, active_hyp = 0, collar_depth = 0;
    std::size_t window = 0;
    double prev = events.empty() ? 0.0 : events.front().time;

    for (std::size_t i = 0; i < events.size();) {
        const double t = events[i].time;
        const double dt = t - prev;
        if (dt > 0.0 && collar_depth == 0 && (active_ref > 0 || active_hyp > 0)) {
            WindowStats &w = windows[window];
            w.missed += std::max(0, active_ref - active_hyp) * dt;
            w.false_alarm += std::max(0, active_hyp - active_ref) * dt;
            w.min_sum += std::min(active_ref, active_hyp) * dt;
            w.scored += active_ref * dt;
            for (Eigen::Index r = 0; r < n_ref; ++r) {
                if (!ref_count[static_cast<std::size_t>(r)]) continue;
                for (Eigen::Index h = 0; h < n_hyp; ++h) {
                    if (hyp_count[static_cast<std::size_t>(h)]) w.overlap(r, h) += dt;
                }
            }
        }
        for (; i < events.size() && events[i].time == t; ++i) {
            const Event &e = events[i];
            const auto k = static_cast<std::size_t>(e.index);
            switch (e.kind) {
            case EventKind::Window: ++window; break;
            case EventKind::RefOn: active_ref += (ref_count[k]++ == 0); break;
            case EventKind::RefOff: active_ref -= (--ref_count[k] == 0); break;
            case EventKind::HypOn: active_hyp += (hyp_count[k]++ == 0); break;
            case EventKind::HypOff: active_hyp -= (--hyp_count[k] == 0); break;
            case EventKind::CollarOn: ++collar_depth; break;
            case EventKind::CollarOff: --collar_depth; break;
            }
        }
        prev = t;
    }
    return windows;
}

DerReport finalize(const std::vector<WindowStats> &windows, double collar, double time_scale) {
    DerReport r;
    r.collar = collar;
    for (const auto &w : windows) {
        r.missed += w.missed;
        r.false_alarm += w.false_alarm;
        r.scored_speech += w.scored;
        const double correct = w.overlap.size() ? assignment_gain(w.overlap, optimal_assignment(w.overlap)) : 0.0;
        r.confusion += std::max(0.0, w.min_sum - correct);
    }
    r.missed *= time_scale;
    r.false_alarm *= time_scale;
    r.confusion *= time_scale;
    r.scored_speech *= time_scale;
    return accumulate(DerReport{.collar = collar}, r);
}

void check_collar(double collar) {
    if (!(collar >= 0.0)) throw ConfigError("collar must be non-negative");
}

// Segments on an integer frame grid (stride 1) so window edges and collars
// line up exactly; results are scaled back to seconds by the caller.
DerReport score_label_matrices(const LabelMatrix &ref, const LabelMatrix &hyp, double collar, int chunk_size) {
    check_collar(collar);
    if (ref.n_frames() != hyp.n_frames()) {
        throw ShapeError("reference has " + std::to_string(ref.n_frames()) + " frames, hypothesis " +
                         std::to_string(hyp.n_frames()));
    }
    if (!(ref.frame_stride > 0.0)) throw ConfigError("frame_stride must be positive");
    const double stride = ref.frame_stride;

    LabelMatrix ref_frames{ref.data, 1.0}, hyp_frames{hyp.data, 1.0};
    std::vector<double> edges;
    if (chunk_size > 0) {
        for (Eigen::Index e = chunk_size; e < ref.n_frames(); e += chunk_size) edges.push_back(static_cast<double>(e));
    }
    const auto windows = score_windows(labels_to_rttm(ref_frames, "rec"), labels_to_rttm(hyp_frames, "rec"),
                                       collar / stride, edges);
    return finalize(windows, collar, stride);
}

} // namespace

DerReport accumulate(const DerReport &a, const DerReport &b) {
    DerReport r = a;
    r.missed += b.missed;
    r.false_alarm += b.false_alarm;
    r.confusion += b.confusion;
    r.scored_speech += b.scored_speech;
    r.no_scored_speech = !(r.scored_speech > 0.0);
    r.der = r.no_scored_speech ? 0.0 : r.error_seconds() / r.scored_speech;
    return r;
}

DerReport compute_der(const std::vector<RttmSegment> &ref, const std::vector<RttmSegment> &hyp, double collar) {
    check_collar(collar);
    std::set<std::string> recordings;
    for (const auto &s : ref) recordings.insert(s.recording_id);
    for (const auto &s : hyp) recordings.insert(s.recording_id);

    DerReport total{.collar = collar};
    for (const auto &rec : recordings) {
        std::vector<RttmSegment> r, h;
        std::copy_if(ref.begin(), ref.end(), std::back_inserter(r), [&](const auto &s) { return s.recording_id == rec; });
        std::copy_if(hyp.begin(), hyp.end(), std::back_inserter(h), [&](const auto &s) { return s.recording_id == rec; });
        total = accumulate(total, finalize(score_windows(r, h, collar, {}), collar, 1.0));
    }
    return accumulate(total, DerReport{});
}

DerReport recording_wise_der(const LabelMatrix &ref, const LabelMatrix &hyp, double collar) {
    return score_label_matrices(ref, hyp, collar, 0);
}

DerReport chunk_wise_oracle_der(const LabelMatrix &ref, const LabelMatrix &hyp, int chunk_size, double collar) {
    if (chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
    return score_label_matrices(ref, hyp, collar, chunk_size);
}

std::string DerReport::to_text() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "missed=%.3f\nfalse_alarm=%.3f\nconfusion=%.3f\nscored_speech=%.3f\nder=%.4f\ncollar=%.2f\n",
                  missed, false_alarm, confusion, scored_speech, der, collar);
    std::string out(buf);
    if (no_scored_speech) out += "warning=no_scored_speech\n";
    return out;
}

std::string DerReport::to_json() const {
    nlohmann::json j = {{"missed", missed},
                        {"false_alarm", false_alarm},
                        {"confusion", confusion},
                        {"scored_speech", scored_speech},
                        {"der", der},
                        {"collar", collar},
                        {"no_scored_speech", no_scored_speech}};
    return j.dump();
}

} // namespace streamdiar
