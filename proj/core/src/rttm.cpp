#include "streamdiar/rttm.hpp"

#include "streamdiar/error.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace streamdiar {

std::string format_rttm_line(const RttmSegment &seg) {
    char times[64];
    std::snprintf(times, sizeof(times), "%.2f %.2f", seg.onset, seg.duration);
    return "SPEAKER " + seg.recording_id + " 1 " + times + " <NA> <NA> " + seg.speaker + " <NA> <NA>";
}

void write_rttm(std::ostream &out, const std::vector<RttmSegment> &segments) {
    for (const auto &seg : segments) out << format_rttm_line(seg) << '\n';
}

void write_rttm(const std::filesystem::path &path, const std::vector<RttmSegment> &segments) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot write " + path.string());
    write_rttm(out, segments);
}

namespace {

double parse_seconds(const std::string &field, std::size_t line, const char *what) {
    double v = 0.0;
    const auto *end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ParseError(line, std::string("bad ") + what + " '" + field + "'");
    }
    return v;
}

} // namespace

std::vector<RttmSegment> read_rttm(std::istream &in) {
    std::vector<RttmSegment> out;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        std::istringstream fields(text);
        std::vector<std::string> tok;
        for (std::string f; fields >> f;) tok.push_back(f);
        if (tok.empty() || tok[0].starts_with("#")) continue;
        if (tok[0] != "SPEAKER") {
            if (std::all_of(tok[0].begin(), tok[0].end(), [](unsigned char c) { return c == '-' || std::isupper(c); })) {
                continue;
            }
            throw ParseError(line_no, "unknown record type '" + tok[0] + "'");
        }
        if (tok.size() < 8) throw ParseError(line_no, "SPEAKER line needs at least 8 fields");

        RttmSegment seg;
        seg.recording_id = tok[1];
        seg.onset = parse_seconds(tok[3], line_no, "onset");
        seg.duration = parse_seconds(tok[4], line_no, "duration");
        seg.speaker = tok[7];
        if (seg.onset < 0.0) throw ParseError(line_no, "negative onset");
        if (seg.duration < 0.0) throw ParseError(line_no, "negative duration");
        out.push_back(std::move(seg));
    }
    return out;
}

std::vector<RttmSegment> read_rttm(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open " + path.string());
    return read_rttm(in);
}

std::string speaker_label(Eigen::Index s) { return "spk" + std::to_string(s + 1); }

std::vector<RttmSegment> labels_to_rttm(const LabelMatrix &labels, const std::string &recording_id) {
    struct Run {
        Eigen::Index start, length, speaker;
    };
    std::vector<Run> runs;
    for (Eigen::Index s = 0; s < labels.n_speakers(); ++s) {
        Eigen::Index t = 0;
        while (t < labels.n_frames()) {
            if (!labels.data(s, t)) {
                ++t;
                continue;
            }
            const Eigen::Index start = t;
            while (t < labels.n_frames() && labels.data(s, t)) ++t;
            runs.push_back({start, t - start, s});
        }
    }
    std::stable_sort(runs.begin(), runs.end(), [](const Run &a, const Run &b) { return a.start < b.start; });

    std::vector<RttmSegment> out;
    out.reserve(runs.size());
    for (const auto &r : runs) {
        out.push_back({recording_id, static_cast<double>(r.start) * labels.frame_stride,
                       static_cast<double>(r.length) * labels.frame_stride, speaker_label(r.speaker)});
    }
    return out;
}

LabelMatrix rttm_to_labels(const std::vector<RttmSegment> &segments, const std::vector<std::string> &speakers,
                           Eigen::Index n_frames, double frame_stride) {
    LabelMatrix labels;
    labels.frame_stride = frame_stride;
    labels.data.setZero(static_cast<Eigen::Index>(speakers.size()), n_frames);
    for (const auto &seg : segments) {
        const auto it = std::find(speakers.begin(), speakers.end(), seg.speaker);
        if (it == speakers.end()) continue;
        const auto s = static_cast<Eigen::Index>(it - speakers.begin());
        const auto first = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(seg.onset / frame_stride) - 1);
        const auto last = std::min<Eigen::Index>(n_frames, static_cast<Eigen::Index>(seg.end() / frame_stride) + 2);
        for (Eigen::Index t = first; t < last; ++t) {
            const double center = (static_cast<double>(t) + 0.5) * frame_stride;
            if (center >= seg.onset && center < seg.end()) labels.data(s, t) = 1;
        }
    }
    return labels;
}

} // namespace streamdiar
