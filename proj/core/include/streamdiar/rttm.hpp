#pragma once

#include "streamdiar/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace streamdiar {

struct RttmSegment {
    std::string recording_id;
    double onset = 0.0;     // seconds
    double duration = 0.0;  // seconds
    std::string speaker;

    double end() const { return onset + duration; }
    bool operator==(const RttmSegment &) const = default;
};

// `SPEAKER <rec> 1 <onset> <dur> <NA> <NA> <spk> <NA> <NA>`, onset and
// duration printed with two decimals.
std::string format_rttm_line(const RttmSegment &seg);
void write_rttm(std::ostream &out, const std::vector<RttmSegment> &segments);
void write_rttm(const std::filesystem::path &path, const std::vector<RttmSegment> &segments);

// Parses SPEAKER lines; blank lines and lines starting with '#' are skipped,
// other record types (SPKR-INFO, ...) are ignored. Throws ParseError with the
// line number on malformed SPEAKER lines.
std::vector<RttmSegment> read_rttm(std::istream &in);
std::vector<RttmSegment> read_rttm(const std::filesystem::path &path);

// Default speaker label for label-matrix row s: "spk<s+1>".
std::string speaker_label(Eigen::Index s);

// Maximal runs of active frames per speaker become segments, emitted in
// onset order (ties by speaker row).
std::vector<RttmSegment> labels_to_rttm(const LabelMatrix &labels, const std::string &recording_id);

// Rasterizes segments onto a frame grid: frame t of speaker row s is active
// when its center lies inside a segment of speakers[s].
LabelMatrix rttm_to_labels(const std::vector<RttmSegment> &segments,
                           const std::vector<std::string> &speakers, Eigen::Index n_frames,
                           double frame_stride);

} // namespace streamdiar
