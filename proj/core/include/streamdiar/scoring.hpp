#pragma once

#include "streamdiar/rttm.hpp"
#include "streamdiar/types.hpp"

#include <string>
#include <vector>

namespace streamdiar {

inline constexpr double kDefaultCollar = 0.25;

struct DerReport {
    double missed = 0.0;         // seconds
    double false_alarm = 0.0;    // seconds
    double confusion = 0.0;      // seconds
    double scored_speech = 0.0;  // reference speaker-seconds, overlap counted per speaker
    double der = 0.0;
    double collar = 0.0;
    // Set when nothing was scored; der is then reported as 0.
    bool no_scored_speech = false;

    double error_seconds() const { return missed + false_alarm + confusion; }

    // "key=value" lines.
    std::string to_text() const;
    std::string to_json() const;
};

// Time-based DER over all speech, overlap included, no oracle speech activity.
// Regions within ±collar of every reference segment onset and offset are not
// scored. Reference and hypothesis speakers are matched one-to-one to
// maximize overlapped time, separately per recording id; components are
// summed over recordings. Throws ConfigError for a negative collar.
DerReport compute_der(const std::vector<RttmSegment> &ref, const std::vector<RttmSegment> &hyp,
                      double collar = kDefaultCollar);

// One global speaker mapping over the whole recording.
// Throws ShapeError when the frame counts differ.
DerReport recording_wise_der(const LabelMatrix &ref, const LabelMatrix &hyp, double collar = kDefaultCollar);

// Same scored regions as recording_wise_der, but the speaker mapping is
// chosen independently inside each chunk of `chunk_size` frames. Never larger
// than recording_wise_der on the same inputs.
DerReport chunk_wise_oracle_der(const LabelMatrix &ref, const LabelMatrix &hyp, int chunk_size,
                                double collar = kDefaultCollar);

// Adds the error components of b to a and recomputes der.
DerReport accumulate(const DerReport &a, const DerReport &b);

} // namespace streamdiar
