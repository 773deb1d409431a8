#pragma once

#include <filesystem>
#include <vector>

namespace streamdiar {

// Mono audio. Samples hold PCM16-scale values (-32768..32767) as floats so
// that in-memory sources can be validated for non-finite data before use.
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate = 8000;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Reads a RIFF/WAVE file with 16-bit PCM mono data.
// Throws InvalidInputError for unreadable files and FormatError for anything
// that is not PCM16 mono.
AudioBuffer read_wav(const std::filesystem::path &path);

// Writes PCM16 mono. Samples are rounded and clipped to the int16 range.
void write_wav(const std::filesystem::path &path, const AudioBuffer &audio);

} // namespace streamdiar
