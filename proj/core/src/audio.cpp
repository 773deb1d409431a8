#include "streamdiar/audio.hpp"

#include "streamdiar/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace streamdiar {

namespace {

std::uint32_t read_u32(const unsigned char *p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char *p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string &out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

} // namespace

AudioBuffer read_wav(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open audio file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError("not a RIFF/WAVE file: " + path.string());
    }

    AudioBuffer audio;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char *chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) throw FormatError("truncated WAV chunk");

        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw FormatError("short fmt chunk");
            const auto format = read_u16(bytes.data() + body);
            const auto channels = read_u16(bytes.data() + body + 2);
            const auto rate = read_u32(bytes.data() + body + 4);
            const auto bits = read_u16(bytes.data() + body + 14);
            if (format != 1 || bits != 16) throw FormatError("only 16-bit PCM is supported");
            if (channels != 1) throw FormatError("only mono audio is supported");
            audio.sample_rate = static_cast<int>(rate);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("data chunk before fmt chunk");
            const std::size_t n = size / 2;
            audio.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                audio.samples[i] =
                    static_cast<float>(static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i)));
            }
            return audio;
        }
        pos = body + size + (size & 1u);
    }
    throw FormatError("WAV file has no data chunk");
}

void write_wav(const std::filesystem::path &path, const AudioBuffer &audio) {
    const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    put_u32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out += "data";
    put_u32(out, data_bytes);
    for (float s : audio.samples) {
        const float clipped = std::clamp(std::round(s), -32768.0f, 32767.0f);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(clipped)));
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInputError("cannot write audio file: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

} // namespace streamdiar
