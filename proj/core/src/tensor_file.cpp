#include "streamdiar/tensor_file.hpp"

#include "streamdiar/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace streamdiar {

using nlohmann::json;

namespace {

constexpr std::size_t kHeaderSize = 5 + 1 + 8;
constexpr const char *kAttributesKey = "__metadata__";

void put_u64(std::string &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const char *p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
}

} // namespace

std::int64_t Tensor::numel() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string serialize_tensor_file(const TensorFile &file) {
    json meta = json::object();
    if (!file.attributes.empty()) {
        json attrs = json::object();
        for (const auto &[k, v] : file.attributes) attrs[k] = v;
        meta[kAttributesKey] = std::move(attrs);
    }

    std::uint64_t offset = 0;
    for (const auto &[name, t] : file.tensors) {
        if (name == kAttributesKey) throw FormatError("reserved tensor name: " + name);
        if (static_cast<std::int64_t>(t.values.size()) != t.numel()) {
            throw FormatError("tensor '" + name + "' value count does not match its shape");
        }
        meta[name] = {{"shape", t.shape}, {"dtype", "f32le"}, {"byte_offset", offset}};
        offset += t.values.size() * 4;
    }

    const std::string meta_text = meta.dump();
    std::string out;
    out.reserve(kHeaderSize + meta_text.size() + offset);
    out.append(kTensorFileMagic);
    out.push_back(static_cast<char>(kTensorFileVersion));
    put_u64(out, meta_text.size());
    out += meta_text;
    for (const auto &[name, t] : file.tensors) {
        for (float v : t.values) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
        }
    }
    return out;
}

TensorFile parse_tensor_file(std::string_view bytes) {
    if (bytes.size() < kHeaderSize) throw FormatError("tensor file truncated in header");
    if (bytes.substr(0, 5) != kTensorFileMagic) throw FormatError("bad magic");
    const auto version = static_cast<std::uint8_t>(bytes[5]);
    if (version != kTensorFileVersion) {
        throw FormatError("unsupported tensor file version " + std::to_string(version));
    }
    const std::uint64_t meta_len = get_u64(bytes.data() + 6);
    if (meta_len > bytes.size() - kHeaderSize) throw FormatError("tensor file truncated in metadata");

    json meta;
    try {
        meta = json::parse(bytes.substr(kHeaderSize, meta_len));
    } catch (const json::exception &e) {
        throw FormatError(std::string("malformed metadata: ") + e.what());
    }
    if (!meta.is_object()) throw FormatError("metadata is not an object");

    const std::string_view data = bytes.substr(kHeaderSize + meta_len);
    TensorFile file;
    try {
        for (const auto &[name, entry] : meta.items()) {
            if (name == kAttributesKey) {
                for (const auto &[k, v] : entry.items()) file.attributes[k] = v.get<std::string>();
                continue;
            }
            if (entry.at("dtype").get<std::string>() != "f32le") {
                throw FormatError("tensor '" + name + "' has unsupported dtype");
            }
            Tensor t;
            t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
            for (auto d : t.shape) {
                if (d < 0) throw FormatError("tensor '" + name + "' has a negative dimension");
            }
            const auto offset = entry.at("byte_offset").get<std::uint64_t>();
            const auto n = static_cast<std::uint64_t>(t.numel());
            if (offset > data.size() || n * 4 > data.size() - offset) {
                throw FormatError("tensor '" + name + "' runs past the end of the file");
            }
            t.values.resize(n);
            const char *p = data.data() + offset;
            for (std::uint64_t i = 0; i < n; ++i, p += 4) {
                std::uint32_t bits = 0;
                for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(p[b]);
                t.values[i] = std::bit_cast<float>(bits);
            }
            file.tensors.emplace(name, std::move(t));
        }
    } catch (const json::exception &e) {
        throw FormatError(std::string("malformed tensor entry: ") + e.what());
    }
    return file;
}

void write_tensor_file(const std::filesystem::path &path, const TensorFile &file) {
    const std::string bytes = serialize_tensor_file(file);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TensorFile read_tensor_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_tensor_file(bytes);
}

} // namespace streamdiar
