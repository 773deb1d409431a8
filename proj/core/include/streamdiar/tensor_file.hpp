#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace streamdiar {

// On-disk layout (all integers little-endian):
//
//   "EENDW"            5 bytes magic
//   u8                 version (= 1)
//   u64                metadata length in bytes
//   metadata           UTF-8 JSON object: tensor name -> {"shape": [...],
//                      "dtype": "f32le", "byte_offset": n}; the reserved key
//                      "__metadata__" maps to a string->string attribute table
//   data               raw f32le values, offsets relative to the data start
//
// Tensors are laid out in name order, so serialization is canonical: the same
// TensorFile always produces the same bytes.

inline constexpr std::string_view kTensorFileMagic = "EENDW";
inline constexpr std::uint8_t kTensorFileVersion = 1;

struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<float> values;  // row-major

    std::int64_t numel() const;
};

struct TensorFile {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> attributes;
};

std::string serialize_tensor_file(const TensorFile &file);
// Throws FormatError on bad magic/version, malformed metadata or truncation.
TensorFile parse_tensor_file(std::string_view bytes);

void write_tensor_file(const std::filesystem::path &path, const TensorFile &file);
// Throws InvalidInputError if the file cannot be read, FormatError otherwise.
TensorFile read_tensor_file(const std::filesystem::path &path);

} // namespace streamdiar
