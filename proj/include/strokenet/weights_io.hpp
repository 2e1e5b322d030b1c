#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "strokenet/neural.hpp"

namespace strokenet::nn {

// Binary layout, all integers little-endian:
//   "SSNW" | version u32 | array count u32 |
//   per array: name length u32, UTF-8 name, dtype u8 (1 = f32, 2 = f64),
//              rank u32, dims u64 * rank, row-major data.
inline constexpr std::uint32_t kWeightsVersion = 1;

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

std::vector<std::uint8_t> encode_weights(const ModelParams& params, DType dtype = DType::F64);
ModelParams decode_weights(const std::vector<std::uint8_t>& bytes);

void save_weights(const std::filesystem::path& path, const ModelParams& params,
                  DType dtype = DType::F64);
ModelParams load_weights(const std::filesystem::path& path);

/// Debug mirror: {"format":"SSNW","version":1,"arrays":[{name,dtype,dims,data}]}.
std::string weights_to_json(const ModelParams& params, DType dtype = DType::F64);
ModelParams weights_from_json(const std::string& text);

}  // namespace strokenet::nn
