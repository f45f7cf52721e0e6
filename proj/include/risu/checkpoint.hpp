#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "risu/unfolding_net.hpp"

namespace risu {

/// Binary network checkpoint, all fields little-endian:
///
///   "RISU" | version u32 | D u32 | L u32 |
///   per layer: delta1 delta2 delta3 f64, weight D*D f64 row-major, bias D f64 |
///   checksum u64
///
/// The checksum is the wrapping sum of every f64 payload value reinterpreted
/// as a u64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_checkpoint(const UnfoldingParams& params);
UnfoldingParams decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const UnfoldingParams& params, const std::filesystem::path& path);
UnfoldingParams load_checkpoint(const std::filesystem::path& path);

}  // namespace risu
