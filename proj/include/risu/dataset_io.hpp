#pragma once

#include <cstdint>
#include <filesystem>

#include "risu/experiments.hpp"

namespace risu {

/// Lifted dataset dump, little-endian:
///
///   "RISD" | version u32 | D u32 | n u32 | gram D*D f64 row-major |
///   per sample: snr_db f64, stat D f64, truth D f64
///
/// Raw complex observations are not stored; they are recoverable from the
/// config and seed.
inline constexpr std::uint32_t kDatasetVersion = 1;

void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Reads back gram, stats, truths and snr_db. Noise variances are
/// recomputed from snr_db; channels and observations stay empty.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace risu
