#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "risu/types.hpp"

namespace risu {

using Rng = std::mt19937_64;

/// Derives an independent sub-stream seed from a master seed and a label.
/// Adding a new label never perturbs the seeds of existing labels.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

inline Rng make_rng(std::uint64_t master, std::string_view label) {
  return Rng(derive_seed(master, label));
}

/// Circularly-symmetric complex Gaussian CN(0, variance): real and imaginary
/// parts i.i.d. N(0, variance / 2).
Complex complex_gaussian(Rng& rng, double variance);

}  // namespace risu
