#pragma once

#include "risu/rng.hpp"
#include "risu/types.hpp"

namespace risu {

/// Closed interval of admissible angle sines.
struct SineRange {
  double lower = 0.0;
  double upper = 1.0;

  bool operator==(const SineRange&) const = default;
};

/// Geometric channel parameters for the RIS->BS and MS->RIS hops.
struct ChannelConfig {
  Index M = 8;   // BS antennas
  Index N = 16;  // RIS elements
  Index L1 = 1;  // RIS->BS paths
  Index L2 = 1;  // MS->RIS paths
  double var_los = 1.0;
  double var_nlos = 0.01;
  SineRange angle_sine_range{};

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  bool operator==(const ChannelConfig&) const = default;
};

enum class Hop { RisToBs = 1, MsToRis = 2 };

/// Multipath parameters of one hop. Entry 0 is the LoS path.
/// For the MS->RIS hop `aod_sines` is empty.
struct PathSet {
  CVector gains;
  RVector aod_sines;  // RIS-side departure sines (hop 1 only)
  RVector aoa_sines;  // arrival sines: BS side for hop 1, RIS side for hop 2

  Index size() const { return gains.size(); }
};

/// H_c = H1 diag(h2) together with its column-major vectorization.
struct CascadedChannel {
  CMatrix matrix;
  CVector vector;
};

/// Half-wavelength ULA response: entry m is exp(j pi m sine).
CVector steering_vector(double sine, Index n_elems);

/// Columns are steering vectors for each sine.
CMatrix steering_matrix(const RVector& sines, Index n_elems);

/// Draws gains and sines for one hop. Gains are drawn first (LoS then NLoS),
/// then arrival sines, then departure sines.
PathSet draw_paths(const ChannelConfig& cfg, Hop hop, Rng& rng);

/// A(phi) diag(g) A(theta)^H.
CMatrix assemble_h1(const PathSet& paths, Index M, Index N);

/// A(phi) g.
CVector assemble_h2(const PathSet& paths, Index N);

CascadedChannel cascade(const CMatrix& h1, const CVector& h2);

/// One full realization: draws hop 1, hop 2 and cascades them.
CascadedChannel draw_cascaded_channel(const ChannelConfig& cfg, Rng& rng);

CVector vectorize(const CMatrix& m);
CMatrix unvectorize(const CVector& v, Index rows, Index cols);

}  // namespace risu
