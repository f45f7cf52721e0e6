#include "risu/channel_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace risu {

void ChannelConfig::validate() const {
  if (M <= 0) throw ConfigError("channel.M must be positive");
  if (N <= 0) throw ConfigError("channel.N must be positive");
  if (L1 <= 0) throw ConfigError("channel.L1 must be positive");
  if (L2 <= 0) throw ConfigError("channel.L2 must be positive");
  if (L1 > std::min(M, N)) throw ConfigError("channel.L1 must not exceed min(M, N)");
  if (L2 > N) throw ConfigError("channel.L2 must not exceed N");
  if (!(var_los > 0.0)) throw ConfigError("channel.var_los must be > 0");
  if (!(var_nlos >= 0.0)) throw ConfigError("channel.var_nlos must be >= 0");
  const auto& r = angle_sine_range;
  if (!(r.lower >= -1.0 && r.upper <= 1.0))
    throw ConfigError("channel.angle_sine_range must lie within [-1, 1]");
  if (!(r.lower <= r.upper)) throw ConfigError("channel.angle_sine_range lower exceeds upper");
}

CVector steering_vector(double sine, Index n_elems) {
  CVector v(n_elems);
  for (Index m = 0; m < n_elems; ++m) {
    v(m) = std::polar(1.0, std::numbers::pi * static_cast<double>(m) * sine);
  }
  v(0) = Complex(1.0, 0.0);
  return v;
}

CMatrix steering_matrix(const RVector& sines, Index n_elems) {
  CMatrix a(n_elems, sines.size());
  for (Index i = 0; i < sines.size(); ++i) a.col(i) = steering_vector(sines(i), n_elems);
  return a;
}

PathSet draw_paths(const ChannelConfig& cfg, Hop hop, Rng& rng) {
  const Index count = hop == Hop::RisToBs ? cfg.L1 : cfg.L2;
  std::uniform_real_distribution<double> sine_dist(cfg.angle_sine_range.lower,
                                                   cfg.angle_sine_range.upper);
  PathSet paths;
  paths.gains.resize(count);
  paths.gains(0) = complex_gaussian(rng, cfg.var_los);
  for (Index i = 1; i < count; ++i) paths.gains(i) = complex_gaussian(rng, cfg.var_nlos);

  auto draw_sines = [&] {
    RVector s(count);
    for (Index i = 0; i < count; ++i) {
      // uniform_real_distribution is half-open; a degenerate range yields the endpoint.
      s(i) = cfg.angle_sine_range.lower == cfg.angle_sine_range.upper ? cfg.angle_sine_range.lower
                                                                       : sine_dist(rng);
    }
    return s;
  };
  paths.aoa_sines = draw_sines();
  if (hop == Hop::RisToBs) paths.aod_sines = draw_sines();
  return paths;
}

CMatrix assemble_h1(const PathSet& paths, Index M, Index N) {
  require_dims(paths.aoa_sines.size() == paths.size() && paths.aod_sines.size() == paths.size(),
               "assemble_h1: path set needs one arrival and one departure sine per gain");
  require_dims(M > 0 && N > 0, "assemble_h1: M and N must be positive");
  const CMatrix a_bs = steering_matrix(paths.aoa_sines, M);
  const CMatrix a_ris = steering_matrix(paths.aod_sines, N);
  return a_bs * paths.gains.asDiagonal() * a_ris.adjoint();
}

CVector assemble_h2(const PathSet& paths, Index N) {
  require_dims(paths.aoa_sines.size() == paths.size(),
               "assemble_h2: path set needs one arrival sine per gain");
  require_dims(N > 0, "assemble_h2: N must be positive");
  return steering_matrix(paths.aoa_sines, N) * paths.gains;
}

CascadedChannel cascade(const CMatrix& h1, const CVector& h2) {
  require_dims(h1.cols() == h2.size(),
               "cascade: H1 has " + std::to_string(h1.cols()) + " columns but h2 has " +
                   std::to_string(h2.size()) + " entries");
  CascadedChannel out;
  out.matrix = h1 * h2.asDiagonal();
  out.vector = vectorize(out.matrix);
  return out;
}

CascadedChannel draw_cascaded_channel(const ChannelConfig& cfg, Rng& rng) {
  const PathSet hop1 = draw_paths(cfg, Hop::RisToBs, rng);
  const PathSet hop2 = draw_paths(cfg, Hop::MsToRis, rng);
  return cascade(assemble_h1(hop1, cfg.M, cfg.N), assemble_h2(hop2, cfg.N));
}

CVector vectorize(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix unvectorize(const CVector& v, Index rows, Index cols) {
  require_dims(rows * cols == v.size(), "unvectorize: size mismatch");
  return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

}  // namespace risu
