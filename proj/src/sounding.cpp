#include "risu/sounding.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace risu {

void SoundingConfig::validate(Index M, Index N) const {
  if (K <= 0) throw ConfigError("sounding.K must be positive");
  if (N_W <= 0) throw ConfigError("sounding.N_W must be positive");
  if (K > N)
    throw ConfigError("sounding.K = " + std::to_string(K) + " exceeds N = " + std::to_string(N));
  if (N_W > M)
    throw ConfigError("sounding.N_W = " + std::to_string(N_W) + " exceeds M = " +
                      std::to_string(M));
  if (std::isnan(snr_db)) throw ConfigError("sounding.snr_db is NaN");
}

double noise_variance(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

namespace {

CMatrix dft_columns(Index size, Index count) {
  CMatrix f(size, count);
  for (Index k = 0; k < count; ++k) {
    for (Index n = 0; n < size; ++n) {
      // Reduce n*k mod size first so the phase argument stays small and exact
      // for the quarter-turn entries.
      const auto r = static_cast<double>((n * k) % size);
      f(n, k) = std::polar(1.0, -2.0 * std::numbers::pi * r / static_cast<double>(size));
    }
  }
  return f;
}

}  // namespace

CMatrix build_phase_schedule(Index N, Index K) {
  if (K > N || K <= 0 || N <= 0)
    throw DimensionError("build_phase_schedule: need 0 < K <= N, got K = " + std::to_string(K) +
                         ", N = " + std::to_string(N));
  return dft_columns(N, K);
}

CMatrix build_combiner(Index M, Index N_W) {
  if (N_W > M || N_W <= 0 || M <= 0)
    throw DimensionError("build_combiner: need 0 < N_W <= M, got N_W = " + std::to_string(N_W) +
                         ", M = " + std::to_string(M));
  return dft_columns(M, N_W) / std::sqrt(static_cast<double>(M));
}

RMatrix lift(const CMatrix& a) {
  const Index r = a.rows();
  const Index c = a.cols();
  RMatrix out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = a.real();
  out.topRightCorner(r, c) = -a.imag();
  out.bottomLeftCorner(r, c) = a.imag();
  out.bottomRightCorner(r, c) = a.real();
  return out;
}

RVector lift(const CVector& x) {
  RVector out(2 * x.size());
  out << x.real(), x.imag();
  return out;
}

CVector unlift(const RVector& x) {
  require_dims(x.size() % 2 == 0, "unlift: odd-length real vector");
  const Index n = x.size() / 2;
  CVector out(n);
  out.real() = x.head(n);
  out.imag() = x.tail(n);
  return out;
}

MeasurementModel MeasurementModel::build(const CMatrix& phase_schedule, const CMatrix& combiner) {
  require_dims(phase_schedule.size() > 0 && combiner.size() > 0,
               "MeasurementModel: empty phase schedule or combiner");
  MeasurementModel m;
  m.phase_schedule_ = phase_schedule;
  m.combiner_ = combiner;

  const Index N = phase_schedule.rows();
  const Index K = phase_schedule.cols();
  const Index M = combiner.rows();
  const Index NW = combiner.cols();
  const CMatrix wh = combiner.adjoint();

  // Omega^T kron W^H: block (k, n) is Omega(n, k) * W^H.
  m.psi_.resize(K * NW, N * M);
  for (Index k = 0; k < K; ++k) {
    for (Index n = 0; n < N; ++n) {
      m.psi_.block(k * NW, n * M, NW, M) = phase_schedule(n, k) * wh;
    }
  }
  m.gram_ = m.psi_.adjoint() * m.psi_;
  m.psi_real_ = lift(m.psi_);
  m.gram_real_ = m.psi_real_.transpose() * m.psi_real_;

  Eigen::BDCSVD<CMatrix> svd(m.psi_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double s1 = s.size() > 0 ? s(0) : 0.0;
  RVector s_inv = RVector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-10 * s1) s_inv(i) = 1.0 / s(i);
  }
  m.pinv_ = svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().adjoint();
  m.spectral_norm_sq_ = s1 * s1;
  return m;
}

MeasurementModel MeasurementModel::build(Index M, Index N, const SoundingConfig& cfg) {
  cfg.validate(M, N);
  return build(build_phase_schedule(N, cfg.K), build_combiner(M, cfg.N_W));
}

Observation make_observation(const MeasurementModel& model, CVector y, double noise_var) {
  require_dims(y.size() == model.rows(), "observation length does not match Psi rows");
  Observation obs;
  obs.y = std::move(y);
  obs.y_real = lift(obs.y);
  obs.stat_real = model.psi_real().transpose() * obs.y_real;
  obs.noise_var = noise_var;
  return obs;
}

Observation observe(const MeasurementModel& model, const CVector& h_c, double snr_db, Rng& rng) {
  require_dims(h_c.size() == model.unknowns(),
               "observe: h_c has length " + std::to_string(h_c.size()) + ", expected " +
                   std::to_string(model.unknowns()));
  const double sigma2 = noise_variance(snr_db);
  CVector y = model.psi() * h_c;
  if (sigma2 > 0.0) {
    CMatrix noise(model.M(), model.K());
    for (Index k = 0; k < model.K(); ++k) {
      for (Index m = 0; m < model.M(); ++m) noise(m, k) = complex_gaussian(rng, sigma2);
    }
    const CMatrix combined = model.combiner().adjoint() * noise;
    y += Eigen::Map<const CVector>(combined.data(), combined.size());
  }
  return make_observation(model, std::move(y), sigma2);
}

}  // namespace risu
