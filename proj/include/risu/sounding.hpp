#pragma once

#include <limits>

#include "risu/rng.hpp"
#include "risu/types.hpp"

namespace risu {

/// Pass as snr_db to disable noise.
inline constexpr double kNoiselessSnrDb = std::numeric_limits<double>::infinity();

struct SoundingConfig {
  Index K = 14;     // channel uses (RIS phase configurations)
  Index N_W = 4;    // BS combiner columns
  double snr_db = 20.0;

  /// Checks N_W <= M and K <= N. Throws ConfigError.
  void validate(Index M, Index N) const;

  bool operator==(const SoundingConfig&) const = default;
};

/// sigma^2 = 10^(-snr_db / 10); zero for +inf.
double noise_variance(double snr_db);

/// First K columns of the N-point DFT matrix, entry (n, k) = exp(-j 2 pi n k / N).
CMatrix build_phase_schedule(Index N, Index K);

/// First N_W columns of the M-point DFT matrix scaled by 1/sqrt(M).
CMatrix build_combiner(Index M, Index N_W);

/// Real lift [[Re A, -Im A], [Im A, Re A]].
RMatrix lift(const CMatrix& a);
/// [Re x; Im x].
RVector lift(const CVector& x);
CVector unlift(const RVector& x);

/// Immutable sounding geometry: Psi = Omega^T kron W^H and the real-domain
/// quantities the estimators and the network consume.
class MeasurementModel {
 public:
  static MeasurementModel build(const CMatrix& phase_schedule, const CMatrix& combiner);
  static MeasurementModel build(Index M, Index N, const SoundingConfig& cfg);

  Index M() const { return combiner_.rows(); }
  Index N() const { return phase_schedule_.rows(); }
  Index K() const { return phase_schedule_.cols(); }
  Index N_W() const { return combiner_.cols(); }
  Index rows() const { return psi_.rows(); }
  Index unknowns() const { return psi_.cols(); }
  /// Real-domain unknown count 2MN.
  Index dim() const { return 2 * psi_.cols(); }

  const CMatrix& phase_schedule() const { return phase_schedule_; }
  const CMatrix& combiner() const { return combiner_; }
  const CMatrix& psi() const { return psi_; }
  const CMatrix& gram() const { return gram_; }
  const RMatrix& psi_real() const { return psi_real_; }
  const RMatrix& gram_real() const { return gram_real_; }
  /// Moore-Penrose pseudoinverse of Psi (singular values below 1e-10 sigma_1 dropped).
  const CMatrix& pinv() const { return pinv_; }
  /// Largest singular value of Psi, squared (= lambda_max of the Gram).
  double spectral_norm_sq() const { return spectral_norm_sq_; }

 private:
  CMatrix phase_schedule_;
  CMatrix combiner_;
  CMatrix psi_;
  CMatrix gram_;
  RMatrix psi_real_;
  RMatrix gram_real_;
  CMatrix pinv_;
  double spectral_norm_sq_ = 0.0;
};

struct Observation {
  CVector y;
  RVector y_real;
  RVector stat_real;  // psi_real^T y_real
  double noise_var = 0.0;
};

/// y = Psi h_c + vec(W^H N) with N columns ~ CN(0, sigma^2 I_M), pilot fixed to 1.
/// No random numbers are consumed when snr_db is +inf.
Observation observe(const MeasurementModel& model, const CVector& h_c, double snr_db, Rng& rng);

/// Wraps an externally supplied y (noise variance recorded as given).
Observation make_observation(const MeasurementModel& model, CVector y, double noise_var);

}  // namespace risu
