#pragma once

#include <optional>
#include <vector>

#include "risu/sounding.hpp"
#include "risu/types.hpp"

namespace risu {

/// Minimum-norm least squares Psi^+ y.
CVector ls_estimate(const MeasurementModel& model, const CVector& y);

/// Reference regularization weight 4 sigma^2 sqrt(MN(M+N) ln(M+N) / (N_W K)).
double lambda_reference(double sigma2, Index M, Index N, Index N_W, Index K);

/// Largest eigenvalue of a Hermitian PSD matrix by power iteration from the
/// all-ones vector.
double power_iteration_lambda_max(const CMatrix& gram, int iterations = 50);

struct GdConfig {
  double step_size = 0.5;   // beta, in (0, 1)
  double lambda = 0.0;
  double epsilon = 1e-12;   // added to the iterate norm only when it is zero
  int max_iters = 5000;
  double tol = 1e-8;        // relative iterate change

  /// beta = 0.9 / lambda_max(Psi^H Psi) from 50 power iterations, capped below 1.
  static GdConfig defaults_for(const MeasurementModel& model, double lambda);
  void validate() const;
};

/// Gradient descent on ||y - Psi h||^2 + lambda ||h||_2:
///   h <- h - beta (G h - Psi^H y) - beta lambda h / (||h|| + eps_i).
/// Throws DivergenceError on non-finite iterates.
CVector reg_gradient_descent(const MeasurementModel& model, const CVector& y, const GdConfig& cfg,
                             const std::optional<CVector>& h0 = std::nullopt);

struct SvtConfig {
  double lambda = 0.0;
  double step_size = 0.0;  // eta
  int max_iters = 5000;
  double tol = 1e-8;

  /// eta = 0.99 / ||Psi||_2^2.
  static SvtConfig defaults_for(const MeasurementModel& model, double lambda);
  /// Throws ConfigError unless 0 < eta <= 1 / ||Psi||_2^2.
  void validate(const MeasurementModel& model) const;
};

/// ||y - Psi h||^2 + lambda ||mat(h)||_*.
double nuclear_objective(const MeasurementModel& model, const CVector& y, const CVector& h,
                         double lambda);

/// Soft-thresholds the singular values of `m` by `threshold`.
CMatrix singular_value_threshold(const CMatrix& m, double threshold);

struct SvtTrace {
  std::vector<double> objective;  // objective after each iteration, index 0 = start
  int iterations = 0;
};

/// Proximal gradient for the nuclear-norm problem:
///   H <- SVT_{eta lambda / 2}(mat(h - eta Psi^H (Psi h - y))).
CVector svt_nuclear_solve(const MeasurementModel& model, const CVector& y, const SvtConfig& cfg,
                          SvtTrace* trace = nullptr);

double nmse(const CVector& estimate, const CVector& truth);

}  // namespace risu
