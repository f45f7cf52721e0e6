#include "risu/estimators.hpp"

#include <cmath>
#include <string>

#include "risu/channel_model.hpp"

namespace risu {

CVector ls_estimate(const MeasurementModel& model, const CVector& y) {
  require_dims(y.size() == model.rows(), "ls_estimate: y length does not match Psi rows");
  return model.pinv() * y;
}

double lambda_reference(double sigma2, Index M, Index N, Index N_W, Index K) {
  const double m = static_cast<double>(M);
  const double n = static_cast<double>(N);
  const double ratio = m * n * (m + n) * std::log(m + n) / (static_cast<double>(N_W) * K);
  return 4.0 * sigma2 * std::sqrt(ratio);
}

double power_iteration_lambda_max(const CMatrix& gram, int iterations) {
  require_dims(gram.rows() == gram.cols(), "power iteration needs a square matrix");
  CVector v = CVector::Ones(gram.rows()) / std::sqrt(static_cast<double>(gram.rows()));
  for (int i = 0; i < iterations; ++i) {
    const CVector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  // Rayleigh quotient at the final iterate.
  return std::real(v.dot(gram * v));
}

GdConfig GdConfig::defaults_for(const MeasurementModel& model, double lambda) {
  GdConfig cfg;
  const double lmax = power_iteration_lambda_max(model.gram(), 50);
  cfg.step_size = lmax > 0.0 ? std::min(0.9 / lmax, 0.999) : 0.5;
  cfg.lambda = lambda;
  return cfg;
}

void GdConfig::validate() const {
  if (!(step_size > 0.0 && step_size < 1.0)) throw ConfigError("gd.step_size must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw ConfigError("gd.lambda must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("gd.epsilon must be > 0");
  if (max_iters <= 0) throw ConfigError("gd.max_iters must be positive");
  if (!(tol > 0.0)) throw ConfigError("gd.tol must be > 0");
}

CVector reg_gradient_descent(const MeasurementModel& model, const CVector& y, const GdConfig& cfg,
                             const std::optional<CVector>& h0) {
  cfg.validate();
  require_dims(y.size() == model.rows(), "reg_gradient_descent: y length does not match Psi rows");
  CVector h = h0 ? *h0 : CVector::Zero(model.unknowns());
  require_dims(h.size() == model.unknowns(), "reg_gradient_descent: h0 has wrong length");

  const CVector stat = model.psi().adjoint() * y;
  const double beta = cfg.step_size;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double norm = h.norm();
    const double denom = norm == 0.0 ? cfg.epsilon : norm;
    CVector next = h - beta * (model.gram() * h - stat) - (beta * cfg.lambda / denom) * h;
    const double change = (next - h).norm();
    // The norm overflows long before the entries do.
    if (!next.allFinite() || !std::isfinite(change))
      throw DivergenceError("reg_gradient_descent diverged", it);
    h.swap(next);
    if (change <= cfg.tol * h.norm()) break;
  }
  return h;
}

SvtConfig SvtConfig::defaults_for(const MeasurementModel& model, double lambda) {
  SvtConfig cfg;
  cfg.lambda = lambda;
  cfg.step_size = model.spectral_norm_sq() > 0.0 ? 0.99 / model.spectral_norm_sq() : 1.0;
  return cfg;
}

void SvtConfig::validate(const MeasurementModel& model) const {
  if (!(lambda >= 0.0)) throw ConfigError("svt.lambda must be >= 0");
  if (!(step_size > 0.0)) throw ConfigError("svt.step_size must be > 0");
  if (model.spectral_norm_sq() > 0.0 && step_size > 1.0 / model.spectral_norm_sq())
    throw ConfigError("svt.step_size exceeds 1 / ||Psi||_2^2");
  if (max_iters <= 0) throw ConfigError("svt.max_iters must be positive");
  if (!(tol > 0.0)) throw ConfigError("svt.tol must be > 0");
}

double nuclear_objective(const MeasurementModel& model, const CVector& y, const CVector& h,
                         double lambda) {
  const double residual = (y - model.psi() * h).squaredNorm();
  if (lambda == 0.0) return residual;
  const CMatrix hm = unvectorize(h, model.M(), model.N());
  Eigen::BDCSVD<CMatrix> svd(hm);
  return residual + lambda * svd.singularValues().sum();
}

CMatrix singular_value_threshold(const CMatrix& m, double threshold) {
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector shrunk = (svd.singularValues().array() - threshold).max(0.0);
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().adjoint();
}

CVector svt_nuclear_solve(const MeasurementModel& model, const CVector& y, const SvtConfig& cfg,
                          SvtTrace* trace) {
  cfg.validate(model);
  require_dims(y.size() == model.rows(), "svt_nuclear_solve: y length does not match Psi rows");
  const Index M = model.M();
  const Index N = model.N();
  const double eta = cfg.step_size;
  const double threshold = eta * cfg.lambda / 2.0;
  const CVector stat = model.psi().adjoint() * y;

  CVector h = CVector::Zero(model.unknowns());
  if (trace) {
    trace->objective.clear();
    trace->objective.push_back(nuclear_objective(model, y, h, cfg.lambda));
    trace->iterations = 0;
  }
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const CVector step = h - eta * (model.gram() * h - stat);
    CVector next = vectorize(cfg.lambda == 0.0 ? unvectorize(step, M, N)
                                               : singular_value_threshold(unvectorize(step, M, N),
                                                                          threshold));
    const double change = (next - h).norm();
    // The norm overflows long before the entries do.
    if (!next.allFinite() || !std::isfinite(change))
      throw DivergenceError("svt_nuclear_solve diverged", it);
    h.swap(next);
    if (trace) {
      trace->objective.push_back(nuclear_objective(model, y, h, cfg.lambda));
      trace->iterations = it;
    }
    if (change <= cfg.tol * h.norm()) break;
  }
  return h;
}

double nmse(const CVector& estimate, const CVector& truth) {
  require_dims(estimate.size() == truth.size(), "nmse: length mismatch");
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw std::invalid_argument("nmse: ground truth has zero norm");
  return (estimate - truth).squaredNorm() / denom;
}

}  // namespace risu
