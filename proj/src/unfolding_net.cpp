#include "risu/unfolding_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace risu {

void UnfoldingParams::validate() const {
  require_dims(!layers.empty(), "network has no layers");
  const Index d = dim();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    require_dims(l.weight.rows() == d && l.weight.cols() == d && l.bias.size() == d,
                 "layer " + std::to_string(i) + " does not match dimension " + std::to_string(d));
  }
}

UnfoldingParams UnfoldingParams::zeros_like() const {
  UnfoldingParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    LayerParams zl;
    zl.weight = RMatrix::Zero(l.weight.rows(), l.weight.cols());
    zl.bias = RVector::Zero(l.bias.size());
    z.layers.push_back(std::move(zl));
  }
  return z;
}

void project_deltas(UnfoldingParams& params) {
  for (auto& l : params.layers) {
    l.delta1 = std::clamp(l.delta1, -1.0, 0.0);
    l.delta2 = std::clamp(l.delta2, 0.0, 1.0);
    l.delta3 = std::clamp(l.delta3, -1.0, 0.0);
  }
}

UnfoldingParams init_params(Index M, Index N, Index layers, const RMatrix& gram_real) {
  const Index d = 2 * M * N;
  require_dims(gram_real.rows() == d && gram_real.cols() == d,
               "init_params: Gram matrix must be 2MN x 2MN");
  require_dims(layers > 0, "init_params: need at least one layer");
  const Eigen::SelfAdjointEigenSolver<RMatrix> eig(gram_real, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double beta0 = lmax > 0.0 ? std::min(0.9 / lmax, 1.0) : 1.0;

  UnfoldingParams p;
  p.layers.resize(static_cast<std::size_t>(layers));
  for (auto& l : p.layers) {
    l.delta1 = -beta0;
    l.delta2 = beta0;
    l.delta3 = -1e-3;
    l.weight = RMatrix::Identity(d, d);
    l.bias = RVector::Zero(d);
  }
  return p;
}

ForwardCache forward(const UnfoldingParams& params, const RMatrix& gram, const RMatrix& stats,
                     const RMatrix& h0, bool hidden_relu) {
  params.validate();
  const Index d = params.dim();
  require_dims(gram.rows() == d && gram.cols() == d, "forward: Gram has wrong shape");
  require_dims(stats.rows() == d && h0.rows() == d && stats.cols() == h0.cols(),
               "forward: statistics and initial iterate must be D x B");

  const auto depth = params.layers.size();
  ForwardCache cache;
  cache.hidden_relu = hidden_relu;
  cache.inputs.reserve(depth);
  cache.combined.reserve(depth);
  cache.preactivations.reserve(depth);

  RMatrix h = h0;
  RMatrix gh(d, h0.cols());
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& l = params.layers[i];
    gh.noalias() = gram * h;
    RMatrix t = (1.0 + l.delta3) * h + l.delta1 * gh + l.delta2 * stats;
    RMatrix z(d, h.cols());
    z.noalias() = l.weight * t;
    z.colwise() += l.bias;
    cache.inputs.push_back(std::move(h));
    cache.combined.push_back(std::move(t));
    const bool last = i + 1 == depth;
    h = (!last && hidden_relu) ? RMatrix(z.cwiseMax(0.0)) : z;
    cache.preactivations.push_back(std::move(z));
  }
  cache.output = std::move(h);
  return cache;
}

RVector predict(const UnfoldingParams& params, const RMatrix& gram, const RVector& stat) {
  const RMatrix out = forward(params, gram, stat, RMatrix::Zero(stat.size(), 1)).output;
  return out.col(0);
}

RMatrix predict_batch(const UnfoldingParams& params, const RMatrix& gram, const RMatrix& stats,
                      Index chunk) {
  RMatrix out(stats.rows(), stats.cols());
  for (Index start = 0; start < stats.cols(); start += chunk) {
    const Index n = std::min(chunk, stats.cols() - start);
    out.middleCols(start, n) =
        forward(params, gram, stats.middleCols(start, n), RMatrix::Zero(stats.rows(), n)).output;
  }
  return out;
}

double nmse_loss(const RVector& estimate, const RVector& truth) {
  require_dims(estimate.size() == truth.size(), "nmse_loss: length mismatch");
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw std::invalid_argument("nmse_loss: ground truth has zero norm");
  return (estimate - truth).squaredNorm() / denom;
}

double nmse_loss(const RMatrix& estimates, const RMatrix& truths) {
  require_dims(estimates.rows() == truths.rows() && estimates.cols() == truths.cols(),
               "nmse_loss: shape mismatch");
  require_dims(truths.cols() > 0, "nmse_loss: empty batch");
  double sum = 0.0;
  for (Index j = 0; j < truths.cols(); ++j) sum += nmse_loss(RVector(estimates.col(j)), RVector(truths.col(j)));
  return sum / static_cast<double>(truths.cols());
}

Gradients backward(const UnfoldingParams& params, const ForwardCache& cache, const RMatrix& gram,
                   const RMatrix& stats, const RMatrix& truths) {
  const Index d = params.dim();
  const auto depth = params.layers.size();
  require_dims(cache.depth() == static_cast<Index>(depth), "backward: cache depth does not match network");
  require_dims(cache.output.rows() == d && truths.rows() == d && stats.rows() == d &&
                   cache.output.cols() == truths.cols() && stats.cols() == truths.cols(),
               "backward: cache, statistics and truths disagree in shape");
  for (std::size_t i = 0; i < depth; ++i) {
    require_dims(cache.inputs[i].rows() == d && cache.inputs[i].cols() == truths.cols(),
                 "backward: stale forward cache");
  }

  const Index batch = truths.cols();
  const RVector inv_energy = truths.colwise().squaredNorm().cwiseInverse().transpose();
  if (!inv_energy.allFinite()) throw std::invalid_argument("backward: ground truth has zero norm");

  // d(mean NMSE)/d(output)
  RMatrix g = (cache.output - truths) * (2.0 / static_cast<double>(batch) * inv_energy).asDiagonal();

  Gradients grads = params.zeros_like();
  RMatrix gt(d, batch);
  for (std::size_t k = depth; k-- > 0;) {
    const auto& l = params.layers[k];
    auto& gl = grads.layers[k];
    const bool last = k + 1 == depth;
    if (!last && cache.hidden_relu) {
      g = g.cwiseProduct((cache.preactivations[k].array() > 0.0).cast<double>().matrix());
    }
    gl.weight.noalias() = g * cache.combined[k].transpose();
    gl.bias = g.rowwise().sum();
    gt.noalias() = l.weight.transpose() * g;

    const RMatrix& h = cache.inputs[k];
    const RMatrix gh = gram * h;
    gl.delta1 = gt.cwiseProduct(gh).sum();
    gl.delta2 = gt.cwiseProduct(stats).sum();
    gl.delta3 = gt.cwiseProduct(h).sum();

    if (k > 0) {
      g = (1.0 + l.delta3) * gt;
      g.noalias() += l.delta1 * (gram.transpose() * gt);
    }
  }
  return grads;
}

AdamOptimizer::AdamOptimizer(const UnfoldingParams& like, double learning_rate)
    : first_(like.zeros_like()), second_(like.zeros_like()), learning_rate_(learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("Adam learning rate must be > 0");
}

namespace {

bool all_finite(const Gradients& g) {
  for (const auto& l : g.layers) {
    if (!std::isfinite(l.delta1) || !std::isfinite(l.delta2) || !std::isfinite(l.delta3) ||
        !l.weight.allFinite() || !l.bias.allFinite())
      return false;
  }
  return true;
}

}  // namespace

void AdamOptimizer::step(UnfoldingParams& params, const Gradients& grads) {
  require_dims(grads.layers.size() == params.layers.size() &&
                   first_.layers.size() == params.layers.size(),
               "Adam: gradient layout does not match parameters");
  if (!all_finite(grads)) throw std::invalid_argument("Adam: non-finite gradient");

  ++step_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  const double lr = learning_rate_;

  auto update_scalar = [&](double& p, double g, double& m, double& v) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g * g;
    p -= lr * (m / c1) / (std::sqrt(v / c2) + kEps);
  };
  auto update_dense = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = kBeta1 * m.array() + (1.0 - kBeta1) * g.array();
    v.array() = kBeta2 * v.array() + (1.0 - kBeta2) * g.array().square();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  };

  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    auto& m = first_.layers[i];
    auto& v = second_.layers[i];
    update_scalar(p.delta1, g.delta1, m.delta1, v.delta1);
    update_scalar(p.delta2, g.delta2, m.delta2, v.delta2);
    update_scalar(p.delta3, g.delta3, m.delta3, v.delta3);
    update_dense(p.weight, g.weight, m.weight, v.weight);
    update_dense(p.bias, g.bias, m.bias, v.bias);
  }
  project_deltas(params);
}

double TrainSchedule::learning_rate_for(int epoch) const {
  return epoch <= decay_after_epoch ? learning_rate : learning_rate * decay_factor;
}

void TrainSchedule::validate() const {
  if (epochs <= 0) throw ConfigError("network.epochs must be positive");
  if (batch_size <= 0) throw ConfigError("network.batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("network.learning_rate must be > 0");
  if (decay_after_epoch < 0) throw ConfigError("network.decay_after_epoch must be >= 0");
  if (!(decay_factor > 0.0)) throw ConfigError("network.decay_factor must be > 0");
}

std::vector<EpochRecord> train(UnfoldingParams& params, const TrainingSet& data,
                               const TrainSchedule& schedule, Rng& rng) {
  schedule.validate();
  params.validate();
  const Index n = data.size();
  if (n == 0) throw std::invalid_argument("train: empty dataset");
  const Index d = params.dim();
  require_dims(data.stats.rows() == d && data.truths.rows() == d && data.truths.cols() == n,
               "train: dataset does not match network dimension");

  AdamOptimizer adam(params, schedule.learning_rate);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::vector<EpochRecord> history;
  history.reserve(static_cast<std::size_t>(schedule.epochs));

  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    adam.set_learning_rate(schedule.learning_rate_for(epoch));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (Index start = 0; start < n; start += schedule.batch_size) {
      const Index b = std::min(schedule.batch_size, n - start);
      const std::vector<Index> idx(order.begin() + start, order.begin() + start + b);
      const RMatrix stats = data.stats(Eigen::all, idx);
      const RMatrix truths = data.truths(Eigen::all, idx);

      const ForwardCache cache = forward(params, data.gram, stats, RMatrix::Zero(d, b));
      const double loss = nmse_loss(cache.output, truths);
      if (!std::isfinite(loss)) throw DivergenceError("training loss is not finite", epoch);
      loss_sum += loss * static_cast<double>(b);

      adam.step(params, backward(params, cache, data.gram, stats, truths));
    }
    history.push_back({epoch, adam.learning_rate(), loss_sum / static_cast<double>(n)});
  }
  return history;
}

}  // namespace risu
