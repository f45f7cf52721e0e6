#pragma once

#include <cstdint>
#include <vector>

#include "risu/rng.hpp"
#include "risu/types.hpp"

namespace risu {

/// One unfolded gradient layer:
///   t = h + delta1 G h + delta2 c + delta3 h,   z = W t + b,
/// followed by relu on every layer except the last.
struct LayerParams {
  double delta1 = 0.0;  // in [-1, 0]
  double delta2 = 0.0;  // in [0, 1]
  double delta3 = 0.0;  // in [-1, 0]
  RMatrix weight;
  RVector bias;
};

struct UnfoldingParams {
  std::vector<LayerParams> layers;

  Index dim() const { return layers.empty() ? 0 : layers.front().bias.size(); }
  Index depth() const { return static_cast<Index>(layers.size()); }
  /// Checks that every layer has a D x D weight and a length-D bias.
  void validate() const;
  /// A zero-valued parameter set with the same shapes.
  UnfoldingParams zeros_like() const;
};

/// Same layout as the parameters; one gradient entry per learnable value.
using Gradients = UnfoldingParams;

/// Clamps delta1, delta3 into [-1, 0] and delta2 into [0, 1].
void project_deltas(UnfoldingParams& params);

/// Warm start at the classic gradient step: delta1 = -beta0, delta2 = beta0,
/// delta3 = -1e-3, identity weights, zero biases, with
/// beta0 = min(0.9 / lambda_max(gram_real), 1).
UnfoldingParams init_params(Index M, Index N, Index layers, const RMatrix& gram_real);

/// Per-layer activations for a batch (one sample per column).
struct ForwardCache {
  std::vector<RMatrix> inputs;          // h^(i-1)
  std::vector<RMatrix> combined;        // t^(i)
  std::vector<RMatrix> preactivations;  // z^(i)
  RMatrix output;
  bool hidden_relu = true;

  Index depth() const { return static_cast<Index>(inputs.size()); }
};

/// Runs all layers on a batch. `stats` and `h0` are D x B.
/// With hidden_relu = false every layer is affine.
ForwardCache forward(const UnfoldingParams& params, const RMatrix& gram, const RMatrix& stats,
                     const RMatrix& h0, bool hidden_relu = true);

/// Single-sample convenience wrapper starting from h0 = 0.
RVector predict(const UnfoldingParams& params, const RMatrix& gram, const RVector& stat);

/// Batched prediction from h0 = 0, processed in chunks of `chunk` columns.
RMatrix predict_batch(const UnfoldingParams& params, const RMatrix& gram, const RMatrix& stats,
                      Index chunk = 256);

/// ||est - truth||^2 / ||truth||^2. Rejects a zero-norm truth.
double nmse_loss(const RVector& estimate, const RVector& truth);

/// Mean NMSE over columns.
double nmse_loss(const RMatrix& estimates, const RMatrix& truths);

/// Exact gradients of the mean batch NMSE with respect to every parameter.
Gradients backward(const UnfoldingParams& params, const ForwardCache& cache, const RMatrix& gram,
                   const RMatrix& stats, const RMatrix& truths);

class AdamOptimizer {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  AdamOptimizer(const UnfoldingParams& like, double learning_rate);

  void set_learning_rate(double lr) { learning_rate_ = lr; }
  double learning_rate() const { return learning_rate_; }
  std::int64_t steps() const { return step_; }

  /// Bias-corrected Adam update followed by delta projection.
  /// Throws std::invalid_argument on non-finite gradients.
  void step(UnfoldingParams& params, const Gradients& grads);

 private:
  Gradients first_;
  Gradients second_;
  std::int64_t step_ = 0;
  double learning_rate_;
};

struct TrainSchedule {
  int epochs = 40;
  Index batch_size = 64;
  double learning_rate = 1e-3;
  int decay_after_epoch = 20;  // epochs after this one use the decayed rate
  double decay_factor = 0.5;

  /// Learning rate for a 1-based epoch index.
  double learning_rate_for(int epoch) const;
  void validate() const;
  bool operator==(const TrainSchedule&) const = default;
};

/// Training samples sharing one Gram matrix. Columns of `stats` and `truths`
/// are paired.
struct TrainingSet {
  RMatrix gram;
  RMatrix stats;
  RMatrix truths;

  Index size() const { return stats.cols(); }
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_nmse = 0.0;
};

/// Mini-batch Adam on the mean NMSE. Samples are reshuffled every epoch with
/// `rng`; a short final batch absorbs the remainder.
std::vector<EpochRecord> train(UnfoldingParams& params, const TrainingSet& data,
                               const TrainSchedule& schedule, Rng& rng);

}  // namespace risu
