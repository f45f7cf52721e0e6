#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "risu/channel_model.hpp"
#include "risu/sounding.hpp"
#include "risu/unfolding_net.hpp"

namespace risu {

/// Per-sample SNR: a single entry is a fixed SNR, several entries are drawn
/// uniformly per sample.
struct SnrPolicy {
  std::vector<double> snrs_db{20.0};

  static SnrPolicy fixed(double snr_db) { return SnrPolicy{{snr_db}}; }
  static SnrPolicy mixed(std::vector<double> snrs_db) { return SnrPolicy{std::move(snrs_db)}; }

  bool is_mixed() const { return snrs_db.size() > 1; }
  std::string label() const;
  void validate() const;

  bool operator==(const SnrPolicy&) const = default;
};

/// Observed channel realizations sharing one measurement model.
/// Column j of every matrix belongs to sample j.
struct Dataset {
  RMatrix gram;          // 2MN x 2MN, shared
  RMatrix stats;         // psi_real^T y_real, 2MN x n
  RMatrix truths;        // lifted h_c, 2MN x n
  CMatrix channels;      // h_c, MN x n
  CMatrix observations;  // y, N_W K x n
  std::vector<double> snr_db;
  std::vector<double> noise_var;

  Index size() const { return truths.cols(); }
  TrainingSet training_set() const { return {gram, stats, truths}; }
  /// The first n samples.
  Dataset head(Index n) const;
};

/// n i.i.d. cascaded channels as columns.
CMatrix draw_channels(const ChannelConfig& cfg, Index n, std::uint64_t seed);

/// Observes each channel once. Per sample, the SNR is drawn first (mixed
/// policies only) and then the noise.
Dataset observe_channels(const CMatrix& channels, const MeasurementModel& model,
                         const SnrPolicy& policy, std::uint64_t seed);

/// draw_channels + observe_channels with sub-streams of `seed`.
Dataset gen_dataset(const ChannelConfig& cfg, const MeasurementModel& model,
                    const SnrPolicy& policy, Index n, std::uint64_t seed);

/// Maps a dataset to lifted estimates, one column per sample.
using Estimator = std::function<RMatrix(const Dataset&)>;

Estimator oracle_estimator();
Estimator zero_estimator();
Estimator ls_estimator(const MeasurementModel& model);
/// Classic regularized gradient descent with the reference lambda per sample.
Estimator gd_estimator(const MeasurementModel& model);
/// Nuclear-norm proximal gradient with the reference lambda per sample.
Estimator svt_estimator(const MeasurementModel& model);
Estimator unfolding_estimator(UnfoldingParams params);

/// Mean over samples of ||h_hat - h||^2 / ||h||^2.
double evaluate(const Estimator& estimator, const Dataset& data);

struct NetworkConfig {
  Index layers = 8;
  TrainSchedule schedule{};

  bool operator==(const NetworkConfig&) const = default;
};

struct DataConfig {
  Index n_train = 20000;
  Index n_test = 10000;
  SnrPolicy train_policy = SnrPolicy::fixed(20.0);
  std::vector<double> mixed_snrs_db{0, 5, 10, 15, 20};
  std::vector<double> test_snrs_db{0, 5, 10, 15, 20};

  bool operator==(const DataConfig&) const = default;
};

struct StudyConfig {
  std::vector<Index> overhead_unfold_K{12, 14};
  Index overhead_ls_K = 16;
  std::vector<Index> path_counts{1, 2, 3};
  std::vector<SineRange> sine_ranges{{0.0, 1.0}, {0.0, 0.5}, {0.0, 0.25}};
  bool include_svt = false;  // adds nuclear-norm curves to the overhead study
  Index svt_samples = 200;   // test samples evaluated by the nuclear-norm solver

  bool operator==(const StudyConfig&) const = default;
};

/// Everything one run needs. `sounding` drives single-model commands and the
/// fixed-K studies.
struct ExperimentSpec {
  std::string profile = "desk";
  ChannelConfig channel{};
  SoundingConfig sounding{};
  NetworkConfig network{};
  DataConfig data{};
  StudyConfig study{};
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  bool operator==(const ExperimentSpec&) const = default;
};

/// M = 8, N = 16, N_W = 4, K = 14, 8 layers, 2e4 training samples.
ExperimentSpec desk_profile();
/// M = 16, N = 32, N_W = 8, K = 28, 15 layers, 1e5 training samples.
ExperimentSpec paper_profile();
/// Looks up "desk" or "paper"; throws ConfigError otherwise.
ExperimentSpec profile_by_name(std::string_view name);

struct ResultRow {
  std::string curve;
  double test_snr_db = 0.0;
  double nmse = 0.0;
  Index n_samples = 0;
};

enum class StudyName { Overhead, Paths, TrainSnr, AngleRange };

StudyName parse_study_name(std::string_view name);
std::string_view study_name(StudyName name);

using Logger = std::function<void(const std::string&)>;

struct TrainedModel {
  std::string label;
  UnfoldingParams params;
  std::vector<EpochRecord> history;
};

struct StudyHooks {
  Logger log;
  std::function<void(const TrainedModel&)> on_trained;
};

/// Trains one network on freshly generated data. Seeds derive from `seed`.
TrainedModel train_unfolding(const ExperimentSpec& spec, const ChannelConfig& channel,
                             const MeasurementModel& model, const SnrPolicy& policy,
                             std::uint64_t seed, const std::string& label,
                             const Logger& log = {});

/// Unfolding at each overhead K, minimum-norm LS at the larger K, and
/// optionally the nuclear-norm solver at each unfolding K.
std::vector<ResultRow> run_overhead_study(const ExperimentSpec& spec, const StudyHooks& hooks = {});
/// One unfolding curve per L1 = L2 in the path-count grid.
std::vector<ResultRow> run_paths_study(const ExperimentSpec& spec, const StudyHooks& hooks = {});
/// Networks trained at 0 dB, 20 dB and the mixed set.
std::vector<ResultRow> run_train_snr_study(const ExperimentSpec& spec, const StudyHooks& hooks = {});
/// One unfolding curve per angle-sine range.
std::vector<ResultRow> run_angle_range_study(const ExperimentSpec& spec,
                                             const StudyHooks& hooks = {});
std::vector<ResultRow> run_study(StudyName name, const ExperimentSpec& spec,
                                 const StudyHooks& hooks = {});

/// Evaluates one estimator on a test set per SNR in `test_snrs_db`.
std::vector<ResultRow> evaluate_over_snrs(const std::string& curve, const Estimator& estimator,
                                          const CMatrix& test_channels,
                                          const MeasurementModel& model,
                                          const std::vector<double>& test_snrs_db,
                                          std::uint64_t noise_seed);

/// Header `curve,test_snr_db,nmse,n_samples`, 10 significant digits.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Header `epoch,learning_rate,train_nmse`.
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

/// "%.10g".
std::string format_number(double v);

}  // namespace risu
