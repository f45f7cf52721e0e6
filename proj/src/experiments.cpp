#include "risu/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>

#include "risu/estimators.hpp"
#include "risu/rng.hpp"

namespace risu {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string SnrPolicy::label() const {
  if (!is_mixed()) return format_number(snrs_db.front()) + "dB";
  return "mixed";
}

void SnrPolicy::validate() const {
  if (snrs_db.empty()) throw ConfigError("SNR policy has no SNR values");
  for (double s : snrs_db) {
    if (std::isnan(s)) throw ConfigError("SNR policy contains NaN");
  }
}

Dataset Dataset::head(Index n) const {
  require_dims(n >= 0 && n <= size(), "Dataset::head: n out of range");
  Dataset d;
  d.gram = gram;
  d.stats = stats.leftCols(n);
  d.truths = truths.leftCols(n);
  d.channels = channels.leftCols(n);
  d.observations = observations.leftCols(n);
  d.snr_db.assign(snr_db.begin(), snr_db.begin() + n);
  d.noise_var.assign(noise_var.begin(), noise_var.begin() + n);
  return d;
}

CMatrix draw_channels(const ChannelConfig& cfg, Index n, std::uint64_t seed) {
  cfg.validate();
  if (n <= 0) throw std::invalid_argument("draw_channels: sample count must be positive");
  Rng rng(seed);
  CMatrix out(cfg.M * cfg.N, n);
  for (Index j = 0; j < n; ++j) out.col(j) = draw_cascaded_channel(cfg, rng).vector;
  return out;
}

Dataset observe_channels(const CMatrix& channels, const MeasurementModel& model,
                         const SnrPolicy& policy, std::uint64_t seed) {
  policy.validate();
  const Index n = channels.cols();
  if (n <= 0) throw std::invalid_argument("observe_channels: empty channel set");
  require_dims(channels.rows() == model.unknowns(),
               "observe_channels: channel length does not match the measurement model");

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, policy.snrs_db.size() - 1);
  Dataset d;
  d.gram = model.gram_real();
  d.channels = channels;
  d.stats.resize(model.dim(), n);
  d.truths.resize(model.dim(), n);
  d.observations.resize(model.rows(), n);
  d.snr_db.resize(static_cast<std::size_t>(n));
  d.noise_var.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const double snr = policy.is_mixed() ? policy.snrs_db[pick(rng)] : policy.snrs_db.front();
    const CVector h = channels.col(j);
    const Observation obs = observe(model, h, snr, rng);
    d.stats.col(j) = obs.stat_real;
    d.truths.col(j) = lift(h);
    d.observations.col(j) = obs.y;
    d.snr_db[static_cast<std::size_t>(j)] = snr;
    d.noise_var[static_cast<std::size_t>(j)] = obs.noise_var;
  }
  return d;
}

Dataset gen_dataset(const ChannelConfig& cfg, const MeasurementModel& model,
                    const SnrPolicy& policy, Index n, std::uint64_t seed) {
  return observe_channels(draw_channels(cfg, n, derive_seed(seed, "channels")), model, policy,
                          derive_seed(seed, "noise"));
}

namespace {

RMatrix lift_columns(const CMatrix& x) {
  RMatrix out(2 * x.rows(), x.cols());
  out.topRows(x.rows()) = x.real();
  out.bottomRows(x.rows()) = x.imag();
  return out;
}

/// Runs `per_sample(j)` for every column in parallel; the first exception is
/// rethrown after the loop.
template <class F>
RMatrix per_sample_estimates(const Dataset& data, Index dim, F per_sample) {
  const Index n = data.size();
  RMatrix out(dim, n);
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 8)
  for (Index j = 0; j < n; ++j) {
    try {
      out.col(j) = lift(per_sample(j));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace

Estimator oracle_estimator() {
  return [](const Dataset& d) { return d.truths; };
}

Estimator zero_estimator() {
  return [](const Dataset& d) { return RMatrix::Zero(d.truths.rows(), d.truths.cols()); };
}

Estimator ls_estimator(const MeasurementModel& model) {
  return [model](const Dataset& d) -> RMatrix {
    return lift_columns(model.pinv() * d.observations);
  };
}

Estimator gd_estimator(const MeasurementModel& model) {
  return [model](const Dataset& d) {
    const GdConfig base = GdConfig::defaults_for(model, 0.0);
    return per_sample_estimates(d, model.dim(), [&](Index j) {
      GdConfig cfg = base;
      cfg.lambda = lambda_reference(d.noise_var[static_cast<std::size_t>(j)], model.M(),
                                    model.N(), model.N_W(), model.K());
      return reg_gradient_descent(model, d.observations.col(j), cfg);
    });
  };
}

Estimator svt_estimator(const MeasurementModel& model) {
  return [model](const Dataset& d) {
    return per_sample_estimates(d, model.dim(), [&](Index j) {
      const double lambda = lambda_reference(d.noise_var[static_cast<std::size_t>(j)], model.M(),
                                             model.N(), model.N_W(), model.K());
      return svt_nuclear_solve(model, d.observations.col(j), SvtConfig::defaults_for(model, lambda));
    });
  };
}

Estimator unfolding_estimator(UnfoldingParams params) {
  return [p = std::move(params)](const Dataset& d) { return predict_batch(p, d.gram, d.stats); };
}

double evaluate(const Estimator& estimator, const Dataset& data) {
  const RMatrix est = estimator(data);
  return nmse_loss(est, data.truths);
}

// --------------------------------------------------------------------------
// Profiles and validation

ExperimentSpec desk_profile() { return ExperimentSpec{}; }

ExperimentSpec paper_profile() {
  ExperimentSpec s;
  s.profile = "paper";
  s.channel.M = 16;
  s.channel.N = 32;
  s.sounding.K = 28;
  s.sounding.N_W = 8;
  s.network.layers = 15;
  s.data.n_train = 100000;
  s.data.n_test = 10000;
  s.study.overhead_unfold_K = {24, 28};
  s.study.overhead_ls_K = 32;
  return s;
}

ExperimentSpec profile_by_name(std::string_view name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

void ExperimentSpec::validate() const {
  channel.validate();
  sounding.validate(channel.M, channel.N);
  if (network.layers <= 0) throw ConfigError("network.layers must be positive");
  network.schedule.validate();
  if (data.n_train <= 0) throw ConfigError("data.n_train must be positive");
  if (data.n_test <= 0) throw ConfigError("data.n_test must be positive");
  data.train_policy.validate();
  if (data.mixed_snrs_db.empty()) throw ConfigError("data.mixed_snrs_db must not be empty");
  if (data.test_snrs_db.empty()) throw ConfigError("data.test_snrs_db must not be empty");
  if (study.overhead_unfold_K.empty()) throw ConfigError("study.overhead_unfold_K must not be empty");
  for (Index k : study.overhead_unfold_K) {
    SoundingConfig{k, sounding.N_W, sounding.snr_db}.validate(channel.M, channel.N);
  }
  SoundingConfig{study.overhead_ls_K, sounding.N_W, sounding.snr_db}.validate(channel.M, channel.N);
  if (study.path_counts.empty()) throw ConfigError("study.path_counts must not be empty");
  for (Index l : study.path_counts) {
    ChannelConfig c = channel;
    c.L1 = l;
    c.L2 = l;
    c.validate();
  }
  if (study.sine_ranges.empty()) throw ConfigError("study.sine_ranges must not be empty");
  for (const auto& r : study.sine_ranges) {
    ChannelConfig c = channel;
    c.angle_sine_range = r;
    c.validate();
  }
  if (study.svt_samples <= 0) throw ConfigError("study.svt_samples must be positive");
}

StudyName parse_study_name(std::string_view name) {
  if (name == "overhead") return StudyName::Overhead;
  if (name == "paths") return StudyName::Paths;
  if (name == "train-snr") return StudyName::TrainSnr;
  if (name == "angle-range") return StudyName::AngleRange;
  throw ConfigError("unknown study '" + std::string(name) +
                    "' (expected overhead, paths, train-snr or angle-range)");
}

std::string_view study_name(StudyName name) {
  switch (name) {
    case StudyName::Overhead: return "overhead";
    case StudyName::Paths: return "paths";
    case StudyName::TrainSnr: return "train-snr";
    case StudyName::AngleRange: return "angle-range";
  }
  return "unknown";
}

// --------------------------------------------------------------------------
// Training and studies

TrainedModel train_unfolding(const ExperimentSpec& spec, const ChannelConfig& channel,
                             const MeasurementModel& model, const SnrPolicy& policy,
                             std::uint64_t seed, const std::string& label, const Logger& log) {
  if (log) log("[" + label + "] generating " + std::to_string(spec.data.n_train) + " training samples");
  const Dataset train_set =
      gen_dataset(channel, model, policy, spec.data.n_train, derive_seed(seed, "dataset"));
  TrainedModel out;
  out.label = label;
  out.params = init_params(model.M(), model.N(), spec.network.layers, model.gram_real());
  Rng shuffle = make_rng(seed, "shuffle");
  if (log) log("[" + label + "] training " + std::to_string(spec.network.layers) + " layers, D = " +
               std::to_string(model.dim()));
  out.history = train(out.params, train_set.training_set(), spec.network.schedule, shuffle);
  if (log && !out.history.empty())
    log("[" + label + "] final training NMSE " + format_number(out.history.back().train_nmse));
  return out;
}

std::vector<ResultRow> evaluate_over_snrs(const std::string& curve, const Estimator& estimator,
                                          const CMatrix& test_channels,
                                          const MeasurementModel& model,
                                          const std::vector<double>& test_snrs_db,
                                          std::uint64_t noise_seed) {
  std::vector<ResultRow> rows;
  for (double snr : test_snrs_db) {
    const Dataset test = observe_channels(test_channels, model, SnrPolicy::fixed(snr),
                                          derive_seed(noise_seed, "snr=" + format_number(snr)));
    rows.push_back({curve, snr, evaluate(estimator, test), test.size()});
  }
  return rows;
}

namespace {

std::uint64_t curve_seed(const ExperimentSpec& spec, StudyName study, const std::string& label) {
  return derive_seed(spec.seed, std::string(study_name(study)) + "/" + label);
}

std::uint64_t noise_seed(const ExperimentSpec& spec, StudyName study, const std::string& key) {
  return derive_seed(spec.seed, std::string(study_name(study)) + "/test-noise/" + key);
}

CMatrix test_channels(const ExperimentSpec& spec, StudyName study, const ChannelConfig& channel,
                      const std::string& key) {
  return draw_channels(channel, spec.data.n_test,
                       derive_seed(spec.seed, std::string(study_name(study)) + "/test-channels/" + key));
}

void append(std::vector<ResultRow>& rows, std::vector<ResultRow> more) {
  rows.insert(rows.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

TrainedModel train_curve(const ExperimentSpec& spec, StudyName study, const ChannelConfig& channel,
                         const MeasurementModel& model, const SnrPolicy& policy,
                         const std::string& label, const StudyHooks& hooks) {
  TrainedModel m = train_unfolding(spec, channel, model, policy, curve_seed(spec, study, label),
                                   label, hooks.log);
  if (hooks.on_trained) hooks.on_trained(m);
  return m;
}

std::string k_label(Index k) { return "K" + std::to_string(k); }

}  // namespace

std::vector<ResultRow> run_overhead_study(const ExperimentSpec& spec, const StudyHooks& hooks) {
  spec.validate();
  const auto study = StudyName::Overhead;
  const auto& ch = spec.channel;
  const CMatrix channels = test_channels(spec, study, ch, "shared");
  const auto& snrs = spec.data.test_snrs_db;
  std::vector<ResultRow> rows;

  for (Index k : spec.study.overhead_unfold_K) {
    const auto model = MeasurementModel::build(ch.M, ch.N, {k, spec.sounding.N_W, spec.sounding.snr_db});
    const std::string label = "unfold_" + k_label(k);
    TrainedModel m = train_curve(spec, study, ch, model, spec.data.train_policy, label, hooks);
    append(rows, evaluate_over_snrs(label, unfolding_estimator(std::move(m.params)), channels, model,
                                    snrs, noise_seed(spec, study, k_label(k))));
  }

  {
    const Index k = spec.study.overhead_ls_K;
    const auto model = MeasurementModel::build(ch.M, ch.N, {k, spec.sounding.N_W, spec.sounding.snr_db});
    const std::string label = "ls_" + k_label(k);
    if (hooks.log) hooks.log("[" + label + "] evaluating");
    append(rows, evaluate_over_snrs(label, ls_estimator(model), channels, model, snrs,
                                    noise_seed(spec, study, k_label(k))));
  }

  if (spec.study.include_svt) {
    const Index n = std::min(spec.study.svt_samples, spec.data.n_test);
    const CMatrix subset = channels.leftCols(n);
    for (Index k : spec.study.overhead_unfold_K) {
      const auto model =
          MeasurementModel::build(ch.M, ch.N, {k, spec.sounding.N_W, spec.sounding.snr_db});
      const std::string label = "svt_" + k_label(k);
      if (hooks.log) hooks.log("[" + label + "] evaluating on " + std::to_string(n) + " samples");
      append(rows, evaluate_over_snrs(label, svt_estimator(model), subset, model, snrs,
                                      noise_seed(spec, study, k_label(k))));
    }
  }
  return rows;
}

std::vector<ResultRow> run_paths_study(const ExperimentSpec& spec, const StudyHooks& hooks) {
  spec.validate();
  const auto study = StudyName::Paths;
  const auto model = MeasurementModel::build(spec.channel.M, spec.channel.N, spec.sounding);
  std::vector<ResultRow> rows;
  for (Index l : spec.study.path_counts) {
    ChannelConfig ch = spec.channel;
    ch.L1 = l;
    ch.L2 = l;
    const std::string label = "unfold_L" + std::to_string(l);
    TrainedModel m = train_curve(spec, study, ch, model, spec.data.train_policy, label, hooks);
    append(rows, evaluate_over_snrs(label, unfolding_estimator(std::move(m.params)),
                                    test_channels(spec, study, ch, label), model,
                                    spec.data.test_snrs_db, noise_seed(spec, study, label)));
  }
  return rows;
}

std::vector<ResultRow> run_train_snr_study(const ExperimentSpec& spec, const StudyHooks& hooks) {
  spec.validate();
  const auto study = StudyName::TrainSnr;
  const auto& ch = spec.channel;
  const auto model = MeasurementModel::build(ch.M, ch.N, spec.sounding);
  const CMatrix channels = test_channels(spec, study, ch, "shared");
  const std::vector<std::pair<std::string, SnrPolicy>> policies = {
      {"train_0dB", SnrPolicy::fixed(0.0)},
      {"train_20dB", SnrPolicy::fixed(20.0)},
      {"train_mixed", SnrPolicy::mixed(spec.data.mixed_snrs_db)},
  };
  std::vector<ResultRow> rows;
  for (const auto& [label, policy] : policies) {
    TrainedModel m = train_curve(spec, study, ch, model, policy, label, hooks);
    append(rows, evaluate_over_snrs(label, unfolding_estimator(std::move(m.params)), channels, model,
                                    spec.data.test_snrs_db, noise_seed(spec, study, "shared")));
  }
  return rows;
}

std::vector<ResultRow> run_angle_range_study(const ExperimentSpec& spec, const StudyHooks& hooks) {
  spec.validate();
  const auto study = StudyName::AngleRange;
  const auto model = MeasurementModel::build(spec.channel.M, spec.channel.N, spec.sounding);
  std::vector<ResultRow> rows;
  for (const auto& range : spec.study.sine_ranges) {
    ChannelConfig ch = spec.channel;
    ch.angle_sine_range = range;
    const std::string label =
        "range_" + format_number(range.lower) + "_" + format_number(range.upper);
    TrainedModel m = train_curve(spec, study, ch, model, spec.data.train_policy, label, hooks);
    append(rows, evaluate_over_snrs(label, unfolding_estimator(std::move(m.params)),
                                    test_channels(spec, study, ch, label), model,
                                    spec.data.test_snrs_db, noise_seed(spec, study, label)));
  }
  return rows;
}

std::vector<ResultRow> run_study(StudyName name, const ExperimentSpec& spec, const StudyHooks& hooks) {
  switch (name) {
    case StudyName::Overhead: return run_overhead_study(spec, hooks);
    case StudyName::Paths: return run_paths_study(spec, hooks);
    case StudyName::TrainSnr: return run_train_snr_study(spec, hooks);
    case StudyName::AngleRange: return run_angle_range_study(spec, hooks);
  }
  throw std::logic_error("unhandled study");
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "curve,test_snr_db,nmse,n_samples\n";
  for (const auto& r : rows) {
    out << r.curve << ',' << format_number(r.test_snr_db) << ',' << format_number(r.nmse) << ','
        << r.n_samples << '\n';
  }
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,learning_rate,train_nmse\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << format_number(e.learning_rate) << ',' << format_number(e.train_nmse)
        << '\n';
  }
}

}  // namespace risu
