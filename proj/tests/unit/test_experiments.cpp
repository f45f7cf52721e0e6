#include "risu/experiments.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "risu/rng.hpp"

namespace risu {
namespace {

ChannelConfig toy_channel() {
  ChannelConfig cfg;
  cfg.M = 2;
  cfg.N = 4;
  return cfg;
}

/// Small enough that every study trains in well under a second.
ExperimentSpec tiny_spec() {
  ExperimentSpec s;
  s.channel.M = 4;
  s.channel.N = 4;
  s.sounding = {3, 2, 20.0};
  s.network.layers = 2;
  s.network.schedule.epochs = 2;
  s.network.schedule.batch_size = 16;
  s.data.n_train = 40;
  s.data.n_test = 12;
  s.study.overhead_unfold_K = {2, 3};
  s.study.overhead_ls_K = 4;
  s.study.svt_samples = 4;
  return s;
}

TEST(GenDataset, RejectsEmptyRequest) {
  const auto model = MeasurementModel::build(2, 4, {4, 2, 20.0});
  EXPECT_THROW(gen_dataset(toy_channel(), model, SnrPolicy::fixed(20), 0, 1), std::invalid_argument);
}

TEST(GenDataset, FixedSeedGivesIdenticalData) {
  const auto model = MeasurementModel::build(2, 4, {4, 2, 20.0});
  const Dataset a = gen_dataset(toy_channel(), model, SnrPolicy::fixed(10), 25, 77);
  const Dataset b = gen_dataset(toy_channel(), model, SnrPolicy::fixed(10), 25, 77);
  EXPECT_EQ(a.stats, b.stats);
  EXPECT_EQ(a.truths, b.truths);
  EXPECT_EQ(a.observations, b.observations);
  const Dataset c = gen_dataset(toy_channel(), model, SnrPolicy::fixed(10), 25, 78);
  EXPECT_NE(a.truths, c.truths);
}

TEST(GenDataset, StatisticsMatchTheModel) {
  const auto model = MeasurementModel::build(2, 4, {3, 2, 20.0});
  const Dataset d = gen_dataset(toy_channel(), model, SnrPolicy::fixed(5), 6, 3);
  for (Index j = 0; j < d.size(); ++j) {
    EXPECT_LE((d.stats.col(j) - model.psi_real().transpose() * lift(CVector(d.observations.col(j))))
                  .norm(),
              1e-12);
    EXPECT_EQ(d.truths.col(j), lift(CVector(d.channels.col(j))));
  }
}

// Monte-Carlo: each of 5 SNRs drawn 20000 +- 600 times out of 1e5 (about 4 sigma).
TEST(GenDataset, MixedPolicyIsUniform) {
  const auto model = MeasurementModel::build(2, 2, {1, 1, 20.0});
  ChannelConfig cfg;
  cfg.M = 2;
  cfg.N = 2;
  const Dataset d = gen_dataset(cfg, model, SnrPolicy::mixed({0, 5, 10, 15, 20}), 100000, 2024);
  std::map<double, int> counts;
  for (double s : d.snr_db) ++counts[s];
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [snr, count] : counts) EXPECT_NEAR(count, 20000, 600) << snr << " dB";
}

TEST(Evaluate, OracleAndZeroEstimators) {
  const auto model = MeasurementModel::build(2, 4, {4, 2, 20.0});
  const Dataset d = gen_dataset(toy_channel(), model, SnrPolicy::fixed(20), 30, 5);
  EXPECT_EQ(evaluate(oracle_estimator(), d), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(zero_estimator(), d), 1.0);
}

TEST(Evaluate, LsRecoversNoiselessSquareToy) {
  const auto model = MeasurementModel::build(2, 4, {4, 2, kNoiselessSnrDb});
  const Dataset d = gen_dataset(toy_channel(), model, SnrPolicy::fixed(kNoiselessSnrDb), 50, 9);
  EXPECT_LE(evaluate(ls_estimator(model), d), 1e-20);
  EXPECT_LE(evaluate(gd_estimator(model), d), 1e-8);
  EXPECT_LE(evaluate(svt_estimator(model), d.head(10)), 1e-8);
}

TEST(Evaluate, UnfoldingEstimatorMatchesPredict) {
  const auto model = MeasurementModel::build(2, 4, {3, 2, 20.0});
  const Dataset d = gen_dataset(toy_channel(), model, SnrPolicy::fixed(20), 5, 1);
  const UnfoldingParams p = init_params(2, 4, 3, model.gram_real());
  const RMatrix out = unfolding_estimator(p)(d);
  for (Index j = 0; j < d.size(); ++j)
    EXPECT_LE((out.col(j) - predict(p, d.gram, d.stats.col(j))).norm(), 1e-12);
}

TEST(SnrPolicy, Labels) {
  EXPECT_EQ(SnrPolicy::fixed(20).label(), "20dB");
  EXPECT_EQ(SnrPolicy::mixed({0, 20}).label(), "mixed");
  EXPECT_THROW(SnrPolicy::mixed({}).validate(), ConfigError);
}

TEST(Profiles, PaperSizes) {
  const ExperimentSpec p = paper_profile();
  EXPECT_EQ(p.channel.M, 16);
  EXPECT_EQ(p.channel.N, 32);
  EXPECT_EQ(p.network.layers, 15);
  EXPECT_EQ(p.data.n_train, 100000);
  EXPECT_EQ(p.sounding.K, 28);
  EXPECT_EQ(p.sounding.N_W, 8);
  EXPECT_EQ(p.channel.var_nlos, 0.01);
  EXPECT_NO_THROW(p.validate());
  EXPECT_NO_THROW(desk_profile().validate());
  EXPECT_THROW(profile_by_name("huge"), ConfigError);
}

TEST(Studies, NamesRoundTrip) {
  for (auto n : {StudyName::Overhead, StudyName::Paths, StudyName::TrainSnr, StudyName::AngleRange})
    EXPECT_EQ(parse_study_name(study_name(n)), n);
  EXPECT_THROW(parse_study_name("fig9"), ConfigError);
}

TEST(Studies, RowCountsAndLabels) {
  const ExperimentSpec s = tiny_spec();
  const auto overhead = run_overhead_study(s);
  ASSERT_EQ(overhead.size(), 15u);
  EXPECT_EQ(overhead.front().curve, "unfold_K2");
  EXPECT_EQ(overhead.back().curve, "ls_K4");
  for (const auto& r : overhead) {
    EXPECT_EQ(r.n_samples, s.data.n_test);
    EXPECT_GE(r.nmse, 0.0);
  }
  EXPECT_EQ(run_paths_study(s).size(), 15u);
  const auto snr = run_train_snr_study(s);
  ASSERT_EQ(snr.size(), 15u);
  EXPECT_EQ(snr[0].curve, "train_0dB");
  EXPECT_EQ(snr[14].curve, "train_mixed");
  const auto ranges = run_angle_range_study(s);
  ASSERT_EQ(ranges.size(), 15u);
  EXPECT_EQ(ranges[5].curve, "range_0_0.5");
}

TEST(Studies, OverheadWithSvtAddsCurves) {
  ExperimentSpec s = tiny_spec();
  s.study.include_svt = true;
  const auto rows = run_overhead_study(s);
  ASSERT_EQ(rows.size(), 25u);
  EXPECT_EQ(rows.back().n_samples, 4);
}

TEST(Studies, ReproducibleCsv) {
  const ExperimentSpec s = tiny_spec();
  std::ostringstream a, b;
  write_results_csv(a, run_train_snr_study(s));
  write_results_csv(b, run_train_snr_study(s));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Csv, HeaderAndTenSignificantDigits) {
  std::ostringstream out;
  write_results_csv(out, {{"ls_K16", 20.0, 0.123456789012345, 10000}});
  EXPECT_EQ(out.str(), "curve,test_snr_db,nmse,n_samples\nls_K16,20,0.123456789,10000\n");
  std::ostringstream h;
  write_history_csv(h, {{21, 5e-4, 0.5}});
  EXPECT_EQ(h.str(), "epoch,learning_rate,train_nmse\n21,0.0005,0.5\n");
}

TEST(ExperimentSpec, ValidationNamesField) {
  ExperimentSpec s = tiny_spec();
  s.data.n_test = 0;
  try {
    s.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("n_test"), std::string::npos);
  }
  s = tiny_spec();
  s.study.overhead_ls_K = 5;  // > N = 4
  EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace risu
