// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "../support/oracles.hpp"
#include "risu/checkpoint.hpp"
#include "risu/cli.hpp"
#include "risu/estimators.hpp"
#include "risu/experiments.hpp"
#include "risu/unfolding_net.hpp"

namespace {

using namespace risu;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::filesystem::path output_dir = "acceptance_out";
  Index n_train = 20000;
  Index n_test = 10000;
  int epochs = 40;
  int jobs = 1;
  std::uint64_t seed = 1;
  std::vector<int> only;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void log_line(const std::string& s) { std::cerr << "  " << s << '\n'; }

// ---------------------------------------------------------------------------
// 1. Gradient oracle

double loss_of(const UnfoldingParams& p, const RMatrix& g, const RMatrix& c, const RMatrix& h0,
               const RMatrix& truth) {
  return nmse_loss(forward(p, g, c, h0).output, truth);
}

Outcome gradient_oracle() {
  constexpr int kNets = 24;
  constexpr Index kDim = 8, kLayers = 3, kBatch = 3;
  constexpr double kStep = 1e-6;
  double worst = 0.0;
  for (int net = 0; net < kNets; ++net) {
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(net));
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const RMatrix a = testing::random_real(kDim, kDim, rng);
    const RMatrix gram = a.transpose() * a / static_cast<double>(kDim);
    UnfoldingParams p;
    for (Index l = 0; l < kLayers; ++l) {
      p.layers.push_back({-u(rng), u(rng), -u(rng),
                          RMatrix::Identity(kDim, kDim) + 0.3 * testing::random_real(kDim, kDim, rng),
                          0.1 * testing::random_real(kDim, 1, rng).col(0)});
    }
    const RMatrix c = testing::random_real(kDim, kBatch, rng);
    const RMatrix h0 = net % 2 ? testing::random_real(kDim, kBatch, rng) : RMatrix::Zero(kDim, kBatch);
    const RMatrix truth = testing::random_real(kDim, kBatch, rng);
    const Gradients g = backward(p, forward(p, gram, c, h0), gram, c, truth);

    // Flatten every parameter, perturb one coordinate at a time.
    std::vector<double*> coords;
    std::vector<double> analytic;
    for (Index l = 0; l < kLayers; ++l) {
      auto& pl = p.layers[static_cast<std::size_t>(l)];
      const auto& gl = g.layers[static_cast<std::size_t>(l)];
      coords.insert(coords.end(), {&pl.delta1, &pl.delta2, &pl.delta3});
      analytic.insert(analytic.end(), {gl.delta1, gl.delta2, gl.delta3});
      for (Index i = 0; i < pl.weight.size(); ++i) {
        coords.push_back(pl.weight.data() + i);
        analytic.push_back(gl.weight.data()[i]);
      }
      for (Index i = 0; i < pl.bias.size(); ++i) {
        coords.push_back(pl.bias.data() + i);
        analytic.push_back(gl.bias(i));
      }
    }
    RVector numeric(static_cast<Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) {
      double* x = coords[i];
      const double base = *x;
      numeric(static_cast<Index>(i)) = testing::central_difference(
          [&](double v) {
            *x = v;
            const double out = loss_of(p, gram, c, h0, truth);
            *x = base;
            return out;
          },
          base, kStep);
    }
    // Per-tensor norm-wise relative error.
    std::size_t at = 0;
    const Eigen::Map<const RVector> an(analytic.data(), static_cast<Index>(analytic.size()));
    for (Index l = 0; l < kLayers; ++l) {
      for (Index len : {Index{1}, Index{1}, Index{1}, kDim * kDim, kDim}) {
        worst = std::max(worst, testing::relative_error(an.segment(static_cast<Index>(at), len),
                                                        numeric.segment(static_cast<Index>(at), len)));
        at += static_cast<std::size_t>(len);
      }
    }
  }
  return {worst <= 1e-6, std::to_string(kNets) + " nets, D=8, L=3, worst rel err " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 2. Exact recovery on the square toy

Outcome exact_recovery() {
  ChannelConfig cfg;
  cfg.M = 2;
  cfg.N = 4;
  const auto model = MeasurementModel::build(2, 4, {4, 2, kNoiselessSnrDb});
  double ls = 0.0, gd = 0.0, svt = 0.0;
  Rng rng(derive_seed(7, "exact-recovery"));
  constexpr int kTrials = 20;
  for (int t = 0; t < kTrials; ++t) {
    const CVector h = draw_cascaded_channel(cfg, rng).vector;
    const CVector y = model.psi() * h;
    ls = std::max(ls, nmse(ls_estimate(model, y), h));
    gd = std::max(gd, nmse(reg_gradient_descent(model, y, GdConfig::defaults_for(model, 0.0)), h));
    svt = std::max(svt, nmse(svt_nuclear_solve(model, y, SvtConfig::defaults_for(model, 0.0)), h));
  }
  return {ls <= 1e-20 && gd <= 1e-8 && svt <= 1e-8,
          "worst of " + std::to_string(kTrials) + ": LS " + fmt(ls) + ", GD " + fmt(gd) + ", SVT " + fmt(svt)};
}

// ---------------------------------------------------------------------------
// 3. Affine network equals classic gradient iterations

Outcome model_equivalence() {
  ChannelConfig cfg;
  const auto model = MeasurementModel::build(cfg.M, cfg.N, SoundingConfig{});
  Rng rng(derive_seed(7, "equivalence"));
  const CVector h = draw_cascaded_channel(cfg, rng).vector;
  const Observation obs = observe(model, h, 20.0, rng);
  GdConfig gd = GdConfig::defaults_for(model, 0.0);
  gd.tol = 1e-300;
  double worst = 0.0;
  for (Index layers : {1, 5, 8, 15}) {
    UnfoldingParams p;
    for (Index i = 0; i < layers; ++i) {
      p.layers.push_back({-gd.step_size, gd.step_size, 0.0, RMatrix::Identity(model.dim(), model.dim()),
                          RVector::Zero(model.dim())});
    }
    gd.max_iters = static_cast<int>(layers);
    const RMatrix net =
        forward(p, model.gram_real(), obs.stat_real, RMatrix::Zero(model.dim(), 1), false).output;
    const RVector classic = lift(reg_gradient_descent(model, obs.y, gd));
    worst = std::max(worst, (net.col(0) - classic).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "L in {1,5,8,15}, max abs diff " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 4-7. Desk-scale studies

ExperimentSpec desk_spec(const Options& o) {
  ExperimentSpec s = desk_profile();
  s.seed = o.seed;
  s.data.n_train = o.n_train;
  s.data.n_test = o.n_test;
  s.network.schedule.epochs = o.epochs;
  return s;
}

using Table = std::map<std::string, std::map<double, double>>;

Table run_and_save(StudyName name, const ExperimentSpec& spec, const Options& o) {
  const std::string study(study_name(name));
  StudyHooks hooks;
  hooks.log = log_line;
  hooks.on_trained = [&](const TrainedModel& m) {
    save_checkpoint(m.params, o.output_dir / (study + "_" + m.label + ".risu"));
    std::ofstream h(o.output_dir / (study + "_" + m.label + "_loss.csv"));
    write_history_csv(h, m.history);
  };
  const auto rows = run_study(name, spec, hooks);
  std::ofstream csv(o.output_dir / (study + ".csv"));
  write_results_csv(csv, rows);
  Table t;
  for (const auto& r : rows) t[r.curve][r.test_snr_db] = r.nmse;
  return t;
}

std::string curve_list(const Table& t, const std::vector<std::string>& curves, double snr) {
  std::string s;
  for (const auto& c : curves) s += (s.empty() ? "" : ", ") + c + " " + fmt(t.at(c).at(snr));
  return s;
}

Outcome overhead_ordering(const Options& o) {
  const ExperimentSpec s = desk_spec(o);
  const Table t = run_and_save(StudyName::Overhead, s, o);
  const std::string small = "unfold_K" + std::to_string(s.study.overhead_unfold_K.front());
  const std::string ls = "ls_K" + std::to_string(s.study.overhead_ls_K);
  const double a = t.at(small).at(20.0), b = t.at(ls).at(20.0);
  std::vector<std::string> curves;
  for (const auto& [c, _] : t) curves.push_back(c);
  return {a < b, "@20 dB: " + curve_list(t, curves, 20.0) + " (need " + small + " < " + ls + ")"};
}

/// Passes when each successive curve is no better than the previous one
/// shrunk by `tie`, i.e. the sequence is non-decreasing up to ties.
bool non_decreasing(const std::vector<double>& v, double tie) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1] * (1.0 - tie)) return false;
  }
  return true;
}

Outcome paths_trend(const Options& o) {
  const ExperimentSpec s = desk_spec(o);
  const Table t = run_and_save(StudyName::Paths, s, o);
  std::vector<std::string> curves;
  std::vector<double> v;
  for (Index l : s.study.path_counts) {
    curves.push_back("unfold_L" + std::to_string(l));
    v.push_back(t.at(curves.back()).at(20.0));
  }
  return {non_decreasing(v, 0.05), "@20 dB: " + curve_list(t, curves, 20.0) + " (non-decreasing, 5% ties)"};
}

Outcome train_snr_trend(const Options& o) {
  const Table t = run_and_save(StudyName::TrainSnr, desk_spec(o), o);
  const double hi = t.at("train_20dB").at(20.0), lo = t.at("train_0dB").at(20.0);
  return {hi <= lo, "@20 dB: " + curve_list(t, {"train_0dB", "train_20dB", "train_mixed"}, 20.0) +
                        " (need 20dB <= 0dB)"};
}

Outcome angle_range_trend(const Options& o) {
  const ExperimentSpec s = desk_spec(o);
  const Table t = run_and_save(StudyName::AngleRange, s, o);
  std::vector<std::string> curves;
  std::vector<double> v;
  for (const auto& r : s.study.sine_ranges) {
    curves.push_back("range_" + format_number(r.lower) + "_" + format_number(r.upper));
    v.push_back(t.at(curves.back()).at(20.0));
  }
  bool ok = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1] * 1.05) ok = false;
  }
  return {ok, "@20 dB: " + curve_list(t, curves, 20.0) + " (non-increasing, 5% ties)"};
}

// ---------------------------------------------------------------------------
// 8. SVT objective

Outcome svt_objective() {
  ChannelConfig cfg;
  cfg.M = 4;
  cfg.N = 4;
  const auto model = MeasurementModel::build(4, 4, {4, 4, 10.0});
  Rng rng(derive_seed(7, "svt-objective"));
  bool ok = true;
  double worst_rise = 0.0, margin_ls = 1e300, margin_truth = 1e300;
  constexpr int kTrials = 10;
  for (int t = 0; t < kTrials; ++t) {
    const CVector h = draw_cascaded_channel(cfg, rng).vector;
    const Observation obs = observe(model, h, 10.0, rng);
    const double lambda = lambda_reference(obs.noise_var, 4, 4, 4, 4);
    SvtTrace trace;
    const CVector x = svt_nuclear_solve(model, obs.y, SvtConfig::defaults_for(model, lambda), &trace);
    const double f = nuclear_objective(model, obs.y, x, lambda);
    const double f_ls = nuclear_objective(model, obs.y, ls_estimate(model, obs.y), lambda);
    const double f_true = nuclear_objective(model, obs.y, h, lambda);
    ok = ok && f <= f_ls && f <= f_true;
    margin_ls = std::min(margin_ls, f_ls - f);
    margin_truth = std::min(margin_truth, f_true - f);
    for (std::size_t i = 1; i < trace.objective.size(); ++i)
      worst_rise = std::max(worst_rise, trace.objective[i] - trace.objective[i - 1]);
  }
  ok = ok && worst_rise <= 1e-9;
  return {ok, std::to_string(kTrials) + " instances M=N=4: min f(LS)-f(SVT) " + fmt(margin_ls) +
                  ", min f(true)-f(SVT) " + fmt(margin_truth) + ", max per-iteration rise " +
                  fmt(worst_rise)};
}

// ---------------------------------------------------------------------------
// 9. Rank invariant

Outcome rank_invariant() {
  double worst = 0.0;
  for (Index l1 : {1, 2, 3}) {
    ChannelConfig cfg;
    cfg.L1 = l1;
    cfg.L2 = l1;
    Rng rng(derive_seed(7, "rank/L1=" + std::to_string(l1)));
    for (int i = 0; i < 1000; ++i) {
      const CMatrix hc = draw_cascaded_channel(cfg, rng).matrix;
      const RVector s = Eigen::JacobiSVD<CMatrix>(hc).singularValues();
      for (Index k = l1; k < s.size(); ++k) worst = std::max(worst, s(k) / s(0));
    }
  }
  return {worst <= 1e-10, "3000 draws, worst sigma_{>L1}/sigma_1 " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 10. Reference lambda

Outcome lambda_formula() {
  constexpr double kFrozen = 0.824355315400518330021;  // 30-digit evaluation
  const double got = lambda_reference(0.01, 16, 32, 8, 28);
  const double step = testing::lambda_step_by_step(0.01, 16, 32, 8, 28);
  const double e1 = std::abs(got - step) / step, e2 = std::abs(got - kFrozen) / kFrozen;
  char buf[128];
  std::snprintf(buf, sizeof buf, "lambda = %.15f, rel err %.2g (step-by-step), %.2g (frozen)", got,
                e1, e2);
  return {e1 <= 1e-12 && e2 <= 1e-12, buf};
}

// ---------------------------------------------------------------------------
// 11. Reproducibility

std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    files[e.path().filename().string()] = {std::istreambuf_iterator<char>(in),
                                           std::istreambuf_iterator<char>()};
  }
  return files;
}

Outcome reproducibility(const Options& o) {
  const auto config = o.output_dir / "repro_config.json";
  std::ofstream(config) << R"({"schema_version": 1,
 "network": {"layers": 3, "epochs": 3},
 "data": {"n_train": 500, "n_test": 200}})";
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"repro_a", "repro_b"}) {
    const auto dir = o.output_dir / name;
    std::filesystem::remove_all(dir);
    std::ostringstream out, err;
    const int code = cli::run({"risu", "study", "--name", "train-snr", "--config", config.string(),
                               "--seed", "11", "--output-dir", dir.string(), "--timestamp", "r",
                               "--jobs", std::to_string(o.jobs)},
                              out, err);
    if (code != 0) return {false, "study exited with " + std::to_string(code) + ": " + err.str()};
    runs.push_back(read_tree(dir));
  }
  std::size_t ckpts = 0, csvs = 0;
  for (const auto& [name, _] : runs[0]) {
    if (name.ends_with(".risu")) ++ckpts;
    if (name.ends_with(".csv")) ++csvs;
  }
  const bool same = runs[0] == runs[1] && ckpts == 3;
  return {same, "train-snr study twice: " + std::to_string(ckpts) + " checkpoints, " +
                    std::to_string(csvs) + " CSVs " + (runs[0] == runs[1] ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Acceptance suite", "risu_acceptance"};
  app.add_option("--output-dir", o.output_dir, "Where study CSVs and checkpoints go");
  app.add_option("--n-train", o.n_train, "Training samples per network");
  app.add_option("--n-test", o.n_test, "Test samples per curve");
  app.add_option("--epochs", o.epochs, "Training epochs per network");
  app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Master seed for the desk studies");
  app.add_option("--only", o.only, "Run only these criterion numbers");
  CLI11_PARSE(app, argc, argv);

  omp_set_num_threads(o.jobs);
  std::filesystem::create_directories(o.output_dir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"exact recovery", exact_recovery},
      {"model-based equivalence", model_equivalence},
      {"overhead ordering", [&] { return overhead_ordering(o); }},
      {"paths trend", [&] { return paths_trend(o); }},
      {"training-SNR trend", [&] { return train_snr_trend(o); }},
      {"angle-range trend", [&] { return angle_range_trend(o); }},
      {"SVT objective", svt_objective},
      {"rank invariant", rank_invariant},
      {"lambda reference", lambda_formula},
      {"reproducibility", [&] { return reproducibility(o); }},
  };

  std::cout << "desk scale: n_train " << o.n_train << ", n_test " << o.n_test << ", epochs "
            << o.epochs << ", seed " << o.seed << std::endl;
  std::ofstream summary(o.output_dir / "acceptance_summary.txt");
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), number) == o.only.end()) continue;
    const auto t0 = Clock::now();
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    ++ran;
    if (!r.pass) ++failed;
    char line[1024];
    std::snprintf(line, sizeof line, "[%s] %2d %-24s %s (%.1f s)\n", r.pass ? "PASS" : "FAIL",
                  number, criteria[i].first.c_str(), r.detail.c_str(), seconds_since(t0));
    std::fputs(line, stdout);
    std::fflush(stdout);
    summary << line << std::flush;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  summary << ran - failed << '/' << ran << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
