#include "risu/cli.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <sstream>
#include <map>

#include <CLI11.hpp>
#include <omp.h>

#include "risu/checkpoint.hpp"
#include "risu/config.hpp"
#include "risu/dataset_io.hpp"

namespace risu::cli {
namespace {

const std::map<std::string, Method> kMethods = {
    {"ls", Method::Ls}, {"gd", Method::Gd}, {"svt", Method::Svt}, {"unfold", Method::Unfold}};

std::string method_name(Method m) {
  for (const auto& [name, value] : kMethods) {
    if (value == m) return name;
  }
  return "?";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::filesystem::path output_path(const RunConfig& run, const std::string& name) {
  return run.output_dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(kRuntime, "cannot write " + path.string());
  out << text;
  if (!out) throw CliError(kRuntime, "failed writing " + path.string());
}

std::string results_text(const std::vector<ResultRow>& rows) {
  std::ostringstream s;
  write_results_csv(s, rows);
  return s.str();
}

std::string history_text(const std::vector<EpochRecord>& history) {
  std::ostringstream s;
  write_history_csv(s, history);
  return s.str();
}

MeasurementModel single_model(const ExperimentSpec& spec) {
  return MeasurementModel::build(spec.channel.M, spec.channel.N, spec.sounding);
}

std::string stamp(const RunConfig& run) { return run.timestamp ? *run.timestamp : utc_timestamp(); }

void run_gen_data(const RunConfig& run, std::ostream& out, std::ostream& log) {
  const auto& spec = run.spec;
  const auto model = single_model(spec);
  log << "generating " << spec.data.n_train << " samples (" << spec.data.train_policy.label()
      << ")\n";
  const Dataset data = gen_dataset(spec.channel, model, spec.data.train_policy, spec.data.n_train,
                                   derive_seed(derive_seed(spec.seed, "train"), "dataset"));
  const auto path = output_path(run, "train_dataset.risd");
  save_dataset(data, path);
  out << path.string() << '\n';
}

void run_train(const RunConfig& run, std::ostream& out, std::ostream& log) {
  const auto& spec = run.spec;
  const auto model = single_model(spec);
  const TrainedModel m =
      train_unfolding(spec, spec.channel, model, spec.data.train_policy,
                      derive_seed(spec.seed, "train"), "unfold_K" + std::to_string(spec.sounding.K),
                      [&log](const std::string& s) { log << s << '\n'; });
  const auto ckpt = output_path(run, "model.risu");
  save_checkpoint(m.params, ckpt);
  write_text(output_path(run, "loss_history.csv"), history_text(m.history));
  out << ckpt.string() << '\n';
}

void run_evaluation(const RunConfig& run, Method method, std::ostream& out, std::ostream& log) {
  const auto& spec = run.spec;
  const auto model = single_model(spec);
  const std::string k = "K" + std::to_string(spec.sounding.K);
  Index n = spec.data.n_test;

  Estimator estimator;
  switch (method) {
    case Method::Ls: estimator = ls_estimator(model); break;
    case Method::Gd: estimator = gd_estimator(model); break;
    case Method::Svt:
      estimator = svt_estimator(model);
      n = std::min(n, spec.study.svt_samples);
      break;
    case Method::Unfold: {
      const auto path = run.checkpoint ? *run.checkpoint : output_path(run, "model.risu");
      UnfoldingParams params = load_checkpoint(path);
      if (params.dim() != model.dim())
        throw CliError(kConfig, "checkpoint " + path.string() + " has D = " +
                                    std::to_string(params.dim()) + " but the config needs D = " +
                                    std::to_string(model.dim()));
      estimator = unfolding_estimator(std::move(params));
      break;
    }
  }

  const CMatrix channels =
      draw_channels(spec.channel, spec.data.n_test, derive_seed(spec.seed, "eval/test-channels"));
  const std::string curve = method_name(method) + "_" + k;
  log << "[" << curve << "] evaluating on " << n << " samples\n";
  const auto rows = evaluate_over_snrs(curve, estimator, channels.leftCols(n), model,
                                       spec.data.test_snrs_db,
                                       derive_seed(spec.seed, "eval/test-noise/" + k));
  const std::string prefix =
      run.subcommand == Subcommand::Eval ? "eval" : "baseline_" + method_name(method);
  const auto path = output_path(run, prefix + "_" + stamp(run) + ".csv");
  const std::string text = results_text(rows);
  write_text(path, text);
  out << text;
}

void run_study_command(const RunConfig& run, std::ostream& out, std::ostream& log) {
  const StudyName name = *run.study;
  const std::string study(study_name(name));
  StudyHooks hooks;
  hooks.log = [&log](const std::string& s) { log << s << '\n'; };
  hooks.on_trained = [&](const TrainedModel& m) {
    save_checkpoint(m.params, output_path(run, study + "_" + m.label + ".risu"));
    write_text(output_path(run, study + "_" + m.label + "_loss.csv"), history_text(m.history));
  };
  const auto rows = run_study(name, run.spec, hooks);
  const std::string text = results_text(rows);
  write_text(output_path(run, study + "_" + stamp(run) + ".csv"), text);
  out << text;
}

}  // namespace

RunConfig parse_and_validate(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"Deep-unfolding cascaded channel estimation for RIS-aided mmWave SIMO links",
               "risu"};
  app.require_subcommand(1, 1);

  RunConfig run;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> profile;
  std::string output_dir = ".";
  std::string method;
  std::string study;
  std::string checkpoint;
  std::string timestamp;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config");
    sub->add_option("--seed", seed, "Master seed (overrides the config file)");
    sub->add_option("--profile", profile, "Base profile")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--output-dir", output_dir, "Directory for every output file");
    sub->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--timestamp", timestamp, "Fixed stamp for CSV file names");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate and dump a training dataset");
  auto* trn = app.add_subcommand("train", "Train an unfolding network");
  auto* evl = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  auto* bas = app.add_subcommand("baseline", "Evaluate a baseline estimator");
  auto* stu = app.add_subcommand("study", "Run one of the four studies");
  for (auto* s : {gen, trn, evl, bas, stu}) add_common(s);
  evl->add_option("--checkpoint", checkpoint, "Checkpoint file (default OUTPUT_DIR/model.risu)");
  bas->add_option("--checkpoint", checkpoint, "Checkpoint file for --method unfold");
  evl->add_option("--method", method, "Estimator")->check(CLI::IsMember({"unfold"}));
  bas->add_option("--method", method, "Estimator")
      ->required()
      ->check(CLI::IsMember({"ls", "gd", "svt", "unfold"}));
  stu->add_option("--name", study, "Study name")
      ->required()
      ->check(CLI::IsMember({"overhead", "paths", "train-snr", "angle-range"}));

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    throw CliError(kOk, "");
  } catch (const CLI::ParseError& e) {
    throw CliError(kUsage, e.what());
  }

  if (gen->parsed()) run.subcommand = Subcommand::GenData;
  if (trn->parsed()) run.subcommand = Subcommand::Train;
  if (evl->parsed()) run.subcommand = Subcommand::Eval;
  if (bas->parsed()) run.subcommand = Subcommand::Baseline;
  if (stu->parsed()) run.subcommand = Subcommand::Study;

  if (run.subcommand == Subcommand::Eval) run.method = Method::Unfold;
  if (!method.empty()) run.method = kMethods.at(method);
  if (!study.empty()) run.study = parse_study_name(study);
  if (!checkpoint.empty()) run.checkpoint = checkpoint;
  if (!timestamp.empty()) run.timestamp = timestamp;
  run.output_dir = output_dir;

  try {
    if (!config_path.empty()) {
      run.config_path = config_path;
      if (!std::filesystem::exists(config_path))
        throw ConfigError("config file not found: " + config_path);
      run.spec = load_experiment_config(config_path, profile);
    } else {
      run.spec = profile_by_name(profile.value_or("desk"));
    }
    if (seed) run.spec.seed = *seed;
    run.spec.validate();
  } catch (const ConfigError& e) {
    throw CliError(kConfig, e.what());
  }
  run.seed = run.spec.seed;
  run.profile = run.spec.profile;
  return run;
}

void dispatch(const RunConfig& run, std::ostream& out, std::ostream& log) {
  omp_set_num_threads(run.jobs);
  Eigen::setNbThreads(run.jobs);
  try {
    std::filesystem::create_directories(run.output_dir);
    write_text(output_path(run, "resolved_config.json"), to_json(run.spec).dump(2) + "\n");
    switch (run.subcommand) {
      case Subcommand::GenData: run_gen_data(run, out, log); break;
      case Subcommand::Train: run_train(run, out, log); break;
      case Subcommand::Eval:
      case Subcommand::Baseline: run_evaluation(run, run.method.value_or(Method::Unfold), out, log); break;
      case Subcommand::Study: run_study_command(run, out, log); break;
    }
  } catch (const CliError&) {
    throw;
  } catch (const ConfigError& e) {
    throw CliError(kConfig, e.what());
  } catch (const std::exception& e) {
    throw CliError(kRuntime, e.what());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = parse_and_validate(args, out);
    dispatch(cfg, out, err);
    return kOk;
  } catch (const CliError& e) {
    if (e.code() != kOk) err << "risu: " << e.what() << '\n';
    return e.code();
  }
}

}  // namespace risu::cli
