#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "risu/experiments.hpp"

namespace risu::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kConfig = 3, kRuntime = 4 };

enum class Subcommand { GenData, Train, Eval, Baseline, Study };

enum class Method { Ls, Gd, Svt, Unfold };

/// Carries the exit code for the failure category.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct RunConfig {
  Subcommand subcommand = Subcommand::Train;
  std::optional<std::filesystem::path> config_path;
  std::uint64_t seed = 1;
  std::string profile = "desk";
  std::filesystem::path output_dir = ".";
  int jobs = 1;
  std::optional<Method> method;
  std::optional<StudyName> study;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::string> timestamp;  // fixes the CSV file-name stamp
  ExperimentSpec spec;                   // resolved and validated
};

/// Parses argv (argv[0] is the program name) and validates the config.
/// Throws CliError with kUsage or kConfig. `--help` throws CliError with kOk
/// after printing to `out`.
RunConfig parse_and_validate(const std::vector<std::string>& args, std::ostream& out);

/// Runs the selected pipeline; all files go under run.output_dir.
/// Throws CliError with kRuntime on divergence, checksum or I/O failures.
void dispatch(const RunConfig& run, std::ostream& out, std::ostream& log);

/// parse_and_validate + dispatch with error reporting; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace risu::cli
