#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hp::cli {

enum ExitCode : int { kPass = 0, kNumericFailure = 1, kConfigError = 2, kInternalError = 3 };

/// Invalid configuration; the message starts with the offending key path.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

struct RunOptions {
  std::filesystem::path out = "hpencil-out";
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;  ///< overrides the config seed
};

struct RunResult {
  int exit_code = kPass;
  std::string status;  ///< pass | fail | error
  std::string message;
  std::vector<std::string> files;  ///< written outputs, relative to the output directory
  std::filesystem::path manifest;
};

const std::vector<std::string>& experiment_kinds();

/// Validates the JSON text against the schema of the experiment, runs it and
/// writes CSV, JSON summary, plot scripts and manifest.json into opt.out.
/// Never throws: failures are reported through the exit code and manifest.
RunResult run(const std::string& kind, const std::string& config_text, const RunOptions& opt);
RunResult run_file(const std::string& kind, const std::filesystem::path& config,
                   const RunOptions& opt);

/// Writes gnuplot scripts for the CSVs an experiment produced; throws
/// std::runtime_error naming the first missing CSV.
std::vector<std::string> emit_plots(const std::string& kind, const std::filesystem::path& dir);

/// Command-line front end: hpencil <subcommand> --config <path> [--seed N] [--out DIR] [--threads N].
int main_entry(int argc, char** argv);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace hp::cli
