#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dkspde::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitExperimentFailed = 1;
inline constexpr int kExitConfigError = 2;

struct Options {
  std::string subcommand;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  unsigned threads = 1;
  bool override_cfl = false;
  /// acceptance: restrict to these criteria (empty runs all).
  std::vector<int> only;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand; messages go to `log`. Never throws.
int dispatch(const Options& opts, std::ostream& log);

/// Parses argv with CLI11 and dispatches.
int main(int argc, char** argv);

struct DeterminismReport {
  bool pass = true;
  std::vector<std::string> compared;
  std::vector<std::string> mismatches;
};

/// Runs every subcommand twice (1 thread and `threads` threads) on a small
/// built-in configuration under `work_dir` and compares all CSV outputs bytewise.
DeterminismReport determinism_check(const std::filesystem::path& work_dir, unsigned threads = 3);

}  // namespace dkspde::cli
