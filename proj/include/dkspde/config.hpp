#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dkspde/grid.hpp"
#include "dkspde/harness.hpp"
#include "dkspde/noise.hpp"
#include "dkspde/nonlin.hpp"
#include "dkspde/solver.hpp"

namespace dkspde {

/// A run configuration. The file format is a flat sectioned key-value text:
///
///   # comment
///   seed = 7
///   [model]
///   preset = power-law-dk
///   m = 1
///
/// Sections and keys are listed in README.md; unknown keys, duplicate keys and
/// malformed values are ConfigErrors naming the key and line.
struct RunConfig {
  std::string preset;
  std::map<std::string, double> params;
  /// Function overrides by slot: Phi, sigma, nu, phi, lambda (see parse_function).
  std::map<std::string, std::string> functions;
  std::array<double, 2> nu_direction{1.0, 0.0};
  double p = 2.0;

  GridSpec grid;
  SolverConfig solver;
  SpectralNoiseSpec noise_F;
  SpectralNoiseSpec noise_G;
  InitialSpec initial_a;
  InitialSpec initial_b{"sine", 1.0, 0.5, 0.7853981633974483, 1.0};

  /// [experiment]
  std::string experiment_kind;
  int ensemble = 64;
  std::vector<LadderLevel> ladder;
  std::vector<CascadeEntry> schedule;
  std::map<std::string, double> thresholds;

  /// [kinetic]
  double xi_max = 8.0;
  int per_octave = 4;
  int per_unit = 4;
  std::vector<double> betas;
  std::vector<double> Ms;

  /// [output]
  std::filesystem::path out_dir = "out";
  long long snapshot_stride = 0;
  bool write_snapshots = true;

  std::uint64_t seed = 0;

  /// Canonical text of the fully resolved configuration (parseable again).
  std::string resolved_text() const;
};

RunConfig parse_config_text(std::string_view text, const std::string& origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

NonlinearitySet build_nonlinearity(const RunConfig& cfg);
NoiseField build_noise(const RunConfig& cfg);
/// ExperimentSpec from the [experiment] section (kind defaults to `fallback_kind`).
ExperimentSpec build_experiment(const RunConfig& cfg, const std::string& fallback_kind);

/// Levenshtein distance, used for key suggestions.
std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace dkspde
