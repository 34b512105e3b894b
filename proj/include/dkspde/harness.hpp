#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dkspde/grid.hpp"
#include "dkspde/noise.hpp"
#include "dkspde/solver.hpp"

namespace dkspde {

/// Initial data: "sine" level + amplitude sin(x + shift), "bump" a compactly
/// supported level (1 - ((x - pi - shift)/width)^2)_+^2, "constant" level.
/// In d = 2 the profiles are products of the one-dimensional ones with level 1 in y.
struct InitialSpec {
  std::string kind = "sine";
  double level = 1.0;
  double amplitude = 0.5;
  double shift = 0.0;
  double width = 1.0;
};

GridState make_initial(const GridSpec& grid, const InitialSpec& spec);

/// make_preset followed by the slot overrides. Throws ConfigError for an unknown slot.
NonlinearitySet make_model(const std::string& preset, const std::map<std::string, double>& params,
                           const std::map<std::string, std::string>& functions);

struct LadderLevel {
  int n = 128;
  double dt = 1e-3;
};

struct ExperimentSpec {
  /// contraction | gen_contraction | moments | entropy | kinetic | cascade |
  /// ito_strat | mass | heat
  std::string kind;
  /// Row label in the summary; defaults to kind.
  std::string label;
  std::string preset = "power-law-dk";
  std::map<std::string, double> params{{"m", 1.0}};
  /// Function overrides by slot (Phi, sigma, nu, phi, lambda), see parse_function.
  std::map<std::string, std::string> functions;
  int d = 1;
  /// Reference level first, then strictly refining levels.
  std::vector<LadderLevel> ladder{{128, 1e-3}};
  /// alpha, t_end, scheme, correction and mollification; dt comes from the ladder.
  SolverConfig solver;
  SpectralNoiseSpec noise_F;
  SpectralNoiseSpec noise_G;
  InitialSpec initial_a;
  InitialSpec initial_b{"sine", 1.0, 0.5, 0.7853981633974483, 1.0};
  int ensemble = 64;
  std::uint64_t seed = 1;
  std::map<std::string, double> thresholds;
  std::vector<CascadeEntry> schedule;
  double p = 2.0;
  /// Kinetic experiment: dyadic betas and unit windows.
  std::vector<double> betas;
  std::vector<double> Ms;
  /// Empty disables evidence files.
  std::filesystem::path evidence_dir;
  unsigned threads = 1;

  double threshold(const std::string& key, double fallback) const;
  /// Throws ConfigError for an empty ensemble or a non-refining ladder.
  void validate() const;
};

struct Verdict {
  std::string id;
  bool pass = false;
  std::vector<std::pair<std::string, double>> statistics;
  std::vector<std::string> evidence;
  std::string note;

  void set(const std::string& key, double v);
  double stat(const std::string& key) const;
  bool has(const std::string& key) const;
  /// key=value pairs separated by ';'.
  std::string statistics_text() const;
};

Verdict exp_contraction(const ExperimentSpec& spec);
Verdict exp_gen_contraction(const ExperimentSpec& spec);
Verdict exp_moments(const ExperimentSpec& spec);
Verdict exp_entropy(const ExperimentSpec& spec);
Verdict exp_kinetic(const ExperimentSpec& spec);
Verdict exp_cascade(const ExperimentSpec& spec);
Verdict exp_ito_strat(const ExperimentSpec& spec);
Verdict exp_mass(const ExperimentSpec& spec);
/// Deterministic heat benchmark against the exact Fourier solution.
Verdict exp_heat(const ExperimentSpec& spec);

/// Dispatches on spec.kind; throws ConfigError for an unknown kind.
Verdict run_experiment(const ExperimentSpec& spec);

/// experiment,pass,statistics
std::string summary_csv(const std::vector<Verdict>& verdicts);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// One acceptance criterion and the experiments that decide it.
struct AcceptanceCase {
  int criterion = 0;
  std::string title;
  std::vector<ExperimentSpec> experiments;
  double runtime_budget_s = 0.0;
};

/// The pinned acceptance configurations for criteria 1-10.
std::vector<AcceptanceCase> acceptance_suite();

}  // namespace dkspde
