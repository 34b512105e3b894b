#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dkspde/grid.hpp"
#include "dkspde/noise.hpp"
#include "dkspde/nonlin.hpp"

namespace dkspde {

enum class Scheme { ito_euler, strat_heun };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

/// How the Ito correction 1/2 div(F1 sigma'^2 grad rho + sigma sigma' F2) is discretized.
enum class CorrectionForm {
  /// Face values of F1, F2 times face-averaged sigma'^2 and sigma sigma'.
  coefficient,
  /// 1/2 sum_k D[f_k avg(sigma' D(avg(sigma) f_k))]: the exact Ito correction
  /// of the semi-discrete Stratonovich system.
  mode_sum,
};

const char* to_string(CorrectionForm c);
CorrectionForm parse_correction(const std::string& s);

struct SolverConfig {
  double alpha = 0.0;
  double dt = 1e-4;
  double t_end = 1.0;
  Scheme scheme = Scheme::ito_euler;
  CorrectionForm correction = CorrectionForm::coefficient;
  std::optional<int> sigma_mollify_n;
  bool clip_nonlinearity_args = true;
  double cfl_safety = 0.5;
  bool override_cfl = false;
  /// Snapshot stride in steps; 0 selects max(1, steps / 200).
  long long snapshot_stride = 0;
  /// Exponent p of the L^p and energy diagnostics.
  double diag_p = 2.0;
  bool diag_entropy = false;

  long long steps() const;
  /// Throws ConfigError unless dt > 0, t_end >= dt, alpha in [0, 1), cfl_safety in (0, 1].
  void validate() const;
};

/// The CFL bound cfl_safety * dx^2 / (2 d (max Phi' + alpha + 1/2 max F1 max sigma'^2))
/// evaluated on the values of `rho`.
double cfl_bound(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise,
                 const SolverConfig& cfg);

/// Advances states of one model; owns scratch buffers so repeated steps do not allocate.
class Stepper {
 public:
  Stepper(const NonlinearitySet& set, const NoiseField& noise, const SolverConfig& cfg);

  /// One Euler-Maruyama step of the Ito equation (conservative terms only).
  void step_ito(GridState& rho, std::span<const double> dB);
  /// step_ito plus phi(rho) dxi^G + lambda(rho) dt at the cells.
  void step_general(GridState& rho, std::span<const double> dB, std::span<const double> dW);
  /// Stochastic Heun step treating the conservative noise in the Stratonovich sense.
  void step_strat_heun(GridState& rho, std::span<const double> dB, std::span<const double> dW = {});
  /// Dispatches on cfg.scheme; dW may be empty when the model has no G noise.
  void step(GridState& rho, std::span<const double> dB, std::span<const double> dW);

  /// Largest admissible dt for the current values of `rho`.
  double cfl_bound(const GridState& rho);

  const NonlinearitySet& set() const { return set_; }
  const NoiseField& noise() const { return *noise_; }
  const SolverConfig& config() const { return cfg_; }
  bool has_sources() const { return !set_.phi_low.zero || !set_.lambda_low.zero; }

  /// Sets the step index reported by StepError.
  void set_step_index(long long step) { step_index_ = step; }

 private:
  void evaluate(const GridState& rho);
  double current_bound() const;
  void check_cfl(const GridState& rho);
  /// Per-axis face fluxes (drift times dt plus noise), axis-major in `flux`.
  void compute_flux(std::span<const double> dB, bool ito_correction, std::span<double> flux);
  void divergence_of(std::span<const double> flux, std::span<double> out);
  void add_sources(std::span<const double> dW, std::span<double> out);
  void commit(GridState& rho);

  NonlinearitySet set_;
  const NoiseField* noise_;
  SolverConfig cfg_;
  long long step_index_ = 0;
  double max_F1_ = 0.0;
  bool clip_ = true;
  const GridState* stage_rho_ = nullptr;

  std::vector<double> arg_, Phi_, dPhi_, sig_, dsig_, nu_;
  std::vector<double> flux_, flux2_, grad_, tmp_, incr_, incr2_, stage_;
};

/// Free-function forms of the stepper.
GridState step_ito(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise,
                   std::span<const double> dB, const SolverConfig& cfg);
GridState step_general(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise,
                       std::span<const double> dB, std::span<const double> dW, const SolverConfig& cfg);
GridState step_strat_heun(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise,
                          std::span<const double> dB, const SolverConfig& cfg);

struct Trajectory {
  std::vector<GridState> snapshots;
  std::vector<DiagnosticsRow> diagnostics;
  std::map<std::string, std::string> metadata;
  long long snapshot_stride = 1;
  bool truncated = false;
  std::string error;

  std::string diagnostics_csv() const;
};

/// Called with the state at the start of every step interval.
using StepObserver = std::function<void(long long step, const GridState& rho)>;

/// Samples a PathBundle from `seed` and integrates to t_end.
Trajectory run(const GridState& rho0, const NonlinearitySet& set, const NoiseField& noise,
               const SolverConfig& cfg, std::uint64_t seed, const StepObserver& observer = {});
/// Same, with caller-supplied increments.
Trajectory run_with_paths(const GridState& rho0, const NonlinearitySet& set, const NoiseField& noise,
                          const SolverConfig& cfg, const PathBundle& paths, const StepObserver& observer = {});

struct CoupledResult {
  Trajectory a;
  Trajectory b;
  /// ||rho^a - rho^b||_{L^1} at every step, index 0 being t = 0.
  std::vector<double> distance;
  std::vector<double> times;
};

/// Two solutions driven by the identical PathBundle.
CoupledResult run_coupled(const GridState& rho0_a, const GridState& rho0_b, const NonlinearitySet& set,
                          const NoiseField& noise, const SolverConfig& cfg, std::uint64_t seed);
CoupledResult run_coupled_with_paths(const GridState& rho0_a, const GridState& rho0_b,
                                     const NonlinearitySet& set, const NoiseField& noise,
                                     const SolverConfig& cfg, const PathBundle& paths);

struct CascadeEntry {
  double alpha = 0.1;
  std::optional<int> mollify_n;
};

struct CascadeReport {
  std::vector<CascadeEntry> schedule;
  /// L^1([0,T]; L^1) distance between consecutive entries.
  std::vector<double> distances;
  /// The metric D between consecutive entries (20 terms).
  std::vector<double> metric_D;
  std::vector<double> final_mass;
  bool truncated = false;
  std::string error;
};

/// Runs every schedule entry in lockstep on one PathBundle. cfg_base.dt must
/// satisfy the CFL bound of every entry.
CascadeReport run_cascade(const GridState& rho0, const NonlinearitySet& set, const NoiseField& noise,
                          const SolverConfig& cfg_base, const std::vector<CascadeEntry>& schedule,
                          std::uint64_t seed);

/// D(f, g) = sum_{k<=terms} 2^-k d_k / (1 + d_k) with d_k the L^1L^1 distance of
/// Psi_{1/k}(f) and Psi_{1/k}(g); inputs are per-step L^1 distances accumulated by the caller.
double metric_D_from_terms(std::span<const double> psi_distances);

}  // namespace dkspde
