#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dkspde/assumptions.hpp"
#include "dkspde/grid.hpp"

namespace dkspde {

/// Truncated spectral description: modes a_k sin(k.x) and, when partnered,
/// a_k cos(k.x), one independent Brownian motion per mode.
struct SpectralNoiseSpec {
  std::vector<std::array<int, 2>> wavevectors;  // second entry ignored in d = 1
  std::vector<double> amplitudes;
  bool includes_cosine_partner = true;

  /// K wavevectors k = 1..K along axis 0 with a_k = amplitude * k^{-decay}.
  static SpectralNoiseSpec decaying(int count, double amplitude, double decay, bool pairs = true);

  std::size_t mode_count() const {
    return wavevectors.size() * (includes_cosine_partner ? 2 : 1);
  }
  bool empty() const { return wavevectors.empty(); }
};

/// Discretized correlated noise: modes sampled on the grid and the derived
/// coefficient fields F1 = sum f_k^2, F2 = 1/2 sum grad f_k^2,
/// F3 = sum |grad f_k|^2, G1 = sum g_k^2 and div F2.
struct NoiseField {
  GridSpec spec;

  /// modes_F[k] at cell centres; modes_F_faces[k][a] at the faces of axis a.
  std::vector<std::vector<double>> modes_F;
  std::vector<std::array<std::vector<double>, 2>> modes_F_faces;
  std::vector<std::array<std::vector<double>, 2>> grad_F;
  std::vector<std::vector<double>> modes_G;

  std::vector<double> F1;
  std::array<std::vector<double>, 2> F2;
  std::vector<double> F3;
  std::vector<double> G1;
  std::vector<double> divF2;
  /// F1 and F2 evaluated directly at the faces of each axis (used by the solver).
  std::array<std::vector<double>, 2> F1_faces;
  std::array<std::vector<double>, 2> F2_faces;

  /// True when every mode came from a spectral spec (analytic gradients).
  bool analytic = true;
  /// True when the F modes are sin/cos pairs only (F1 constant, F2 = 0 exactly).
  bool paired = true;

  std::size_t count_F() const { return modes_F.size(); }
  std::size_t count_G() const { return modes_G.size(); }
  /// Number of scalar Brownian increments per step for xi^F (modes * d).
  std::size_t increments_F() const { return modes_F.size() * std::size_t(spec.d); }
  std::size_t increments_G() const { return modes_G.size(); }
};

/// Samples a_k sin(k.x) [and a_k cos(k.x)] on the grid for F and, from an
/// independent spec, for G. Throws ConfigError naming an unresolved k.
NoiseField build_spectral_noise(const SpectralNoiseSpec& spec_F, const GridSpec& grid,
                                const SpectralNoiseSpec& spec_G = {});

/// Builds a noise field from user-supplied mode values at the cells. Face
/// values are averages; gradients and div F2 come from spectral differentiation.
NoiseField noise_from_modes(const GridSpec& grid, std::vector<std::vector<double>> modes_F,
                            std::vector<std::vector<double>> modes_G = {});

/// Exact (to rounding) derivative of a periodic grid function along `axis` by DFT.
std::vector<double> spectral_derivative(const GridSpec& grid, std::span<const double> u, int axis);

/// Checks finiteness of F1/F3, F2 = grad F1 / 2, boundedness of div F2, and
/// records the stationarity flag div F2 == 0 (check id "stationary", info).
AssumptionReport verify_noise_assumptions(const NoiseField& noise, double tol);
/// The default tolerance 1e-8 * (1 + max F1).
double default_noise_tolerance(const NoiseField& noise);
bool is_stationary(const NoiseField& noise, double tol);

/// Pre-sampled Brownian increments, dB[step][mode][axis] and dW[step][mode].
struct PathBundle {
  std::uint64_t seed = 0;
  double dt = 0.0;
  long long steps = 0;
  std::size_t per_step_F = 0;
  std::size_t per_step_G = 0;
  std::vector<double> dB;
  std::vector<double> dW;

  std::span<const double> dB_at(long long step) const {
    return {dB.data() + std::size_t(step) * per_step_F, per_step_F};
  }
  std::span<const double> dW_at(long long step) const {
    return {dW.data() + std::size_t(step) * per_step_G, per_step_G};
  }
};

/// Default cap on the bytes a PathBundle may allocate.
inline constexpr std::size_t kDefaultIncrementBudget = std::size_t(1) << 30;

/// Gaussian(0, dt) increments keyed by (seed, stream, mode, step), so adding
/// modes or steps never perturbs existing streams. Throws ResourceError when
/// the bundle would exceed `budget_bytes`.
PathBundle sample_increments(const NoiseField& noise, double dt, long long steps, std::uint64_t seed,
                             std::size_t budget_bytes = kDefaultIncrementBudget);

/// sum_k sum_a D_a[ avg(sigma) * f_k ] dB^{k,a}: the conservative divergence of
/// the stochastic flux. The grid sum of the result telescopes to zero.
GridState noise_divergence_term(const GridState& sigma_field, const NoiseField& noise,
                                std::span<const double> increments_at_step);

/// CSV dump: index columns, F1, F2 components, F3, G1.
std::string noise_to_csv(const NoiseField& noise);

}  // namespace dkspde
