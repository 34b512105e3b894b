#pragma once

#include <span>
#include <string>
#include <vector>

#include "dkspde/grid.hpp"
#include "dkspde/nonlin.hpp"

namespace dkspde {

struct Trajectory;

/// xi-binned accumulations of the kinetic function chi = 1_{0 < xi < rho} and
/// of the kinetic measure q over a time window. Bin b is [xi_edges[b], xi_edges[b+1]);
/// mass above the last edge lands in the overflow entries.
struct KineticHistogram {
  std::vector<double> xi_edges;
  std::vector<double> chi_mass;
  std::vector<double> q_mass;
  double chi_overflow = 0.0;
  double q_overflow = 0.0;
  /// Total q in cell order; equals the time-summed solver dissipation bitwise.
  double q_total = 0.0;
  /// Largest q deposit of a single step (diagnostic for atoms in time).
  double max_step_deposit = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;
  long long stride = 1;
  std::vector<std::string> warnings;

  std::size_t bins() const { return xi_edges.empty() ? 0 : xi_edges.size() - 1; }
  /// bin_lo,bin_hi,chi_mass,q_mass
  std::string to_csv() const;
};

/// Bin layout: [0, 2^-low_exponent], then per_octave geometric bins per octave up
/// to 1, then per_unit uniform bins per unit length up to ceil(xi_max).
std::vector<double> default_xi_edges(double xi_max, int per_octave = 4, int per_unit = 4, int low_exponent = 10);

/// Per-bin integral of chi over the bin and the torus, i.e. sum over cells of the
/// overlap length of (0, rho(x)) with the bin times dx^d. The returned vector has
/// one extra trailing entry for the part above the last edge.
std::vector<double> kinetic_function_slice(const GridState& rho, std::span<const double> xi_edges);

/// Bin index containing xi (the last bin is closed; xi beyond it returns bins()).
std::size_t find_bin(std::span<const double> xi_edges, double xi);

/// Streams states into a histogram: chi * dt and the per-cell dissipation * dt.
class KineticAccumulator {
 public:
  KineticAccumulator(const NonlinearitySet& set, double alpha, bool clip, std::vector<double> xi_edges, double dt);

  /// Adds the contribution of the step interval starting at `rho`.
  void add(const GridState& rho);
  /// Adds a state that stands for `weight` step intervals (strided trajectories).
  void add_weighted(const GridState& rho, double weight);
  KineticHistogram finish() &&;
  const KineticHistogram& histogram() const { return hist_; }

 private:
  NonlinearitySet set_;
  double alpha_;
  bool clip_;
  double dt_;
  bool started_ = false;
  KineticHistogram hist_;
  std::vector<double> cell_q_;
};

/// Accumulates over the snapshots of a trajectory. A stride above 1 is
/// recorded as a warning (each snapshot then stands for `stride` steps).
KineticHistogram accumulate_measure(const Trajectory& traj, const NonlinearitySet& set, double alpha, bool clip,
                                    const std::vector<double>& xi_edges, double dt);

struct ChiDistance {
  /// sum_cells |rho^a - rho^b| dx^d
  double direct = 0.0;
  /// midpoint-rule double integral of |chi^a - chi^b|^2 over the bins
  double binned = 0.0;
  /// Largest admissible |direct - binned|: one bin width per cell and field.
  double tolerance = 0.0;
};

double chi_distance(const GridState& a, const GridState& b);
ChiDistance chi_distance_checked(const GridState& a, const GridState& b, std::span<const double> xi_edges);

/// beta^-1 q([beta/2, beta]) for each beta. Throws ContractViolation unless
/// beta/2 and beta are bin edges.
std::vector<double> measure_zero_test(const KineticHistogram& hist, std::span<const double> betas);
/// q([M, M+1]) for each M. Throws ContractViolation unless M and M+1 are edges.
std::vector<double> measure_infinity_test(const KineticHistogram& hist, std::span<const double> Ms);

/// param,value
std::string series_csv(std::span<const double> params, std::span<const double> values);

}  // namespace dkspde
