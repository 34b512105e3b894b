#include "dkspde/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dkspde/errors.hpp"
#include "dkspde/io.hpp"
#include "dkspde/solver.hpp"

namespace dkspde {

std::string KineticHistogram::to_csv() const {
  std::ostringstream os;
  os << "bin_lo,bin_hi,chi_mass,q_mass\n";
  for (std::size_t b = 0; b < bins(); ++b) {
    os << format_double(xi_edges[b]) << ',' << format_double(xi_edges[b + 1]) << ',' << format_double(chi_mass[b])
       << ',' << format_double(q_mass[b]) << '\n';
  }
  if (!xi_edges.empty()) {
    os << format_double(xi_edges.back()) << ",inf," << format_double(chi_overflow) << ','
       << format_double(q_overflow) << '\n';
  }
  return os.str();
}

std::vector<double> default_xi_edges(double xi_max, int per_octave, int per_unit, int low_exponent) {
  if (per_octave < 1 || per_unit < 1 || low_exponent < 1 || !(xi_max > 0.0) || !std::isfinite(xi_max)) {
    throw ConfigError("kinetic: invalid bin layout");
  }
  std::vector<double> edges{0.0, std::ldexp(1.0, -low_exponent)};
  for (int j = 1; j <= low_exponent * per_octave; ++j) {
    const double e = j % per_octave == 0 ? std::ldexp(1.0, -low_exponent + j / per_octave)
                                         : std::exp2(-low_exponent + double(j) / per_octave);
    edges.push_back(e);
  }
  const long long top = std::max(1LL, (long long)std::ceil(xi_max));
  for (long long k = 1; k < top; ++k) {
    for (int r = 1; r <= per_unit; ++r) {
      edges.push_back(r == per_unit ? double(k + 1) : double(k) + double(r) / per_unit);
    }
  }
  return edges;
}

std::size_t find_bin(std::span<const double> xi_edges, double xi) {
  const std::size_t B = xi_edges.size() - 1;
  if (xi <= xi_edges.front()) return 0;
  if (xi > xi_edges.back()) return B;
  if (xi == xi_edges.back()) return B - 1;
  const auto it = std::upper_bound(xi_edges.begin(), xi_edges.end(), xi);
  return std::size_t(it - xi_edges.begin()) - 1;
}

std::vector<double> kinetic_function_slice(const GridState& rho, std::span<const double> xi_edges) {
  const std::size_t B = xi_edges.size() - 1;
  std::vector<double> out(B + 1, 0.0);
  const double vol = rho.spec.cell_volume();
  for (double v : rho.values) {
    if (!(v > 0.0)) continue;
    for (std::size_t b = 0; b < B && xi_edges[b] < v; ++b) out[b] += (std::min(v, xi_edges[b + 1]) - xi_edges[b]) * vol;
    if (v > xi_edges.back()) out[B] += (v - xi_edges.back()) * vol;
  }
  return out;
}

KineticAccumulator::KineticAccumulator(const NonlinearitySet& set, double alpha, bool clip,
                                       std::vector<double> xi_edges, double dt)
    : set_(set), alpha_(alpha), clip_(clip), dt_(dt) {
  if (xi_edges.size() < 2 || !std::is_sorted(xi_edges.begin(), xi_edges.end()) ||
      std::adjacent_find(xi_edges.begin(), xi_edges.end()) != xi_edges.end()) {
    throw ContractViolation("KineticAccumulator: edges must be strictly increasing with at least one bin");
  }
  if (!(dt > 0.0)) throw ContractViolation("KineticAccumulator: dt must be positive");
  hist_.xi_edges = std::move(xi_edges);
  hist_.chi_mass.assign(hist_.bins(), 0.0);
  hist_.q_mass.assign(hist_.bins(), 0.0);
}

void KineticAccumulator::add(const GridState& rho) { add_weighted(rho, 1.0); }

void KineticAccumulator::add_weighted(const GridState& rho, double weight) {
  if (!started_) {
    hist_.t_begin = rho.time;
    started_ = true;
  }
  const double w = dt_ * weight;
  hist_.t_end = rho.time + w;
  const std::size_t B = hist_.bins();
  const auto chi = kinetic_function_slice(rho, hist_.xi_edges);
  for (std::size_t b = 0; b < B; ++b) hist_.chi_mass[b] += chi[b] * w;
  hist_.chi_overflow += chi[B] * w;

  cell_q_.resize(rho.values.size());
  cell_dissipation(rho, set_, alpha_, clip_, cell_q_);
  double dsum = 0.0;
  for (double q : cell_q_) dsum += q;
  hist_.q_total += dsum * w;
  hist_.max_step_deposit = std::max(hist_.max_step_deposit, dsum * w);
  for (std::size_t i = 0; i < cell_q_.size(); ++i) {
    const std::size_t b = find_bin(hist_.xi_edges, std::max(rho.values[i], 0.0));
    if (b == B) {
      hist_.q_overflow += cell_q_[i] * w;
    } else {
      hist_.q_mass[b] += cell_q_[i] * w;
    }
  }
}

KineticHistogram KineticAccumulator::finish() && { return std::move(hist_); }

KineticHistogram accumulate_measure(const Trajectory& traj, const NonlinearitySet& set, double alpha, bool clip,
                                    const std::vector<double>& xi_edges, double dt) {
  KineticAccumulator acc(set, alpha, clip, xi_edges, dt);
  const auto& snaps = traj.snapshots;
  for (std::size_t s = 0; s + 1 < snaps.size(); ++s) {
    const double weight = std::round((snaps[s + 1].time - snaps[s].time) / dt);
    acc.add_weighted(snaps[s], weight);
  }
  KineticHistogram h = std::move(acc).finish();
  h.stride = traj.snapshot_stride;
  if (traj.snapshot_stride > 1) {
    h.warnings.push_back("snapshots are strided by " + std::to_string(traj.snapshot_stride) +
                         " steps; each stands for its whole interval");
  }
  if (traj.truncated) h.warnings.push_back("trajectory truncated: " + traj.error);
  return h;
}

double chi_distance(const GridState& a, const GridState& b) { return l1_distance(a, b); }

ChiDistance chi_distance_checked(const GridState& a, const GridState& b, std::span<const double> xi_edges) {
  if (!(a.spec == b.spec)) throw ContractViolation("chi_distance: grids differ");
  ChiDistance out;
  out.direct = l1_distance(a, b);
  const double vol = a.spec.cell_volume();
  const std::size_t B = xi_edges.size() - 1;
  const double top = xi_edges.back();
  auto chi = [](double v, double xi) { return xi > 0.0 ? (xi < v ? 1.0 : 0.0) : (v < xi ? -1.0 : 0.0); };
  auto width_at = [&](double v) {
    const std::size_t bin = find_bin(xi_edges, v);
    return bin < B && v > 0.0 ? xi_edges[bin + 1] - xi_edges[bin] : 0.0;
  };
  double binned = 0.0, tol = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double va = a.values[i], vb = b.values[i];
    double s = 0.0;
    for (std::size_t k = 0; k < B; ++k) {
      const double mid = 0.5 * (xi_edges[k] + xi_edges[k + 1]);
      const double diff = chi(va, mid) - chi(vb, mid);
      s += diff * diff * (xi_edges[k + 1] - xi_edges[k]);
    }
    // Parts below zero and above the last edge are exact.
    s += std::abs(std::min(va, 0.0) - std::min(vb, 0.0));
    s += std::abs(std::max(va, top) - std::max(vb, top));
    binned += s;
    tol += width_at(va) + width_at(vb);
  }
  out.binned = binned * vol;
  out.tolerance = tol * vol;
  return out;
}

namespace {

std::size_t edge_index(const std::vector<double>& edges, double x, const char* what) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (std::abs(edges[i] - x) <= 1e-12 * std::max(1.0, std::abs(x))) return i;
  }
  throw ContractViolation(std::string(what) + ": " + format_double(x) + " is not a bin edge");
}

}  // namespace

std::vector<double> measure_zero_test(const KineticHistogram& hist, std::span<const double> betas) {
  std::vector<double> out;
  for (double beta : betas) {
    if (!(beta > 0.0)) throw ContractViolation("measure_zero_test: beta must be positive");
    const std::size_t lo = edge_index(hist.xi_edges, 0.5 * beta, "measure_zero_test");
    const std::size_t hi = edge_index(hist.xi_edges, beta, "measure_zero_test");
    double q = 0.0;
    for (std::size_t b = lo; b < hi; ++b) q += hist.q_mass[b];
    out.push_back(q / beta);
  }
  return out;
}

std::vector<double> measure_infinity_test(const KineticHistogram& hist, std::span<const double> Ms) {
  std::vector<double> out;
  for (double M : Ms) {
    const std::size_t lo = edge_index(hist.xi_edges, M, "measure_infinity_test");
    const std::size_t hi = edge_index(hist.xi_edges, M + 1.0, "measure_infinity_test");
    double q = 0.0;
    for (std::size_t b = lo; b < hi; ++b) q += hist.q_mass[b];
    out.push_back(q);
  }
  return out;
}

std::string series_csv(std::span<const double> params, std::span<const double> values) {
  if (params.size() != values.size()) throw ContractViolation("series_csv: length mismatch");
  std::ostringstream os;
  os << "param,value\n";
  for (std::size_t i = 0; i < params.size(); ++i) os << format_double(params[i]) << ',' << format_double(values[i]) << '\n';
  return os.str();
}

}  // namespace dkspde
