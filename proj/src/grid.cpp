#include "dkspde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dkspde/errors.hpp"
#include "dkspde/nonlin.hpp"

namespace dkspde {

GridSpec GridSpec::make(int d, int n) {
  if (d != 1 && d != 2) throw ConfigError("grid: d must be 1 or 2, got " + std::to_string(d));
  if (n < 4 || n % 2 != 0) throw ConfigError("grid: n must be even and >= 4, got " + std::to_string(n));
  return GridSpec{d, n};
}

std::size_t GridSpec::forward(std::size_t idx, int axis) const {
  const std::size_t un = std::size_t(n);
  if (d == 1 || axis == 1) {
    const std::size_t i = idx % un;
    return i + 1 == un ? idx + 1 - un : idx + 1;
  }
  const std::size_t i0 = idx / un;
  return i0 + 1 == un ? idx + un - un * un : idx + un;
}

std::size_t GridSpec::backward(std::size_t idx, int axis) const {
  const std::size_t un = std::size_t(n);
  if (d == 1 || axis == 1) {
    const std::size_t i = idx % un;
    return i == 0 ? idx + un - 1 : idx - 1;
  }
  const std::size_t i0 = idx / un;
  return i0 == 0 ? idx + un * un - un : idx - un;
}

int GridSpec::coord(std::size_t idx, int axis) const {
  if (d == 1) return int(idx);
  return axis == 0 ? int(idx / std::size_t(n)) : int(idx % std::size_t(n));
}

GridState::GridState(GridSpec s, std::vector<double> v, double t) : spec(s), values(std::move(v)), time(t) {
  if (values.size() != spec.size()) {
    throw ContractViolation("GridState: " + std::to_string(values.size()) + " values for a grid of " +
                            std::to_string(spec.size()) + " cells");
  }
}

bool GridState::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

FaceField::FaceField(GridSpec s) : spec(s) {
  for (int a = 0; a < s.d; ++a) comp[a].assign(s.size(), 0.0);
}

void gradient_into(const GridSpec& spec, std::span<const double> u, int axis, std::span<double> out) {
  const double inv = 1.0 / spec.dx();
  const std::size_t N = spec.size();
  const std::size_t un = std::size_t(spec.n);
  if (spec.d == 1 || axis == 1) {
    for (std::size_t row = 0; row < N; row += un) {
      for (std::size_t i = 0; i + 1 < un; ++i) out[row + i] = (u[row + i + 1] - u[row + i]) * inv;
      out[row + un - 1] = (u[row] - u[row + un - 1]) * inv;
    }
    return;
  }
  for (std::size_t idx = 0; idx < N; ++idx) {
    const std::size_t f = idx + un < N ? idx + un : idx + un - N;
    out[idx] = (u[f] - u[idx]) * inv;
  }
}

void add_divergence(const GridSpec& spec, std::span<const double> flux, int axis, std::span<double> out) {
  const double inv = 1.0 / spec.dx();
  const std::size_t N = spec.size();
  const std::size_t un = std::size_t(spec.n);
  if (spec.d == 1 || axis == 1) {
    for (std::size_t row = 0; row < N; row += un) {
      out[row] += (flux[row] - flux[row + un - 1]) * inv;
      for (std::size_t i = 1; i < un; ++i) out[row + i] += (flux[row + i] - flux[row + i - 1]) * inv;
    }
    return;
  }
  for (std::size_t idx = 0; idx < N; ++idx) {
    const std::size_t b = idx >= un ? idx - un : idx + N - un;
    out[idx] += (flux[idx] - flux[b]) * inv;
  }
}

FaceField gradient(const GridState& field) {
  FaceField g(field.spec);
  for (int a = 0; a < field.spec.d; ++a) gradient_into(field.spec, field.values, a, g.comp[a]);
  return g;
}

GridState divergence(const FaceField& flux) {
  GridState out(flux.spec);
  for (int a = 0; a < flux.spec.d; ++a) {
    if (flux.comp[a].size() != flux.spec.size()) throw ContractViolation("divergence: face field shape mismatch");
    add_divergence(flux.spec, flux.comp[a], a, out.values);
  }
  return out;
}

GridState laplacian(const GridState& field) { return divergence(gradient(field)); }

double integrate(const GridState& field) {
  double s = 0.0;
  for (double v : field.values) s += v;
  return s * field.spec.cell_volume();
}

double l1_distance(const GridState& a, const GridState& b) {
  if (!(a.spec == b.spec)) throw ContractViolation("l1_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.spec.cell_volume();
}

namespace {

double clip_arg(double v, bool clip) { return clip ? std::max(v, 0.0) : v; }

// Mean over axes of the averaged squared gradients on the two faces adjacent to each cell.
void cell_grad_sq(const GridSpec& spec, std::span<const double> u, std::vector<double>& face,
                  std::vector<double>& out) {
  out.assign(spec.size(), 0.0);
  face.resize(spec.size());
  for (int a = 0; a < spec.d; ++a) {
    gradient_into(spec, u, a, face);
    for (std::size_t idx = 0; idx < spec.size(); ++idx) {
      const double gf = face[idx];
      const double gb = face[spec.backward(idx, a)];
      out[idx] += 0.5 * (gf * gf + gb * gb);
    }
  }
}

}  // namespace

void cell_dissipation(const GridState& field, const NonlinearitySet& set, double alpha, bool clip,
                      std::span<double> out) {
  std::vector<double> face, g2;
  cell_grad_sq(field.spec, field.values, face, g2);
  const double vol = field.spec.cell_volume();
  for (std::size_t idx = 0; idx < field.values.size(); ++idx) {
    const double r = clip_arg(field.values[idx], clip);
    out[idx] = (set.phi_cap.derivative(r) + alpha) * g2[idx] * vol;
  }
}

DiagnosticsRow norms_and_functionals(const GridState& field, const NonlinearitySet& set,
                                     const FunctionalOptions& opts) {
  DiagnosticsRow row;
  row.time = field.time;
  const double vol = field.spec.cell_volume();
  const std::size_t N = field.values.size();
  double mass = 0.0, l1 = 0.0, l2 = 0.0, lp = 0.0;
  double mn = field.values.empty() ? 0.0 : field.values[0];
  double mx = mn;
  for (double v : field.values) {
    mass += v;
    l1 += std::abs(v);
    l2 += v * v;
    lp += std::pow(std::abs(v), opts.p);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  row.mass = mass * vol;
  row.l1 = l1 * vol;
  row.l2 = std::sqrt(l2 * vol);
  row.lp = std::pow(lp * vol, 1.0 / opts.p);
  row.min = mn;
  row.max = mx;

  // Energy: |grad Theta(rho)|^2 with Theta applied at the cells, then differenced to faces.
  std::vector<double> theta(N), face(N);
  const AuxFunctions aux(set, opts.p);
  for (std::size_t i = 0; i < N; ++i) theta[i] = aux.theta_p(opts.clip ? std::max(field.values[i], 0.0) : field.values[i]);
  double energy = 0.0;
  for (int a = 0; a < field.spec.d; ++a) {
    gradient_into(field.spec, theta, a, face);
    for (double g : face) energy += g * g;
  }
  row.energy = energy * vol;

  if (opts.with_entropy) {
    double ent = 0.0;
    for (double v : field.values) ent += aux.psi_phi(std::max(v, 0.0));
    row.entropy = ent * vol;
  }

  std::vector<double> diss(N);
  cell_dissipation(field, set, opts.alpha, opts.clip, diss);
  double dsum = 0.0;
  for (double q : diss) dsum += q;
  row.dissipation = dsum;
  return row;
}

}  // namespace dkspde
