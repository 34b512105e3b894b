#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dkspde {

struct NonlinearitySet;

/// Uniform periodic grid on the torus [0, 2*pi)^d, d in {1, 2}.
///
/// Cell i along an axis sits at x_i = i * dx. Face i along an axis sits at
/// (i + 1/2) * dx, between cells i and i + 1 (periodic wrap). Fields in d = 2
/// are stored row-major with the axis-0 index slowest: idx = i0 * n + i1.
struct GridSpec {
  int d = 1;
  int n = 64;

  /// Validates n >= 4, n even, d in {1, 2}; throws ConfigError otherwise.
  static GridSpec make(int d, int n);

  double dx() const { return 2.0 * std::numbers::pi / n; }
  std::size_t size() const { return d == 1 ? std::size_t(n) : std::size_t(n) * std::size_t(n); }
  double cell_volume() const { return d == 1 ? dx() : dx() * dx(); }

  /// Linear offset of the neighbour one cell forward along `axis`.
  std::size_t forward(std::size_t idx, int axis) const;
  /// Linear offset of the neighbour one cell backward along `axis`.
  std::size_t backward(std::size_t idx, int axis) const;
  /// Integer coordinate of `idx` along `axis`.
  int coord(std::size_t idx, int axis) const;

  bool operator==(const GridSpec&) const = default;
};

/// Scalar field on the cells of a grid, with a time stamp.
struct GridState {
  GridSpec spec;
  std::vector<double> values;
  double time = 0.0;

  GridState() = default;
  explicit GridState(GridSpec s, double t = 0.0) : spec(s), values(s.size(), 0.0), time(t) {}
  GridState(GridSpec s, std::vector<double> v, double t = 0.0);

  bool all_finite() const;
};

/// Face-centred vector field: comp[a][idx] lives on the face between idx and
/// its forward neighbour along axis a. Only comp[0..d-1] are populated.
struct FaceField {
  GridSpec spec;
  std::array<std::vector<double>, 2> comp;

  FaceField() = default;
  explicit FaceField(GridSpec s);
};

/// Builds a field by evaluating `f(x, y)` at every cell centre (y = 0 in d = 1).
template <class F>
GridState sample(const GridSpec& spec, F&& f, double time = 0.0) {
  GridState out(spec, time);
  const double h = spec.dx();
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    const double x = spec.coord(idx, 0) * h;
    const double y = spec.d == 2 ? spec.coord(idx, 1) * h : 0.0;
    out.values[idx] = f(x, y);
  }
  return out;
}

// Span kernels used by the solver; `out` must be preallocated.
void gradient_into(const GridSpec& spec, std::span<const double> u, int axis, std::span<double> out);
/// Accumulates the backward-difference divergence of the face flux along `axis` into `out` (+=).
void add_divergence(const GridSpec& spec, std::span<const double> flux, int axis, std::span<double> out);

/// Forward differences to faces, periodic wrap.
FaceField gradient(const GridState& field);
/// Backward differences from faces; the grid sum telescopes to zero.
GridState divergence(const FaceField& flux);
/// Second-order periodic stencil; identical to divergence(gradient(field)).
GridState laplacian(const GridState& field);

/// Midpoint-rule sum of values * dx^d.
double integrate(const GridState& field);
/// ||a - b||_{L^1} on the grid.
double l1_distance(const GridState& a, const GridState& b);

/// Per-step diagnostic functionals of a field.
struct DiagnosticsRow {
  long long step = 0;
  double time = 0.0;
  double mass = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double lp = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// integral of |grad Theta_{Phi,p}(rho)|^2
  double energy = 0.0;
  /// integral of Psi_Phi(rho); empty when the entropy was not requested
  std::optional<double> entropy;
  /// integral of (Phi'(rho) + alpha) |grad rho|^2, the parabolic dissipation
  double dissipation = 0.0;
};

struct FunctionalOptions {
  double p = 2.0;
  bool with_entropy = false;
  double alpha = 0.0;
  /// Evaluate Phi' in the dissipation at max(rho, 0).
  bool clip = true;
};

/// Computes mass, L^p norms, extrema, energy, entropy and dissipation.
/// Throws ConfigError if the entropy is requested for a nonlinearity whose
/// log Phi is not locally integrable.
DiagnosticsRow norms_and_functionals(const GridState& field, const NonlinearitySet& set,
                                     const FunctionalOptions& opts = {});

/// Per-cell parabolic dissipation (Phi'(rho) + alpha) |grad rho|^2 * dx^d, where
/// |grad rho|^2 at a cell is the mean of the squared adjacent face gradients.
/// Shared by the solver diagnostics and the kinetic-measure accumulator.
void cell_dissipation(const GridState& field, const NonlinearitySet& set, double alpha, bool clip,
                      std::span<double> out);

}  // namespace dkspde
