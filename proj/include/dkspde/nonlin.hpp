#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dkspde/assumptions.hpp"

namespace dkspde {

using ScalarFn = std::function<double(double)>;

/// A scalar nonlinearity together with its derivative.
struct ScalarFunction {
  ScalarFn f;
  ScalarFn df;
  /// Set when f(x) = coef * x^exponent, enabling closed-form auxiliaries.
  std::optional<std::array<double, 2>> power;  // {coef, exponent}
  bool zero = false;
  std::string description;

  double operator()(double x) const { return f(x); }
  double derivative(double x) const { return df(x); }
};

ScalarFunction zero_function();
/// coef * x^exponent on [0, inf); specialised for exponents 0, 1/2, 1, 2.
ScalarFunction power_function(double coef, double exponent);

/// Parses a small function vocabulary used by run configurations:
///   zero | power C A | saturating C | logistic C | sqrt-logistic C |
///   arctan | quarter-root-growth | knots x0:y0,x1:y1,...
/// `knots` is piecewise linear with linear extrapolation and a
/// finite-difference derivative. Throws ConfigError on malformed input.
ScalarFunction parse_function(const std::string& text);

/// The quintuple (Phi, sigma, nu, phi, lambda) with growth metadata.
struct NonlinearitySet {
  std::string name;
  ScalarFunction phi_cap;     // Phi
  ScalarFunction sigma;       // sigma
  ScalarFunction nu;          // scalar profile of nu
  std::array<double, 2> nu_direction{1.0, 0.0};
  ScalarFunction phi_low;     // phi, the coefficient of the non-conservative noise
  ScalarFunction lambda_low;  // lambda, the reaction term
  double m = 1.0;             // growth exponent of Phi
  double p = 2.0;             // integrability exponent
  /// Mollification level when sigma has been replaced by sigma_n.
  std::optional<int> mollified_n;
  /// The model lives on all of R (no clipping of arguments at 0).
  bool signed_domain = false;
  /// Closed form of Theta_{Phi,2}, when known and Phi is not a power law.
  ScalarFn theta2_closed;
  /// Closed form of Psi_Phi, when known and Phi is not a power law.
  ScalarFn psi_phi_closed;
  std::map<std::string, double> params;
};

/// Names accepted by make_preset.
const std::vector<std::string>& preset_names();

/// Builds one of the named model nonlinearities. Throws ConfigError for an
/// unknown preset or a missing required parameter.
NonlinearitySet make_preset(const std::string& name, const std::map<std::string, double>& params);

/// Theta_{Phi,p}(xi) = int_0^xi s^{(p-2)/2} Phi'(s)^{1/2} ds.
double theta_phi_p(const NonlinearitySet& set, double p, double xi);
/// Psi_Phi(xi) = int_0^xi log Phi(s) ds. Throws NumericError if Phi vanishes on an interval.
double psi_phi(const NonlinearitySet& set, double xi);
/// Psi_{sigma,p}(xi) = int_0^xi s^{p-2} sigma(s) sigma'(s) ds.
double psi_sigma_p(const NonlinearitySet& set, double p, double xi);

/// Bundles the auxiliary functions for a fixed (set, p).
class AuxFunctions {
 public:
  AuxFunctions(const NonlinearitySet& set, double p);

  double theta_p(double xi) const { return theta_phi_p(*set_, p_, xi); }
  double theta_2(double xi) const { return theta_phi_p(*set_, 2.0, xi); }
  double psi_phi(double xi) const { return dkspde::psi_phi(*set_, xi); }
  double psi_sigma(double xi) const { return psi_sigma_p(*set_, p_, xi); }

 private:
  std::shared_ptr<const NonlinearitySet> set_;
  double p_;
};

enum class CutoffKind { phi_beta, zeta_M, psi_delta, Psi_delta };

/// Piecewise-linear phi_beta and zeta_M, smoothstep psi_delta on [delta/2, delta],
/// and Psi_delta(xi) = psi_delta(xi) * xi.
double cutoff_eval(CutoffKind kind, double param, double xi);
double psi_delta_derivative(double delta, double xi);

/// Returns a copy of `set` whose sigma is replaced by sigma_n: sigma' clipped to
/// [-n, n] and cut off beyond xi = n, mollified at scale 1/n, integrated from 0.
/// sigma_n' is supported in [0, n + 1] and sigma_n(0) = 0.
NonlinearitySet mollify_sigma(const NonlinearitySet& set, int n);

/// Sample points for the assumption checker.
struct SampleGrid {
  std::vector<double> points;  // strictly increasing, positive
  static SampleGrid log_uniform(double lo = 1e-8, double hi = 1e4, int count = 400);
};

/// Noise-dependent facts some assumption items rely on.
struct NoiseContext {
  /// div F2 == 0 (stationary noise); empty when no noise is known.
  std::optional<bool> stationary;
};

/// Evaluates every assumption block numerically on the sample grid. Never
/// throws for a failed hypothesis; the report carries the failure.
AssumptionReport check_assumptions(const NonlinearitySet& set, const SampleGrid& grid, double tol,
                                   const NoiseContext& noise = {});

}  // namespace dkspde
