#include "dkspde/nonlin.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "dkspde/errors.hpp"

namespace dkspde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

ScalarFunction zero_function() {
  ScalarFunction z;
  z.f = [](double) { return 0.0; };
  z.df = [](double) { return 0.0; };
  z.power = std::array<double, 2>{0.0, 1.0};
  z.zero = true;
  z.description = "zero";
  return z;
}

ScalarFunction power_function(double coef, double exponent) {
  if (coef == 0.0) return zero_function();
  ScalarFunction s;
  s.power = std::array<double, 2>{coef, exponent};
  s.description = "power " + fmt(coef) + " " + fmt(exponent);
  const double c = coef, e = exponent;
  if (e == 0.0) {
    s.f = [c](double) { return c; };
    s.df = [](double) { return 0.0; };
  } else if (e == 1.0) {
    s.f = [c](double x) { return c * x; };
    s.df = [c](double) { return c; };
  } else if (e == 2.0) {
    s.f = [c](double x) { return c * x * x; };
    s.df = [c](double x) { return 2.0 * c * x; };
  } else if (e == 0.5) {
    s.f = [c](double x) { return x > 0.0 ? c * std::sqrt(x) : 0.0; };
    s.df = [c](double x) { return x > 0.0 ? 0.5 * c / std::sqrt(x) : kInf; };
  } else {
    s.f = [c, e](double x) { return x > 0.0 ? c * std::pow(x, e) : 0.0; };
    s.df = [c, e](double x) {
      if (x > 0.0) return c * e * std::pow(x, e - 1.0);
      return e < 1.0 ? kInf : (e == 1.0 ? c : 0.0);
    };
  }
  return s;
}

namespace {

double parse_number(const std::string& tok, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("function '" + text + "': '" + tok + "' is not a number");
  }
}

ScalarFunction make_knots(const std::string& spec, const std::string& text) {
  std::vector<double> xs, ys;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("function '" + text + "': knot '" + item + "' lacks ':'");
    xs.push_back(parse_number(item.substr(0, colon), text));
    ys.push_back(parse_number(item.substr(colon + 1), text));
  }
  if (xs.size() < 2) throw ConfigError("function '" + text + "': need at least two knots");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw ConfigError("function '" + text + "': knot abscissae must increase");
  }
  auto f = [xs, ys](double x) {
    std::size_t i = std::size_t(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    i = std::clamp<std::size_t>(i, 1, xs.size() - 1);
    const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
  };
  ScalarFunction s;
  s.f = f;
  s.df = [f](double x) {
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    return (f(x + h) - f(x - h)) / (2.0 * h);
  };
  s.description = "knots " + spec;
  return s;
}

}  // namespace

ScalarFunction parse_function(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> tok;
  for (std::string t; is >> t;) tok.push_back(t);
  if (tok.empty()) throw ConfigError("function: empty definition");
  const std::string& kind = tok[0];
  auto need = [&](std::size_t count) {
    if (tok.size() != count + 1) {
      throw ConfigError("function '" + text + "': '" + kind + "' takes " + std::to_string(count) + " argument(s)");
    }
  };
  if (kind == "zero") {
    need(0);
    return zero_function();
  }
  if (kind == "power") {
    need(2);
    return power_function(parse_number(tok[1], text), parse_number(tok[2], text));
  }
  ScalarFunction s;
  if (kind == "saturating") {
    need(1);
    const double c = parse_number(tok[1], text);
    s.f = [c](double x) { return c * x / (1.0 + x); };
    s.df = [c](double x) { return c / ((1.0 + x) * (1.0 + x)); };
  } else if (kind == "logistic") {
    need(1);
    const double c = parse_number(tok[1], text);
    s.f = [c](double x) { return c * x * (1.0 - x); };
    s.df = [c](double x) { return c * (1.0 - 2.0 * x); };
  } else if (kind == "sqrt-logistic") {
    need(1);
    const double c = parse_number(tok[1], text);
    s.f = [c](double x) { return x > 0.0 && x < 1.0 ? c * std::sqrt(x * (1.0 - x)) : 0.0; };
    s.df = [c](double x) {
      if (x <= 0.0 || x >= 1.0) return x == 0.0 ? kInf : 0.0;
      return c * (1.0 - 2.0 * x) / (2.0 * std::sqrt(x * (1.0 - x)));
    };
  } else if (kind == "arctan") {
    need(0);
    s.f = [](double x) { return std::atan(x); };
    s.df = [](double x) { return 1.0 / (1.0 + x * x); };
  } else if (kind == "quarter-root-growth") {
    need(0);
    s.f = [](double x) { return std::pow(1.0 + x * x, 0.25); };
    s.df = [](double x) { return 0.5 * x * std::pow(1.0 + x * x, -0.75); };
  } else if (kind == "knots") {
    need(1);
    return make_knots(tok[1], text);
  } else {
    throw ConfigError("function '" + text + "': unknown kind '" + kind +
                      "' (expected zero, power, saturating, logistic, sqrt-logistic, arctan, "
                      "quarter-root-growth or knots)");
  }
  s.description = text;
  return s;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"power-law-dk", "zero-range",  "dawson-watanabe",
                                              "kawasaki-ohta", "fisher-kpp", "asep"};
  return names;
}

namespace {

double require(const std::map<std::string, double>& params, const std::string& key, const std::string& preset) {
  const auto it = params.find(key);
  if (it == params.end()) throw ConfigError("preset " + preset + ": missing required parameter '" + key + "'");
  return it->second;
}

NonlinearitySet blank(const std::string& name, const std::map<std::string, double>& params) {
  NonlinearitySet s;
  s.name = name;
  s.phi_cap = zero_function();
  s.sigma = zero_function();
  s.nu = zero_function();
  s.phi_low = zero_function();
  s.lambda_low = zero_function();
  s.params = params;
  if (auto it = params.find("p"); it != params.end()) s.p = it->second;
  return s;
}

}  // namespace

NonlinearitySet make_preset(const std::string& name, const std::map<std::string, double>& params) {
  NonlinearitySet s = blank(name, params);
  if (name == "power-law-dk") {
    const double m = require(params, "m", name);
    if (!(m > 0.0)) throw ConfigError("preset power-law-dk: m must be positive");
    s.m = m;
    s.phi_cap = power_function(1.0, m);
    s.sigma = power_function(1.0, 0.5 * m);
  } else if (name == "zero-range") {
    const double m = require(params, "m", name);
    const double eps = require(params, "eps", name);
    if (!(m > 0.0) || !(eps > 0.0)) throw ConfigError("preset zero-range: m and eps must be positive");
    s.m = m;
    s.phi_cap = power_function(0.5 * eps, m);
    s.sigma = power_function(std::sqrt(eps), 0.5 * m);
    s.nu = power_function(-0.5 * eps, m);
    s.nu_direction = {1.0, 0.0};
  } else if (name == "dawson-watanabe") {
    s.m = 2.0;
    s.phi_cap = power_function(1.0, 2.0);
    s.phi_low = power_function(1.0, 0.5);
  } else if (name == "kawasaki-ohta") {
    s.m = 1.0;
    s.phi_cap = parse_function("arctan");
    s.sigma = parse_function("quarter-root-growth");
    s.theta2_closed = [](double xi) { return std::asinh(xi); };
    s.signed_domain = true;
  } else if (name == "fisher-kpp") {
    const double gamma = require(params, "gamma", name);
    const double eps = require(params, "eps", name);
    s.m = 1.0;
    s.phi_cap = power_function(1.0, 1.0);
    s.lambda_low.zero = false;
    s.lambda_low.power.reset();
    s.lambda_low.f = [gamma](double x) { return gamma * std::min(x, 1.0) * (1.0 - x); };
    s.lambda_low.df = [gamma](double x) { return x < 1.0 ? gamma * (1.0 - 2.0 * x) : -gamma; };
    s.lambda_low.description = "gamma min(x,1)(1-x)";
    s.phi_low = parse_function("sqrt-logistic " + fmt(eps));
    if (eps == 0.0) s.phi_low = zero_function();
  } else if (name == "asep") {
    const double eps = require(params, "eps", name);
    if (!(eps > 0.0)) throw ConfigError("preset asep: eps must be positive");
    s.m = 1.0;
    s.phi_cap = power_function(0.5 * eps, 1.0);
    s.sigma = parse_function("sqrt-logistic " + fmt(std::sqrt(eps)));
    s.nu = parse_function("logistic -1");
    s.nu_direction = {1.0, 0.0};
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Auxiliary functions

namespace {

// Adaptive Gauss-Kronrod with a tanh-sinh fallback; absolute tolerance 1e-10.
template <class F>
double integrate_checked(F f, double a, double b, const char* what) {
  if (b <= a) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
  if (std::isfinite(v) && err <= 1e-10 * std::max(1.0, std::abs(v))) return v;
  boost::math::quadrature::tanh_sinh<double> ts;
  double err2 = 0.0;
  const double v2 = ts.integrate(f, a, b, 1e-12, &err2);
  if (std::isfinite(v2) && err2 <= 1e-10 * std::max(1.0, std::abs(v2))) return v2;
  throw NumericError(std::string(what) + ": quadrature did not converge on [" + fmt(a) + ", " + fmt(b) +
                     "] (error estimate " + fmt(std::max(err, err2)) + ")");
}

bool is_power(const ScalarFunction& f) { return f.power.has_value() && !f.zero; }

}  // namespace

double theta_phi_p(const NonlinearitySet& set, double p, double xi) {
  if (!(xi > 0.0)) return 0.0;
  if (is_power(set.phi_cap)) {
    const double c = (*set.phi_cap.power)[0], m = (*set.phi_cap.power)[1];
    const double e = 0.5 * (p + m - 1.0);
    return std::sqrt(c * m) * std::pow(xi, e) / e;
  }
  if (p == 2.0 && set.theta2_closed) return set.theta2_closed(xi);
  // s = u^2 removes the integrable singularity of sqrt(Phi') at 0.
  auto g = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double s = u * u;
    const double d = set.phi_cap.derivative(s);
    return 2.0 * u * std::pow(s, 0.5 * (p - 2.0)) * std::sqrt(std::max(d, 0.0));
  };
  return integrate_checked(g, 0.0, std::sqrt(xi), "theta_phi_p");
}

double psi_phi(const NonlinearitySet& set, double xi) {
  if (!(xi > 0.0)) return 0.0;
  if (is_power(set.phi_cap)) {
    const double c = (*set.phi_cap.power)[0], m = (*set.phi_cap.power)[1];
    if (c <= 0.0) throw NumericError("psi_phi: Phi is not positive, log Phi undefined");
    return xi * std::log(c) + m * (xi * std::log(xi) - xi);
  }
  if (set.psi_phi_closed) return set.psi_phi_closed(xi);
  for (double frac : {0.25, 0.5, 0.75, 1.0}) {
    if (!(set.phi_cap(frac * xi) > 0.0)) {
      throw NumericError("psi_phi: Phi vanishes at " + fmt(frac * xi) + "; log Phi is not locally integrable");
    }
  }
  auto g = [&](double u) {
    const double s = u * u;
    if (!(s > 0.0)) return 0.0;
    return 2.0 * u * std::log(set.phi_cap(s));
  };
  return integrate_checked(g, 0.0, std::sqrt(xi), "psi_phi");
}

double psi_sigma_p(const NonlinearitySet& set, double p, double xi) {
  if (!(xi > 0.0)) return 0.0;
  if (set.sigma.zero) return 0.0;
  if (p == 2.0) {
    const double s0 = set.sigma(0.0), s = set.sigma(xi);
    return 0.5 * (s * s - s0 * s0);
  }
  if (is_power(set.sigma)) {
    const double c = (*set.sigma.power)[0], a = (*set.sigma.power)[1];
    const double e = p - 2.0 + 2.0 * a;
    return c * c * a * std::pow(xi, e) / e;
  }
  auto g = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double s = u * u;
    return 2.0 * u * std::pow(s, p - 2.0) * set.sigma(s) * set.sigma.derivative(s);
  };
  return integrate_checked(g, 0.0, std::sqrt(xi), "psi_sigma_p");
}

AuxFunctions::AuxFunctions(const NonlinearitySet& set, double p)
    : set_(std::make_shared<const NonlinearitySet>(set)), p_(p) {}

// ---------------------------------------------------------------------------
// Cutoffs

double cutoff_eval(CutoffKind kind, double param, double xi) {
  switch (kind) {
    case CutoffKind::phi_beta:
      if (xi <= 0.5 * param) return 0.0;
      if (xi >= param) return 1.0;
      return (xi - 0.5 * param) * 2.0 / param;
    case CutoffKind::zeta_M:
      if (xi <= param) return 1.0;
      if (xi >= param + 1.0) return 0.0;
      return param + 1.0 - xi;
    case CutoffKind::psi_delta: {
      if (xi <= 0.5 * param) return 0.0;
      if (xi >= param) return 1.0;
      const double t = (xi - 0.5 * param) * 2.0 / param;
      return t * t * (3.0 - 2.0 * t);
    }
    case CutoffKind::Psi_delta:
      return cutoff_eval(CutoffKind::psi_delta, param, xi) * xi;
  }
  return 0.0;
}

double psi_delta_derivative(double delta, double xi) {
  if (xi <= 0.5 * delta || xi >= delta) return 0.0;
  const double t = (xi - 0.5 * delta) * 2.0 / delta;
  return 6.0 * t * (1.0 - t) * 2.0 / delta;
}

// ---------------------------------------------------------------------------
// Mollification

namespace {

struct MollifiedTable {
  std::vector<double> x, v, dv;

  double value(double xi) const {
    if (xi <= 0.0) return dv.front() * xi;
    if (xi >= x.back()) return v.back();
    const std::size_t i = std::size_t(std::upper_bound(x.begin(), x.end(), xi) - x.begin());
    const double h = x[i] - x[i - 1];
    const double t = (xi - x[i - 1]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * v[i - 1] + h10 * h * dv[i - 1] + h01 * v[i] + h11 * h * dv[i];
  }
  double derivative(double xi) const {
    if (xi <= 0.0) return dv.front();
    if (xi >= x.back()) return 0.0;
    const std::size_t i = std::size_t(std::upper_bound(x.begin(), x.end(), xi) - x.begin());
    const double h = x[i] - x[i - 1];
    const double t = (xi - x[i - 1]) / h;
    const double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1;
    const double d01 = -6 * t * t + 6 * t, d11 = 3 * t * t - 2 * t;
    return (d00 * v[i - 1] + d01 * v[i]) / h + d10 * dv[i - 1] + d11 * dv[i];
  }
};

// Standard bump exp(-1/(1-r^2)) normalised on [-1, 1].
double bump(double r) { return std::abs(r) < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

double bump_mass() {
  static const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(bump, -1.0, 1.0, 10, 1e-14);
  return mass;
}

}  // namespace

NonlinearitySet mollify_sigma(const NonlinearitySet& set, int n) {
  if (n < 1) throw ConfigError("mollify_sigma: n must be >= 1");
  const double nn = n;
  const double eps = 1.0 / nn;
  const ScalarFunction sigma = set.sigma;
  // Clamped, truncated derivative, extended by zero to xi < 0.
  auto g = [&sigma, nn](double s) {
    if (s <= 0.0 || s > nn) return 0.0;
    const double d = sigma.derivative(s);
    if (std::isnan(d)) return 0.0;
    return std::clamp(d, -nn, nn);
  };
  const double inv_mass = 1.0 / bump_mass();
  using GL = boost::math::quadrature::gauss<double, 20>;
  auto smoothed = [&](double xi) {
    // Split the kernel support at the jumps of g (0 and n).
    std::vector<double> cuts{xi - eps, xi + eps};
    for (double c : {0.0, nn}) {
      if (c > xi - eps && c < xi + eps) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      acc += GL::integrate([&](double s) { return g(s) * bump((xi - s) / eps); }, cuts[i], cuts[i + 1]);
    }
    return acc * inv_mass / eps;
  };

  auto tab = std::make_shared<MollifiedTable>();
  const double fine = 1.0 / (32.0 * nn);
  const double coarse = 1.0 / 32.0;
  const double end = nn + 1.0 + eps;
  auto push_segment = [&](double a, double b, double h) {
    const long long steps = std::max(1LL, (long long)std::ceil((b - a) / h - 1e-9));
    for (long long i = (tab->x.empty() ? 0 : 1); i <= steps; ++i) tab->x.push_back(a + (b - a) * double(i) / double(steps));
  };
  const double lo_end = std::min(2.0, end);
  push_segment(0.0, lo_end, fine);
  const double hi_start = std::max(lo_end, nn - 1.0);
  if (hi_start > lo_end) push_segment(lo_end, hi_start, coarse);
  if (end > hi_start) push_segment(hi_start, end, fine);

  const std::size_t N = tab->x.size();
  tab->dv.resize(N);
  tab->v.resize(N);
  for (std::size_t i = 0; i < N; ++i) tab->dv[i] = smoothed(tab->x[i]);
  tab->v[0] = 0.0;
  for (std::size_t i = 1; i < N; ++i) {
    const double a = tab->x[i - 1], b = tab->x[i];
    const double mid = smoothed(0.5 * (a + b));
    tab->v[i] = tab->v[i - 1] + (b - a) * (tab->dv[i - 1] + 4.0 * mid + tab->dv[i]) / 6.0;
  }

  NonlinearitySet out = set;
  out.sigma.f = [tab](double xi) { return tab->value(xi); };
  out.sigma.df = [tab](double xi) { return tab->derivative(xi); };
  out.sigma.power.reset();
  out.sigma.zero = set.sigma.zero;
  out.sigma.description = set.sigma.description + " mollified n=" + std::to_string(n);
  out.mollified_n = n;
  return out;
}

// ---------------------------------------------------------------------------
// Assumption checker

SampleGrid SampleGrid::log_uniform(double lo, double hi, int count) {
  SampleGrid g;
  g.points.resize(std::size_t(count));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g.points[std::size_t(i)] = std::exp(a + (b - a) * i / (count - 1));
  return g;
}

namespace {

struct Bounded {
  double constant = 0.0;
  double witness = 0.0;
  double slope_low = 0.0;
  double slope_high = 0.0;
  bool finite = true;
  double bad_point = 0.0;
};

constexpr double kSlopeTol = 0.05;

double decade_slope(const std::vector<double>& xs, const std::vector<double>& rs, bool low) {
  const double lo = xs.front(), hi = xs.back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  bool any_positive = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (low ? xs[i] > lo * 10.0 : xs[i] < hi / 10.0) continue;
    if (rs[i] > 0.0) any_positive = true;
  }
  if (!any_positive) return 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (low ? xs[i] > lo * 10.0 : xs[i] < hi / 10.0) continue;
    const double lx = std::log(xs[i]);
    const double ly = std::log(std::max(rs[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  if (cnt < 2) return 0.0;
  const double den = cnt * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (cnt * sxy - sx * sy) / den;
}

// Bounded-ratio heuristic: finite everywhere and neither end decade trending to infinity.
Bounded examine(const std::vector<double>& xs, const std::vector<double>& rs) {
  Bounded b;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(rs[i])) {
      b.finite = false;
      b.bad_point = xs[i];
      return b;
    }
    if (std::abs(rs[i]) > b.constant) {
      b.constant = std::abs(rs[i]);
      b.witness = xs[i];
    }
  }
  std::vector<double> ab(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) ab[i] = std::abs(rs[i]);
  b.slope_low = decade_slope(xs, ab, true);
  b.slope_high = decade_slope(xs, ab, false);
  return b;
}

CheckResult bounded_check(const std::string& id, const std::vector<double>& xs, const std::vector<double>& rs,
                          bool hard, bool check_low = true, bool check_high = true, double min_constant = 0.0) {
  const Bounded b = examine(xs, rs);
  CheckResult r{id, CheckStatus::pass, std::max(b.constant, min_constant), b.witness, "", hard};
  if (!b.finite) {
    r.status = CheckStatus::fail;
    r.witness = b.bad_point;
    r.note = "ratio not finite";
  } else if (check_low && b.slope_low < -kSlopeTol) {
    r.status = CheckStatus::fail;
    r.witness = xs.front();
    r.note = "ratio grows toward 0 (log-log slope " + fmt(b.slope_low) + ")";
  } else if (check_high && b.slope_high > kSlopeTol) {
    r.status = CheckStatus::fail;
    r.witness = xs.back();
    r.note = "ratio grows at infinity (log-log slope " + fmt(b.slope_high) + ")";
  }
  return r;
}

std::vector<double> theta_table(const NonlinearitySet& set, double p, const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  const bool closed = (set.phi_cap.power.has_value() && !set.phi_cap.zero) || (p == 2.0 && set.theta2_closed);
  if (closed) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = theta_phi_p(set, p, xs[i]);
    return out;
  }
  double acc = theta_phi_p(set, p, xs.front());
  out[0] = acc;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    auto g = [&](double s) {
      return std::pow(s, 0.5 * (p - 2.0)) * std::sqrt(std::max(set.phi_cap.derivative(s), 0.0));
    };
    acc += integrate_checked(g, xs[i - 1], xs[i], "theta_phi_p");
    out[i] = acc;
  }
  return out;
}

CheckResult noise_alternative(const std::string& id, CheckResult primary, const NoiseContext& noise,
                              const std::string& what) {
  if (primary.status == CheckStatus::pass) {
    primary.note = what;
    return primary;
  }
  CheckResult r = primary;
  r.id = id;
  if (noise.stationary.has_value() && *noise.stationary) {
    r.status = CheckStatus::pass;
    r.note = "div F2 = 0 (stationary noise)";
  } else if (!noise.stationary.has_value()) {
    r.status = CheckStatus::undetermined;
    r.note = what + " fails (" + primary.note + "); holds if the noise is stationary";
  } else {
    r.status = CheckStatus::fail;
    r.note = what + " fails (" + primary.note + ") and the noise is not stationary";
  }
  return r;
}

}  // namespace

AssumptionReport check_assumptions(const NonlinearitySet& set, const SampleGrid& grid, double tol,
                                   const NoiseContext& noise) {
  AssumptionReport rep;
  const std::vector<double>& xs = grid.points;
  const std::size_t N = xs.size();
  const double p = set.p;
  std::vector<double> Phi(N), dPhi(N), sig(N), dsig(N), nu(N), phl(N), lam(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double x = xs[i];
    Phi[i] = set.phi_cap(x);
    dPhi[i] = set.phi_cap.derivative(x);
    sig[i] = set.sigma(x);
    dsig[i] = set.sigma.derivative(x);
    nu[i] = std::abs(set.nu(x)) * std::hypot(set.nu_direction[0], set.nu_direction[1]);
    phl[i] = set.phi_low(x);
    lam[i] = set.lambda_low(x);
  }
  std::vector<double> th2, thp;
  bool theta_ok = true;
  std::string theta_err;
  try {
    th2 = theta_table(set, 2.0, xs);
    thp = p == 2.0 ? th2 : theta_table(set, p, xs);
  } catch (const NumericError& e) {
    theta_ok = false;
    theta_err = e.what();
  }
  std::vector<double> r(N);

  // Basic regularity and positivity (hard).
  {
    CheckResult c{"regularity", CheckStatus::pass, 0.0, 0.0, "sampled derivatives finite on (0, inf)", true};
    for (std::size_t i = 0; i < N; ++i) {
      if (!std::isfinite(dPhi[i]) || !std::isfinite(dsig[i]) || !std::isfinite(set.nu.derivative(xs[i]))) {
        c.status = CheckStatus::fail;
        c.witness = xs[i];
        c.note = "non-finite derivative";
        break;
      }
    }
    rep.add(c);
  }
  {
    CheckResult c{"phi_zero_increasing", CheckStatus::pass, std::abs(set.phi_cap(0.0)), 0.0, "", true};
    if (std::abs(set.phi_cap(0.0)) > tol) {
      c.status = CheckStatus::fail;
      c.note = "Phi(0) != 0";
    }
    for (std::size_t i = 0; i < N && c.status == CheckStatus::pass; ++i) {
      if (!(dPhi[i] > 0.0)) {
        c.status = CheckStatus::fail;
        c.witness = xs[i];
        c.note = "Phi' not positive";
      }
    }
    rep.add(c);
  }
  {
    CheckResult c{"sigma_zero", CheckStatus::pass, std::abs(set.sigma(0.0)), 0.0, "", true};
    if (std::abs(set.sigma(0.0)) > tol) {
      c.status = CheckStatus::fail;
      c.note = "sigma(0) != 0";
    }
    rep.add(c);
  }
  // sigma^2 / xi bounded near zero.
  {
    std::vector<double> xl, rl;
    for (std::size_t i = 0; i < N; ++i) {
      if (xs[i] > 1.0) break;
      xl.push_back(xs[i]);
      rl.push_back(sig[i] * sig[i] / xs[i]);
    }
    CheckResult c = xl.size() >= 2 ? bounded_check("sigma_sq_over_xi_near_zero", xl, rl, true, true, false)
                                   : CheckResult{"sigma_sq_over_xi_near_zero", CheckStatus::undetermined, 0, 0,
                                                 "no samples in (0, 1]", true};
    if (c.status == CheckStatus::fail) c.witness = xl.front();
    rep.add(c);
  }
  // sigma sigma' continuous with value 0 at 0, or stationary noise.
  {
    CheckResult c{"sigma_sigma_prime_at_zero", CheckStatus::pass, 0.0, xs.front(), "", true};
    const double v0 = std::abs(sig[0] * dsig[0]);
    c.constant = v0;
    if (!(std::isfinite(v0) && v0 <= std::max(tol, 1e-3))) {
      c.status = CheckStatus::fail;
      c.note = "sigma sigma' does not vanish at 0";
    }
    rep.add(noise_alternative("sigma_sigma_prime_at_zero", c, noise, "(sigma sigma')(0) = 0"));
  }
  // Oscillation bounds for sigma^2 and nu.
  {
    double run = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      run = std::max(run, sig[i] * sig[i]);
      r[i] = run / (1.0 + xs[i] + sig[i] * sig[i]);
    }
    rep.add(bounded_check("sigma_sq_oscillation", xs, r, true, false, true, 1.0));
    run = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      run = std::max(run, nu[i]);
      r[i] = run / (1.0 + xs[i] + nu[i]);
    }
    rep.add(bounded_check("nu_oscillation", xs, r, true, false, true, 1.0));
  }

  // Growth block for the a priori estimates (hard).
  const double m_eff = std::max(1.0, set.m);
  for (std::size_t i = 0; i < N; ++i) r[i] = Phi[i] / (1.0 + std::pow(xs[i], m_eff));
  {
    CheckResult c = bounded_check("phi_growth", xs, r, true);
    c.note = "m = " + fmt(m_eff);
    rep.constants["m"] = m_eff;
    rep.add(c);
  }
  if (!theta_ok) {
    for (const char* id : {"nu_dphi_growth", "theta_nondegeneracy", "sigma_growth", "psi_sigma_growth",
                           "sigma_derivative_growth"}) {
      rep.add({id, CheckStatus::undetermined, 0.0, 0.0, theta_err, true});
    }
  } else {
    for (std::size_t i = 0; i < N; ++i) r[i] = (nu[i] + dPhi[i]) / (1.0 + xs[i] + thp[i] * thp[i]);
    rep.add(bounded_check("nu_dphi_growth", xs, r, true));

    // Either a lower bound on Theta' or a coercivity of Theta differences.
    {
      CheckResult c{"theta_nondegeneracy", CheckStatus::undetermined, 0.0, 0.0, "", true};
      if (set.phi_cap.power.has_value() && !set.phi_cap.zero) {
        const double mp = (*set.phi_cap.power)[1] + p;
        c.status = CheckStatus::pass;
        if (mp >= 2.0 && mp <= 3.0) {
          c.constant = 0.5 * (3.0 - mp);
          c.note = "lower-bound form holds with theta = " + fmt(c.constant);
        } else if (mp >= 3.0) {
          c.constant = mp - 1.0;
          c.note = "coercive form holds with q = " + fmt(c.constant);
        } else {
          c.status = CheckStatus::fail;
          c.note = "m + p < 2";
        }
      } else {
        // Lower-bound form: need theta in [0, 1/2] between the end-decade slopes of
        // xi^{-(p-2)/2} Phi'^{-1/2}.
        for (std::size_t i = 0; i < N; ++i) r[i] = std::pow(xs[i], -0.5 * (p - 2.0)) / std::sqrt(dPhi[i]);
        const Bounded b = examine(xs, r);
        const double lo_theta = std::max(0.0, b.slope_high - kSlopeTol);
        const double hi_theta = std::min(0.5, b.slope_low + kSlopeTol);
        if (b.finite && lo_theta <= hi_theta) {
          c.status = CheckStatus::pass;
          c.constant = lo_theta;
          c.note = "lower-bound form holds numerically with theta = " + fmt(lo_theta);
        } else {
          // Coercive form: the pair ratio |dxi|^q / |dTheta|^2 must be stable when
          // the end decades are dropped.
          for (double q : {1.0, 2.0, 3.0, 4.0, 6.0, 8.0}) {
            auto pair_max = [&](double lo, double hi) {
              double mx = 0.0;
              for (std::size_t i = 0; i < N; i += 4) {
                if (xs[i] < lo || xs[i] > hi) continue;
                for (std::size_t j = i + 4; j < N; j += 4) {
                  if (xs[j] > hi) break;
                  const double dth = thp[j] - thp[i];
                  mx = std::max(mx, std::pow(xs[j] - xs[i], q) / (dth * dth));
                }
              }
              return mx;
            };
            const double full = pair_max(xs.front(), xs.back());
            const double inner = pair_max(xs.front() * 10.0, xs.back() / 10.0);
            if (std::isfinite(full) && full <= 2.0 * inner) {
              c.status = CheckStatus::pass;
              c.constant = q;
              c.note = "coercive form holds numerically with q = " + fmt(q);
              break;
            }
          }
          if (c.status != CheckStatus::pass) c.note = "neither alternative established on the samples";
        }
      }
      rep.add(c);
    }

    {
      for (std::size_t i = 0; i < N; ++i) r[i] = sig[i] * sig[i] / (1.0 + xs[i] + th2[i] * th2[i]);
      CheckResult a = bounded_check("sigma_growth", xs, r, true);
      for (std::size_t i = 0; i < N; ++i) {
        r[i] = std::pow(xs[i], p - 2.0) * sig[i] * sig[i] / (1.0 + xs[i] + thp[i] * thp[i]);
      }
      CheckResult b = bounded_check("sigma_growth", xs, r, true);
      if (b.status == CheckStatus::fail) a = b;
      else a.constant = std::max(a.constant, b.constant);
      rep.add(a);
    }
    {
      CheckResult c{"psi_sigma_growth", CheckStatus::pass, 0.0, 0.0, "", true};
      try {
        for (std::size_t i = 0; i < N; ++i) r[i] = psi_sigma_p(set, p, xs[i]) / (1.0 + xs[i] + thp[i] * thp[i]);
        c = bounded_check("psi_sigma_growth", xs, r, true);
      } catch (const NumericError& e) {
        c.status = CheckStatus::fail;
        c.note = e.what();
      }
      rep.add(noise_alternative("psi_sigma_growth", c, noise, "Psi_sigma growth bound"));
    }
    {
      std::vector<double> xh, rh;
      for (std::size_t i = 0; i < N; ++i) {
        if (xs[i] < 1e-2) continue;
        xh.push_back(xs[i]);
        const double s4 = dsig[i] * dsig[i] * dsig[i] * dsig[i];
        const double ss = sig[i] * dsig[i];
        rh.push_back((s4 / dPhi[i] + ss * ss + dPhi[i]) / (1.0 + xs[i] + thp[i] * thp[i]));
      }
      CheckResult c = bounded_check("sigma_derivative_growth", xh, rh, true, false, true);
      c.note = (c.note.empty() ? "" : c.note + "; ") + "checked on [1e-2, inf)";
      rep.add(c);
    }
  }

  // Entropy block (soft).
  {
    for (std::size_t i = 0; i < N; ++i) r[i] = Phi[i] > 0.0 ? sig[i] * sig[i] / Phi[i] : (sig[i] == 0.0 ? 0.0 : kInf);
    rep.add(bounded_check("entropy_sigma_phi_bound", xs, r, false));
    for (std::size_t i = 0; i < N; ++i) r[i] = (nu[i] + dPhi[i]) / (1.0 + xs[i] + Phi[i]);
    rep.add(bounded_check("entropy_growth", xs, r, false));
    CheckResult st{"entropy_stationary_noise", CheckStatus::undetermined, 0.0, 0.0, "no noise supplied", false};
    if (noise.stationary.has_value()) {
      st.status = *noise.stationary ? CheckStatus::pass : CheckStatus::fail;
      st.note = *noise.stationary ? "div F2 = 0" : "div F2 != 0";
    }
    rep.add(st);
    CheckResult li{"log_phi_integrable", CheckStatus::pass, 0.0, 1.0, "", false};
    try {
      li.constant = psi_phi(set, 1.0);
      if (!std::isfinite(li.constant)) throw NumericError("non-finite Psi_Phi(1)");
    } catch (const NumericError& e) {
      li.status = CheckStatus::fail;
      li.note = e.what();
    }
    rep.add(li);
  }

  // Source terms: Lipschitz lambda, 1/2-Hoelder phi (soft; only gate general runs).
  {
    CheckResult c{"lambda_lipschitz", CheckStatus::pass, 0.0, 0.0, "", false};
    if (std::abs(set.lambda_low(0.0)) > tol) {
      c.status = CheckStatus::fail;
      c.note = "lambda(0) != 0";
    }
    std::vector<double> pts{0.0};
    pts.insert(pts.end(), xs.begin(), xs.end());
    double L = 0.0, wit = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double dq = std::abs(set.lambda_low(pts[i]) - set.lambda_low(pts[i - 1])) / (pts[i] - pts[i - 1]);
      const double dd = std::abs(set.lambda_low.derivative(pts[i]));
      const double v = std::max(dq, std::isfinite(dd) ? dd : dq);
      if (v > L) {
        L = v;
        wit = pts[i];
      }
    }
    if (!std::isfinite(L)) {
      c.status = CheckStatus::fail;
      c.note = "lambda not Lipschitz";
    }
    c.constant = L;
    c.witness = wit;
    rep.constants["lambda_lipschitz"] = L;
    rep.add(c);
  }
  {
    CheckResult c{"phi_holder", CheckStatus::pass, 0.0, 0.0, "", false};
    if (std::abs(set.phi_low(0.0)) > tol) {
      c.status = CheckStatus::fail;
      c.note = "phi(0) != 0";
    }
    std::vector<double> pts{0.0};
    for (std::size_t i = 0; i < N; i += 2) pts.push_back(xs[i]);
    std::vector<double> vals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) vals[i] = set.phi_low(pts[i]);
    double C = 0.0, wit = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double h = pts[j] - pts[i];
        const double w = h <= 1.0 ? std::sqrt(h) : h;
        const double v = std::abs(vals[j] - vals[i]) / w;
        if (v > C) {
          C = v;
          wit = pts[j];
        }
      }
    }
    c.constant = C;
    c.witness = wit;
    if (!std::isfinite(C)) {
      c.status = CheckStatus::fail;
      c.note = "phi not 1/2-Hoelder";
    }
    rep.constants["phi_holder"] = C;
    rep.add(c);
  }
  {
    std::vector<double> r2(N);
    for (std::size_t i = 0; i < N; ++i) {
      r[i] = std::abs(phl[i]) / (1.0 + xs[i]);
      r2[i] = std::abs(lam[i]) / xs[i];
    }
    CheckResult a = bounded_check("source_linear_growth", xs, r, false);
    CheckResult b = bounded_check("source_linear_growth", xs, r2, false);
    if (b.status == CheckStatus::fail) a = b;
    else a.constant = std::max(a.constant, b.constant);
    rep.add(a);
  }
  {
    for (std::size_t i = 0; i < N; ++i) {
      const double lg = Phi[i] > 0.0 ? std::log(Phi[i]) : -kInf;
      const double v = phl[i] == 0.0 ? 0.0 : phl[i] * phl[i] * (1.0 + lg * lg + dPhi[i] / Phi[i]);
      r[i] = v / (1.0 + xs[i] + Phi[i]);
    }
    rep.add(bounded_check("entropy_source_noise", xs, r, false));
    for (std::size_t i = 0; i < N; ++i) {
      const double lg = Phi[i] > 0.0 ? std::log(Phi[i]) : -kInf;
      r[i] = lam[i] == 0.0 ? 0.0 : std::abs(lam[i] * lg) / (1.0 + xs[i] + Phi[i]);
    }
    rep.add(bounded_check("entropy_source_reaction", xs, r, false));
  }

  // Smooth sigma with compactly supported derivative (regularized equation).
  {
    CheckResult c{"sigma_smooth_compact", CheckStatus::pass, 0.0, 0.0, "", false};
    double mx = 0.0;
    for (std::size_t i = 0; i < N; ++i) mx = std::max(mx, std::abs(dsig[i]));
    c.constant = mx;
    if (set.sigma.zero) {
      c.note = "sigma = 0";
    } else if (set.mollified_n) {
      const double edge = *set.mollified_n + 1.0;
      for (std::size_t i = 0; i < N; ++i) {
        if (xs[i] > edge && dsig[i] != 0.0) {
          c.status = CheckStatus::fail;
          c.witness = xs[i];
          c.note = "sigma' nonzero beyond n + 1";
          break;
        }
      }
      if (!std::isfinite(mx)) c.status = CheckStatus::fail;
    } else {
      c.status = CheckStatus::fail;
      c.note = "sigma' is not compactly supported; use a mollified sigma";
      for (std::size_t i = N; i-- > 0;) {
        if (dsig[i] != 0.0) {
          c.witness = xs[i];
          break;
        }
      }
    }
    rep.add(c);
  }
  return rep;
}

}  // namespace dkspde
