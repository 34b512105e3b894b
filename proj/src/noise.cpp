#include "dkspde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <sstream>

#include "dkspde/errors.hpp"
#include "dkspde/io.hpp"
#include "dkspde/rng.hpp"

namespace dkspde {

SpectralNoiseSpec SpectralNoiseSpec::decaying(int count, double amplitude, double decay, bool pairs) {
  SpectralNoiseSpec s;
  s.includes_cosine_partner = pairs;
  for (int k = 1; k <= count; ++k) {
    s.wavevectors.push_back({k, 0});
    s.amplitudes.push_back(amplitude * std::pow(double(k), -decay));
  }
  return s;
}

namespace {

struct ModeSet {
  std::vector<std::vector<double>> cells;
  std::vector<std::array<std::vector<double>, 2>> faces;
  std::vector<std::array<std::vector<double>, 2>> grads;
};

void validate_spec(const SpectralNoiseSpec& s, const GridSpec& grid, const char* which) {
  if (s.wavevectors.size() != s.amplitudes.size()) {
    throw ConfigError(std::string("noise ") + which + ": " + std::to_string(s.wavevectors.size()) +
                      " wavevectors but " + std::to_string(s.amplitudes.size()) + " amplitudes");
  }
  std::set<std::array<int, 2>> seen;
  for (std::size_t i = 0; i < s.wavevectors.size(); ++i) {
    auto k = s.wavevectors[i];
    if (grid.d == 1) k[1] = 0;
    const std::string name = "(" + std::to_string(k[0]) + (grid.d == 2 ? "," + std::to_string(k[1]) : "") + ")";
    for (int a = 0; a < grid.d; ++a) {
      if (2 * std::abs(k[a]) >= grid.n) {
        throw ConfigError(std::string("noise ") + which + ": wavevector k=" + name + " is not resolved by n=" +
                          std::to_string(grid.n) + " (need |k_i| < n/2)");
      }
    }
    if (k[0] == 0 && k[1] == 0) throw ConfigError(std::string("noise ") + which + ": zero wavevector");
    if (!seen.insert(k).second) throw ConfigError(std::string("noise ") + which + ": duplicate wavevector k=" + name);
    if (!std::isfinite(s.amplitudes[i])) throw ConfigError(std::string("noise ") + which + ": non-finite amplitude");
  }
}

// Evaluates a * trig(k.x) at cells, at the faces of each axis, and its gradient at cells.
void add_mode(ModeSet& out, const GridSpec& grid, std::array<int, 2> k, double a, bool cosine) {
  const std::size_t N = grid.size();
  const double h = grid.dx();
  if (grid.d == 1) k[1] = 0;
  auto f = [&](double x, double y) {
    const double ph = k[0] * x + k[1] * y;
    return cosine ? a * std::cos(ph) : a * std::sin(ph);
  };
  auto df = [&](double x, double y) {
    const double ph = k[0] * x + k[1] * y;
    return cosine ? -a * std::sin(ph) : a * std::cos(ph);
  };
  std::vector<double> cells(N);
  std::array<std::vector<double>, 2> faces, grads;
  for (int ax = 0; ax < grid.d; ++ax) {
    faces[ax].resize(N);
    grads[ax].resize(N);
  }
  for (std::size_t idx = 0; idx < N; ++idx) {
    const double x = grid.coord(idx, 0) * h;
    const double y = grid.d == 2 ? grid.coord(idx, 1) * h : 0.0;
    cells[idx] = f(x, y);
    faces[0][idx] = f(x + 0.5 * h, y);
    grads[0][idx] = k[0] * df(x, y);
    if (grid.d == 2) {
      faces[1][idx] = f(x, y + 0.5 * h);
      grads[1][idx] = k[1] * df(x, y);
    }
  }
  out.cells.push_back(std::move(cells));
  out.faces.push_back(std::move(faces));
  out.grads.push_back(std::move(grads));
}

ModeSet spectral_modes(const SpectralNoiseSpec& s, const GridSpec& grid) {
  ModeSet m;
  for (std::size_t i = 0; i < s.wavevectors.size(); ++i) {
    add_mode(m, grid, s.wavevectors[i], s.amplitudes[i], false);
    if (s.includes_cosine_partner) add_mode(m, grid, s.wavevectors[i], s.amplitudes[i], true);
  }
  return m;
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace

NoiseField build_spectral_noise(const SpectralNoiseSpec& spec_F, const GridSpec& grid, const SpectralNoiseSpec& spec_G) {
  validate_spec(spec_F, grid, "F");
  validate_spec(spec_G, grid, "G");
  NoiseField nf;
  nf.spec = grid;
  const std::size_t N = grid.size();
  const double h = grid.dx();

  ModeSet mf = spectral_modes(spec_F, grid);
  nf.modes_F = std::move(mf.cells);
  nf.modes_F_faces = std::move(mf.faces);
  nf.grad_F = std::move(mf.grads);
  nf.modes_G = spectral_modes(spec_G, grid).cells;
  nf.analytic = true;
  nf.paired = spec_F.includes_cosine_partner;

  nf.F1.assign(N, 0.0);
  nf.F3.assign(N, 0.0);
  nf.G1.assign(N, 0.0);
  nf.divF2.assign(N, 0.0);
  for (int a = 0; a < 2; ++a) {
    if (a < grid.d) {
      nf.F2[a].assign(N, 0.0);
      nf.F1_faces[a].assign(N, 0.0);
      nf.F2_faces[a].assign(N, 0.0);
    }
  }

  // Coefficients from the closed forms: a pair contributes a^2 to F1 and |k|^2 a^2
  // to F3 with no gradient; an unpaired sine contributes a^2 sin^2(k.x), whose
  // gradient and Laplacian are known exactly.
  for (std::size_t i = 0; i < spec_F.wavevectors.size(); ++i) {
    auto k = spec_F.wavevectors[i];
    if (grid.d == 1) k[1] = 0;
    const double a2 = spec_F.amplitudes[i] * spec_F.amplitudes[i];
    const double k2 = double(k[0]) * k[0] + double(k[1]) * k[1];
    if (spec_F.includes_cosine_partner) {
      for (std::size_t idx = 0; idx < N; ++idx) {
        nf.F1[idx] += a2;
        nf.F3[idx] += k2 * a2;
      }
      for (int ax = 0; ax < grid.d; ++ax) {
        for (std::size_t idx = 0; idx < N; ++idx) nf.F1_faces[ax][idx] += a2;
      }
      continue;
    }
    for (std::size_t idx = 0; idx < N; ++idx) {
      const double x = grid.coord(idx, 0) * h;
      const double y = grid.d == 2 ? grid.coord(idx, 1) * h : 0.0;
      const double ph = k[0] * x + k[1] * y;
      const double s = std::sin(ph), c = std::cos(ph);
      nf.F1[idx] += a2 * s * s;
      nf.F3[idx] += k2 * a2 * c * c;
      nf.divF2[idx] += k2 * a2 * std::cos(2.0 * ph);
      for (int ax = 0; ax < grid.d; ++ax) {
        nf.F2[ax][idx] += 0.5 * a2 * k[ax] * std::sin(2.0 * ph);
        const double phf = ph + 0.5 * h * k[ax];
        const double sf = std::sin(phf);
        nf.F1_faces[ax][idx] += a2 * sf * sf;
        nf.F2_faces[ax][idx] += 0.5 * a2 * k[ax] * std::sin(2.0 * phf);
      }
    }
  }
  for (std::size_t i = 0; i < spec_G.wavevectors.size(); ++i) {
    const double a2 = spec_G.amplitudes[i] * spec_G.amplitudes[i];
    if (spec_G.includes_cosine_partner) {
      for (double& g : nf.G1) g += a2;
    }
  }
  if (!spec_G.includes_cosine_partner) {
    for (const auto& g : nf.modes_G) {
      for (std::size_t idx = 0; idx < N; ++idx) nf.G1[idx] += g[idx] * g[idx];
    }
  }
  return nf;
}

std::vector<double> spectral_derivative(const GridSpec& grid, std::span<const double> u, int axis) {
  if (u.size() != grid.size()) throw ContractViolation("spectral_derivative: field shape mismatch");
  const int n = grid.n;
  const std::size_t N = grid.size();
  std::vector<double> out(N, 0.0);
  std::vector<std::complex<double>> tw(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) tw[j] = std::polar(1.0, 2.0 * std::numbers::pi * j / n);
  std::vector<std::complex<double>> coef(static_cast<std::size_t>(n));
  std::vector<double> line(static_cast<std::size_t>(n));
  std::vector<std::size_t> offs(static_cast<std::size_t>(n));
  const std::size_t lines = N / std::size_t(n);
  for (std::size_t l = 0; l < lines; ++l) {
    // Offsets of the cells along `axis` for line l.
    for (int i = 0; i < n; ++i) {
      if (grid.d == 1) offs[i] = std::size_t(i);
      else if (axis == 0) offs[i] = std::size_t(i) * std::size_t(n) + l;
      else offs[i] = l * std::size_t(n) + std::size_t(i);
      line[i] = u[offs[i]];
    }
    for (int j = 0; j < n; ++j) {
      std::complex<double> c = 0.0;
      for (int i = 0; i < n; ++i) c += line[i] * std::conj(tw[std::size_t((long long)i * j % n)]);
      coef[j] = c;
    }
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 1; j < n; ++j) {
        if (2 * j == n) continue;
        const int kk = j < n / 2 ? j : j - n;
        const std::complex<double> v = std::complex<double>(0.0, kk) * coef[j] * tw[std::size_t((long long)i * j % n)];
        s += v.real();
      }
      out[offs[i]] = s / n;
    }
  }
  return out;
}

NoiseField noise_from_modes(const GridSpec& grid, std::vector<std::vector<double>> modes_F,
                            std::vector<std::vector<double>> modes_G) {
  const std::size_t N = grid.size();
  for (const auto& m : modes_F) {
    if (m.size() != N) throw ContractViolation("noise_from_modes: F mode shape mismatch");
  }
  for (const auto& m : modes_G) {
    if (m.size() != N) throw ContractViolation("noise_from_modes: G mode shape mismatch");
  }
  NoiseField nf;
  nf.spec = grid;
  nf.analytic = false;
  nf.paired = false;
  nf.F1.assign(N, 0.0);
  nf.F3.assign(N, 0.0);
  nf.G1.assign(N, 0.0);
  nf.divF2.assign(N, 0.0);
  for (int a = 0; a < grid.d; ++a) {
    nf.F2[a].assign(N, 0.0);
    nf.F1_faces[a].assign(N, 0.0);
    nf.F2_faces[a].assign(N, 0.0);
  }
  for (auto& m : modes_F) {
    std::array<std::vector<double>, 2> faces, grads;
    for (int a = 0; a < grid.d; ++a) {
      grads[a] = spectral_derivative(grid, m, a);
      faces[a].resize(N);
      for (std::size_t idx = 0; idx < N; ++idx) faces[a][idx] = 0.5 * (m[idx] + m[grid.forward(idx, a)]);
    }
    for (std::size_t idx = 0; idx < N; ++idx) {
      nf.F1[idx] += m[idx] * m[idx];
      double g2 = 0.0;
      for (int a = 0; a < grid.d; ++a) {
        nf.F2[a][idx] += m[idx] * grads[a][idx];
        nf.F1_faces[a][idx] += faces[a][idx] * faces[a][idx];
        g2 += grads[a][idx] * grads[a][idx];
      }
      nf.F3[idx] += g2;
    }
    nf.modes_F.push_back(std::move(m));
    nf.modes_F_faces.push_back(std::move(faces));
    nf.grad_F.push_back(std::move(grads));
  }
  for (int a = 0; a < grid.d; ++a) {
    for (std::size_t idx = 0; idx < N; ++idx) {
      nf.F2_faces[a][idx] = 0.5 * (nf.F2[a][idx] + nf.F2[a][grid.forward(idx, a)]);
    }
    const auto dv = spectral_derivative(grid, nf.F2[a], a);
    for (std::size_t idx = 0; idx < N; ++idx) nf.divF2[idx] += dv[idx];
  }
  for (auto& g : modes_G) {
    for (std::size_t idx = 0; idx < N; ++idx) nf.G1[idx] += g[idx] * g[idx];
    nf.modes_G.push_back(std::move(g));
  }
  return nf;
}

double default_noise_tolerance(const NoiseField& noise) { return 1e-8 * (1.0 + max_of(noise.F1)); }

bool is_stationary(const NoiseField& noise, double tol) {
  for (double v : noise.divF2) {
    if (std::abs(v) > tol) return false;
  }
  return true;
}

AssumptionReport verify_noise_assumptions(const NoiseField& noise, double tol) {
  AssumptionReport rep;
  auto nonneg_finite = [&](const std::string& id, const std::vector<double>& v) {
    CheckResult r{id, CheckStatus::pass, 0.0, 0.0, "", true};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i]) || v[i] < 0.0) {
        r.status = CheckStatus::fail;
        r.witness = double(i);
        r.note = "negative or non-finite at index " + std::to_string(i);
        break;
      }
      r.constant = std::max(r.constant, v[i]);
    }
    rep.add(r);
  };
  nonneg_finite("F1_finite", noise.F1);
  nonneg_finite("F3_finite", noise.F3);
  nonneg_finite("G1_finite", noise.G1);

  CheckResult f2{"F2_consistency", CheckStatus::pass, 0.0, 0.0, "", true};
  for (int a = 0; a < noise.spec.d; ++a) {
    const auto dF1 = spectral_derivative(noise.spec, noise.F1, a);
    for (std::size_t i = 0; i < dF1.size(); ++i) {
      const double err = std::abs(noise.F2[a][i] - 0.5 * dF1[i]);
      if (!(err <= f2.constant)) {
        f2.constant = err;
        f2.witness = double(i);
      }
    }
  }
  if (!(f2.constant <= tol)) {
    f2.status = CheckStatus::fail;
    f2.note = "max |F2 - grad F1 / 2| exceeds tolerance";
  }
  rep.add(f2);

  CheckResult dv{"divF2_bounded", CheckStatus::pass, 0.0, 0.0, "", true};
  for (std::size_t i = 0; i < noise.divF2.size(); ++i) {
    const double v = std::abs(noise.divF2[i]);
    if (!std::isfinite(v)) {
      dv.status = CheckStatus::fail;
      dv.witness = double(i);
      dv.note = "non-finite div F2";
      break;
    }
    if (v > dv.constant) {
      dv.constant = v;
      dv.witness = double(i);
    }
  }
  rep.add(dv);

  const bool stat = is_stationary(noise, tol);
  rep.add({"stationary", CheckStatus::info, dv.constant, dv.witness, stat ? "true" : "false", false});
  rep.constants["stationary"] = stat ? 1.0 : 0.0;
  rep.constants["F1_max"] = max_of(noise.F1);
  rep.constants["F3_max"] = max_of(noise.F3);
  return rep;
}

PathBundle sample_increments(const NoiseField& noise, double dt, long long steps, std::uint64_t seed,
                             std::size_t budget_bytes) {
  if (!(dt > 0.0)) throw ContractViolation("sample_increments: dt must be positive");
  if (steps < 0) throw ContractViolation("sample_increments: negative step count");
  PathBundle pb;
  pb.seed = seed;
  pb.dt = dt;
  pb.steps = steps;
  pb.per_step_F = noise.increments_F();
  pb.per_step_G = noise.increments_G();
  const long double bytes = (long double)steps * (long double)(pb.per_step_F + pb.per_step_G) * sizeof(double);
  if (bytes > (long double)budget_bytes) {
    throw ResourceError("sample_increments: " + std::to_string((unsigned long long)bytes) +
                        " bytes of increments exceed the budget of " + std::to_string(budget_bytes));
  }
  const double sd = std::sqrt(dt);
  const int d = noise.spec.d;
  pb.dB.resize(std::size_t(steps) * pb.per_step_F);
  pb.dW.resize(std::size_t(steps) * pb.per_step_G);
  for (long long s = 0; s < steps; ++s) {
    double* b = pb.dB.data() + std::size_t(s) * pb.per_step_F;
    for (std::size_t k = 0; k < noise.count_F(); ++k) {
      const auto z = rng::gaussian_pair(seed, rng::kStreamF, std::uint32_t(k), std::uint64_t(s));
      for (int a = 0; a < d; ++a) b[k * std::size_t(d) + std::size_t(a)] = sd * z[std::size_t(a)];
    }
    double* w = pb.dW.data() + std::size_t(s) * pb.per_step_G;
    for (std::size_t k = 0; k < noise.count_G(); ++k) {
      w[k] = sd * rng::gaussian_pair(seed, rng::kStreamG, std::uint32_t(k), std::uint64_t(s))[0];
    }
  }
  return pb;
}

GridState noise_divergence_term(const GridState& sigma_field, const NoiseField& noise,
                                std::span<const double> increments_at_step) {
  const GridSpec& g = sigma_field.spec;
  if (!(g == noise.spec)) throw ContractViolation("noise_divergence_term: grid mismatch");
  if (increments_at_step.size() != noise.increments_F()) {
    throw ContractViolation("noise_divergence_term: " + std::to_string(increments_at_step.size()) +
                            " increments for " + std::to_string(noise.increments_F()) + " mode components");
  }
  const std::size_t N = g.size();
  GridState out(g, sigma_field.time);
  std::vector<double> flux(N);
  for (int a = 0; a < g.d; ++a) {
    std::fill(flux.begin(), flux.end(), 0.0);
    for (std::size_t k = 0; k < noise.count_F(); ++k) {
      const double db = increments_at_step[k * std::size_t(g.d) + std::size_t(a)];
      const auto& fk = noise.modes_F_faces[k][a];
      for (std::size_t idx = 0; idx < N; ++idx) {
        const double s = 0.5 * (sigma_field.values[idx] + sigma_field.values[g.forward(idx, a)]);
        flux[idx] += s * fk[idx] * db;
      }
    }
    add_divergence(g, flux, a, out.values);
  }
  return out;
}

std::string noise_to_csv(const NoiseField& noise) {
  std::ostringstream os;
  const GridSpec& g = noise.spec;
  os << (g.d == 1 ? "i" : "i,j") << ",F1,F2_x" << (g.d == 2 ? ",F2_y" : "") << ",F3,G1\n";
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    os << g.coord(idx, 0);
    if (g.d == 2) os << ',' << g.coord(idx, 1);
    os << ',' << format_double(noise.F1[idx]);
    for (int a = 0; a < g.d; ++a) os << ',' << format_double(noise.F2[a][idx]);
    os << ',' << format_double(noise.F3[idx]) << ',' << format_double(noise.G1[idx]) << '\n';
  }
  return os.str();
}

}  // namespace dkspde
