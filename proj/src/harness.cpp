#include "dkspde/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "dkspde/errors.hpp"
#include "dkspde/io.hpp"
#include "dkspde/kinetic.hpp"
#include "dkspde/parallel.hpp"

namespace dkspde {

namespace {

double profile(const InitialSpec& s, double level, double x) {
  if (s.kind == "sine") return level + s.amplitude * std::sin(x + s.shift);
  if (s.kind == "bump") {
    const double u = (x - std::numbers::pi - s.shift) / s.width;
    const double b = std::max(0.0, 1.0 - u * u);
    return level * b * b;
  }
  if (s.kind == "constant") return level;
  throw ConfigError("initial: unknown kind '" + s.kind + "' (expected sine, bump or constant)");
}

}  // namespace

GridState make_initial(const GridSpec& grid, const InitialSpec& spec) {
  if (spec.kind == "bump" && !(spec.width > 0.0)) throw ConfigError("initial: bump width must be positive");
  return sample(grid, [&](double x, double y) {
    const double fx = profile(spec, spec.level, x);
    return grid.d == 1 ? fx : fx * profile(spec, 1.0, y);
  });
}

NonlinearitySet make_model(const std::string& preset, const std::map<std::string, double>& params,
                           const std::map<std::string, std::string>& functions) {
  NonlinearitySet set = make_preset(preset, params);
  for (const auto& [slot, text] : functions) {
    ScalarFunction f = parse_function(text);
    if (slot == "Phi") {
      set.phi_cap = std::move(f);
    } else if (slot == "sigma") {
      set.sigma = std::move(f);
    } else if (slot == "nu") {
      set.nu = std::move(f);
    } else if (slot == "phi") {
      set.phi_low = std::move(f);
    } else if (slot == "lambda") {
      set.lambda_low = std::move(f);
    } else {
      throw ConfigError("model: unknown function slot '" + slot + "' (expected Phi, sigma, nu, phi or lambda)");
    }
  }
  if (!functions.empty()) set.name += "+overrides";
  return set;
}

double ExperimentSpec::threshold(const std::string& key, double fallback) const {
  const auto it = thresholds.find(key);
  return it == thresholds.end() ? fallback : it->second;
}

void ExperimentSpec::validate() const {
  if (ensemble < 1) throw ConfigError("experiment: ensemble size must be >= 1");
  if (ladder.empty()) throw ConfigError("experiment: ladder must have at least one level");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    GridSpec::make(d, ladder[i].n);
    if (!(ladder[i].dt > 0.0)) throw ConfigError("experiment: ladder dt must be positive");
    if (i > 0) {
      const auto& a = ladder[i - 1];
      const auto& b = ladder[i];
      if (b.n < a.n || b.dt > a.dt || (b.n == a.n && b.dt == a.dt)) {
        throw ConfigError("experiment: ladder level " + std::to_string(i) + " does not refine level " +
                          std::to_string(i - 1));
      }
    }
  }
  if (!(p >= 1.0)) throw ConfigError("experiment: p must be >= 1");
}

void Verdict::set(const std::string& key, double v) {
  for (auto& kv : statistics) {
    if (kv.first == key) {
      kv.second = v;
      return;
    }
  }
  statistics.emplace_back(key, v);
}

double Verdict::stat(const std::string& key) const {
  for (const auto& kv : statistics) {
    if (kv.first == key) return kv.second;
  }
  throw ContractViolation("Verdict: no statistic '" + key + "'");
}

bool Verdict::has(const std::string& key) const {
  return std::any_of(statistics.begin(), statistics.end(), [&](const auto& kv) { return kv.first == key; });
}

std::string Verdict::statistics_text() const {
  std::string out;
  for (const auto& [k, v] : statistics) {
    if (!out.empty()) out += ';';
    out += k + '=' + format_double(v);
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (n * sxy - sx * sy) / den;
}

std::string summary_csv(const std::vector<Verdict>& verdicts) {
  std::ostringstream os;
  os << "experiment,pass,statistics\n";
  for (const auto& v : verdicts) os << v.id << ',' << (v.pass ? "true" : "false") << ',' << v.statistics_text() << '\n';
  return os.str();
}

namespace {

std::uint64_t member_seed(std::uint64_t seed, std::size_t member) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (member + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Level {
  GridSpec grid;
  NoiseField noise;
  SolverConfig cfg;
  NonlinearitySet set;
  GridState a0;
  GridState b0;
};

Level make_level(const ExperimentSpec& spec, const NonlinearitySet& set, std::size_t li) {
  const LadderLevel& lv = spec.ladder[li];
  Level L;
  L.grid = GridSpec::make(spec.d, lv.n);
  L.noise = build_spectral_noise(spec.noise_F, L.grid, spec.noise_G);
  L.cfg = spec.solver;
  L.cfg.dt = lv.dt;
  L.cfg.diag_p = spec.p;
  L.cfg.validate();
  L.cfg.snapshot_stride = std::max(1LL, L.cfg.steps());
  L.set = L.cfg.sigma_mollify_n ? mollify_sigma(set, *L.cfg.sigma_mollify_n) : set;
  L.a0 = make_initial(L.grid, spec.initial_a);
  L.b0 = make_initial(L.grid, spec.initial_b);
  return L;
}

std::string level_tag(std::size_t li) { return "level" + std::to_string(li); }

void write_evidence(const ExperimentSpec& spec, Verdict& v, const std::string& name, const std::string& text) {
  if (spec.evidence_dir.empty()) return;
  const auto path = spec.evidence_dir / (v.id + "_" + name);
  write_text(path, text);
  v.evidence.push_back(path.string());
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / double(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / double(xs.size() - 1) / double(xs.size()));
}

Verdict make_verdict(const ExperimentSpec& spec) {
  Verdict v;
  v.id = spec.label.empty() ? spec.kind : spec.label;
  return v;
}

std::string truncated_note(const std::vector<std::string>& errors) {
  for (std::size_t m = 0; m < errors.size(); ++m) {
    if (!errors[m].empty()) return "member " + std::to_string(m) + " failed: " + errors[m];
  }
  return {};
}

bool conservative(const NonlinearitySet& set) { return set.phi_low.zero && set.lambda_low.zero; }

bool relative_close(double fine, double coarse, double tol) {
  return std::isfinite(fine) && std::isfinite(coarse) && std::abs(fine - coarse) <= tol * std::abs(coarse);
}

double violation_statistic(const std::vector<double>& dist) {
  if (dist.empty() || dist[0] == 0.0) return 0.0;
  double run_min = dist[0], worst = 0.0;
  for (double d : dist) {
    run_min = std::min(run_min, d);
    worst = std::max(worst, d - run_min);
  }
  return worst / dist[0];
}

std::map<std::string, double> checker_constants(const NonlinearitySet& set, const NoiseField& noise) {
  NoiseContext ctx;
  ctx.stationary = is_stationary(noise, default_noise_tolerance(noise));
  return check_assumptions(set, SampleGrid::log_uniform(), 1e-8, ctx).constants;
}

double constant_or(const std::map<std::string, double>& c, const std::string& key, double fallback) {
  const auto it = c.find(key);
  return it == c.end() || !std::isfinite(it->second) ? fallback : it->second;
}

}  // namespace

Verdict exp_contraction(const ExperimentSpec& spec) {
  spec.validate();
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  if (!conservative(set)) throw ConfigError("contraction: the model must be conservative (phi = lambda = 0)");
  const double thr = spec.threshold("max_violation", 0.02);
  const double refine = spec.threshold("refine_factor", 1.5);
  const double floor = spec.threshold("floor", 1e-12);
  std::ostringstream members;
  members << "level,n,dt,member,statistic\n";
  std::vector<double> level_stats;
  std::string failure;
  for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
    const Level L = make_level(spec, set, li);
    const std::size_t E = std::size_t(spec.ensemble);
    std::vector<double> stat(E, 0.0);
    std::vector<std::string> errors(E);
    std::vector<std::vector<double>> series(E);
    std::vector<double> times;
    parallel_for(E, spec.threads, [&](std::size_t m) {
      CoupledResult r = run_coupled(L.a0, L.b0, L.set, L.noise, L.cfg, member_seed(spec.seed, m));
      if (r.a.truncated) errors[m] = r.a.error;
      stat[m] = violation_statistic(r.distance);
      series[m] = std::move(r.distance);
      if (m == 0) times = std::move(r.times);
    });
    if (failure.empty()) failure = truncated_note(errors);
    double worst = 0.0;
    for (std::size_t m = 0; m < E; ++m) {
      worst = std::max(worst, stat[m]);
      members << li << ',' << L.grid.n << ',' << format_double(L.cfg.dt) << ',' << m << ','
              << format_double(stat[m]) << '\n';
    }
    level_stats.push_back(worst);
    v.set("statistic_" + level_tag(li), worst);
    if (li == 0) {
      std::ostringstream ts;
      ts << "time,mean_distance,max_distance,distance0\n";
      for (std::size_t t = 0; t < times.size(); ++t) {
        double s = 0.0, mx = 0.0;
        for (std::size_t m = 0; m < E; ++m) {
          const double d = t < series[m].size() ? series[m][t] : std::numeric_limits<double>::quiet_NaN();
          s += d;
          mx = std::max(mx, d);
        }
        ts << format_double(times[t]) << ',' << format_double(s / double(E)) << ',' << format_double(mx) << ','
           << format_double(series[0].empty() ? 0.0 : series[0][0]) << '\n';
      }
      write_evidence(spec, v, "timeseries.csv", ts.str());
    }
  }
  write_evidence(spec, v, "members.csv", members.str());
  bool pass = failure.empty() && level_stats[0] <= thr;
  for (std::size_t li = 1; li < level_stats.size(); ++li) {
    const double prev = level_stats[li - 1];
    const double ratio = level_stats[li] > 0.0 ? prev / level_stats[li] : std::numeric_limits<double>::infinity();
    v.set("refinement_ratio_" + level_tag(li), ratio);
    if (!(prev <= floor || ratio >= refine)) pass = false;
  }
  v.pass = pass;
  v.note = failure;
  return v;
}

Verdict exp_gen_contraction(const ExperimentSpec& spec) {
  spec.validate();
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  const double margin = spec.threshold("margin", 2.0);
  std::string failure;
  bool pass = true;
  std::vector<double> fitted;
  for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
    const Level L = make_level(spec, set, li);
    const auto constants = checker_constants(L.set, L.noise);
    const double lip = constant_or(constants, "lambda_lipschitz", 0.0);
    const double hol = constant_or(constants, "phi_holder", 0.0);
    const double c_ref = margin * (lip + hol * hol);
    const std::size_t E = std::size_t(spec.ensemble);
    std::vector<std::vector<double>> series(E);
    std::vector<std::string> errors(E);
    std::vector<double> times;
    parallel_for(E, spec.threads, [&](std::size_t m) {
      CoupledResult r = run_coupled(L.a0, L.b0, L.set, L.noise, L.cfg, member_seed(spec.seed, m));
      if (r.a.truncated) errors[m] = r.a.error;
      series[m] = std::move(r.distance);
      if (m == 0) times = std::move(r.times);
    });
    if (failure.empty()) failure = truncated_note(errors);
    if (!failure.empty()) {
      pass = false;
      break;
    }
    std::vector<double> mean(times.size(), 0.0);
    for (std::size_t t = 0; t < times.size(); ++t) {
      for (std::size_t m = 0; m < E; ++m) mean[t] += series[m][t];
      mean[t] /= double(E);
    }
    const std::string tag = level_tag(li);
    v.set("c_ref_" + tag, c_ref);
    const double d0 = mean.empty() ? 0.0 : mean[0];
    if (d0 == 0.0) {
      v.set("c_" + tag, 0.0);
      v.note = "identical initial data";
      continue;
    }
    // Least-squares line through the running maximum of log(mean dist / dist0).
    std::vector<double> ts, env;
    double run_max = -std::numeric_limits<double>::infinity();
    double sup = 0.0;
    for (std::size_t t = 0; t < mean.size(); ++t) {
      sup = std::max(sup, mean[t]);
      if (mean[t] > 0.0) run_max = std::max(run_max, std::log(mean[t] / d0));
      if (std::isfinite(run_max)) {
        ts.push_back(times[t]);
        env.push_back(run_max);
      }
    }
    double st = 0, se = 0, stt = 0, ste = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      st += ts[i];
      se += env[i];
      stt += ts[i] * ts[i];
      ste += ts[i] * env[i];
    }
    const double n = double(ts.size());
    const double den = n * stt - st * st;
    const double c = den > 0.0 ? (n * ste - st * se) / den : 0.0;
    const double logC = n > 0 ? (se - c * st) / n : 0.0;
    fitted.push_back(c);
    v.set("c_" + tag, c);
    v.set("logC_" + tag, logC);
    const double T = times.back();
    const double envelope = sup / (std::exp(c_ref * T) * (d0 + std::sqrt(d0)));
    v.set("envelope_ratio_" + tag, envelope);
    v.set("sup_over_d0_" + tag, sup / d0);
    v.set("sup_over_sqrt_d0_" + tag, sup / std::sqrt(d0));
    if (spec.thresholds.count("expected_c")) {
      const double e = spec.threshold("expected_c", 1.0);
      const double tol = spec.threshold("expected_c_tol", 0.02);
      if (!(std::abs(c - e) <= tol * std::abs(e))) pass = false;
    } else if (!(c <= c_ref)) {
      pass = false;
    }
    if (!(envelope <= 1.0)) pass = false;

    std::ostringstream os;
    os << "time,mean_distance,envelope\n";
    for (std::size_t t = 0; t < mean.size(); ++t) {
      os << format_double(times[t]) << ',' << format_double(mean[t]) << ','
         << format_double(d0 * std::exp(logC + c * times[t])) << '\n';
    }
    write_evidence(spec, v, tag + "_timeseries.csv", os.str());
  }
  if (fitted.size() > 1) {
    const auto [lo, hi] = std::minmax_element(fitted.begin(), fitted.end());
    v.set("c_spread", *hi - *lo);
  }
  v.pass = pass && failure.empty();
  if (!failure.empty()) v.note = failure;
  return v;
}

namespace {

void require_checker(const NonlinearitySet& set, const NoiseField& noise, double p, const char* what) {
  NoiseContext ctx;
  ctx.stationary = is_stationary(noise, default_noise_tolerance(noise));
  NonlinearitySet probe = set;
  probe.p = p;
  const AssumptionReport rep = check_assumptions(probe, SampleGrid::log_uniform(), 1e-8, ctx);
  if (rep.has_hard_failure()) {
    std::string ids;
    for (const auto& id : rep.hard_failures()) ids += (ids.empty() ? "" : ", ") + id;
    throw ConfigError(std::string(what) + ": assumption check failed for " + set.name + ": " + ids);
  }
}

}  // namespace

Verdict exp_moments(const ExperimentSpec& spec) {
  spec.validate();
  if (!(spec.p >= 2.0)) throw ConfigError("moments: p must be >= 2");
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  const double stab = spec.threshold("stability", 0.2);
  const double l1_factor = spec.threshold("l1_envelope", 1.05);
  const double margin = spec.threshold("margin", 2.0);
  std::vector<double> lp_sup, energy;
  std::string failure;
  bool pass = true;
  std::ostringstream members;
  members << "level,member,sup_lp,energy_integral,sup_l1\n";
  for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
    const Level L = make_level(spec, set, li);
    if (li == 0) require_checker(L.set, L.noise, spec.p, "moments");
    const std::size_t E = std::size_t(spec.ensemble);
    std::vector<std::vector<double>> lpp(E);
    std::vector<double> en(E, 0.0), l1sup(E, 0.0);
    std::vector<std::string> errors(E);
    parallel_for(E, spec.threads, [&](std::size_t m) {
      Trajectory tr = run(L.a0, L.set, L.noise, L.cfg, member_seed(spec.seed, m));
      if (tr.truncated) errors[m] = tr.error;
      for (std::size_t s = 0; s < tr.diagnostics.size(); ++s) {
        const auto& row = tr.diagnostics[s];
        lpp[m].push_back(std::pow(row.lp, spec.p));
        if (s + 1 < tr.diagnostics.size()) en[m] += row.energy * L.cfg.dt;
        l1sup[m] = std::max(l1sup[m], row.l1);
      }
    });
    if (failure.empty()) failure = truncated_note(errors);
    if (!failure.empty()) break;
    const std::size_t steps = lpp[0].size();
    double sup = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      double s = 0.0;
      for (std::size_t m = 0; m < E; ++m) s += lpp[m][t];
      sup = std::max(sup, s / double(E));
    }
    for (std::size_t m = 0; m < E; ++m) {
      members << li << ',' << m << ',' << format_double(*std::max_element(lpp[m].begin(), lpp[m].end())) << ','
              << format_double(en[m]) << ',' << format_double(l1sup[m]) << '\n';
    }
    const double emean = mean_of(en);
    const double l1mean = mean_of(l1sup);
    lp_sup.push_back(sup);
    energy.push_back(emean);
    const std::string tag = level_tag(li);
    v.set("sup_lp_" + tag, sup);
    v.set("energy_" + tag, emean);
    v.set("sup_l1_" + tag, l1mean);
    if (!std::isfinite(sup) || !std::isfinite(emean)) pass = false;
    double c = 0.0;
    if (!conservative(L.set)) {
      const auto k = checker_constants(L.set, L.noise);
      c = margin * (constant_or(k, "lambda_lipschitz", 0.0) + std::pow(constant_or(k, "phi_holder", 0.0), 2));
    }
    double l1_0 = 0.0;
    for (double x : L.a0.values) l1_0 += std::abs(x);
    l1_0 *= L.grid.cell_volume();
    const double T = double(L.cfg.steps()) * L.cfg.dt;
    const double ratio = l1mean / (std::exp(c * T) * l1_0);
    v.set("l1_envelope_ratio_" + tag, ratio);
    if (!(ratio <= l1_factor)) pass = false;
  }
  write_evidence(spec, v, "members.csv", members.str());
  if (failure.empty() && lp_sup.size() >= 2) {
    const std::size_t f = lp_sup.size() - 1;
    v.set("lp_change", std::abs(lp_sup[f] - lp_sup[f - 1]) / std::abs(lp_sup[f - 1]));
    v.set("energy_change", std::abs(energy[f] - energy[f - 1]) / std::abs(energy[f - 1]));
    if (!relative_close(lp_sup[f], lp_sup[f - 1], stab) || !relative_close(energy[f], energy[f - 1], stab)) {
      pass = false;
    }
  }
  v.pass = pass && failure.empty();
  v.note = failure;
  return v;
}

Verdict exp_entropy(const ExperimentSpec& spec) {
  spec.validate();
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  const double stab = spec.threshold("stability", 0.2);
  std::vector<double> stats;
  std::string failure;
  bool pass = true;
  std::ostringstream members;
  members << "level,member,sup_entropy,dissipation_integral\n";
  for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
    Level L = make_level(spec, set, li);
    L.cfg.diag_entropy = true;
    if (li == 0) {
      NoiseContext ctx;
      ctx.stationary = is_stationary(L.noise, default_noise_tolerance(L.noise));
      const AssumptionReport rep = check_assumptions(L.set, SampleGrid::log_uniform(), 1e-8, ctx);
      for (const char* id : {"entropy_sigma_phi_bound", "entropy_growth", "entropy_stationary_noise",
                             "log_phi_integrable", "entropy_source_noise", "entropy_source_reaction"}) {
        const CheckResult* c = rep.find(id);
        if (c && c->status == CheckStatus::fail) {
          throw ConfigError("entropy: precondition " + std::string(id) + " failed: " + c->note);
        }
      }
      if (!conservative(L.set) || !L.set.sigma.zero) {
        if (ctx.stationary && !*ctx.stationary) throw ConfigError("entropy: noise is not stationary (div F2 != 0)");
      }
    }
    const std::size_t E = std::size_t(spec.ensemble);
    std::vector<std::vector<double>> ent(E);
    std::vector<double> diss(E, 0.0);
    std::vector<std::string> errors(E);
    const bool clip = L.cfg.clip_nonlinearity_args && !L.set.signed_domain;
    parallel_for(E, spec.threads, [&](std::size_t m) {
      std::vector<double> root(L.grid.size()), face(L.grid.size());
      const double vol = L.grid.cell_volume();
      auto observer = [&](long long, const GridState& rho) {
        for (std::size_t i = 0; i < root.size(); ++i) {
          const double r = clip ? std::max(rho.values[i], 0.0) : rho.values[i];
          root[i] = std::sqrt(std::max(L.set.phi_cap(r), 0.0));
        }
        double s = 0.0;
        for (int a = 0; a < L.grid.d; ++a) {
          gradient_into(L.grid, root, a, face);
          for (double g : face) s += g * g;
        }
        diss[m] += s * vol * L.cfg.dt;
      };
      Trajectory tr = run(L.a0, L.set, L.noise, L.cfg, member_seed(spec.seed, m), observer);
      if (tr.truncated) errors[m] = tr.error;
      for (const auto& row : tr.diagnostics) ent[m].push_back(row.entropy.value_or(0.0));
    });
    if (failure.empty()) failure = truncated_note(errors);
    if (!failure.empty()) break;
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < ent[0].size(); ++t) {
      double s = 0.0;
      for (std::size_t m = 0; m < E; ++m) s += ent[m][t];
      sup = std::max(sup, s / double(E));
    }
    for (std::size_t m = 0; m < E; ++m) {
      members << li << ',' << m << ',' << format_double(*std::max_element(ent[m].begin(), ent[m].end())) << ','
              << format_double(diss[m]) << '\n';
    }
    const double total = sup + mean_of(diss);
    const std::string tag = level_tag(li);
    v.set("sup_entropy_" + tag, sup);
    v.set("dissipation_" + tag, mean_of(diss));
    v.set("statistic_" + tag, total);
    if (!std::isfinite(total)) pass = false;
    stats.push_back(total);
  }
  write_evidence(spec, v, "members.csv", members.str());
  if (failure.empty() && stats.size() >= 2) {
    const std::size_t f = stats.size() - 1;
    v.set("relative_change", std::abs(stats[f] - stats[f - 1]) / std::abs(stats[f - 1]));
    if (!relative_close(stats[f], stats[f - 1], stab)) pass = false;
  }
  v.pass = pass && failure.empty();
  v.note = failure;
  return v;
}

Verdict exp_kinetic(const ExperimentSpec& spec) {
  spec.validate();
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  const Level L = make_level(spec, set, 0);
  const double xi_max = spec.threshold("xi_max", 8.0);
  const auto edges = default_xi_edges(xi_max, int(spec.threshold("per_octave", 4)), int(spec.threshold("per_unit", 4)));
  std::vector<double> betas = spec.betas, Ms = spec.Ms;
  if (betas.empty()) {
    for (int k = 1; k <= 8; ++k) betas.push_back(std::ldexp(1.0, -k));
  }
  if (Ms.empty()) {
    for (int M = 1; M + 1 <= int(std::ceil(xi_max)); ++M) Ms.push_back(M);
  }
  const double inf_thr = spec.threshold("infinity_ratio", 0.1);
  const double zero_thr = spec.threshold("zero_ratio", 0.1);
  const bool clip = L.cfg.clip_nonlinearity_args && !L.set.signed_domain;
  const std::size_t E = std::size_t(spec.ensemble);
  std::vector<double> identity_excess(E), q_mismatch(E), inf_ratio(E), zero_ratio(E), atom(E);
  std::vector<std::string> errors(E);
  std::vector<KineticHistogram> hist0(1);
  std::vector<std::vector<double>> zero_series(E), inf_series(E);
  SolverConfig cfg = L.cfg;
  cfg.snapshot_stride = std::max(1LL, cfg.steps() / 8);
  parallel_for(E, spec.threads, [&](std::size_t m) {
    KineticAccumulator acc(L.set, cfg.alpha, clip, edges, cfg.dt);
    Trajectory tr = run(L.a0, L.set, L.noise, cfg, member_seed(spec.seed, m),
                        [&](long long, const GridState& rho) { acc.add(rho); });
    if (tr.truncated) errors[m] = tr.error;
    KineticHistogram h = std::move(acc).finish();
    double q_diag = 0.0;
    for (std::size_t s = 0; s + 1 < tr.diagnostics.size(); ++s) q_diag += tr.diagnostics[s].dissipation * cfg.dt;
    q_mismatch[m] = std::abs(h.q_total - q_diag);
    double excess = -std::numeric_limits<double>::infinity();
    for (const auto& snap : tr.snapshots) {
      const ChiDistance cd = chi_distance_checked(snap, L.b0, edges);
      excess = std::max(excess, std::abs(cd.direct - cd.binned) - cd.tolerance);
    }
    identity_excess[m] = excess;
    zero_series[m] = measure_zero_test(h, betas);
    inf_series[m] = measure_infinity_test(h, Ms);
    const auto& z = zero_series[m];
    const double zmax = *std::max_element(z.begin(), z.end());
    zero_ratio[m] = zmax > 0.0 ? *std::min_element(z.begin(), z.end()) / zmax : 0.0;
    const auto& w = inf_series[m];
    const bool all_zero = std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
    inf_ratio[m] = all_zero ? 0.0 : (w.front() > 0.0 ? w.back() / w.front() : std::numeric_limits<double>::infinity());
    atom[m] = h.q_total > 0.0 ? h.max_step_deposit / h.q_total : 0.0;
    if (m == 0) hist0[0] = std::move(h);
  });
  const std::string failure = truncated_note(errors);
  auto worst = [](const std::vector<double>& xs) { return *std::max_element(xs.begin(), xs.end()); };
  v.set("identity_excess", worst(identity_excess));
  v.set("q_total_mismatch", worst(q_mismatch));
  v.set("infinity_ratio", worst(inf_ratio));
  v.set("zero_ratio", worst(zero_ratio));
  v.set("max_step_fraction", worst(atom));
  v.set("q_total_member0", hist0[0].q_total);
  write_evidence(spec, v, "histogram.csv", hist0[0].to_csv());
  write_evidence(spec, v, "zero_series.csv", series_csv(betas, zero_series[0]));
  write_evidence(spec, v, "infinity_series.csv", series_csv(Ms, inf_series[0]));
  v.pass = failure.empty() && worst(identity_excess) <= 0.0 && worst(q_mismatch) == 0.0 &&
           worst(inf_ratio) <= inf_thr && worst(zero_ratio) <= zero_thr;
  v.note = failure;
  return v;
}

Verdict exp_cascade(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.schedule.size() < 3) throw ConfigError("cascade: schedule needs at least 3 entries");
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  ExperimentSpec plain = spec;
  plain.solver.sigma_mollify_n.reset();
  const Level L = make_level(plain, set, 0);
  const std::size_t E = std::size_t(spec.ensemble);
  const std::size_t P = spec.schedule.size() - 1;
  std::vector<CascadeReport> reps(E);
  parallel_for(E, spec.threads, [&](std::size_t m) {
    reps[m] = run_cascade(L.a0, L.set, L.noise, L.cfg, spec.schedule, member_seed(spec.seed, m));
  });
  std::string failure;
  for (std::size_t m = 0; m < E && failure.empty(); ++m) {
    if (reps[m].truncated) failure = "member " + std::to_string(m) + " failed: " + reps[m].error;
  }
  std::vector<double> dist(P, 0.0), D(P, 0.0);
  if (failure.empty()) {
    for (std::size_t j = 0; j < P; ++j) {
      for (std::size_t m = 0; m < E; ++m) {
        dist[j] += reps[m].distances[j] / double(E);
        D[j] += reps[m].metric_D[j] / double(E);
      }
    }
  }
  std::ostringstream os;
  os << "pair,alpha_a,alpha_b,n_a,n_b,l1l1_distance,metric_D\n";
  for (std::size_t j = 0; j < P; ++j) {
    const auto& a = spec.schedule[j];
    const auto& b = spec.schedule[j + 1];
    os << j << ',' << format_double(a.alpha) << ',' << format_double(b.alpha) << ',' << a.mollify_n.value_or(0) << ','
       << b.mollify_n.value_or(0) << ',' << format_double(dist[j]) << ',' << format_double(D[j]) << '\n';
    v.set("distance_" + std::to_string(j), dist[j]);
    v.set("metric_D_" + std::to_string(j), D[j]);
  }
  write_evidence(spec, v, "pairs.csv", os.str());
  const double slack = spec.threshold("slack", 0.1);
  const double final_thr = spec.threshold("final_ratio", 0.05);
  bool pass = failure.empty();
  for (std::size_t j = 1; j < P; ++j) {
    if (!(dist[j] <= (1.0 + slack) * dist[j - 1])) pass = false;
  }
  const double ratio = dist[0] > 0.0 ? dist[P - 1] / dist[0] : 0.0;
  v.set("final_ratio", ratio);
  if (!(ratio <= final_thr)) pass = false;
  v.pass = pass;
  v.note = failure;
  return v;
}

Verdict exp_ito_strat(const ExperimentSpec& spec) {
  spec.validate();
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  const bool smooth = set.sigma.zero || spec.solver.sigma_mollify_n || set.mollified_n ||
                      !(set.sigma.power && (*set.sigma.power)[1] < 1.0 && (*set.sigma.power)[1] != 0.0);
  if (!smooth) throw ConfigError("ito_strat: sigma must be smooth (set solver.sigma_mollify_n)");
  const std::size_t E = std::size_t(spec.ensemble);
  std::vector<double> dts, gaps;
  std::string failure;
  std::ostringstream levels;
  levels << "level,n,dt,gap,standard_error\n";
  for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
    const Level L = make_level(spec, set, li);
    SolverConfig ci = L.cfg, cs = L.cfg;
    ci.scheme = Scheme::ito_euler;
    cs.scheme = Scheme::strat_heun;
    std::vector<double> diff(E, 0.0);
    std::vector<std::string> errors(E);
    parallel_for(E, spec.threads, [&](std::size_t m) {
      const PathBundle paths = sample_increments(L.noise, L.cfg.dt, L.cfg.steps(), member_seed(spec.seed, m));
      const Trajectory ti = run_with_paths(L.a0, L.set, L.noise, ci, paths);
      const Trajectory ts = run_with_paths(L.a0, L.set, L.noise, cs, paths);
      if (ti.truncated) errors[m] = ti.error;
      if (ts.truncated) errors[m] = ts.error;
      const double oi = ti.diagnostics.back().l2, os = ts.diagnostics.back().l2;
      diff[m] = oi * oi - os * os;
    });
    if (failure.empty()) failure = truncated_note(errors);
    if (!failure.empty()) break;
    const double gap = std::abs(mean_of(diff));
    const double se = stderr_of(diff);
    dts.push_back(L.cfg.dt);
    gaps.push_back(gap);
    v.set("gap_" + level_tag(li), gap);
    v.set("stderr_" + level_tag(li), se);
    levels << li << ',' << L.grid.n << ',' << format_double(L.cfg.dt) << ',' << format_double(gap) << ','
           << format_double(se) << '\n';
  }
  write_evidence(spec, v, "levels.csv", levels.str());
  const double min_slope = spec.threshold("min_slope", 0.8);
  bool pass = failure.empty();
  if (pass) {
    if (std::all_of(gaps.begin(), gaps.end(), [](double g) { return g == 0.0; })) {
      v.set("slope", 0.0);
      v.note = "all gaps vanish";
    } else {
      const double slope = loglog_slope(dts, gaps);
      v.set("slope", slope);
      pass = slope >= min_slope;
    }
  }
  v.pass = pass;
  if (!failure.empty()) v.note = failure;
  return v;
}

Verdict exp_mass(const ExperimentSpec& spec) {
  spec.validate();
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  const Level L = make_level(spec, set, 0);
  const bool cons = conservative(L.set);
  const bool clip = L.cfg.clip_nonlinearity_args && !L.set.signed_domain;
  const std::size_t E = std::size_t(spec.ensemble);
  std::vector<double> drift(E, 0.0), residual(E, 0.0), change(E, 0.0);
  std::vector<std::string> errors(E);
  parallel_for(E, spec.threads, [&](std::size_t m) {
    double lam = 0.0;
    const double vol = L.grid.cell_volume();
    auto observer = [&](long long, const GridState& rho) {
      if (L.set.lambda_low.zero) return;
      double s = 0.0;
      for (double x : rho.values) s += L.set.lambda_low(clip ? std::max(x, 0.0) : x);
      lam += s * vol * L.cfg.dt;
    };
    Trajectory tr = run(L.a0, L.set, L.noise, L.cfg, member_seed(spec.seed, m), observer);
    if (tr.truncated) errors[m] = tr.error;
    const double m0 = tr.diagnostics.front().mass;
    for (const auto& row : tr.diagnostics) drift[m] = std::max(drift[m], std::abs(row.mass - m0) / std::abs(m0));
    change[m] = tr.diagnostics.back().mass - m0;
    residual[m] = change[m] - lam;
  });
  const std::string failure = truncated_note(errors);
  double mass0 = 0.0;
  for (double x : L.a0.values) mass0 += x;
  mass0 *= L.grid.cell_volume();
  v.set("mass0", mass0);
  bool pass = failure.empty();
  std::ostringstream os;
  os << "member,max_relative_drift,mass_change,residual\n";
  for (std::size_t m = 0; m < E; ++m) {
    os << m << ',' << format_double(drift[m]) << ',' << format_double(change[m]) << ',' << format_double(residual[m])
       << '\n';
  }
  write_evidence(spec, v, "members.csv", os.str());
  if (cons) {
    const double worst = *std::max_element(drift.begin(), drift.end());
    v.set("max_relative_drift", worst);
    pass = pass && worst <= spec.threshold("max_drift", 1e-10);
  } else {
    const double mean = mean_of(residual), se = stderr_of(residual);
    v.set("mean_change", mean_of(change));
    v.set("mean_residual", mean);
    v.set("standard_error", se);
    const double band = std::max(spec.threshold("se_multiple", 3.0) * se, 1e-10 * std::abs(mass0));
    v.set("band", band);
    pass = pass && std::abs(mean) <= band;
  }
  v.pass = pass;
  v.note = failure;
  return v;
}

Verdict exp_heat(const ExperimentSpec& spec) {
  spec.validate();
  Verdict v = make_verdict(spec);
  const NonlinearitySet set = make_model(spec.preset, spec.params, spec.functions);
  if (!set.phi_cap.power || (*set.phi_cap.power)[1] != 1.0 || !set.sigma.zero || !set.nu.zero ||
      !conservative(set)) {
    throw ConfigError("heat: requires Phi = c xi with sigma, nu, phi and lambda zero");
  }
  if (spec.initial_a.kind != "sine") throw ConfigError("heat: requires sine initial data");
  const double c = (*set.phi_cap.power)[0];
  const InitialSpec& in = spec.initial_a;
  std::vector<double> errs, ns;
  std::ostringstream os;
  os << "n,dt,time,max_error\n";
  for (std::size_t li = 0; li < spec.ladder.size(); ++li) {
    ExperimentSpec s = spec;
    s.noise_F = {};
    s.noise_G = {};
    const Level L = make_level(s, set, li);
    Stepper st(L.set, L.noise, L.cfg);
    GridState rho = L.a0;
    const long long steps = L.cfg.steps();
    for (long long k = 0; k < steps; ++k) {
      st.set_step_index(k);
      st.step_ito(rho, {});
    }
    const double T = double(steps) * L.cfg.dt;
    const double decay = in.amplitude * std::exp(-c * T);
    const GridState exact = sample(L.grid, [&](double x, double y) {
      const double fx = in.level + decay * std::sin(x + in.shift);
      return L.grid.d == 1 ? fx : fx * (1.0 + decay * std::sin(y + in.shift));
    });
    double err = 0.0;
    for (std::size_t i = 0; i < rho.values.size(); ++i) err = std::max(err, std::abs(rho.values[i] - exact.values[i]));
    errs.push_back(err);
    ns.push_back(double(L.grid.n));
    v.set("error_" + level_tag(li), err);
    os << L.grid.n << ',' << format_double(L.cfg.dt) << ',' << format_double(T) << ',' << format_double(err) << '\n';
  }
  write_evidence(spec, v, "errors.csv", os.str());
  double min_order = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log(errs[i - 1] / errs[i]) / std::log(ns[i] / ns[i - 1]);
    v.set("order_" + level_tag(i), order);
    min_order = std::min(min_order, order);
  }
  v.set("min_order", errs.size() > 1 ? min_order : 0.0);
  v.pass = errs.size() > 1 && min_order >= spec.threshold("min_order", 1.9);
  return v;
}

Verdict run_experiment(const ExperimentSpec& spec) {
  if (spec.kind == "contraction") return exp_contraction(spec);
  if (spec.kind == "gen_contraction") return exp_gen_contraction(spec);
  if (spec.kind == "moments") return exp_moments(spec);
  if (spec.kind == "entropy") return exp_entropy(spec);
  if (spec.kind == "kinetic") return exp_kinetic(spec);
  if (spec.kind == "cascade") return exp_cascade(spec);
  if (spec.kind == "ito_strat") return exp_ito_strat(spec);
  if (spec.kind == "mass") return exp_mass(spec);
  if (spec.kind == "heat") return exp_heat(spec);
  throw ConfigError("experiment: unknown kind '" + spec.kind + "'");
}

std::vector<AcceptanceCase> acceptance_suite() {
  std::vector<AcceptanceCase> suite;
  const SpectralNoiseSpec dk_noise = SpectralNoiseSpec::decaying(8, 0.2, 1.0, true);

  {
    ExperimentSpec e;
    e.kind = "mass";
    e.label = "mass_dk_m1";
    e.ladder = {{128, 1e-4}};
    e.solver.t_end = 1.0;
    e.noise_F = dk_noise;
    e.ensemble = 8;
    suite.push_back({1, "mass conservation", {e}, 10.0});
  }
  {
    ExperimentSpec e;
    e.kind = "contraction";
    e.label = "contraction_dk_m1";
    e.ladder = {{128, 2e-4}, {256, 5e-5}};
    e.solver.t_end = 0.5;
    e.noise_F = SpectralNoiseSpec::decaying(8, 0.35, 1.0, true);
    e.ensemble = 64;
    suite.push_back({2, "pathwise L1 contraction", {e}, 120.0});
  }
  {
    ExperimentSpec e;
    e.kind = "heat";
    e.label = "heat_benchmark";
    e.functions = {{"sigma", "zero"}};
    e.ladder.clear();
    for (int n : {64, 128, 256}) {
      const double dx = 2.0 * std::numbers::pi / n;
      e.ladder.push_back({n, 0.2 * dx * dx});
    }
    e.solver.t_end = 0.5;
    e.ensemble = 1;
    suite.push_back({3, "deterministic heat benchmark", {e}, 30.0});
  }
  {
    ExperimentSpec e;
    e.kind = "ito_strat";
    e.label = "ito_strat_saturating";
    e.functions = {{"sigma", "saturating 1"}};
    e.ladder = {{32, 4e-3}, {32, 2e-3}, {32, 1e-3}, {32, 5e-4}};
    e.solver.t_end = 0.5;
    e.solver.correction = CorrectionForm::mode_sum;
    e.noise_F = SpectralNoiseSpec::decaying(4, 0.5, 1.0, true);
    e.ensemble = 128;
    suite.push_back({4, "Ito-Stratonovich equivalence", {e}, 180.0});
  }
  {
    std::vector<ExperimentSpec> es;
    for (double m : {1.0, 2.0}) {
      ExperimentSpec e;
      e.kind = "moments";
      e.label = m == 1.0 ? "moments_dk_m1" : "moments_dk_m2";
      e.params = {{"m", m}};
      e.ladder = m == 1.0 ? std::vector<LadderLevel>{{64, 1e-3}, {128, 2.5e-4}}
                          : std::vector<LadderLevel>{{64, 5e-4}, {128, 1.25e-4}};
      e.solver.t_end = 0.5;
      e.noise_F = dk_noise;
      e.ensemble = 32;
      e.p = 2.0;
      es.push_back(e);
    }
    suite.push_back({5, "moment bounds", es, 120.0});
  }
  {
    ExperimentSpec e;
    e.kind = "entropy";
    e.label = "entropy_dk_m1";
    e.ladder = {{64, 1e-3}, {128, 2.5e-4}};
    e.solver.t_end = 0.5;
    e.noise_F = dk_noise;
    e.ensemble = 32;
    suite.push_back({6, "entropy dissipation", {e}, 120.0});
  }
  {
    ExperimentSpec e;
    e.kind = "kinetic";
    e.label = "kinetic_dk_m1";
    e.initial_a = {"bump", 3.0, 0.0, 0.0, 1.5};
    e.initial_b = {"constant", 0.0, 0.0, 0.0, 1.0};
    e.ladder = {{128, 2e-4}};
    e.solver.t_end = 0.5;
    e.solver.sigma_mollify_n = 4;
    e.noise_F = dk_noise;
    e.ensemble = 4;
    suite.push_back({7, "kinetic identities", {e}, 60.0});
  }
  {
    ExperimentSpec e;
    e.kind = "cascade";
    e.label = "cascade_dk_sqrt";
    e.ladder = {{128, 2e-4}};
    e.solver.t_end = 0.5;
    e.noise_F = dk_noise;
    e.schedule = {{1e-1, 2}, {1e-2, 40}, {1e-3, 800}, {1e-4, 16000}};
    e.ensemble = 4;
    suite.push_back({8, "cascade convergence", {e}, 180.0});
  }
  {
    ExperimentSpec kpp;
    kpp.kind = "gen_contraction";
    kpp.label = "gen_contraction_fisher_kpp";
    kpp.preset = "fisher-kpp";
    kpp.params = {{"gamma", 1.0}, {"eps", 0.2}};
    kpp.ladder = {{64, 1e-3}};
    kpp.solver.t_end = 1.0;
    kpp.noise_G = SpectralNoiseSpec::decaying(4, 0.3, 1.0, true);
    kpp.ensemble = 64;
    ExperimentSpec ctl;
    ctl.kind = "gen_contraction";
    ctl.label = "gen_contraction_linear_growth";
    ctl.functions = {{"Phi", "zero"}, {"sigma", "zero"}, {"lambda", "power 1 1"}};
    ctl.ladder = {{64, 1e-3}};
    ctl.solver.t_end = 1.0;
    ctl.ensemble = 1;
    ctl.thresholds = {{"expected_c", 1.0}, {"expected_c_tol", 0.02}};
    suite.push_back({9, "expectation contraction with exponential envelope", {kpp, ctl}, 120.0});
  }
  {
    ExperimentSpec e;
    e.kind = "mass";
    e.label = "dawson_watanabe_martingale";
    e.preset = "dawson-watanabe";
    e.params = {};
    e.ladder = {{64, 4e-4}};
    e.solver.t_end = 0.5;
    e.noise_G = SpectralNoiseSpec::decaying(4, 0.3, 1.0, true);
    e.ensemble = 256;
    suite.push_back({10, "Dawson-Watanabe mass martingale", {e}, 120.0});
  }
  return suite;
}

}  // namespace dkspde
