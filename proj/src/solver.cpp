#include "dkspde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dkspde/errors.hpp"
#include "dkspde/io.hpp"

namespace dkspde {

const char* to_string(Scheme s) { return s == Scheme::ito_euler ? "ito-euler" : "strat-heun"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "ito-euler") return Scheme::ito_euler;
  if (s == "strat-heun") return Scheme::strat_heun;
  throw ConfigError("unknown scheme '" + s + "' (expected ito-euler or strat-heun)");
}

const char* to_string(CorrectionForm c) { return c == CorrectionForm::coefficient ? "coefficient" : "mode-sum"; }

CorrectionForm parse_correction(const std::string& s) {
  if (s == "coefficient") return CorrectionForm::coefficient;
  if (s == "mode-sum") return CorrectionForm::mode_sum;
  throw ConfigError("unknown correction form '" + s + "' (expected coefficient or mode-sum)");
}

long long SolverConfig::steps() const { return (long long)std::llround(t_end / dt); }

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("solver: dt must be positive");
  if (!(t_end >= dt * (1.0 - 1e-12))) throw ConfigError("solver: t_end must be at least dt");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("solver: alpha must lie in [0, 1)");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigError("solver: cfl_safety must lie in (0, 1]");
  if (!(diag_p >= 1.0)) throw ConfigError("solver: diagnostics exponent p must be >= 1");
  if (sigma_mollify_n && *sigma_mollify_n < 1) throw ConfigError("solver: sigma_mollify_n must be >= 1");
  if (snapshot_stride < 0) throw ConfigError("solver: snapshot_stride must be >= 0");
}

namespace {

NonlinearitySet prepared_set(const NonlinearitySet& set, const SolverConfig& cfg) {
  if (cfg.sigma_mollify_n && set.mollified_n != cfg.sigma_mollify_n) return mollify_sigma(set, *cfg.sigma_mollify_n);
  return set;
}

}  // namespace

Stepper::Stepper(const NonlinearitySet& set, const NoiseField& noise, const SolverConfig& cfg)
    : set_(prepared_set(set, cfg)), noise_(&noise), cfg_(cfg) {
  cfg_.validate();
  const std::size_t N = noise.spec.size();
  for (auto* v : {&arg_, &Phi_, &dPhi_, &sig_, &dsig_, &nu_, &grad_, &tmp_, &incr_, &incr2_, &stage_}) v->resize(N);
  flux_.resize(N * std::size_t(noise.spec.d));
  flux2_.resize(N * std::size_t(noise.spec.d));
  max_F1_ = 0.0;
  for (double f : noise.F1) max_F1_ = std::max(max_F1_, f);
  for (int a = 0; a < noise.spec.d; ++a) {
    for (double f : noise.F1_faces[a]) max_F1_ = std::max(max_F1_, f);
  }
  clip_ = cfg_.clip_nonlinearity_args && !set_.signed_domain;
}

void Stepper::evaluate(const GridState& rho) {
  if (!(rho.spec == noise_->spec)) throw ContractViolation("Stepper: state grid does not match the noise grid");
  const std::size_t N = rho.values.size();
  for (std::size_t i = 0; i < N; ++i) {
    const double a = clip_ ? std::max(rho.values[i], 0.0) : rho.values[i];
    arg_[i] = a;
    Phi_[i] = set_.phi_cap(a);
    dPhi_[i] = set_.phi_cap.derivative(a);
  }
  if (!set_.sigma.zero) {
    for (std::size_t i = 0; i < N; ++i) {
      sig_[i] = set_.sigma(arg_[i]);
      dsig_[i] = set_.sigma.derivative(arg_[i]);
    }
  } else {
    std::fill(sig_.begin(), sig_.end(), 0.0);
    std::fill(dsig_.begin(), dsig_.end(), 0.0);
  }
  if (!set_.nu.zero) {
    for (std::size_t i = 0; i < N; ++i) nu_[i] = set_.nu(arg_[i]);
  }
}

double Stepper::current_bound() const {
  const GridSpec& g = noise_->spec;
  double stiff = 0.0;
  const double half_F1 = set_.sigma.zero ? 0.0 : 0.5 * max_F1_;
  for (std::size_t i = 0; i < dPhi_.size(); ++i) {
    const double s = dPhi_[i] + cfg_.alpha + half_F1 * dsig_[i] * dsig_[i];
    if (!(s <= stiff)) stiff = std::isnan(s) ? std::numeric_limits<double>::infinity() : std::max(stiff, s);
  }
  if (stiff <= 0.0) return std::numeric_limits<double>::infinity();
  return cfg_.cfl_safety * g.dx() * g.dx() / (2.0 * g.d * stiff);
}

double Stepper::cfl_bound(const GridState& rho) {
  evaluate(rho);
  return current_bound();
}

void Stepper::check_cfl(const GridState& rho) {
  if (cfg_.override_cfl) return;
  const double bound = current_bound();
  if (!(cfg_.dt <= bound * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "CFL violation at step " << step_index_ << ": dt = " << format_double(cfg_.dt) << " exceeds the bound "
       << format_double(bound);
    throw StepError(os.str(), step_index_, rho.time);
  }
}

void Stepper::compute_flux(std::span<const double> dB, bool ito_correction, std::span<double> flux) {
  const GridSpec& g = noise_->spec;
  const std::size_t N = g.size();
  const int d = g.d;
  const double dt = cfg_.dt;
  const bool has_sigma = !set_.sigma.zero && noise_->count_F() > 0;
  if (has_sigma && dB.size() != noise_->increments_F()) {
    throw ContractViolation("Stepper: " + std::to_string(dB.size()) + " increments for " +
                            std::to_string(noise_->increments_F()) + " mode components");
  }
  for (int a = 0; a < d; ++a) {
    std::span<double> fa = flux.subspan(std::size_t(a) * N, N);
    gradient_into(g, Phi_, a, tmp_);
    gradient_into(g, stage_rho_->values, a, grad_);
    for (std::size_t i = 0; i < N; ++i) fa[i] = dt * (tmp_[i] + cfg_.alpha * grad_[i]);
    if (!set_.nu.zero && set_.nu_direction[std::size_t(a)] != 0.0) {
      const double dir = set_.nu_direction[std::size_t(a)];
      for (std::size_t i = 0; i < N; ++i) fa[i] -= dt * dir * 0.5 * (nu_[i] + nu_[g.forward(i, a)]);
    }
    if (!has_sigma) continue;
    if (ito_correction) {
      if (cfg_.correction == CorrectionForm::coefficient) {
        const auto& F1f = noise_->F1_faces[a];
        const auto& F2f = noise_->F2_faces[a];
        for (std::size_t i = 0; i < N; ++i) {
          const std::size_t j = g.forward(i, a);
          const double ds2 = 0.5 * (dsig_[i] * dsig_[i] + dsig_[j] * dsig_[j]);
          const double ssp = 0.5 * (sig_[i] * dsig_[i] + sig_[j] * dsig_[j]);
          fa[i] += 0.5 * dt * (F1f[i] * ds2 * grad_[i] + ssp * F2f[i]);
        }
      } else {
        for (std::size_t k = 0; k < noise_->count_F(); ++k) {
          const auto& fk = noise_->modes_F_faces[k][a];
          for (std::size_t i = 0; i < N; ++i) tmp_[i] = 0.5 * (sig_[i] + sig_[g.forward(i, a)]) * fk[i];
          std::fill(incr2_.begin(), incr2_.end(), 0.0);
          add_divergence(g, tmp_, a, incr2_);
          for (std::size_t i = 0; i < N; ++i) incr2_[i] *= dsig_[i];
          for (std::size_t i = 0; i < N; ++i) {
            fa[i] += 0.5 * dt * fk[i] * 0.5 * (incr2_[i] + incr2_[g.forward(i, a)]);
          }
        }
      }
    }
    for (std::size_t i = 0; i < N; ++i) tmp_[i] = 0.0;
    for (std::size_t k = 0; k < noise_->count_F(); ++k) {
      const double db = dB[k * std::size_t(d) + std::size_t(a)];
      if (db == 0.0) continue;
      const auto& fk = noise_->modes_F_faces[k][a];
      for (std::size_t i = 0; i < N; ++i) tmp_[i] += fk[i] * db;
    }
    for (std::size_t i = 0; i < N; ++i) fa[i] -= 0.5 * (sig_[i] + sig_[g.forward(i, a)]) * tmp_[i];
  }
}

void Stepper::divergence_of(std::span<const double> flux, std::span<double> out) {
  const GridSpec& g = noise_->spec;
  const std::size_t N = g.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < g.d; ++a) add_divergence(g, flux.subspan(std::size_t(a) * N, N), a, out);
}

void Stepper::add_sources(std::span<const double> dW, std::span<double> out) {
  const std::size_t N = out.size();
  if (!set_.phi_low.zero && noise_->count_G() > 0) {
    if (dW.size() != noise_->increments_G()) {
      throw ContractViolation("Stepper: " + std::to_string(dW.size()) + " G increments for " +
                              std::to_string(noise_->increments_G()) + " modes");
    }
    std::fill(tmp_.begin(), tmp_.end(), 0.0);
    for (std::size_t k = 0; k < noise_->count_G(); ++k) {
      const auto& gk = noise_->modes_G[k];
      for (std::size_t i = 0; i < N; ++i) tmp_[i] += gk[i] * dW[k];
    }
    for (std::size_t i = 0; i < N; ++i) out[i] += set_.phi_low(arg_[i]) * tmp_[i];
  }
  if (!set_.lambda_low.zero) {
    for (std::size_t i = 0; i < N; ++i) out[i] += set_.lambda_low(arg_[i]) * cfg_.dt;
  }
}

void Stepper::commit(GridState& rho) {
  const std::size_t N = rho.values.size();
  for (std::size_t i = 0; i < N; ++i) stage_[i] = rho.values[i] + incr_[i];
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(stage_[i])) {
      throw StepError("non-finite value at cell " + std::to_string(i) + " in step " + std::to_string(step_index_),
                      step_index_, rho.time);
    }
  }
  rho.values.swap(stage_);
  rho.time += cfg_.dt;
}

void Stepper::step_ito(GridState& rho, std::span<const double> dB) {
  stage_rho_ = &rho;
  evaluate(rho);
  check_cfl(rho);
  compute_flux(dB, true, flux_);
  divergence_of(flux_, incr_);
  commit(rho);
}

void Stepper::step_general(GridState& rho, std::span<const double> dB, std::span<const double> dW) {
  stage_rho_ = &rho;
  evaluate(rho);
  check_cfl(rho);
  compute_flux(dB, true, flux_);
  divergence_of(flux_, incr_);
  if (has_sources()) add_sources(dW, incr_);
  commit(rho);
}

void Stepper::step_strat_heun(GridState& rho, std::span<const double> dB, std::span<const double> dW) {
  stage_rho_ = &rho;
  evaluate(rho);
  check_cfl(rho);
  compute_flux(dB, false, flux_);
  // Sources are Ito terms: evaluated once at the left point.
  std::vector<double> sources;
  if (has_sources()) {
    sources.assign(rho.values.size(), 0.0);
    add_sources(dW, sources);
  }
  divergence_of(flux_, incr_);
  GridState pred(rho.spec, rho.time + cfg_.dt);
  for (std::size_t i = 0; i < rho.values.size(); ++i) pred.values[i] = rho.values[i] + incr_[i];
  stage_rho_ = &pred;
  evaluate(pred);
  compute_flux(dB, false, flux2_);
  for (std::size_t i = 0; i < flux_.size(); ++i) flux_[i] = 0.5 * (flux_[i] + flux2_[i]);
  divergence_of(flux_, incr_);
  for (std::size_t i = 0; i < sources.size(); ++i) incr_[i] += sources[i];
  stage_rho_ = &rho;
  commit(rho);
}

void Stepper::step(GridState& rho, std::span<const double> dB, std::span<const double> dW) {
  if (cfg_.scheme == Scheme::strat_heun) {
    step_strat_heun(rho, dB, dW);
  } else if (has_sources()) {
    step_general(rho, dB, dW);
  } else {
    step_ito(rho, dB);
  }
}

double cfl_bound(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise, const SolverConfig& cfg) {
  Stepper st(set, noise, cfg);
  return st.cfl_bound(rho);
}

GridState step_ito(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise,
                   std::span<const double> dB, const SolverConfig& cfg) {
  Stepper st(set, noise, cfg);
  GridState out = rho;
  st.step_ito(out, dB);
  return out;
}

GridState step_general(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise,
                       std::span<const double> dB, std::span<const double> dW, const SolverConfig& cfg) {
  Stepper st(set, noise, cfg);
  GridState out = rho;
  st.step_general(out, dB, dW);
  return out;
}

GridState step_strat_heun(const GridState& rho, const NonlinearitySet& set, const NoiseField& noise,
                          std::span<const double> dB, const SolverConfig& cfg) {
  Stepper st(set, noise, cfg);
  GridState out = rho;
  st.step_strat_heun(out, dB, {});
  return out;
}

std::string Trajectory::diagnostics_csv() const {
  std::ostringstream os;
  os << "step,time,mass,L1,L2,Lp,min,max,energy,entropy,dissipation\n";
  for (const auto& r : diagnostics) {
    os << r.step << ',' << format_double(r.time) << ',' << format_double(r.mass) << ',' << format_double(r.l1) << ','
       << format_double(r.l2) << ',' << format_double(r.lp) << ',' << format_double(r.min) << ','
       << format_double(r.max) << ',' << format_double(r.energy) << ','
       << (r.entropy ? format_double(*r.entropy) : std::string()) << ',' << format_double(r.dissipation) << '\n';
  }
  return os.str();
}

namespace {

long long resolve_stride(const SolverConfig& cfg, long long steps) {
  if (cfg.snapshot_stride > 0) return cfg.snapshot_stride;
  return std::max(1LL, steps / 200);
}

FunctionalOptions functional_options(const SolverConfig& cfg, const NonlinearitySet& set) {
  FunctionalOptions fo;
  fo.p = cfg.diag_p;
  fo.with_entropy = cfg.diag_entropy;
  fo.alpha = cfg.alpha;
  fo.clip = cfg.clip_nonlinearity_args && !set.signed_domain;
  return fo;
}

void fill_metadata(Trajectory& tr, const NonlinearitySet& set, const NoiseField& noise, const SolverConfig& cfg,
                   const PathBundle& paths) {
  tr.metadata["seed"] = std::to_string(paths.seed);
  tr.metadata["dt"] = format_double(cfg.dt);
  tr.metadata["t_end"] = format_double(cfg.t_end);
  tr.metadata["alpha"] = format_double(cfg.alpha);
  tr.metadata["scheme"] = to_string(cfg.scheme);
  tr.metadata["correction"] = to_string(cfg.correction);
  tr.metadata["steps"] = std::to_string(cfg.steps());
  tr.metadata["snapshot_stride"] = std::to_string(tr.snapshot_stride);
  tr.metadata["nonlinearity"] = set.name;
  tr.metadata["sigma"] = set.sigma.description;
  tr.metadata["noise_modes_F"] = std::to_string(noise.count_F());
  tr.metadata["noise_modes_G"] = std::to_string(noise.count_G());
  tr.metadata["grid"] = "d=" + std::to_string(noise.spec.d) + " n=" + std::to_string(noise.spec.n) + " torus=2pi";
  if (cfg.sigma_mollify_n) tr.metadata["sigma_mollify_n"] = std::to_string(*cfg.sigma_mollify_n);
}

}  // namespace

Trajectory run_with_paths(const GridState& rho0, const NonlinearitySet& set, const NoiseField& noise,
                          const SolverConfig& cfg, const PathBundle& paths, const StepObserver& observer) {
  Stepper st(set, noise, cfg);
  const long long steps = cfg.steps();
  if (paths.steps < steps) throw ContractViolation("run: path bundle shorter than the run");
  Trajectory tr;
  tr.snapshot_stride = resolve_stride(cfg, steps);
  fill_metadata(tr, st.set(), noise, cfg, paths);
  const FunctionalOptions fo = functional_options(cfg, st.set());
  GridState rho = rho0;
  const double t0 = rho0.time;
  tr.snapshots.push_back(rho);
  tr.diagnostics.push_back(norms_and_functionals(rho, st.set(), fo));
  for (long long s = 0; s < steps; ++s) {
    if (observer) observer(s, rho);
    st.set_step_index(s);
    try {
      st.step(rho, paths.dB_at(s), paths.dW_at(s));
    } catch (const StepError& e) {
      tr.truncated = true;
      tr.error = e.what();
      break;
    }
    rho.time = t0 + double(s + 1) * cfg.dt;
    DiagnosticsRow row = norms_and_functionals(rho, st.set(), fo);
    row.step = s + 1;
    tr.diagnostics.push_back(row);
    if ((s + 1) % tr.snapshot_stride == 0 || s + 1 == steps) tr.snapshots.push_back(rho);
  }
  if (tr.truncated) tr.metadata["error"] = tr.error;
  return tr;
}

Trajectory run(const GridState& rho0, const NonlinearitySet& set, const NoiseField& noise, const SolverConfig& cfg,
               std::uint64_t seed, const StepObserver& observer) {
  cfg.validate();
  const PathBundle paths = sample_increments(noise, cfg.dt, cfg.steps(), seed);
  return run_with_paths(rho0, set, noise, cfg, paths, observer);
}

CoupledResult run_coupled_with_paths(const GridState& rho0_a, const GridState& rho0_b, const NonlinearitySet& set,
                                     const NoiseField& noise, const SolverConfig& cfg, const PathBundle& paths) {
  const NonlinearitySet prepared = prepared_set(set, cfg);
  Stepper sa(prepared, noise, cfg), sb(prepared, noise, cfg);
  const long long steps = cfg.steps();
  if (paths.steps < steps) throw ContractViolation("run_coupled: path bundle shorter than the run");
  CoupledResult out;
  out.a.snapshot_stride = out.b.snapshot_stride = resolve_stride(cfg, steps);
  fill_metadata(out.a, prepared, noise, cfg, paths);
  fill_metadata(out.b, prepared, noise, cfg, paths);
  const FunctionalOptions fo = functional_options(cfg, prepared);
  GridState a = rho0_a, b = rho0_b;
  const double t0 = rho0_a.time;
  out.a.snapshots.push_back(a);
  out.b.snapshots.push_back(b);
  out.a.diagnostics.push_back(norms_and_functionals(a, prepared, fo));
  out.b.diagnostics.push_back(norms_and_functionals(b, prepared, fo));
  out.distance.push_back(l1_distance(a, b));
  out.times.push_back(t0);
  for (long long s = 0; s < steps; ++s) {
    sa.set_step_index(s);
    sb.set_step_index(s);
    try {
      sa.step(a, paths.dB_at(s), paths.dW_at(s));
      sb.step(b, paths.dB_at(s), paths.dW_at(s));
    } catch (const StepError& e) {
      out.a.truncated = out.b.truncated = true;
      out.a.error = out.b.error = e.what();
      break;
    }
    a.time = b.time = t0 + double(s + 1) * cfg.dt;
    DiagnosticsRow ra = norms_and_functionals(a, prepared, fo), rb = norms_and_functionals(b, prepared, fo);
    ra.step = rb.step = s + 1;
    out.a.diagnostics.push_back(ra);
    out.b.diagnostics.push_back(rb);
    out.distance.push_back(l1_distance(a, b));
    out.times.push_back(a.time);
    if ((s + 1) % out.a.snapshot_stride == 0 || s + 1 == steps) {
      out.a.snapshots.push_back(a);
      out.b.snapshots.push_back(b);
    }
  }
  return out;
}

CoupledResult run_coupled(const GridState& rho0_a, const GridState& rho0_b, const NonlinearitySet& set,
                          const NoiseField& noise, const SolverConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const PathBundle paths = sample_increments(noise, cfg.dt, cfg.steps(), seed);
  return run_coupled_with_paths(rho0_a, rho0_b, set, noise, cfg, paths);
}

double metric_D_from_terms(std::span<const double> psi_distances) {
  double D = 0.0;
  double w = 0.5;
  for (double d : psi_distances) {
    D += w * d / (1.0 + d);
    w *= 0.5;
  }
  return D;
}

CascadeReport run_cascade(const GridState& rho0, const NonlinearitySet& set, const NoiseField& noise,
                          const SolverConfig& cfg_base, const std::vector<CascadeEntry>& schedule, std::uint64_t seed) {
  cfg_base.validate();
  CascadeReport rep;
  rep.schedule = schedule;
  const std::size_t E = schedule.size();
  if (E == 0) return rep;
  for (std::size_t e = 1; e < E; ++e) {
    const int n_prev = schedule[e - 1].mollify_n.value_or(0), n_cur = schedule[e].mollify_n.value_or(0);
    const bool n_ok = !schedule[e].mollify_n || !schedule[e - 1].mollify_n || n_cur >= n_prev;
    if (!(schedule[e].alpha <= schedule[e - 1].alpha) || !n_ok) {
      throw ConfigError("cascade: schedule must have alpha nonincreasing and n nondecreasing");
    }
  }
  std::vector<NonlinearitySet> sets;
  std::vector<SolverConfig> cfgs;
  for (const auto& entry : schedule) {
    SolverConfig c = cfg_base;
    c.alpha = entry.alpha;
    c.sigma_mollify_n = entry.mollify_n;
    sets.push_back(prepared_set(set, c));
    cfgs.push_back(c);
  }
  std::vector<Stepper> steppers;
  steppers.reserve(E);
  for (std::size_t e = 0; e < E; ++e) steppers.emplace_back(sets[e], noise, cfgs[e]);
  const long long steps = cfg_base.steps();
  const PathBundle paths = sample_increments(noise, cfg_base.dt, steps, seed);
  std::vector<GridState> states(E, rho0);
  constexpr int kTerms = 20;
  std::vector<double> dist(E > 1 ? E - 1 : 0, 0.0);
  std::vector<std::vector<double>> psi(dist.size(), std::vector<double>(kTerms, 0.0));
  const std::size_t N = rho0.values.size();
  const double vol = rho0.spec.cell_volume();
  std::vector<std::vector<double>> psi_vals(E, std::vector<double>(N * kTerms));
  for (long long s = 0; s < steps; ++s) {
    try {
      for (std::size_t e = 0; e < E; ++e) {
        steppers[e].set_step_index(s);
        steppers[e].step(states[e], paths.dB_at(s), paths.dW_at(s));
      }
    } catch (const StepError& err) {
      rep.truncated = true;
      rep.error = err.what();
      break;
    }
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t i = 0; i < N; ++i) {
        const double v = states[e].values[i];
        for (int k = 0; k < kTerms; ++k) {
          psi_vals[e][std::size_t(k) * N + i] = cutoff_eval(CutoffKind::Psi_delta, 1.0 / (k + 1), std::max(v, 0.0));
        }
      }
    }
    for (std::size_t e = 0; e + 1 < E; ++e) {
      dist[e] += l1_distance(states[e], states[e + 1]) * cfg_base.dt;
      for (int k = 0; k < kTerms; ++k) {
        double acc = 0.0;
        const double* pa = psi_vals[e].data() + std::size_t(k) * N;
        const double* pb = psi_vals[e + 1].data() + std::size_t(k) * N;
        for (std::size_t i = 0; i < N; ++i) acc += std::abs(pa[i] - pb[i]);
        psi[e][std::size_t(k)] += acc * vol * cfg_base.dt;
      }
    }
  }
  rep.distances = dist;
  for (const auto& terms : psi) rep.metric_D.push_back(metric_D_from_terms(terms));
  for (const auto& st : states) rep.final_mass.push_back(integrate(st));
  return rep;
}

}  // namespace dkspde
