#include "dkspde/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "dkspde/config.hpp"
#include "dkspde/errors.hpp"
#include "dkspde/harness.hpp"
#include "dkspde/io.hpp"
#include "dkspde/kinetic.hpp"
#include "dkspde/parallel.hpp"

namespace dkspde::cli {

namespace {

constexpr const char* kFormatVersion = "dkspde-1";

struct Context {
  const Options& opts;
  std::ostream& log;
  RunConfig cfg;
  std::filesystem::path out;
  std::string fingerprint;
};

std::string metadata_text(const std::map<std::string, std::string>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) out += k + " = " + v + '\n';
  return out;
}

void prepare_output(Context& ctx) {
  std::filesystem::create_directories(ctx.out);
  const std::string resolved = ctx.cfg.resolved_text();
  ctx.fingerprint = hex64(fnv1a(std::string(kFormatVersion) + '\n' + ctx.opts.subcommand + '\n' + resolved));
  write_text(ctx.out / "config.resolved.ini", resolved);
  write_text(ctx.out / "fingerprint.txt", ctx.fingerprint + '\n');
}

void write_metadata(const Context& ctx, std::map<std::string, std::string> meta) {
  meta["fingerprint"] = ctx.fingerprint;
  meta["subcommand"] = ctx.opts.subcommand;
  meta["format"] = kFormatVersion;
  write_text(ctx.out / "metadata.txt", metadata_text(meta));
}

void cfl_precheck(const Context& ctx, const NonlinearitySet& set, const NoiseField& noise,
                  const std::vector<GridState>& states, double alpha) {
  if (ctx.cfg.solver.override_cfl) return;
  SolverConfig c = ctx.cfg.solver;
  c.alpha = alpha;
  for (const auto& s : states) {
    const double bound = cfl_bound(s, set, noise, c);
    if (!(c.dt <= bound * (1.0 + 1e-12))) {
      throw ConfigError("dt = " + format_double(c.dt) + " violates the CFL bound " + format_double(bound) +
                        " (alpha = " + format_double(alpha) + "); reduce dt or pass --override-cfl");
    }
  }
}

std::string distance_csv(const CoupledResult& r) {
  std::ostringstream os;
  os << "step,time,distance\n";
  for (std::size_t i = 0; i < r.distance.size(); ++i) {
    os << i << ',' << format_double(r.times[i]) << ',' << format_double(r.distance[i]) << '\n';
  }
  return os.str();
}

void write_snapshots(const Context& ctx, const Trajectory& tr, const std::string& stem) {
  if (!ctx.cfg.write_snapshots) return;
  const auto dir = ctx.out / "snapshots";
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const long long step = std::llround(tr.snapshots[k].time / ctx.cfg.solver.dt);
    std::ostringstream name;
    name << stem << '_' << std::setw(8) << std::setfill('0') << step << ".bin";
    write_snapshot(dir / name.str(), tr.snapshots[k]);
  }
}

int finish_run(const Context& ctx, bool truncated, const std::string& error) {
  if (truncated) {
    ctx.log << "run stopped early: " << error << '\n';
    return kExitExperimentFailed;
  }
  return kExitOk;
}

int cmd_simulate(Context& ctx) {
  const NonlinearitySet set = build_nonlinearity(ctx.cfg);
  const NoiseField noise = build_noise(ctx.cfg);
  const GridState rho0 = make_initial(ctx.cfg.grid, ctx.cfg.initial_a);
  cfl_precheck(ctx, set, noise, {rho0}, ctx.cfg.solver.alpha);
  prepare_output(ctx);
  const Trajectory tr = run(rho0, set, noise, ctx.cfg.solver, ctx.cfg.seed);
  write_text(ctx.out / "diagnostics.csv", tr.diagnostics_csv());
  write_text(ctx.out / "noise.csv", noise_to_csv(noise));
  write_text(ctx.out / "final.csv", field_to_csv(tr.snapshots.back()));
  write_snapshots(ctx, tr, "rho");
  write_metadata(ctx, tr.metadata);
  ctx.log << "simulate: " << tr.diagnostics.size() - 1 << " steps written to " << ctx.out.string() << '\n';
  return finish_run(ctx, tr.truncated, tr.error);
}

int cmd_couple(Context& ctx) {
  const NonlinearitySet set = build_nonlinearity(ctx.cfg);
  const NoiseField noise = build_noise(ctx.cfg);
  const GridState a0 = make_initial(ctx.cfg.grid, ctx.cfg.initial_a);
  const GridState b0 = make_initial(ctx.cfg.grid, ctx.cfg.initial_b);
  cfl_precheck(ctx, set, noise, {a0, b0}, ctx.cfg.solver.alpha);
  prepare_output(ctx);
  const CoupledResult r = run_coupled(a0, b0, set, noise, ctx.cfg.solver, ctx.cfg.seed);
  write_text(ctx.out / "distance.csv", distance_csv(r));
  write_text(ctx.out / "diagnostics_a.csv", r.a.diagnostics_csv());
  write_text(ctx.out / "diagnostics_b.csv", r.b.diagnostics_csv());
  write_snapshots(ctx, r.a, "rho_a");
  write_snapshots(ctx, r.b, "rho_b");
  write_metadata(ctx, r.a.metadata);
  ctx.log << "couple: final distance " << format_double(r.distance.back()) << '\n';
  return finish_run(ctx, r.a.truncated, r.a.error);
}

int cmd_cascade(Context& ctx) {
  if (ctx.cfg.schedule.size() < 2) throw ConfigError("cascade: [experiment] schedule needs at least 2 entries");
  const NonlinearitySet set = build_nonlinearity(ctx.cfg);
  const NoiseField noise = build_noise(ctx.cfg);
  const GridState rho0 = make_initial(ctx.cfg.grid, ctx.cfg.initial_a);
  for (const auto& e : ctx.cfg.schedule) {
    const NonlinearitySet s = e.mollify_n ? mollify_sigma(set, *e.mollify_n) : set;
    cfl_precheck(ctx, s, noise, {rho0}, e.alpha);
  }
  prepare_output(ctx);
  const CascadeReport rep = run_cascade(rho0, set, noise, ctx.cfg.solver, ctx.cfg.schedule, ctx.cfg.seed);
  std::ostringstream os;
  os << "pair,alpha_a,alpha_b,n_a,n_b,l1l1_distance,metric_D\n";
  for (std::size_t j = 0; j < rep.distances.size(); ++j) {
    const auto& a = ctx.cfg.schedule[j];
    const auto& b = ctx.cfg.schedule[j + 1];
    os << j << ',' << format_double(a.alpha) << ',' << format_double(b.alpha) << ',' << a.mollify_n.value_or(0) << ','
       << b.mollify_n.value_or(0) << ',' << format_double(rep.distances[j]) << ',' << format_double(rep.metric_D[j])
       << '\n';
  }
  write_text(ctx.out / "cascade.csv", os.str());
  std::ostringstream ms;
  ms << "entry,final_mass\n";
  for (std::size_t e = 0; e < rep.final_mass.size(); ++e) ms << e << ',' << format_double(rep.final_mass[e]) << '\n';
  write_text(ctx.out / "cascade_mass.csv", ms.str());
  write_metadata(ctx, {{"seed", std::to_string(ctx.cfg.seed)}, {"entries", std::to_string(ctx.cfg.schedule.size())}});
  if (!rep.distances.empty()) ctx.log << "cascade: last pair distance " << format_double(rep.distances.back()) << '\n';
  return finish_run(ctx, rep.truncated, rep.error);
}

int cmd_kinetic(Context& ctx) {
  const NonlinearitySet set = build_nonlinearity(ctx.cfg);
  const NoiseField noise = build_noise(ctx.cfg);
  const GridState rho0 = make_initial(ctx.cfg.grid, ctx.cfg.initial_a);
  cfl_precheck(ctx, set, noise, {rho0}, ctx.cfg.solver.alpha);
  prepare_output(ctx);
  SolverConfig cfg = ctx.cfg.solver;
  const NonlinearitySet used = cfg.sigma_mollify_n ? mollify_sigma(set, *cfg.sigma_mollify_n) : set;
  const bool clip = cfg.clip_nonlinearity_args && !used.signed_domain;
  const auto edges = default_xi_edges(ctx.cfg.xi_max, ctx.cfg.per_octave, ctx.cfg.per_unit);
  // Accumulation sees every step regardless of the snapshot stride.
  KineticAccumulator acc(used, cfg.alpha, clip, edges, cfg.dt);
  const Trajectory tr = run(rho0, used, noise, cfg, ctx.cfg.seed, [&](long long, const GridState& rho) { acc.add(rho); });
  const KineticHistogram h = std::move(acc).finish();
  std::vector<double> betas = ctx.cfg.betas, Ms = ctx.cfg.Ms;
  if (betas.empty()) {
    for (int k = 1; k <= 8; ++k) betas.push_back(std::ldexp(1.0, -k));
  }
  if (Ms.empty()) {
    for (int M = 1; M + 1 <= int(std::ceil(ctx.cfg.xi_max)); ++M) Ms.push_back(M);
  }
  write_text(ctx.out / "kinetic_histogram.csv", h.to_csv());
  write_text(ctx.out / "zero_series.csv", series_csv(betas, measure_zero_test(h, betas)));
  write_text(ctx.out / "infinity_series.csv", series_csv(Ms, measure_infinity_test(h, Ms)));
  write_text(ctx.out / "diagnostics.csv", tr.diagnostics_csv());
  auto meta = tr.metadata;
  meta["kinetic_stride"] = "1";
  meta["q_total"] = format_double(h.q_total);
  meta["max_step_deposit"] = format_double(h.max_step_deposit);
  write_metadata(ctx, meta);
  ctx.log << "kinetic: q_total " << format_double(h.q_total) << " over " << h.bins() << " bins\n";
  return finish_run(ctx, tr.truncated, tr.error);
}

int cmd_check(Context& ctx) {
  const NonlinearitySet set = build_nonlinearity(ctx.cfg);
  const NoiseField noise = build_noise(ctx.cfg);
  prepare_output(ctx);
  const double tol = default_noise_tolerance(noise);
  const AssumptionReport nrep = verify_noise_assumptions(noise, tol);
  NoiseContext nc;
  if (noise.count_F() > 0) nc.stationary = is_stationary(noise, tol);
  const AssumptionReport rep = check_assumptions(set, SampleGrid::log_uniform(), 1e-8, nc);
  write_text(ctx.out / "assumptions.csv", rep.to_csv());
  write_text(ctx.out / "noise_assumptions.csv", nrep.to_csv());
  std::map<std::string, std::string> meta;
  for (const auto& [k, v] : rep.constants) meta["constant." + k] = format_double(v);
  write_metadata(ctx, meta);
  const bool bad = rep.has_hard_failure() || nrep.has_hard_failure();
  for (const auto& id : rep.hard_failures()) ctx.log << "assumption failed: " << id << '\n';
  for (const auto& id : nrep.hard_failures()) ctx.log << "noise assumption failed: " << id << '\n';
  return bad ? kExitExperimentFailed : kExitOk;
}

int cmd_acceptance(Context& ctx) {
  std::vector<ExperimentSpec> specs;
  if (ctx.opts.config && !ctx.cfg.experiment_kind.empty()) {
    specs.push_back(build_experiment(ctx.cfg, ctx.cfg.experiment_kind));
  } else {
    for (const auto& c : acceptance_suite()) {
      if (!ctx.opts.only.empty() && std::find(ctx.opts.only.begin(), ctx.opts.only.end(), c.criterion) == ctx.opts.only.end()) {
        continue;
      }
      for (auto e : c.experiments) {
        if (ctx.opts.seed) e.seed = *ctx.opts.seed;
        specs.push_back(e);
      }
    }
  }
  prepare_output(ctx);
  const auto evidence = ctx.out / "evidence";
  std::filesystem::create_directories(evidence);
  std::vector<Verdict> verdicts;
  for (auto& s : specs) {
    s.evidence_dir = evidence;
    s.threads = ctx.opts.threads;
    Verdict v = run_experiment(s);
    ctx.log << (v.pass ? "PASS " : "FAIL ") << v.id << "  " << v.statistics_text()
            << (v.note.empty() ? "" : "  (" + v.note + ")") << '\n';
    verdicts.push_back(std::move(v));
  }
  write_text(ctx.out / "summary.csv", summary_csv(verdicts));
  write_metadata(ctx, {{"experiments", std::to_string(verdicts.size())}});
  const bool all = std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  return all ? kExitOk : kExitExperimentFailed;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"simulate", "couple", "cascade", "kinetic", "acceptance",
                                                 "check-assumptions"};
  return names;
}

int dispatch(const Options& opts, std::ostream& log) {
  try {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), opts.subcommand) == names.end()) {
      throw ConfigError("unknown subcommand '" + opts.subcommand + "'");
    }
    Context ctx{opts, log, {}, {}, {}};
    if (opts.config) {
      ctx.cfg = parse_config(*opts.config);
    } else if (opts.subcommand == "acceptance") {
      ctx.cfg = parse_config_text("[model]\npreset = power-law-dk\n[grid]\nn = 64\n[solver]\ndt = 1e-4\nt_end = 1\n",
                                  "<builtin>");
      ctx.cfg.out_dir = "acceptance-out";
    } else {
      throw ConfigError(opts.subcommand + " requires --config");
    }
    if (opts.seed) ctx.cfg.seed = *opts.seed;
    if (opts.override_cfl) ctx.cfg.solver.override_cfl = true;
    ctx.out = opts.out ? *opts.out : ctx.cfg.out_dir;
    if (opts.subcommand == "simulate") return cmd_simulate(ctx);
    if (opts.subcommand == "couple") return cmd_couple(ctx);
    if (opts.subcommand == "cascade") return cmd_cascade(ctx);
    if (opts.subcommand == "kinetic") return cmd_kinetic(ctx);
    if (opts.subcommand == "check-assumptions") return cmd_check(ctx);
    return cmd_acceptance(ctx);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitExperimentFailed;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for stochastic conservation laws with correlated noise"};
  app.require_subcommand(1);
  Options opts;
  std::string config, out;
  std::uint64_t seed = 0;
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the configuration seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", opts.threads, "worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u));
    sub->add_flag("--override-cfl", opts.override_cfl, "run even if dt violates the CFL bound");
    if (name == "acceptance") sub->add_option("--only", opts.only, "criteria to run (default all)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }
  CLI::App* sub = app.get_subcommands().front();
  opts.subcommand = sub->get_name();
  if (sub->count("--config")) opts.config = config;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--out")) opts.out = out;
  return dispatch(opts, std::cerr);
}

DeterminismReport determinism_check(const std::filesystem::path& work_dir, unsigned threads) {
  DeterminismReport rep;
  std::filesystem::create_directories(work_dir);
  const auto config = work_dir / "determinism.ini";
  write_text(config,
             "seed = 11\n"
             "[model]\npreset = power-law-dk\nm = 1\n"
             "[grid]\nn = 32\n"
             "[solver]\ndt = 1e-3\nt_end = 0.05\n"
             "[noise]\nf_count = 4\nf_amplitude = 0.2\n"
             "[experiment]\nkind = contraction\nensemble = 6\nladder = 32:1e-3,64:2.5e-4\n"
             "schedule = 0.1:4,0.01:16,0.001:64\n"
             "threshold.max_violation = 1\n"
             "[output]\nsnapshot_stride = 10\n");
  for (const auto& name : subcommands()) {
    std::vector<std::filesystem::path> dirs;
    for (unsigned t : {1u, threads}) {
      Options o;
      o.subcommand = name;
      o.config = config;
      o.threads = t;
      o.out = work_dir / (name + "_t" + std::to_string(t));
      std::filesystem::remove_all(*o.out);
      std::ostringstream sink;
      const int rc = dispatch(o, sink);
      if (rc == kExitConfigError) rep.mismatches.push_back(name + ": configuration error: " + sink.str());
      dirs.push_back(*o.out);
    }
    std::set<std::string> files;
    for (const auto& d : dirs) {
      if (!std::filesystem::exists(d)) continue;
      for (const auto& e : std::filesystem::recursive_directory_iterator(d)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") {
          files.insert(std::filesystem::relative(e.path(), d).generic_string());
        }
      }
    }
    for (const auto& f : files) {
      const auto a = dirs[0] / f, b = dirs[1] / f;
      rep.compared.push_back(name + "/" + f);
      if (!std::filesystem::exists(a) || !std::filesystem::exists(b) || read_text(a) != read_text(b)) {
        rep.mismatches.push_back(name + "/" + f);
      }
    }
    if (files.empty()) rep.mismatches.push_back(name + ": no CSV output");
  }
  rep.pass = rep.mismatches.empty();
  return rep;
}

}  // namespace dkspde::cli
