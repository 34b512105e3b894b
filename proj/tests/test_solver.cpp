#include <cmath>
#include <numbers>

#include "doctest.h"
#include "dkspde/errors.hpp"
#include "dkspde/harness.hpp"
#include "dkspde/noise.hpp"
#include "dkspde/nonlin.hpp"
#include "dkspde/solver.hpp"

using namespace dkspde;

TEST_CASE("scheme names round trip") {
  CHECK(parse_scheme(to_string(Scheme::strat_heun)) == Scheme::strat_heun);
  CHECK(parse_correction(to_string(CorrectionForm::mode_sum)) == CorrectionForm::mode_sum);
  CHECK_THROWS_AS(parse_scheme("rk4"), ConfigError);
  SolverConfig c;
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("mass is conserved to rounding for both schemes and dimensions") {
  for (int d : {1, 2}) {
    for (Scheme sch : {Scheme::ito_euler, Scheme::strat_heun}) {
      const auto g = GridSpec::make(d, d == 1 ? 64 : 16);
      const auto set = make_preset("power-law-dk", {{"m", 2.0}});
      const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(3, 0.3, 1.0), g);
      SolverConfig cfg;
      cfg.dt = 1e-4;
      cfg.t_end = 0.05;
      cfg.scheme = sch;
      cfg.alpha = 0.1;
      const GridState rho0 = make_initial(g, {});
      const Trajectory tr = run(rho0, set, nf, cfg, 5);
      REQUIRE_FALSE(tr.truncated);
      const double m0 = tr.diagnostics.front().mass;
      for (const auto& row : tr.diagnostics) CHECK(std::abs(row.mass - m0) <= 1e-12 * m0);
    }
  }
}

TEST_CASE("reaction-only model follows the explicit Euler recursion") {
  const auto g = GridSpec::make(1, 16);
  auto set = make_model("power-law-dk", {{"m", 1.0}}, {{"Phi", "zero"}, {"sigma", "zero"}, {"lambda", "power 1 1"}});
  const NoiseField nf = build_spectral_noise({}, g);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 1.0;
  const Trajectory tr = run(GridState(g, std::vector<double>(16, 1.0)), set, nf, cfg, 1);
  REQUIRE_FALSE(tr.truncated);
  const double expect = std::pow(1.01, 100);
  for (double v : tr.snapshots.back().values) CHECK(v == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("one deterministic step multiplies a Fourier mode by the discrete factor") {
  const auto g = GridSpec::make(1, 32);
  const auto set = make_model("power-law-dk", {{"m", 1.0}}, {{"sigma", "zero"}});
  const NoiseField nf = build_spectral_noise({}, g);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.alpha = 0.25;
  const GridState rho = sample(g, [](double x, double) { return 2.0 + 0.5 * std::sin(2 * x); });
  const GridState out = step_ito(rho, set, nf, {}, cfg);
  const double h = g.dx();
  const double factor = 1.0 - cfg.dt * 1.25 * (2.0 - 2.0 * std::cos(2 * h)) / (h * h);
  for (int i = 0; i < 32; ++i) {
    CHECK(out.values[i] == doctest::Approx(2.0 + 0.5 * factor * std::sin(2 * i * h)).epsilon(1e-14));
  }
}

TEST_CASE("CFL violation raises a step error and truncates the run") {
  const auto g = GridSpec::make(1, 64);
  const auto set = make_preset("power-law-dk", {{"m", 1.0}});
  const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(2, 0.1, 1.0), g);
  SolverConfig cfg;
  const GridState rho0 = make_initial(g, {});
  const double bound = cfl_bound(rho0, set, nf, cfg);
  CHECK(bound == doctest::Approx(0.5 * g.dx() * g.dx() / (2.0 * (1.0 + 0.5 * 0.0125 * 0.25 / 0.5))).epsilon(1e-12));
  cfg.dt = 4.0 * bound;
  cfg.t_end = 10 * cfg.dt;
  Stepper st(set, nf, cfg);
  GridState r = rho0;
  const PathBundle p = sample_increments(nf, cfg.dt, 1, 1);
  CHECK_THROWS_AS(st.step_ito(r, p.dB_at(0)), StepError);
  const Trajectory tr = run(rho0, set, nf, cfg, 1);
  CHECK(tr.truncated);
  CHECK_FALSE(tr.error.empty());
}

TEST_CASE("coupled runs on identical paths contract in L1") {
  const auto g = GridSpec::make(1, 64);
  const auto set = make_preset("power-law-dk", {{"m", 1.0}});
  const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(4, 0.2, 1.0), g);
  SolverConfig cfg;
  cfg.dt = 5e-4;
  cfg.t_end = 0.2;
  const auto r = run_coupled(make_initial(g, {}), make_initial(g, {"sine", 1.0, 0.5, 0.785, 1.0}), set, nf, cfg, 3);
  REQUIRE(r.distance.size() == std::size_t(cfg.steps()) + 1);
  for (std::size_t i = 1; i < r.distance.size(); ++i) CHECK(r.distance[i] <= r.distance[i - 1] * (1 + 1e-12));
}

TEST_CASE("runs are reproducible from the seed") {
  const auto g = GridSpec::make(1, 32);
  const auto set = make_preset("zero-range", {{"m", 1.0}, {"eps", 0.5}});
  const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(2, 0.2, 1.0), g);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.1;
  const auto a = run(make_initial(g, {}), set, nf, cfg, 11);
  const auto b = run(make_initial(g, {}), set, nf, cfg, 11);
  CHECK(a.diagnostics_csv() == b.diagnostics_csv());
  CHECK(a.diagnostics_csv().rfind("step,time,mass,L1,L2,Lp,min,max,energy,entropy,dissipation\n", 0) == 0);
}

TEST_CASE("metric D weights") {
  const std::vector<double> d{1.0, 1.0, 0.0};
  CHECK(metric_D_from_terms(d) == doctest::Approx(0.25 + 0.125));
}
