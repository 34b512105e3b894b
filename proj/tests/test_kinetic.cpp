#include <cmath>
#include <numbers>

#include "doctest.h"
#include "dkspde/errors.hpp"
#include "dkspde/harness.hpp"
#include "dkspde/kinetic.hpp"
#include "dkspde/solver.hpp"

using namespace dkspde;

TEST_CASE("default bin edges contain the dyadic and integer points exactly") {
  const auto e = default_xi_edges(4.0, 4, 4, 10);
  CHECK(e.front() == 0.0);
  for (int k = 1; k <= 10; ++k) CHECK(std::find(e.begin(), e.end(), std::ldexp(1.0, -k)) != e.end());
  for (double M : {1.0, 2.0, 3.0, 4.0}) CHECK(std::find(e.begin(), e.end(), M) != e.end());
  CHECK(e.back() == 4.0);
  CHECK(std::is_sorted(e.begin(), e.end()));
  CHECK_THROWS_AS(default_xi_edges(0.0), ConfigError);
}

TEST_CASE("find_bin") {
  const std::vector<double> e{0.0, 1.0, 2.0};
  CHECK(find_bin(e, -1.0) == 0);
  CHECK(find_bin(e, 0.5) == 0);
  CHECK(find_bin(e, 1.0) == 1);
  CHECK(find_bin(e, 2.0) == 1);
  CHECK(find_bin(e, 2.5) == 2);
}

TEST_CASE("kinetic slice integrates to the positive mass") {
  const auto g = GridSpec::make(1, 32);
  const GridState r = sample(g, [](double x, double) { return 1.5 + 2.0 * std::sin(x); });
  const auto e = default_xi_edges(2.0);
  const auto chi = kinetic_function_slice(r, e);
  double total = 0.0, pos = 0.0;
  for (double c : chi) total += c;
  for (double v : r.values) pos += std::max(v, 0.0) * g.dx();
  CHECK(total == doctest::Approx(pos).epsilon(1e-13));
  CHECK(chi.back() > 0.0);
}

TEST_CASE("chi distance identity holds within the bin tolerance") {
  const auto g = GridSpec::make(1, 64);
  const GridState a = sample(g, [](double x, double) { return 1.0 + 0.8 * std::sin(x); });
  const GridState b = sample(g, [](double x, double) { return 0.3 + 3.0 * std::cos(2 * x); });
  const auto e = default_xi_edges(2.0);
  const ChiDistance cd = chi_distance_checked(a, b, e);
  CHECK(cd.direct == doctest::Approx(l1_distance(a, b)));
  CHECK(std::abs(cd.direct - cd.binned) <= cd.tolerance);
  CHECK(chi_distance(a, a) == 0.0);
}

TEST_CASE("accumulated q_total matches the solver dissipation bitwise") {
  const auto g = GridSpec::make(1, 64);
  const auto set = make_preset("power-law-dk", {{"m", 1.0}});
  const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(3, 0.2, 1.0), g);
  SolverConfig cfg;
  cfg.dt = 2e-4;
  cfg.t_end = 0.02;
  cfg.alpha = 0.05;
  KineticAccumulator acc(set, cfg.alpha, true, default_xi_edges(4.0), cfg.dt);
  const Trajectory tr = run(make_initial(g, {}), set, nf, cfg, 7, [&](long long, const GridState& r) { acc.add(r); });
  REQUIRE_FALSE(tr.truncated);
  const KineticHistogram h = std::move(acc).finish();
  double q = 0.0;
  for (std::size_t s = 0; s + 1 < tr.diagnostics.size(); ++s) q += tr.diagnostics[s].dissipation * cfg.dt;
  CHECK(h.q_total == q);
  double binned = h.q_overflow;
  for (double v : h.q_mass) binned += v;
  CHECK(binned == doctest::Approx(q).epsilon(1e-12));
  CHECK(h.t_begin == 0.0);
  CHECK(h.t_end == doctest::Approx(cfg.t_end));
}

TEST_CASE("measure tests require aligned windows") {
  KineticHistogram h;
  h.xi_edges = default_xi_edges(3.0);
  h.q_mass.assign(h.bins(), 1.0);
  h.chi_mass.assign(h.bins(), 0.0);
  const std::vector<double> betas{0.5, 0.25};
  const auto z = measure_zero_test(h, betas);
  CHECK(z[0] == doctest::Approx(4.0 / 0.5));
  CHECK(z[1] == doctest::Approx(4.0 / 0.25));
  const std::vector<double> Ms{1.0, 2.0};
  const auto w = measure_infinity_test(h, Ms);
  CHECK(w[0] == 4.0);
  const std::vector<double> bad{0.3};
  CHECK_THROWS_AS(measure_zero_test(h, bad), ContractViolation);
  const std::vector<double> badM{2.5};
  CHECK_THROWS_AS(measure_infinity_test(h, badM), ContractViolation);
  CHECK(h.to_csv().rfind("bin_lo,bin_hi,chi_mass,q_mass\n", 0) == 0);
  CHECK(series_csv(betas, z) == "param,value\n0.5,8\n0.25,16\n");
}
