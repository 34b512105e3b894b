#include <cmath>

#include "doctest.h"
#include "dkspde/errors.hpp"
#include "dkspde/nonlin.hpp"

using namespace dkspde;

namespace {

template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("presets build and unknown names are rejected") {
  for (const auto& name : preset_names()) {
    const auto s = make_preset(name, {{"m", 1.5}, {"eps", 0.2}, {"gamma", 1.0}});
    CHECK(s.name == name);
  }
  CHECK_THROWS_AS(make_preset("porous", {}), ConfigError);
  CHECK_THROWS_AS(make_preset("power-law-dk", {}), ConfigError);
  CHECK_THROWS_AS(make_preset("zero-range", {{"m", 1.0}}), ConfigError);
}

TEST_CASE("power-law auxiliaries have closed forms") {
  for (double m : {0.5, 1.0, 2.0, 3.0}) {
    const auto s = make_preset("power-law-dk", {{"m", m}});
    const double xi = 1.7;
    CHECK(theta_phi_p(s, 2.0, xi) == doctest::Approx(std::sqrt(m) * 2.0 / (m + 1.0) * std::pow(xi, 0.5 * (m + 1.0))));
    // Theta_{Phi,p} with p = 3: integrand s^{1/2} sqrt(m) s^{(m-1)/2} = sqrt(m) s^{m/2}.
    CHECK(theta_phi_p(s, 3.0, xi) == doctest::Approx(std::sqrt(m) * std::pow(xi, 0.5 * m + 1.0) / (0.5 * m + 1.0)));
    CHECK(psi_sigma_p(s, 2.0, xi) == doctest::Approx(0.5 * std::pow(xi, m)));
  }
  const auto lin = make_preset("power-law-dk", {{"m", 1.0}});
  CHECK(psi_phi(lin, 2.5) == doctest::Approx(2.5 * std::log(2.5) - 2.5));
}

TEST_CASE("quadrature path matches an independent Simpson oracle") {
  auto s = make_preset("power-law-dk", {{"m", 1.0}});
  s.phi_cap = parse_function("saturating 1");
  const double xi = 2.0;
  const double oracle =
      simpson([](double u) { return u > 0.0 ? 2.0 * u * std::log(u * u / (1.0 + u * u)) : 0.0; }, 0.0, std::sqrt(xi));
  CHECK(psi_phi(s, xi) == doctest::Approx(oracle).epsilon(1e-5));
  // Theta_2 of x/(1+x): integral of 1/(1+s) = log(1+xi).
  CHECK(theta_phi_p(s, 2.0, xi) == doctest::Approx(std::log(1.0 + xi)).epsilon(1e-9));
}

TEST_CASE("signed model theta") {
  const auto s = make_preset("kawasaki-ohta", {});
  CHECK(s.signed_domain);
  CHECK(theta_phi_p(s, 2.0, 0.8) == doctest::Approx(std::asinh(0.8)));
}

TEST_CASE("function vocabulary") {
  const auto f = parse_function("power 2 3");
  CHECK(f(2.0) == doctest::Approx(16.0));
  CHECK(f.derivative(2.0) == doctest::Approx(24.0));
  const auto k = parse_function("knots 0:0,1:2,3:3");
  CHECK(k(0.5) == doctest::Approx(1.0));
  CHECK(k(2.0) == doctest::Approx(2.5));
  CHECK(parse_function("zero").zero);
  CHECK_THROWS_AS(parse_function("power 1"), ConfigError);
  CHECK_THROWS_AS(parse_function("cubic"), ConfigError);
  CHECK_THROWS_AS(parse_function("knots 1:0,0:1"), ConfigError);
}

TEST_CASE("cutoffs") {
  CHECK(cutoff_eval(CutoffKind::phi_beta, 0.5, 0.2) == 0.0);
  CHECK(cutoff_eval(CutoffKind::phi_beta, 0.5, 0.375) == doctest::Approx(0.5));
  CHECK(cutoff_eval(CutoffKind::phi_beta, 0.5, 0.6) == 1.0);
  CHECK(cutoff_eval(CutoffKind::zeta_M, 2.0, 2.25) == doctest::Approx(0.75));
  CHECK(cutoff_eval(CutoffKind::psi_delta, 0.5, 0.375) == doctest::Approx(0.5));
  CHECK(cutoff_eval(CutoffKind::Psi_delta, 0.5, 3.0) == 3.0);
  const double h = 1e-6;
  const double fd = (cutoff_eval(CutoffKind::psi_delta, 1.0, 0.7 + h) - cutoff_eval(CutoffKind::psi_delta, 1.0, 0.7 - h)) / (2 * h);
  CHECK(psi_delta_derivative(1.0, 0.7) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("mollified sigma") {
  const auto s = make_preset("power-law-dk", {{"m", 1.0}});
  double prev = 1e300;
  for (int n : {4, 32, 256}) {
    const auto sn = mollify_sigma(s, n);
    REQUIRE(sn.mollified_n == n);
    CHECK(sn.sigma(0.0) == 0.0);
    CHECK(sn.sigma.derivative(n + 1.5) == 0.0);
    CHECK(std::abs(sn.sigma.derivative(0.5)) <= n);
    const double err = std::abs(sn.sigma(1.0) - 1.0);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.03);
}

TEST_CASE("assumption checker on the standard models") {
  const auto grid = SampleGrid::log_uniform();
  const auto dk = check_assumptions(make_preset("power-law-dk", {{"m", 1.0}}), grid, 1e-8, {true});
  CHECK_FALSE(dk.has_hard_failure());
  const auto ko = check_assumptions(make_preset("kawasaki-ohta", {}), grid, 1e-8, {true});
  CHECK(ko.has_hard_failure());
  CHECK(dk.to_csv().rfind("check_id,status,constant,witness,note\n", 0) == 0);
}
