#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dkspde/errors.hpp"
#include "dkspde/grid.hpp"
#include "dkspde/nonlin.hpp"

using namespace dkspde;

TEST_CASE("grid spec validation") {
  CHECK_THROWS_AS(GridSpec::make(1, 3), ConfigError);
  CHECK_THROWS_AS(GridSpec::make(1, 7), ConfigError);
  CHECK_THROWS_AS(GridSpec::make(3, 16), ConfigError);
  const auto g = GridSpec::make(2, 8);
  CHECK(g.size() == 64);
  CHECK(g.forward(7, 1) == 0);
  CHECK(g.backward(0, 0) == 56);
  CHECK(g.coord(13, 0) == 1);
  CHECK(g.coord(13, 1) == 5);
}

TEST_CASE("divergence telescopes to zero") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (int d : {1, 2}) {
    const auto g = GridSpec::make(d, 32);
    FaceField f(g);
    for (int a = 0; a < d; ++a) {
      for (auto& v : f.comp[a]) v = nd(gen);
    }
    const GridState div = divergence(f);
    double s = 0.0, scale = 0.0;
    for (double v : div.values) {
      s += v;
      scale += std::abs(v);
    }
    CHECK(std::abs(s) <= 1e-13 * scale);
  }
}

TEST_CASE("laplacian of a Fourier mode matches the discrete symbol") {
  for (int d : {1, 2}) {
    const auto g = GridSpec::make(d, 64);
    const double h = g.dx();
    const GridState u = sample(g, [](double x, double y) { return std::sin(3 * x) + std::cos(2 * y); });
    const GridState L = laplacian(u);
    const double s3 = (2.0 - 2.0 * std::cos(3 * h)) / (h * h);
    const double s2 = (2.0 - 2.0 * std::cos(2 * h)) / (h * h);
    const GridState expect = sample(g, [&](double x, double y) {
      return -s3 * std::sin(3 * x) - (d == 2 ? s2 * std::cos(2 * y) : 0.0);
    });
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(L.values[i] - expect.values[i]));
    CHECK(err < 1e-10);
    const GridState dg = divergence(gradient(u));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(dg.values[i] == doctest::Approx(L.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("integrals and distances") {
  const auto g = GridSpec::make(1, 64);
  const GridState a = sample(g, [](double x, double) { return 1.0 + std::sin(x); });
  const GridState b = sample(g, [](double, double) { return 1.0; });
  CHECK(integrate(a) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-13));
  CHECK(l1_distance(a, b) == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("functionals of a constant field") {
  const auto g = GridSpec::make(1, 16);
  const GridState c(g, std::vector<double>(16, 2.0));
  const auto set = make_preset("power-law-dk", {{"m", 1.0}});
  FunctionalOptions o;
  o.p = 3.0;
  o.with_entropy = true;
  const auto row = norms_and_functionals(c, set, o);
  const double vol = 2.0 * std::numbers::pi;
  CHECK(row.mass == doctest::Approx(2.0 * vol));
  CHECK(row.lp == doctest::Approx(std::cbrt(8.0 * vol)));
  CHECK(row.energy == 0.0);
  CHECK(row.dissipation == 0.0);
  CHECK(*row.entropy == doctest::Approx((2.0 * std::log(2.0) - 2.0) * vol));
}
