#include <cmath>
#include <numbers>

#include "doctest.h"
#include "dkspde/errors.hpp"
#include "dkspde/noise.hpp"
#include "dkspde/rng.hpp"

using namespace dkspde;

TEST_CASE("philox known-answer vectors") {
  using rng::philox4x32;
  CHECK(philox4x32({0u, 0u, 0u, 0u}, {0u, 0u}) == rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("paired spectral noise has constant F1 and zero F2") {
  const auto spec = SpectralNoiseSpec::decaying(4, 0.3, 1.0);
  const auto g = GridSpec::make(1, 32);
  const NoiseField nf = build_spectral_noise(spec, g);
  double expect = 0.0;
  for (int k = 1; k <= 4; ++k) expect += 0.09 / (k * k);
  for (double v : nf.F1) CHECK(v == doctest::Approx(expect).epsilon(1e-13));
  for (double v : nf.F2[0]) CHECK(std::abs(v) < 1e-14);
  for (double v : nf.F3) CHECK(v == doctest::Approx(4 * 0.09).epsilon(1e-12));
  CHECK(is_stationary(nf, default_noise_tolerance(nf)));
  CHECK_FALSE(verify_noise_assumptions(nf, default_noise_tolerance(nf)).has_hard_failure());
}

TEST_CASE("unresolved wavevector is a config error") {
  const auto g = GridSpec::make(1, 8);
  CHECK_THROWS_AS(build_spectral_noise(SpectralNoiseSpec::decaying(4, 1.0, 0.0), g), ConfigError);
}

TEST_CASE("spectral derivative is exact on trigonometric polynomials") {
  const auto g = GridSpec::make(2, 16);
  const GridState u = sample(g, [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y); });
  const auto dx = spectral_derivative(g, u.values, 0);
  const auto dy = spectral_derivative(g, u.values, 1);
  const GridState ex = sample(g, [](double x, double y) { return 3 * std::cos(3 * x) * std::cos(2 * y); });
  const GridState ey = sample(g, [](double x, double y) { return -2 * std::sin(3 * x) * std::sin(2 * y); });
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(dx[i] - ex.values[i]) < 1e-12);
    CHECK(std::abs(dy[i] - ey.values[i]) < 1e-12);
  }
}

TEST_CASE("unpaired modes give F2 = grad F1 / 2") {
  const auto g = GridSpec::make(1, 64);
  SpectralNoiseSpec s;
  s.wavevectors = {{1, 0}, {2, 0}};
  s.amplitudes = {0.5, 0.25};
  s.includes_cosine_partner = false;
  const NoiseField nf = build_spectral_noise(s, g);
  CHECK_FALSE(nf.paired);
  for (int i = 0; i < 64; ++i) {
    const double x = i * g.dx();
    const double f2 = 0.25 * std::sin(x) * std::cos(x) + 2 * 0.0625 * std::sin(2 * x) * std::cos(2 * x);
    CHECK(nf.F2[0][i] == doctest::Approx(f2).epsilon(1e-12).scale(1.0));
  }
  CHECK_FALSE(is_stationary(nf, default_noise_tolerance(nf)));
}

TEST_CASE("increments are reproducible and prefix stable") {
  const auto g = GridSpec::make(1, 16);
  const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(3, 0.2, 1.0), g,
                                             SpectralNoiseSpec::decaying(2, 0.1, 1.0));
  const PathBundle a = sample_increments(nf, 1e-2, 50, 9);
  const PathBundle b = sample_increments(nf, 1e-2, 80, 9);
  const PathBundle c = sample_increments(nf, 1e-2, 50, 10);
  REQUIRE(a.per_step_F == 6);
  REQUIRE(a.per_step_G == 4);
  for (std::size_t i = 0; i < a.dB.size(); ++i) CHECK(a.dB[i] == b.dB[i]);
  for (std::size_t i = 0; i < a.dW.size(); ++i) CHECK(a.dW[i] == b.dW[i]);
  CHECK(a.dB[0] != c.dB[0]);
  CHECK_THROWS_AS(sample_increments(nf, 1e-2, 1000, 1, 64), ResourceError);
}

TEST_CASE("increment variance is dt") {
  const auto g = GridSpec::make(1, 8);
  const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(1, 1.0, 0.0), g);
  const double dt = 0.01;
  const PathBundle p = sample_increments(nf, dt, 20000, 4);
  double s = 0.0, s2 = 0.0;
  for (double v : p.dB) {
    s += v;
    s2 += v * v;
  }
  const double N = double(p.dB.size());
  CHECK(std::abs(s / N) < 4 * std::sqrt(dt / N));
  CHECK(s2 / N == doctest::Approx(dt).epsilon(0.03));
}

TEST_CASE("noise divergence has zero grid sum") {
  const auto g = GridSpec::make(2, 16);
  const NoiseField nf = build_spectral_noise(SpectralNoiseSpec::decaying(3, 0.4, 1.0), g);
  const GridState sig = sample(g, [](double x, double y) { return 1.0 + 0.5 * std::sin(x + 2 * y); });
  const PathBundle p = sample_increments(nf, 1e-3, 1, 2);
  const GridState r = noise_divergence_term(sig, nf, p.dB_at(0));
  double s = 0.0, a = 0.0;
  for (double v : r.values) {
    s += v;
    a += std::abs(v);
  }
  CHECK(a > 0.0);
  CHECK(std::abs(s) <= 1e-13 * a);
}
