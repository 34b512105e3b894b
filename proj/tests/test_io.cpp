#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "dkspde/errors.hpp"
#include "dkspde/io.hpp"
#include "dkspde/parallel.hpp"

using namespace dkspde;

TEST_CASE("shortest round-trip doubles") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("snapshot round trip") {
  const auto g = GridSpec::make(2, 8);
  GridState s = sample(g, [](double x, double y) { return std::sin(x) * std::cos(y); }, 0.25);
  const auto p = std::filesystem::temp_directory_path() / "dkspde_snapshot_test.bin";
  write_snapshot(p, s);
  const GridState r = read_snapshot(p);
  CHECK(r.spec == g);
  CHECK(r.time == 0.25);
  CHECK(r.values == s.values);
  std::filesystem::remove(p);
  std::filesystem::remove(p.string() + ".hdr");
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  std::vector<int> out(100, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = int(i) * 2; });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i) * 2);
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 17 || i == 31) throw NumericError(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()) == "17");
  }
}
