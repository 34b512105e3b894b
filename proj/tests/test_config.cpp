#include <string>

#include "doctest.h"
#include "dkspde/config.hpp"
#include "dkspde/errors.hpp"

using namespace dkspde;

namespace {

const char* kMinimal = "[model]\npreset = power-law-dk\nm = 2\n[grid]\nn = 32\n[solver]\ndt = 1e-4\nt_end = 0.1\n";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal config") {
  const RunConfig c = parse_config_text(kMinimal);
  CHECK(c.preset == "power-law-dk");
  CHECK(c.params.at("m") == 2.0);
  CHECK(c.grid.n == 32);
  CHECK(c.solver.steps() == 1000);
}

TEST_CASE("unknown keys suggest the closest name") {
  const std::string msg = error_of(std::string(kMinimal) + "sigm = zero\n");
  CHECK(msg.find("t.ini:9") != std::string::npos);
  CHECK(msg.find("sigma") != std::string::npos);
  CHECK(error_of("[modle]\npreset = asep\n").find("model") != std::string::npos);
}

TEST_CASE("missing and duplicate keys") {
  CHECK(error_of("[model]\npreset = power-law-dk\n").find("grid.n") != std::string::npos);
  CHECK_FALSE(error_of(std::string(kMinimal) + "[grid]\nn = 64\n").empty());
  CHECK_FALSE(error_of(std::string(kMinimal) + "[grid]\nd = x\n").empty());
}

TEST_CASE("resolved text round trips") {
  const std::string text = std::string(kMinimal) +
                           "[noise]\nf_wavevectors = 1,2,3\nf_amplitudes = 0.2,0.1,0.05\n"
                           "[experiment]\nkind = cascade\nschedule = 0.1:4,0.01:none\nladder = 32:1e-4,64:2.5e-5\n"
                           "threshold.final_ratio = 0.05\n";
  const RunConfig a = parse_config_text(text);
  const RunConfig b = parse_config_text(a.resolved_text(), "resolved");
  CHECK(a.resolved_text() == b.resolved_text());
  CHECK(b.schedule.size() == 2);
  CHECK_FALSE(b.schedule[1].mollify_n.has_value());
  CHECK(b.thresholds.at("final_ratio") == 0.05);
}

TEST_CASE("built objects") {
  const RunConfig c = parse_config_text(std::string(kMinimal) + "[noise]\nf_count = 3\nf_amplitude = 0.2\n");
  const NoiseField nf = build_noise(c);
  CHECK(nf.count_F() == 6);
  const auto set = build_nonlinearity(c);
  CHECK(set.m == 2.0);
}

TEST_CASE("edit distance") {
  CHECK(edit_distance("sigm", "sigma") == 1);
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
}
