#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "dkspde/cli.hpp"
#include "dkspde/io.hpp"

using namespace dkspde;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kConfig =
    "seed = 3\n[model]\npreset = power-law-dk\nm = 1\n[grid]\nn = 32\n[solver]\ndt = 1e-3\nt_end = 0.02\n"
    "[noise]\nf_count = 2\nf_amplitude = 0.1\n";

int run_cli(const std::string& sub, const fs::path& cfg, const fs::path& out, std::string* log = nullptr) {
  cli::Options o;
  o.subcommand = sub;
  o.config = cfg;
  o.out = out;
  std::ostringstream os;
  const int code = cli::dispatch(o, os);
  if (log) *log = os.str();
  return code;
}

}  // namespace

TEST_CASE("simulate writes its outputs") {
  TempDir t("dkspde_cli_sim");
  write_text(t.path / "c.ini", kConfig);
  CHECK(run_cli("simulate", t.path / "c.ini", t.path / "out") == cli::kExitOk);
  for (const char* f : {"diagnostics.csv", "noise.csv", "final.csv", "config.resolved.ini", "fingerprint.txt"}) {
    CHECK(fs::exists(t.path / "out" / f));
  }
}

TEST_CASE("check-assumptions succeeds on a valid model") {
  TempDir t("dkspde_cli_check");
  write_text(t.path / "c.ini", kConfig);
  CHECK(run_cli("check-assumptions", t.path / "c.ini", t.path / "out") == cli::kExitOk);
  CHECK(fs::exists(t.path / "out" / "assumptions.csv"));
}

TEST_CASE("CFL refusal reports the bound") {
  TempDir t("dkspde_cli_cfl");
  std::string cfg = kConfig;
  cfg.replace(cfg.find("dt = 1e-3"), 9, "dt = 1e-2");
  write_text(t.path / "c.ini", cfg);
  std::string log;
  CHECK(run_cli("simulate", t.path / "c.ini", t.path / "out", &log) == cli::kExitConfigError);
  CHECK(log.find("CFL bound") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2") {
  TempDir t("dkspde_cli_bad");
  write_text(t.path / "c.ini", std::string(kConfig) + "sigm = zero\n");
  std::string log;
  CHECK(run_cli("couple", t.path / "c.ini", t.path / "out", &log) == cli::kExitConfigError);
  CHECK(log.find("sigma") != std::string::npos);
  cli::Options o;
  o.subcommand = "simulate";
  std::ostringstream os;
  CHECK(cli::dispatch(o, os) == cli::kExitConfigError);
}

TEST_CASE("fingerprint depends on the resolved configuration") {
  TempDir t("dkspde_cli_fp");
  write_text(t.path / "a.ini", kConfig);
  write_text(t.path / "b.ini", std::string(kConfig) + "[solver]\nalpha = 0.1\n");
  REQUIRE(run_cli("simulate", t.path / "a.ini", t.path / "a") == 0);
  REQUIRE(run_cli("simulate", t.path / "a.ini", t.path / "a2") == 0);
  REQUIRE(run_cli("simulate", t.path / "b.ini", t.path / "b") == 0);
  CHECK(read_text(t.path / "a" / "fingerprint.txt") == read_text(t.path / "a2" / "fingerprint.txt"));
  CHECK(read_text(t.path / "a" / "fingerprint.txt") != read_text(t.path / "b" / "fingerprint.txt"));
  CHECK(read_text(t.path / "a" / "diagnostics.csv") == read_text(t.path / "a2" / "diagnostics.csv"));
}
