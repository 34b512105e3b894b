// Acceptance gate: one line per criterion, nonzero exit if any criterion fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>

#include "dkspde/cli.hpp"
#include "dkspde/harness.hpp"

namespace {

constexpr unsigned kThreads = 1;
constexpr unsigned kDeterminismThreads = 3;
constexpr double kDeterminismBudget = 60.0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const bool verbose = std::getenv("DKSPDE_ACCEPTANCE_VERBOSE") != nullptr;
  int failures = 0;
  for (const auto& c : dkspde::acceptance_suite()) {
    if (!only.empty() && !only.count(c.criterion)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;
    for (auto spec : c.experiments) {
      spec.threads = kThreads;
      try {
        const dkspde::Verdict v = dkspde::run_experiment(spec);
        pass = pass && v.pass;
        detail += " [" + v.id + (v.pass ? " ok" : " FAILED") + (verbose ? ": " + v.statistics_text() : "") +
                  (v.note.empty() ? "" : " (" + v.note + ")") + "]";
      } catch (const std::exception& e) {
        pass = false;
        detail += " [" + spec.label + " error: " + e.what() + "]";
      }
    }
    const double elapsed = seconds_since(t0);
    const bool in_time = elapsed <= c.runtime_budget_s;
    pass = pass && in_time;
    std::printf("criterion %2d %-48s %s  %.1fs/%.0fs%s\n", c.criterion, c.title.c_str(), pass ? "PASS" : "FAIL",
                elapsed, c.runtime_budget_s, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (only.empty() || only.count(11)) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = std::filesystem::temp_directory_path() / "dkspde_determinism";
    std::filesystem::remove_all(dir);
    const auto rep = dkspde::cli::determinism_check(dir, kDeterminismThreads);
    const double elapsed = seconds_since(t0);
    const bool pass = rep.pass && elapsed <= kDeterminismBudget;
    std::string detail = " [" + std::to_string(rep.compared.size()) + " files compared";
    for (const auto& m : rep.mismatches) detail += "; mismatch " + m;
    detail += "]";
    std::printf("criterion 11 %-48s %s  %.1fs/%.0fs%s\n", "determinism across reruns and thread counts",
                pass ? "PASS" : "FAIL", elapsed, kDeterminismBudget, detail.c_str());
    if (!pass) ++failures;
    std::filesystem::remove_all(dir);
  }
  return failures == 0 ? 0 : 1;
}
