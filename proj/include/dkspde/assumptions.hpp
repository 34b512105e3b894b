#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dkspde {

enum class CheckStatus { pass, fail, undetermined, info };

const char* to_string(CheckStatus s);

/// One numerically evaluated hypothesis.
struct CheckResult {
  std::string id;
  CheckStatus status = CheckStatus::undetermined;
  /// Witnessing constant (smallest c making the inequality hold on the sample set).
  double constant = 0.0;
  /// Sample point where the constant is attained, or the counterexample point.
  double witness = 0.0;
  std::string note;
  /// Hard checks gate simulation runs; soft ones only inform.
  bool hard = true;
};

struct AssumptionReport {
  std::vector<CheckResult> checks;
  /// Derived constants other modules consume (e.g. "lambda_lipschitz", "phi_holder").
  std::map<std::string, double> constants;

  void add(CheckResult r) { checks.push_back(std::move(r)); }
  const CheckResult* find(const std::string& id) const;
  bool passed(const std::string& id) const;
  bool has_hard_failure() const;
  std::vector<std::string> hard_failures() const;

  /// CSV table: check_id,status,constant,witness,note
  std::string to_csv() const;
};

}  // namespace dkspde
