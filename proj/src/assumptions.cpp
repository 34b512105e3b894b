#include "dkspde/assumptions.hpp"

#include <sstream>

#include "dkspde/io.hpp"

namespace dkspde {

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::undetermined: return "undetermined";
    case CheckStatus::info: return "info";
  }
  return "?";
}

const CheckResult* AssumptionReport::find(const std::string& id) const {
  for (const auto& c : checks) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

bool AssumptionReport::passed(const std::string& id) const {
  const CheckResult* c = find(id);
  return c != nullptr && c->status == CheckStatus::pass;
}

bool AssumptionReport::has_hard_failure() const { return !hard_failures().empty(); }

std::vector<std::string> AssumptionReport::hard_failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (c.hard && c.status == CheckStatus::fail) out.push_back(c.id);
  }
  return out;
}

std::string AssumptionReport::to_csv() const {
  std::ostringstream os;
  os << "check_id,status,constant,witness,note\n";
  for (const auto& c : checks) {
    std::string note = c.note;
    for (char& ch : note) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    os << c.id << ',' << to_string(c.status) << ',' << format_double(c.constant) << ',' << format_double(c.witness)
       << ',' << note << '\n';
  }
  return os.str();
}

}  // namespace dkspde
