#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sptforge {

struct AcceptanceCheck {
  std::string claim;
  std::string expected;
  std::string got;
  std::string tolerance;
  bool passed = false;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<AcceptanceCheck> checks;
  bool passed = false;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20250808;
  std::string work_dir = "acceptance_work";
  /// Empty runs every criterion; otherwise the listed ids only.
  std::vector<int> only;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

/// One pass/fail line per criterion plus a claim/expected/got/tolerance table.
void print_acceptance(const std::vector<CriterionResult>& results);

/// Nonzero when any criterion failed.
int acceptance_exit_code(const std::vector<CriterionResult>& results);

}  // namespace sptforge
