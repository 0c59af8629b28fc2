#ifndef OPDYN_SELFTEST_HPP
#define OPDYN_SELFTEST_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace opdyn {

// Master seed of the pinned acceptance runs.
constexpr std::uint64_t kAcceptanceSeed = 20240811;

struct CriterionResult {
  int index = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

// Runs the acceptance criteria (all nine, or a single one when only != 0)
// and returns one result per criterion. Nothing here throws on a failed
// check; failures are reported in the results.
std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed,
                                                  int workers, int only = 0);

}  // namespace opdyn

#endif  // OPDYN_SELFTEST_HPP
