// Acceptance suite runner: one pass/fail line per criterion.
//   acceptance_tests                 run everything
//   acceptance_tests --only <k>      run a single criterion
//   acceptance_tests --seed <s>      override the pinned seed
//   acceptance_tests --workers <w>   worker threads

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "opdyn/selftest.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed = opdyn::kAcceptanceSeed;
  int workers = 1;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      seed = std::strtoull(argv[++i], nullptr, 10);
    } else if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) {
      workers = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", argv[i]);
      return 2;
    }
  }

  const auto results = opdyn::run_acceptance_suite(seed, workers, only);
  if (results.empty()) {
    std::fprintf(stderr, "no such criterion: %d\n", only);
    return 2;
  }
  bool all_passed = true;
  for (const auto& r : results) {
    std::printf("[%s] criterion %d: %s (%s) [%.1f s / budget %.0f s]\n",
                r.passed ? "PASS" : "FAIL", r.index, r.name.c_str(),
                r.detail.c_str(), r.seconds, r.budget_seconds);
    std::fflush(stdout);
    all_passed &= r.passed;
  }
  return all_passed ? 0 : 1;
}
