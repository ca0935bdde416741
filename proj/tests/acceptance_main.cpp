// Acceptance battery runner: one line per criterion, exit code 0 when every
// criterion passes and 2 otherwise (matching the CLI's numeric-failure code).
#include <cstdio>

#include "exitdim/verify.hpp"

int main() {
  std::printf("acceptance battery (bounds pinned in code)\n");
  std::fflush(stdout);
  std::vector<exitdim::CriterionResult> results =
      exitdim::run_acceptance([](const exitdim::CriterionResult& r) {
        std::printf("%s  %-28s %7.1fs  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                    r.detail.c_str());
        std::fflush(stdout);
      });
  int failed = 0;
  for (const exitdim::CriterionResult& r : results) failed += r.pass ? 0 : 1;
  if (failed > 0) {
    std::printf("%d of %zu criteria failed\n", failed, results.size());
    return 2;
  }
  std::printf("all %zu criteria passed\n", results.size());
  return 0;
}
