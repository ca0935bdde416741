#pragma once

#include <functional>
#include <string>
#include <vector>

namespace exitdim {

// One entry of the acceptance battery. `detail` is a single line of measured
// values against their pinned bounds; `budget_seconds` is the wall-clock
// budget the criterion must finish within (generously above the measured
// runtime on a single core).
struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

// Runs the full acceptance battery: closed-form exit laws, exponent recovery
// on grids and fractals, exact kernel/Green/energy identities, spectral-gap
// product sweeps, Monte Carlo agreement, and stability diagnostics. Every
// criterion runs even if earlier ones fail; exceptions are caught and
// recorded as failures. `on_result` (optional) fires after each criterion.
std::vector<CriterionResult> run_acceptance(
    const std::function<void(const CriterionResult&)>& on_result = {});

}  // namespace exitdim
