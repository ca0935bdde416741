#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "exitdim/io.hpp"
#include "exitdim/spectral.hpp"

namespace exitdim {

// Library version reported in every result bundle.
extern const char* const kCodeVersion;

// Numeric guards the pipeline enforces while it runs; exceeding one aborts
// the run with a stage-tagged NumericError.
struct PipelineTolerances {
  double r2_min = 0.98;        // fit quality required for a local beta entry
  double row_sum_max = 1e-12;  // kernel row-sum deviation from 1
  double balance_max = 1e-10;  // detailed-balance violation of the p-kernel
};

// Full description of one pipeline run. Every field has a JSON key of the
// same name and a CLI flag; see config_from_json for the validation rules.
struct RunConfig {
  FractalSpec space;
  MeasureMode measure = MeasureMode::uniform_cell;
  int net_seeds = 3;  // independent nets per scale for graph kernels
  std::vector<KernelKind> kernel_kinds = {KernelKind::ball_w, KernelKind::ball_p};
  std::vector<std::vector<double>> centers;  // coordinates, space dim each
  std::vector<double> R_grid;                // exit-ball radii, decreasing
  std::vector<double> scale_grid;            // kernel scales / mass radii, decreasing
  PipelineTolerances tolerances;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
};

// Parses and validates a config document; every complaint names the offending
// field. Unknown top-level keys are rejected (they are usually typos).
RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& config);

// Everything measured around one requested center.
struct CenterResult {
  std::vector<double> center;  // requested coordinates
  Id anchor = -1;              // nearest space point
  ExponentFit alpha;           // slope field holds alpha itself (mass ~ r^alpha)
  ScaleSeries alpha_series;    // closed-ball masses over scale_grid
  std::vector<LocalBetaEntry> beta;  // one per swept kernel kind (series inside)
};

struct KernelChecks {
  double row_sum = 0.0;   // worst row-sum violation over the kernels built
  double balance = 0.0;   // detailed-balance violation of the p-kernel
  double p_scale = 0.0;   // scale the p-kernel was built at
  double beta_used = 0.0; // constant exponent the p-kernel was rescaled with
};

struct TentEntry {
  Id center = -1;
  double R = 0.0;
  double r = 0.0;
  TentBound bound;
};

struct ResultBundle {
  std::string code_version;
  std::string config_hash;  // fnv1a64 of the canonical config json, hex
  RunConfig config;
  Id space_points = 0;
  double total_mass = 0.0;
  std::vector<KernelKind> swept_kinds;  // kernel_kinds minus ball_p
  std::vector<CenterResult> centers;
  RegularityReport ahlfors;    // mass vs r^alpha-hat at each center
  RegularityReport time_reg;   // worst exit time vs R^beta-hat
  KernelChecks kernel_checks;
  FaberKrahnReport faber_krahn;
  std::vector<TentEntry> tent;  // tent-function Rayleigh bounds (ball walk)
};

Json bundle_to_json(const ResultBundle& bundle);
ResultBundle bundle_from_json(const Json& j);

// Runs the sweep in the order: build space -> measure -> alpha fits ->
// walk-kernel exit sweeps (beta fits) -> rescaled p-kernel checks ->
// eigenvalue/exit-time products. Writes output_dir/results.json and
// output_dir/series.csv, then returns the bundle. Any failure rethrows with
// the stage name and the offending parameters in the message.
ResultBundle run_pipeline(const RunConfig& config);

// The same sweep on an already-built space; writes no files. The config's
// `space` section is recorded in the bundle but not used to build anything.
// With reassign_measure the configured measure replaces the stored weights
// first; otherwise the space's weights are used as-is.
ResultBundle run_sweep(FiniteSpace& space, const RunConfig& config,
                       bool reassign_measure = false);

// Writes a bundle: format "json" -> the canonical results document;
// format "csv" -> the combined per-center series table with header
// center,scale,e_plus,ball_mass.
void export_bundle(const ResultBundle& bundle, const std::string& format,
                   const std::string& path);

// fnv1a64 of the canonical config json, as a fixed-width hex string.
std::string config_hash_hex(const RunConfig& config);

}  // namespace exitdim
