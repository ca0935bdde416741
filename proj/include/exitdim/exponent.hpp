#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "exitdim/kernel.hpp"
#include "exitdim/space.hpp"

namespace exitdim {

// Positive samples of some quantity against a geometric ladder of scales.
// Scales are strictly decreasing; values must be positive to be usable in
// log-log fits.
struct ScaleSeries {
  std::vector<std::pair<double, double>> pairs;  // (scale, value)
  std::string label = "series";
};

// Least-squares fit of log(value) against log(1/scale). On data that follows
// an exact power law value = c * scale^(-s) the fit recovers s and log(c) to
// floating-point accuracy and r_squared = 1.
struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;   // fitted log(value) at scale = 1
  double r_squared = 0.0;
  double scale_min = 0.0;   // window actually used
  double scale_max = 0.0;
  int n_points = 0;
};

// Fits over every sample, or over the sub-window scale in [wmin, wmax].
// Requires at least 3 usable points with positive values.
ExponentFit fit_loglog_slope(const ScaleSeries& series);
ExponentFit fit_loglog_slope(const ScaleSeries& series, double wmin, double wmax);

// Walk-dimension estimate around one center: for each scale in `scale_grid`
// build a single-scale kernel (see scale_kernel), solve the exit problem on
// the ball B_R[center], and record the largest mean exit time measured in
// steps. For net-graph kernels the value at each scale is the max over
// `net_seeds` independent net constructions (a discrete stand-in for the sup
// over approximations). Scales whose approximation cannot exit (disconnected
// graph) are dropped and reported; at least 3 scales must survive.
struct BetaBallResult {
  ScaleSeries series;                 // scale -> worst-case mean exit steps
  ExponentFit fit;                    // slope = beta estimate
  std::vector<double> dropped_scales; // scales skipped as disconnected
  double slope_coarse = 0.0;          // fit over the coarser half
  double slope_fine = 0.0;            // fit over the finer half
};

BetaBallResult beta_ball(const FiniteSpace& space, Id center, double R,
                         const std::vector<double>& scale_grid, KernelKind kind,
                         int net_seeds = 3, std::uint64_t seed_base = 31,
                         const ScalarField* beta = nullptr);

// Per-center diagnostics for the local walk dimension: the ball radius picked
// (smallest R whose fit reaches r2_min), the fit itself, and whether any
// radius qualified. Centers with ok == false carry NaN in the field.
struct LocalBetaEntry {
  Id center = -1;
  double R_used = 0.0;
  ExponentFit fit;
  ScaleSeries series;  // worst exit steps at the chosen R (empty when !ok)
  bool ok = false;
};

struct LocalBetaField {
  ScalarField field;                 // one value per entry of `centers`
  std::vector<LocalBetaEntry> table;
};

// R_grid must be strictly decreasing; for each R only scales <= R/4 from
// scale_grid are used (at least 3 required, else that R is skipped).
LocalBetaField local_beta_field(const FiniteSpace& space, const std::vector<Id>& centers,
                                const std::vector<double>& R_grid,
                                const std::vector<double>& scale_grid, KernelKind kind,
                                int net_seeds = 3, double r2_min = 0.98,
                                std::uint64_t seed_base = 31);

// Local volume-growth dimension: slope of log mu(closed ball of radius r) vs
// log r over the grid, one value per center.
ScalarField local_alpha_field(const FiniteSpace& space, const std::vector<Id>& centers,
                              const std::vector<double>& r_grid);

// Closed-ball masses mu(B_r[center]) over the (strictly decreasing) radius
// grid, as a fit-ready series labeled "ball_mass".
ScaleSeries ball_mass_series(const FiniteSpace& space, Id center,
                             const std::vector<double>& r_grid);

// One regularity sample: the measured quantity divided by its model value
// (mu(B_r) / r^Q, or T(B_R) / R^beta). The report keeps every sample plus the
// worst two-sided ratio max(sample, 1/sample); a bounded c_est over a widening
// scale range is the operative meaning of "regular".
struct RegularitySample {
  Id center = -1;
  double scale = 0.0;
  double ratio = 0.0;
};

struct RegularityReport {
  double c_est = 0.0;
  Id worst_center = -1;
  double worst_scale = 0.0;
  std::vector<RegularitySample> samples;
};

RegularityReport check_ahlfors(const FiniteSpace& space, const ScalarField& q,
                               const std::vector<Id>& centers,
                               const std::vector<double>& r_grid);

// Exit-time counterpart: T(B_R[x]) is the largest mean exit time of the
// beta-rescaled ball walk at the finest scale of `scale_grid`, compared
// against R^beta(center).
RegularityReport check_time_regularity(const FiniteSpace& space, const ScalarField& beta,
                                       const std::vector<Id>& centers,
                                       const std::vector<double>& R_grid,
                                       const std::vector<double>& scale_grid);

// max |f(x) - f(y)| * (-log d(x,y)) over sampled pairs with 0 < d < 1/2.
// Zero for constant fields, bounded for log-Hoelder fields, and grows without
// bound across a jump discontinuity as pairs straddle it ever closer.
double log_holder_constant(const FiniteSpace& space, const ScalarField& field,
                           std::int64_t n_pairs, std::uint64_t seed);

// Geometric ladder of scales with ratio 2^(-1/2) from `top` down to `bottom`.
// When the span holds more than max_points rungs the finest max_points are
// kept (the asymptotic end); when it holds fewer than min_points the ladder
// extends below `bottom` to reach min_points.
std::vector<double> default_scale_grid(double top, double bottom, int min_points = 8,
                                       int max_points = 12);

}  // namespace exitdim
