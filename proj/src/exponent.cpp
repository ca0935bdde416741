#include "exitdim/exponent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "exitdim/common.hpp"
#include "exitdim/exit.hpp"
#include "exitdim/hashgrid.hpp"

namespace exitdim {

namespace {

void require_decreasing(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw InvalidArgument(std::string(what) + ": empty scale grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i]))
      throw InvalidArgument(std::string(what) + ": scales must be positive and finite");
    if (i > 0 && !(grid[i] < grid[i - 1]))
      throw InvalidArgument(std::string(what) + ": scales must be strictly decreasing");
  }
}

// Mass of the closed metric ball around each center at radius r.
std::vector<double> ball_masses(const FiniteSpace& space, const std::vector<Id>& centers,
                                double r) {
  HashGrid grid(space, r);
  std::vector<double> out(centers.size(), 0.0);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    double mass = 0.0;
    grid.for_near(space.point(centers[c]), r, /*closed=*/true,
                  [&](Id y, double) { mass += space.weights[static_cast<std::size_t>(y)]; });
    out[c] = mass;
  }
  return out;
}

}  // namespace

ExponentFit fit_loglog_slope(const ScaleSeries& series) {
  return fit_loglog_slope(series, 0.0, std::numeric_limits<double>::infinity());
}

ExponentFit fit_loglog_slope(const ScaleSeries& series, double wmin, double wmax) {
  std::vector<double> xs, ys;
  double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
  for (const auto& [scale, value] : series.pairs) {
    if (!(scale > 0) || !std::isfinite(scale) || scale < wmin || scale > wmax) continue;
    if (!(value > 0) || !std::isfinite(value)) continue;
    xs.push_back(std::log(1.0 / scale));
    ys.push_back(std::log(value));
    smin = std::min(smin, scale);
    smax = std::max(smax, scale);
  }
  if (xs.size() < 3)
    throw InvalidArgument("log-log fit: need at least 3 positive samples in the window");

  std::size_t n = xs.size();
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += xs[i];
    ym += ys[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - xm, dy = ys[i] - ym;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0)) throw InvalidArgument("log-log fit: all samples share one scale");

  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  fit.n_points = static_cast<int>(n);
  fit.scale_min = smin;
  fit.scale_max = smax;
  // Constant data leaves syy at rounding level (log of equal values is not
  // summed exactly); the flat line is then a perfect fit by convention.
  double syy_floor = static_cast<double>(n) * sq(1e-13 * (std::abs(ym) + 1.0));
  if (syy > syy_floor) {
    double sse = syy - sxy * sxy / sxx;
    fit.r_squared = std::max(0.0, 1.0 - sse / syy);
  } else {
    fit.r_squared = 1.0;
  }
  return fit;
}

BetaBallResult beta_ball(const FiniteSpace& space, Id center, double R,
                         const std::vector<double>& scale_grid, KernelKind kind, int net_seeds,
                         std::uint64_t seed_base, const ScalarField* beta) {
  if (center < 0 || center >= space.size())
    throw InvalidArgument("walk dimension: center out of range");
  if (!(R > 0) || !std::isfinite(R)) throw InvalidArgument("walk dimension: radius must be positive");
  require_decreasing(scale_grid, "walk dimension");
  if (scale_grid.front() >= R)
    throw InvalidArgument("walk dimension: scales must stay below the ball radius");
  if (net_seeds < 1) throw InvalidArgument("walk dimension: need at least one net seed");

  bool net_based = kind == KernelKind::graph_uniform || kind == KernelKind::graph_symmetrized;
  if (kind == KernelKind::ball_p && beta == nullptr)
    throw InvalidArgument("walk dimension: ball_p needs a beta field");
  int attempts = net_based ? net_seeds : 1;

  BetaBallResult out;
  out.series.label = "exit_steps";
  for (double scale : scale_grid) {
    // Ball walks only ever solve on B_R[center]: materializing rows for the
    // ball plus one jump-width shell gives an identical exit problem (row
    // values do not depend on the row set) at a fraction of the memory.
    std::vector<Id> rows;
    const std::vector<Id>* rows_ptr = nullptr;
    if (!net_based) {
      const double* cpt = space.point(center);
      double reach = R + 2 * scale;
      for (Id i = 0; i < space.size(); ++i)
        if (space.distance_to(i, cpt) <= reach) rows.push_back(i);
      rows_ptr = &rows;
    }
    double worst = 0.0;
    bool usable = false;
    for (int a = 0; a < attempts; ++a) {
      WalkKernel kernel =
          net_based ? scale_kernel(space, kind, scale,
                                   seed_base + static_cast<std::uint64_t>(a), beta)
          : kind == KernelKind::ball_p
              ? ball_kernel_p(space, scale, *beta, rows_ptr)
              : ball_kernel_w(space, scale, rows_ptr);
      double value = 0.0;
      try {
        Id anchor = nearest_state(space, kernel, center);
        BallRegion region = ball_region(space, kernel, anchor, R);
        ExitField field = solve_exit_times(kernel, region);
        value = exit_time_max(field);
      } catch (const InvalidArgument&) {
        continue;  // disconnected at this scale/seed: skip the attempt
      }
      worst = std::max(worst, value);
      usable = true;
    }
    if (usable)
      out.series.pairs.emplace_back(scale, worst);
    else
      out.dropped_scales.push_back(scale);
  }
  if (out.series.pairs.size() < 3)
    throw InvalidArgument("walk dimension: fewer than 3 scales produced a usable exit problem");

  out.fit = fit_loglog_slope(out.series);
  std::size_t n = out.series.pairs.size();
  std::size_t k = std::max<std::size_t>(3, n / 2);
  out.slope_coarse =
      fit_loglog_slope(out.series, out.series.pairs[k - 1].first, out.series.pairs.front().first)
          .slope;
  out.slope_fine =
      fit_loglog_slope(out.series, out.series.pairs.back().first, out.series.pairs[n - k].first)
          .slope;
  return out;
}

LocalBetaField local_beta_field(const FiniteSpace& space, const std::vector<Id>& centers,
                                const std::vector<double>& R_grid,
                                const std::vector<double>& scale_grid, KernelKind kind,
                                int net_seeds, double r2_min, std::uint64_t seed_base) {
  if (centers.empty()) throw InvalidArgument("local walk dimension: no centers");
  require_decreasing(R_grid, "local walk dimension (radii)");
  require_decreasing(scale_grid, "local walk dimension (scales)");

  LocalBetaField out;
  out.field.label = "beta";
  out.field.values.assign(centers.size(), std::numeric_limits<double>::quiet_NaN());
  out.table.resize(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    LocalBetaEntry entry;
    entry.center = centers[c];
    // Smallest radius first: the most local estimate that still fits well.
    for (auto it = R_grid.rbegin(); it != R_grid.rend(); ++it) {
      double R = *it;
      std::vector<double> usable;
      for (double s : scale_grid)
        if (s <= R / 4.0) usable.push_back(s);
      if (usable.size() < 3) continue;
      BetaBallResult res;
      try {
        res = beta_ball(space, centers[c], R, usable, kind, net_seeds, seed_base);
      } catch (const InvalidArgument&) {
        continue;
      }
      if (res.fit.r_squared >= r2_min) {
        entry.R_used = R;
        entry.fit = res.fit;
        entry.series = res.series;
        entry.ok = true;
        break;
      }
    }
    if (entry.ok) out.field.values[c] = entry.fit.slope;
    out.table[c] = entry;
  }
  return out;
}

ScaleSeries ball_mass_series(const FiniteSpace& space, Id center,
                             const std::vector<double>& r_grid) {
  if (center < 0 || center >= space.size())
    throw InvalidArgument("ball mass series: center out of range");
  require_decreasing(r_grid, "ball mass series");
  std::vector<Id> centers{center};
  ScaleSeries series;
  series.label = "ball_mass";
  for (double r : r_grid) series.pairs.emplace_back(r, ball_masses(space, centers, r)[0]);
  return series;
}

ScalarField local_alpha_field(const FiniteSpace& space, const std::vector<Id>& centers,
                              const std::vector<double>& r_grid) {
  if (centers.empty()) throw InvalidArgument("local dimension: no centers");
  require_decreasing(r_grid, "local dimension");
  if (r_grid.size() < 3) throw InvalidArgument("local dimension: need at least 3 radii");
  for (Id c : centers)
    if (c < 0 || c >= space.size()) throw InvalidArgument("local dimension: center out of range");

  std::vector<std::vector<double>> masses(r_grid.size());
  for (std::size_t k = 0; k < r_grid.size(); ++k) masses[k] = ball_masses(space, centers, r_grid[k]);

  ScalarField field;
  field.label = "alpha";
  field.values.resize(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    ScaleSeries series;
    series.label = "ball_mass";
    for (std::size_t k = 0; k < r_grid.size(); ++k)
      series.pairs.emplace_back(r_grid[k], masses[k][c]);
    // mass ~ r^alpha means the fit against log(1/r) has slope -alpha.
    field.values[c] = -fit_loglog_slope(series).slope;
  }
  return field;
}

RegularityReport check_ahlfors(const FiniteSpace& space, const ScalarField& q,
                               const std::vector<Id>& centers,
                               const std::vector<double>& r_grid) {
  if (static_cast<Id>(q.values.size()) != space.size())
    throw InvalidArgument("regularity check: exponent field does not match the space");
  if (centers.empty()) throw InvalidArgument("regularity check: no centers");
  require_decreasing(r_grid, "regularity check");

  RegularityReport report;
  for (double r : r_grid) {
    std::vector<double> masses = ball_masses(space, centers, r);
    for (std::size_t c = 0; c < centers.size(); ++c) {
      double model = std::pow(r, q.values[static_cast<std::size_t>(centers[c])]);
      double ratio = masses[c] / model;
      report.samples.push_back({centers[c], r, ratio});
      double two_sided = std::max(ratio, 1.0 / ratio);
      if (two_sided > report.c_est) {
        report.c_est = two_sided;
        report.worst_center = centers[c];
        report.worst_scale = r;
      }
    }
  }
  return report;
}

RegularityReport check_time_regularity(const FiniteSpace& space, const ScalarField& beta,
                                       const std::vector<Id>& centers,
                                       const std::vector<double>& R_grid,
                                       const std::vector<double>& scale_grid) {
  if (static_cast<Id>(beta.values.size()) != space.size())
    throw InvalidArgument("time regularity: exponent field does not match the space");
  if (centers.empty()) throw InvalidArgument("time regularity: no centers");
  require_decreasing(R_grid, "time regularity (radii)");
  require_decreasing(scale_grid, "time regularity (scales)");

  double finest = scale_grid.back();
  WalkKernel kernel = ball_kernel_p(space, finest, beta);

  RegularityReport report;
  for (Id center : centers) {
    Id anchor = nearest_state(space, kernel, center);
    for (double R : R_grid) {
      BallRegion region = ball_region(space, kernel, anchor, R);
      ExitField field = solve_exit_times(kernel, region);
      double t_plus = exit_time_max(field);
      double model = std::pow(R, beta.values[static_cast<std::size_t>(center)]);
      double ratio = t_plus / model;
      report.samples.push_back({center, R, ratio});
      double two_sided = std::max(ratio, 1.0 / ratio);
      if (two_sided > report.c_est) {
        report.c_est = two_sided;
        report.worst_center = center;
        report.worst_scale = R;
      }
    }
  }
  return report;
}

double log_holder_constant(const FiniteSpace& space, const ScalarField& field,
                           std::int64_t n_pairs, std::uint64_t seed) {
  if (static_cast<Id>(field.values.size()) != space.size())
    throw InvalidArgument("log-Hoelder constant: field does not match the space");
  if (n_pairs < 1) throw InvalidArgument("log-Hoelder constant: need at least one pair");

  auto rng = make_rng(seed, 0x6c680000u);
  std::uniform_int_distribution<Id> pick(0, space.size() - 1);
  double best = 0.0;
  std::int64_t valid = 0;
  for (std::int64_t k = 0; k < n_pairs; ++k) {
    Id a = pick(rng);
    Id b = pick(rng);
    double d = space.distance(a, b);
    if (!(d > 0.0) || d >= 0.5) continue;
    ++valid;
    double gap = std::abs(field.values[static_cast<std::size_t>(a)] -
                          field.values[static_cast<std::size_t>(b)]);
    best = std::max(best, gap * std::log(1.0 / d));
  }
  if (valid == 0)
    throw InvalidArgument("log-Hoelder constant: no sampled pair had distance in (0, 1/2)");
  return best;
}

std::vector<double> default_scale_grid(double top, double bottom, int min_points,
                                       int max_points) {
  if (!(top > 0) || !(bottom > 0) || !(bottom <= top) || !std::isfinite(top))
    throw InvalidArgument("scale grid: need 0 < bottom <= top");
  if (min_points < 2 || max_points < min_points)
    throw InvalidArgument("scale grid: need 2 <= min_points <= max_points");

  const double ratio = std::sqrt(0.5);
  std::vector<double> grid;
  double s = top;
  while (s >= bottom * (1.0 - 1e-12)) {
    grid.push_back(s);
    s *= ratio;
  }
  while (static_cast<int>(grid.size()) < min_points) {
    grid.push_back(s);
    s *= ratio;
  }
  // Keep the finest rungs when the span exceeded max_points.
  if (static_cast<int>(grid.size()) > max_points)
    grid.erase(grid.begin(), grid.end() - max_points);
  return grid;
}

}  // namespace exitdim
