#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "exitdim/exponent.hpp"
#include "exitdim/space.hpp"

using namespace exitdim;

namespace {

Id nearest_point(const FiniteSpace& g, double x, double y = 0.0) {
  Id best = 0;
  double bd = 1e300;
  for (Id i = 0; i < g.size(); ++i) {
    double dx = g.point(i)[0] - x;
    double dy = g.dim > 1 ? g.point(i)[1] - y : 0.0;
    double s = dx * dx + dy * dy;
    if (s < bd) {
      bd = s;
      best = i;
    }
  }
  return best;
}

FiniteSpace unit_gasket(int stage) {
  FractalSpec spec;
  spec.kind = SpaceKind::gasket;
  spec.stage = stage;
  spec.p1 = 0.5;
  spec.p2 = 0.5;
  return build_fractal(spec);
}

}  // namespace

TEST_SUITE("exponent") {
  TEST_CASE("log-log fit: exact on power laws, windowed, and guarded") {
    ScaleSeries series;
    series.label = "synthetic";
    double c = 3.0, k = 2.5;
    for (int i = 0; i < 9; ++i) {
      double s = 0.4 * std::pow(2.0, -0.5 * i);
      series.pairs.emplace_back(s, c * std::pow(s, -k));
    }
    ExponentFit fit = fit_loglog_slope(series);
    CHECK(fit.slope == doctest::Approx(k).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(c)).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.n_points == 9);
    CHECK(fit.scale_max == doctest::Approx(0.4));

    ExponentFit window = fit_loglog_slope(series, 0.05, 0.2);
    CHECK(window.n_points == 5);  // scales 0.2, 0.141, 0.1, 0.0707, 0.05
    CHECK(window.slope == doctest::Approx(k).epsilon(1e-12));

    // Nonpositive values are skipped, not fitted.
    ScaleSeries noisy = series;
    noisy.pairs[4].second = -1.0;
    ExponentFit skip = fit_loglog_slope(noisy);
    CHECK(skip.n_points == 8);
    CHECK(skip.slope == doctest::Approx(k).epsilon(1e-12));

    // Constant data: slope zero, perfect fit by convention.
    ScaleSeries flat;
    for (int i = 0; i < 5; ++i) flat.pairs.emplace_back(0.3 * std::pow(0.5, i), 7.0);
    ExponentFit fz = fit_loglog_slope(flat);
    CHECK(fz.slope == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(fz.r_squared == 1.0);

    ScaleSeries tiny;
    tiny.pairs = {{0.2, 1.0}, {0.1, 2.0}};
    CHECK_THROWS_AS(fit_loglog_slope(tiny), InvalidArgument);
    CHECK_THROWS_AS(fit_loglog_slope(series, 0.39, 0.41), InvalidArgument);  // 1 point
  }

  TEST_CASE("walk dimension on an interval: slope two with a stable fit") {
    FiniteSpace g = build_euclidean(1, 1.0, 0.004);
    Id c = nearest_point(g, 0.0);
    std::vector<double> scales = {0.125, 0.0884, 0.0625, 0.0442, 0.03125, 0.0221};
    BetaBallResult r = beta_ball(g, c, 0.5, scales, KernelKind::ball_w);
    CHECK(r.fit.slope > 1.9);
    CHECK(r.fit.slope < 2.05);
    CHECK(r.fit.r_squared > 0.99);
    CHECK(r.dropped_scales.empty());
    CHECK(std::abs(r.slope_coarse - 2.0) < 0.2);
    CHECK(std::abs(r.slope_fine - 2.0) < 0.2);
    // Exit steps grow monotonically as the scale shrinks.
    for (std::size_t i = 1; i < r.series.pairs.size(); ++i)
      CHECK(r.series.pairs[i].second > r.series.pairs[i - 1].second);

    CHECK_THROWS_AS(beta_ball(g, c, 0.1, scales, KernelKind::ball_w), InvalidArgument);
    CHECK_THROWS_AS(beta_ball(g, static_cast<Id>(g.size()), 0.5, scales, KernelKind::ball_w),
                    InvalidArgument);
  }

  TEST_CASE("walk dimension on the gasket: net-graph walks see the anomalous exponent") {
    FiniteSpace g = unit_gasket(6);
    Id c = nearest_point(g, 0.5, 0.2887);
    std::vector<double> scales = {0.1, 0.0707, 0.05, 0.0354, 0.025};
    BetaBallResult r = beta_ball(g, c, 0.45, scales, KernelKind::graph_symmetrized, 3);
    // log5/log2 = 2.3219 at desk resolution; the window keeps it well away
    // from the euclidean value 2.
    CHECK(r.fit.slope > 2.1);
    CHECK(r.fit.slope < 2.65);
    CHECK(r.fit.r_squared > 0.95);
    BetaBallResult u = beta_ball(g, c, 0.45, scales, KernelKind::graph_uniform, 3);
    CHECK(u.fit.slope > 2.1);
    CHECK(u.fit.slope < 2.65);
  }

  TEST_CASE("walk dimension: disconnected scales are dropped, not fitted") {
    FiniteSpace g = build_path(12);
    // Integer path: a net-graph at scale s only links members closer than 2s,
    // so scales below 1/2 leave isolated self-loops that cannot exit.
    std::vector<double> scales = {1.4, 1.2, 1.01, 0.45, 0.4};
    BetaBallResult r = beta_ball(g, 6, 3.0, scales, KernelKind::graph_symmetrized, 2);
    CHECK(r.series.pairs.size() == 3);
    REQUIRE(r.dropped_scales.size() == 2);
    CHECK(r.dropped_scales[0] == 0.45);
    CHECK(r.dropped_scales[1] == 0.4);

    std::vector<double> all_bad = {0.45, 0.42, 0.4};
    CHECK_THROWS_AS(beta_ball(g, 6, 3.0, all_bad, KernelKind::graph_symmetrized, 2),
                    InvalidArgument);
  }

  TEST_CASE("nested balls: exit-step series is pointwise monotone in the radius") {
    FiniteSpace g = build_euclidean(1, 1.0, 0.004);
    Id c = nearest_point(g, 0.0);
    std::vector<double> scales = {0.125, 0.0884, 0.0625, 0.0442, 0.03125, 0.025};
    BetaBallResult inner = beta_ball(g, c, 0.35, scales, KernelKind::ball_w);
    BetaBallResult outer = beta_ball(g, c, 0.5, scales, KernelKind::ball_w);
    REQUIRE(inner.series.pairs.size() == outer.series.pairs.size());
    for (std::size_t i = 0; i < inner.series.pairs.size(); ++i) {
      CHECK(inner.series.pairs[i].first == outer.series.pairs[i].first);
      CHECK(inner.series.pairs[i].second <=
            outer.series.pairs[i].second * (1.0 + 1e-9));
    }
  }

  TEST_CASE("local walk dimension field: smallest well-fitted radius wins") {
    FiniteSpace g = build_euclidean(1, 1.0, 0.004);
    Id c = nearest_point(g, 0.0);
    std::vector<double> Rg = {0.5, 0.35, 0.25};
    std::vector<double> sg = {0.125, 0.0884, 0.0625, 0.0442, 0.03125, 0.025};
    LocalBetaField f = local_beta_field(g, {c}, Rg, sg, KernelKind::ball_w);
    REQUIRE(f.table.size() == 1);
    CHECK(f.table[0].ok);
    CHECK(f.table[0].R_used == 0.25);
    CHECK(f.field.values[0] > 1.8);
    CHECK(f.field.values[0] < 2.1);
    CHECK(f.table[0].fit.r_squared >= 0.98);

    // No radius leaves 3 usable scales: flagged, not fabricated.
    LocalBetaField bad = local_beta_field(g, {c}, {0.2}, {0.1, 0.07, 0.06}, KernelKind::ball_w);
    CHECK(!bad.table[0].ok);
    CHECK(std::isnan(bad.field.values[0]));
  }

  TEST_CASE("local dimension field: interval, junction points of the gasket, rescaling") {
    FiniteSpace g = build_euclidean(1, 1.0, 0.005);
    std::vector<Id> centers = {nearest_point(g, -0.4), nearest_point(g, 0.0),
                               nearest_point(g, 0.3)};
    std::vector<double> rg = {0.2, 0.1414, 0.1, 0.0707, 0.05};
    ScalarField a = local_alpha_field(g, centers, rg);
    for (double v : a.values) CHECK(v == doctest::Approx(1.0).epsilon(0.03));

    // Scaling every mass by a constant moves intercepts, never slopes.
    FiniteSpace g5 = g;
    for (double& w : g5.weights) w *= 5.0;
    g5.total_mass *= 5.0;
    ScalarField a5 = local_alpha_field(g5, centers, rg);
    for (std::size_t i = 0; i < a.values.size(); ++i)
      CHECK(a5.values[i] == doctest::Approx(a.values[i]).epsilon(1e-9));

    // Gasket: junction vertices with period-matched radii recover log3/log2.
    FiniteSpace gk = unit_gasket(8);
    double s3 = std::sqrt(3.0);
    std::vector<Id> junctions = {nearest_point(gk, 0.375, s3 / 8),
                                 nearest_point(gk, 0.625, s3 / 8)};
    std::vector<double> dyadic = {0.125, 0.0625, 0.03125, 0.015625};
    ScalarField ga = local_alpha_field(gk, junctions, dyadic);
    double ref = std::log(3.0) / std::log(2.0);
    CHECK(ga.values[0] == doctest::Approx(ref).epsilon(0.02));
    CHECK(ga.values[1] == doctest::Approx(ref).epsilon(0.02));
    CHECK(ga.label == "alpha");
  }

  TEST_CASE("local dimension field: variable koch curve matches its closed form") {
    FractalSpec spec;
    spec.kind = SpaceKind::koch;
    spec.stage = 7;
    spec.p1 = 0.3;
    spec.p2 = 1.2;
    FiniteSpace g = build_fractal(spec);
    Id mid = 0;
    double best = 1e300;
    for (Id i = 0; i < g.size(); ++i) {
      double d = std::abs(g.cell_param[i] - 0.5);
      if (d < best) {
        best = d;
        mid = i;
      }
    }
    std::vector<double> rg = {0.2, 0.1414, 0.1, 0.0707, 0.05, 0.0354, 0.025};
    ScalarField a = local_alpha_field(g, {mid}, rg);
    double ref = koch_alpha(g.cell_param[mid], 0.3, 1.2);
    CHECK(a.values[0] == doctest::Approx(ref).epsilon(0.05));
  }

  TEST_CASE("measure regularity: right exponent is flat, wrong exponent blows up") {
    FiniteSpace g = build_euclidean(1, 1.0, 0.005);
    std::vector<Id> centers = {nearest_point(g, -0.5), nearest_point(g, 0.0),
                               nearest_point(g, 0.45)};
    std::vector<double> rg = {0.2, 0.1414, 0.1, 0.0707, 0.05};
    ScalarField q1, q14;
    q1.values.assign(g.size(), 1.0);
    q14.values.assign(g.size(), 1.4);
    RegularityReport right = check_ahlfors(g, q1, centers, rg);
    RegularityReport wrong = check_ahlfors(g, q14, centers, rg);
    // Lebesgue measure on the interval: mass(B_r) ~ 2r, so the constant sits
    // at 2 and the misfit grows like r^-0.4.
    CHECK(right.c_est > 1.9);
    CHECK(right.c_est < 2.3);
    CHECK(wrong.c_est > 5.0);
    CHECK(wrong.c_est > 2.5 * right.c_est);
    CHECK(wrong.worst_scale == 0.05);
    CHECK(right.samples.size() == 15);

    FiniteSpace gk = unit_gasket(7);
    ScalarField qg;
    qg.values.assign(gk.size(), std::log(3.0) / std::log(2.0));
    std::vector<Id> gc = {nearest_point(gk, 0.5, 0.2887), nearest_point(gk, 0.25, 0.1443),
                          nearest_point(gk, 0.3, 0.05)};
    std::vector<double> grg = {0.25, 0.1768, 0.125, 0.0884, 0.0625, 0.0442, 0.03125};
    RegularityReport gr = check_ahlfors(gk, qg, gc, grg);
    CHECK(gr.c_est < 4.0);
  }

  TEST_CASE("time regularity: exit times track R^beta only for the true exponent") {
    FiniteSpace g = build_euclidean(1, 1.0, 0.004);
    std::vector<Id> centers = {nearest_point(g, 0.0)};
    std::vector<double> Rg = {0.4, 0.3, 0.2};
    std::vector<double> sg = {0.08, 0.04, 0.02};
    ScalarField b2, b25;
    b2.values.assign(g.size(), 2.0);
    b25.values.assign(g.size(), 2.5);

    RegularityReport right = check_time_regularity(g, b2, centers, Rg, sg);
    // Continuum torsion of the interval: T = 3 R^2, plus a small boundary
    // overshoot; the ratio is flat in R.
    CHECK(right.c_est > 2.0);
    CHECK(right.c_est < 4.5);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const RegularitySample& s : right.samples) {
      lo = std::min(lo, s.ratio);
      hi = std::max(hi, s.ratio);
    }
    CHECK(hi / lo < 1.3);

    RegularityReport wrong = check_time_regularity(g, b25, centers, Rg, sg);
    double wlo = std::numeric_limits<double>::infinity(), whi = 0.0;
    for (const RegularitySample& s : wrong.samples) {
      wlo = std::min(wlo, s.ratio);
      whi = std::max(whi, s.ratio);
    }
    // Misfit drifts like R^-0.5 across the radius sweep.
    CHECK(whi / wlo > 1.3);
  }

  TEST_CASE("log-Hoelder constant: zero for constants, bounded for dimension fields") {
    FiniteSpace g = build_euclidean(1, 1.0, 0.004);
    ScalarField cst;
    cst.values.assign(g.size(), 1.5);
    CHECK(log_holder_constant(g, cst, 50000, 5) == 0.0);

    ScalarField step;
    step.values.resize(g.size());
    for (Id i = 0; i < g.size(); ++i) step.values[i] = g.point(i)[0] < 0 ? 0.0 : 1.0;
    double cs = log_holder_constant(g, step, 100000, 5);
    CHECK(cs > 4.0);  // jump seen at distance ~h: |f| * log(1/h)

    FractalSpec spec;
    spec.kind = SpaceKind::koch;
    spec.stage = 6;
    spec.p1 = 0.3;
    spec.p2 = 1.2;
    FiniteSpace k = build_fractal(spec);
    ScalarField dim = local_dimension_field(k);
    double ck = log_holder_constant(k, dim, 100000, 5);
    CHECK(ck > 0.05);
    CHECK(ck < 1.0);
    CHECK(ck < cs / 4.0);

    CHECK(log_holder_constant(k, dim, 100000, 5) == ck);  // deterministic
    CHECK_THROWS_AS(log_holder_constant(g, dim, 1000, 5), InvalidArgument);
    CHECK_THROWS_AS(log_holder_constant(g, cst, 0, 5), InvalidArgument);
    FiniteSpace p = build_path(2);
    ScalarField pf;
    pf.values.assign(p.size(), 0.0);
    CHECK_THROWS_AS(log_holder_constant(p, pf, 1000, 5), InvalidArgument);
  }

  TEST_CASE("scale ladder builder: geometric, clamped, finest-biased") {
    std::vector<double> grid = default_scale_grid(0.25, 0.05, 8, 12);
    REQUIRE(grid.size() == 8);
    CHECK(grid[0] == 0.25);
    for (std::size_t i = 1; i < grid.size(); ++i)
      CHECK(grid[i] / grid[i - 1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(grid.back() < 0.05);  // extended below bottom to reach min_points

    std::vector<double> wide = default_scale_grid(1.0, 1e-4, 8, 12);
    REQUIRE(wide.size() == 12);
    CHECK(wide[0] < 1.0);            // coarse rungs trimmed
    CHECK(wide.back() >= 0.99e-4);   // finest rung stays above bottom
    CHECK(wide.back() < 1.5e-4);

    CHECK_THROWS_AS(default_scale_grid(0.1, 0.2, 8, 12), InvalidArgument);
    CHECK_THROWS_AS(default_scale_grid(0.1, 0.05, 8, 4), InvalidArgument);
  }
}
