#include "exitdim/verify.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "exitdim/common.hpp"
#include "exitdim/exit.hpp"
#include "exitdim/exponent.hpp"
#include "exitdim/graph.hpp"
#include "exitdim/kernel.hpp"
#include "exitdim/net.hpp"
#include "exitdim/space.hpp"
#include "exitdim/spectral.hpp"

namespace exitdim {

namespace {

using Clock = std::chrono::steady_clock;

std::string g4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Id nearest_pt(const FiniteSpace& s, double x, double y) {
  double p[2] = {x, y};
  Id best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Id i = 0; i < s.size(); ++i) {
    double d = s.distance_to(i, p);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

Id nearest_param(const FiniteSpace& s, double t) {
  Id best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Id i = 0; i < s.size(); ++i) {
    double d = std::abs(s.cell_param[i] - t);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

// Lazy nearest-neighbor walk on the path graph 0..n: every vertex keeps a
// self loop, interior vertices move to each of {left, self, right} with
// probability 1/3.
WalkKernel lazy_path_kernel(long n, FiniteSpace& space_out) {
  space_out = build_path(n);
  NetIndex net = build_epsilon_net(space_out, 1.0, 1);
  ApproxGraph graph = proximity_graph(space_out, net, 2.0, true);
  return graph_kernel(space_out, graph, false);
}

BallRegion path_interior(const FiniteSpace& space, const WalkKernel& kernel, long n) {
  // Integer distances: the closed ball of radius n/2 - 0.5 around the middle
  // vertex is exactly the interior {1, ..., n-1}.
  return ball_region(space, kernel, static_cast<Id>(n / 2), static_cast<double>(n) / 2.0 - 0.5);
}

// Exact two-sum accumulate: (s, e) += b.
inline void two_sum(double& s, double& e, double b) {
  double t = s + b;
  double bb = t - s;
  e += (s - (t - bb)) + (b - bb);
  s = t;
}

// Dense tridiagonal solve of (I - P) phi = 1 for the interior of the lazy
// path walk, refined with compensated residuals until the forward error sits
// at a few ulps of the solution. Independent of the sparse solver under test.
Eigen::VectorXd dense_path_oracle(int m) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    A(k, k) = 1.0 - 1.0 / 3.0;
    if (k > 0) A(k, k - 1) = -1.0 / 3.0;
    if (k + 1 < m) A(k, k + 1) = -1.0 / 3.0;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd phi = lu.solve(ones);
  for (int sweep = 0; sweep < 3; ++sweep) {
    Eigen::VectorXd hi = ones, lo = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      for (int i = std::max(0, j - 1); i <= std::min(m - 1, j + 1); ++i) {
        double p = -A(i, j) * phi[j];
        double perr = std::fma(-A(i, j), phi[j], -p);
        two_sum(hi[i], lo[i], p);
        two_sum(hi[i], lo[i], perr);
      }
    }
    phi += lu.solve(Eigen::VectorXd(hi + lo));
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Criteria. Each returns pass and fills a single-line detail string.

bool crit_path_exit(std::string& detail) {
  std::ostringstream d;
  bool pass = true;
  for (long n : {10L, 100L, 1000L}) {
    FiniteSpace space;
    WalkKernel kernel = lazy_path_kernel(n, space);
    BallRegion region = path_interior(space, kernel, n);
    ExitField field = solve_exit_times(kernel, region);
    Eigen::VectorXd oracle = dense_path_oracle(static_cast<int>(n) - 1);
    double worst_abs = 0.0, worst_rel = 0.0;
    for (long k = 1; k < n; ++k) {
      double closed = 1.5 * static_cast<double>(k) * static_cast<double>(n - k);
      worst_abs = std::max(worst_abs, std::abs(field.values[k] - oracle[k - 1]));
      worst_rel = std::max(worst_rel, std::abs(field.values[k] - closed) / closed);
    }
    bool ok = worst_abs < 1e-9 && worst_rel < 1e-9;
    pass = pass && ok;
    d << (n > 10 ? "  " : "") << "n=" << n << ": |phi-oracle|=" << g4(worst_abs)
      << " rel_closed_form=" << g4(worst_rel);
  }
  d << "  (bounds 1e-9)";
  detail = d.str();
  return pass;
}

bool crit_interval_profile(std::string& detail) {
  const double R = 1.0, r = 0.05, h = 0.002;
  FiniteSpace g = build_euclidean(1, R, h);
  WalkKernel kernel = ball_kernel_w(g, r);
  Id center = nearest_pt(g, 0.0, 0.0);
  BallRegion region = ball_region(g, kernel, center, R);
  ExitField field = solve_exit_times(kernel, region);
  // Height of the profile at the center; errors are measured relative to it
  // so the O(r/R) boundary-layer overshoot near |x| = R does not mask the
  // interior agreement.
  const double f0 = 3.0 * R * R / (r * r);
  double worst = 0.0;
  for (Id i = 0; i < g.size(); ++i) {
    double x = g.point(i)[0];
    if (std::abs(x) > R - 3.0 * r) continue;
    double f = 3.0 * (R * R - x * x) / (r * r);
    worst = std::max(worst, std::abs(field.values[i] - f) / f0);
  }
  detail = "worst profile error " + g4(worst) + " of center height " + g4(f0) +
           " over |x| <= R-3r (bound 0.05)";
  return worst < 0.05;
}

bool crit_euclidean_beta(std::string& detail) {
  FiniteSpace g1 = build_euclidean(1, 0.5, 0.002);
  BetaBallResult r1 = beta_ball(g1, nearest_pt(g1, 0.0, 0.0), 0.4,
                                {0.0375, 0.0265, 0.01875, 0.01325, 0.009375}, KernelKind::ball_w);
  FiniteSpace g2 = build_euclidean(2, 0.5, 0.01);
  BetaBallResult r2 = beta_ball(g2, nearest_pt(g2, 0.0, 0.0), 0.4, {0.075, 0.053, 0.0375, 0.0265},
                                KernelKind::ball_w);
  bool pass = r1.fit.slope >= 1.9 && r1.fit.slope <= 2.1 && r2.fit.slope >= 1.9 &&
              r2.fit.slope <= 2.1;
  detail = "dim 1: beta=" + g4(r1.fit.slope) + " r2=" + g4(r1.fit.r_squared) +
           "  dim 2: beta=" + g4(r2.fit.slope) + " r2=" + g4(r2.fit.r_squared) +
           "  (bounds [1.9, 2.1])";
  return pass;
}

bool crit_gasket_beta(std::string& detail) {
  FractalSpec spec;
  spec.kind = SpaceKind::gasket;
  spec.stage = 8;
  spec.p1 = 0.5;
  spec.p2 = 0.5;
  FiniteSpace g = build_fractal(spec);
  Id center = nearest_pt(g, 0.5, std::sqrt(3.0) / 6.0);
  BetaBallResult res = beta_ball(g, center, 0.45, {0.1, 0.0707, 0.05, 0.0354, 0.025, 0.0177},
                                 KernelKind::graph_symmetrized, 3);
  const double target = std::log(5.0) / std::log(2.0);
  double err = res.fit.slope - target;
  bool pass = std::abs(err) <= 0.15 && res.fit.r_squared >= 0.98 && res.dropped_scales.empty();
  detail = "stage 8 net-graph walk: beta=" + g4(res.fit.slope) + " target=" + g4(target) +
           " err=" + g4(err) + " r2=" + g4(res.fit.r_squared) + " dropped=" +
           std::to_string(res.dropped_scales.size()) + "  (|err| <= 0.15, r2 >= 0.98)";
  return pass;
}

bool crit_gasket_alpha(std::string& detail) {
  FractalSpec spec;
  spec.kind = SpaceKind::gasket;
  spec.stage = 9;
  spec.p1 = 0.5;
  spec.p2 = 0.5;
  FiniteSpace g = build_fractal(spec);
  const double s3 = std::sqrt(3.0);
  const double cx[3] = {0.375, 0.625, 0.5};
  const double cy[3] = {s3 / 8.0, s3 / 8.0, s3 / 4.0};
  std::vector<Id> centers;
  for (int i = 0; i < 3; ++i) centers.push_back(nearest_pt(g, cx[i], cy[i]));
  ScalarField alpha =
      local_alpha_field(g, centers, {0.125, 0.0625, 0.03125, 0.015625, 0.0078125});
  const double target = std::log(3.0) / std::log(2.0);
  std::ostringstream d;
  bool pass = true;
  d << "stage 9, target " << g4(target) << ":";
  for (int i = 0; i < 3; ++i) {
    double err = alpha.values[i] - target;
    pass = pass && std::abs(err) <= 0.05;
    d << " alpha[" << i << "]=" << g4(alpha.values[i]) << " (err " << g4(err) << ")";
  }
  d << "  (|err| <= 0.05)";
  detail = d.str();
  return pass;
}

bool crit_koch_exponents(std::string& detail) {
  const double th1 = 0.3, th2 = 1.2;
  FractalSpec spec;
  spec.kind = SpaceKind::koch;
  spec.stage = 8;
  spec.p1 = th1;
  spec.p2 = th2;
  FiniteSpace g = build_fractal(spec);
  ScalarField q = local_dimension_field(g);
  assign_measure(g, MeasureMode::diameter_power, &q);
  std::ostringstream d;
  bool pass = true;
  for (double t : {0.1, 0.5, 0.9}) {
    Id center = nearest_param(g, t);
    double a_cf = koch_alpha(t, th1, th2);
    ScaleSeries mass = ball_mass_series(g, center, {0.04, 0.028, 0.02, 0.014, 0.01, 0.007, 0.005});
    double a_hat = -fit_loglog_slope(mass).slope;
    BetaBallResult bb =
        beta_ball(g, center, 0.08, {0.02, 0.014, 0.01, 0.0071, 0.005}, KernelKind::ball_w);
    double ratio = bb.fit.slope / (2.0 * a_cf);
    bool ok = std::abs(a_hat - a_cf) <= 0.1 && ratio >= 0.9 && ratio <= 1.1;
    pass = pass && ok;
    d << (t > 0.1 ? "  " : "") << "t=" << g4(t) << ": alpha=" << g4(a_hat) << " (target "
      << g4(a_cf) << ") beta=" << g4(bb.fit.slope) << " beta/2alpha=" << g4(ratio);
  }
  d << "  (|alpha err| <= 0.1, ratio in [0.9, 1.1])";
  detail = d.str();
  return pass;
}

bool crit_exact_identities(std::string& detail) {
  struct Entry {
    std::string name;
    const FiniteSpace* space;
    WalkKernel kernel;
    BallRegion region;
    bool reversible;
  };

  FiniteSpace euclid = build_euclidean(1, 0.5, 0.01);
  ScalarField beta2;
  beta2.values.assign(euclid.size(), 2.0);

  FractalSpec gs;
  gs.kind = SpaceKind::gasket;
  gs.stage = 6;
  gs.p1 = 0.5;
  gs.p2 = 0.5;
  FiniteSpace gasket = build_fractal(gs);
  ScalarField beta_g;
  beta_g.values.assign(gasket.size(), 2.2);
  Id g_center = nearest_pt(gasket, 0.5, std::sqrt(3.0) / 6.0);

  FractalSpec ks;
  ks.kind = SpaceKind::koch;
  ks.stage = 5;
  ks.p1 = 0.3;
  ks.p2 = 1.2;
  FiniteSpace koch = build_fractal(ks);

  FiniteSpace path;
  WalkKernel path_kernel = lazy_path_kernel(50, path);

  std::vector<Entry> battery;
  {
    WalkKernel k = ball_kernel_w(euclid, 0.105);
    BallRegion reg = ball_region(euclid, k, nearest_pt(euclid, 0.0, 0.0), 0.3);
    battery.push_back({"interval ball", &euclid, std::move(k), std::move(reg), true});
  }
  {
    WalkKernel k = ball_kernel_p(euclid, 0.105, beta2);
    BallRegion reg = ball_region(euclid, k, nearest_pt(euclid, 0.0, 0.0), 0.3);
    battery.push_back({"interval rescaled", &euclid, std::move(k), std::move(reg), true});
  }
  {
    WalkKernel k = ball_kernel_w(gasket, 0.06);
    BallRegion reg = ball_region(gasket, k, g_center, 0.4);
    battery.push_back({"gasket ball", &gasket, std::move(k), std::move(reg), true});
  }
  {
    WalkKernel k = ball_kernel_p(gasket, 0.06, beta_g);
    BallRegion reg = ball_region(gasket, k, g_center, 0.4);
    battery.push_back({"gasket rescaled", &gasket, std::move(k), std::move(reg), true});
  }
  {
    WalkKernel k = ball_kernel_w(koch, 0.05);
    BallRegion reg = ball_region(koch, k, nearest_param(koch, 0.5), 0.2);
    battery.push_back({"koch ball", &koch, std::move(k), std::move(reg), true});
  }
  {
    BallRegion reg = path_interior(path, path_kernel, 50);
    battery.push_back({"lazy path", &path, path_kernel, std::move(reg), true});
  }
  {
    WalkKernel k = scale_kernel(gasket, KernelKind::graph_symmetrized, 0.07, 1);
    Id anchor = nearest_state(gasket, k, g_center);
    BallRegion reg = ball_region(gasket, k, anchor, 0.4);
    battery.push_back({"gasket net-graph", &gasket, std::move(k), std::move(reg), true});
  }
  {
    WalkKernel k = scale_kernel(gasket, KernelKind::graph_uniform, 0.07, 1);
    Id anchor = nearest_state(gasket, k, g_center);
    BallRegion reg = ball_region(gasket, k, anchor, 0.4);
    battery.push_back({"gasket uniform-graph", &gasket, std::move(k), std::move(reg), false});
  }

  double worst_row = 0.0, worst_balance = 0.0, worst_sym = 0.0, worst_exit = 0.0;
  double worst_radius = 0.0, worst_match = 0.0, worst_energy = 0.0;

  for (const Entry& e : battery) {
    worst_row = std::max(worst_row, row_sum_violation(e.kernel));
    if (e.reversible) {
      worst_balance = std::max(worst_balance, detailed_balance_violation(e.kernel));
    }

    KilledOperator op = killed_operator(e.kernel, e.region);
    double radius = spectral_radius_killed(op);
    worst_radius = std::max(worst_radius, radius);

    GreenMatrix green = green_matrix(op);
    ExitField field = solve_exit_times(e.kernel, e.region);
    Eigen::VectorXd via_green = green.exit_times();
    for (Id idx = 0; idx < e.region.size(); ++idx) {
      double phi = field.values[e.region.inside[idx]];
      worst_exit = std::max(worst_exit, std::abs(via_green[idx] - phi));
    }
    if (e.reversible) {
      for (Id i = 0; i < green.size(); ++i) {
        for (Id j = i + 1; j < green.size(); ++j) {
          worst_sym =
              std::max(worst_sym, std::abs(green.green_symmetric(i, j) - green.green_symmetric(j, i)));
        }
      }
    }
  }

  // The rescaled ball walk at constant beta must coincide with the plain
  // ball walk transition-by-transition; only the waiting times differ.
  {
    const WalkKernel& kw = battery[0].kernel;
    const WalkKernel& kp = battery[1].kernel;
    if (kw.col == kp.col) {
      for (std::size_t e = 0; e < kw.val.size(); ++e) {
        worst_match = std::max(worst_match, std::abs(kw.val[e] - kp.val[e]));
      }
    } else {
      worst_match = 1.0;
    }
    const WalkKernel& gw = battery[2].kernel;
    const WalkKernel& gp = battery[3].kernel;
    if (gw.col == gp.col) {
      for (std::size_t e = 0; e < gw.val.size(); ++e) {
        worst_match = std::max(worst_match, std::abs(gw.val[e] - gp.val[e]));
      }
    } else {
      worst_match = 1.0;
    }
  }

  // Integration by parts: energy of the exit profile extended by zero equals
  // its weighted linear sum, exactly, for the rescaled ball walk.
  for (int which : {1, 3}) {
    const Entry& e = battery[which];
    const ScalarField& beta = which == 1 ? beta2 : beta_g;
    ExitField field = solve_exit_times(e.kernel, e.region);
    std::vector<double> f(e.space->size(), 0.0);
    for (Id local = 0; local < e.kernel.state_count(); ++local) {
      f[e.kernel.states[local]] = field.values[local];
    }
    double energy = dirichlet_energy(*e.space, e.kernel.r, beta, f);
    double linear = 0.0;
    for (Id idx = 0; idx < e.region.size(); ++idx) {
      Id local = e.region.inside[idx];
      linear += field.values[local] * e.kernel.stationary_density[local] *
                e.kernel.waiting[local] * e.kernel.state_weights[local];
    }
    worst_energy = std::max(worst_energy, std::abs(energy - linear) / std::max(1.0, linear));
  }

  bool pass = worst_row < 1e-12 && worst_balance < 1e-12 && worst_match < 1e-12 &&
              worst_sym < 1e-8 && worst_exit < 1e-8 && worst_radius < 1.0 - 1e-6 &&
              worst_energy < 1e-8;
  detail = "rows=" + g4(worst_row) + " balance=" + g4(worst_balance) + " walk_match=" +
           g4(worst_match) + " green_sym=" + g4(worst_sym) + " exit_vs_green=" + g4(worst_exit) +
           " energy_identity=" + g4(worst_energy) + " max_radius=" + g4(worst_radius) +
           "  (1e-12 / 1e-8 bounds, radius < 1-1e-6)";
  return pass;
}

bool crit_gap_products(std::string& detail) {
  FiniteSpace g1 = build_euclidean(1, 0.5, 0.005);
  std::vector<Id> c1 = {nearest_pt(g1, 0.0, 0.0), nearest_pt(g1, 0.2, 0.0)};
  std::vector<double> R_grid1 = {0.3, 0.2};
  FractalSpec spec;
  spec.kind = SpaceKind::gasket;
  spec.stage = 7;
  spec.p1 = 0.5;
  spec.p2 = 0.5;
  FiniteSpace g2 = build_fractal(spec);
  const double s3 = std::sqrt(3.0);
  std::vector<Id> c2 = {nearest_pt(g2, 0.5, s3 / 6.0), nearest_pt(g2, 0.25, s3 / 12.0)};
  std::vector<double> R_grid2 = {0.45, 0.3};
  std::vector<double> scales = {0.06, 0.0425, 0.03};

  FaberKrahnReport fk1 = faber_krahn_constant(g1, c1, R_grid1, scales, KernelKind::ball_w);
  FaberKrahnReport fk2 = faber_krahn_constant(g2, c2, R_grid2, scales, KernelKind::ball_w);
  std::size_t triples = fk1.table.size() + fk2.table.size();
  double c_min = std::min(fk1.c_min, fk2.c_min);
  double c_max = std::max(fk1.c_max, fk2.c_max);
  bool products_ok = c_min > 0.0;
  for (const FaberKrahnEntry& e : fk1.table) products_ok = products_ok && e.product > 0.0;
  for (const FaberKrahnEntry& e : fk2.table) products_ok = products_ok && e.product > 0.0;

  int dominated = 0, total = 0;
  auto sweep_tent = [&](const FiniteSpace& g, const std::vector<Id>& centers,
                        const std::vector<double>& R_grid) {
    for (Id c : centers) {
      for (double R : R_grid) {
        for (double r : scales) {
          TentBound tb = tent_rayleigh(g, c, R, r);
          ++total;
          if (tb.lambda1 > 0.0 && tb.lambda1 <= tb.quotient * (1.0 + 1e-9) &&
              tb.lambda1 <= tb.bound) {
            ++dominated;
          }
        }
      }
    }
  };
  sweep_tent(g1, c1, R_grid1);
  sweep_tent(g2, c2, R_grid2);

  bool pass = triples >= 20 && products_ok && c_max / c_min < 5.0 && dominated == total;
  detail = std::to_string(triples) + " balls: lambda1*E+ in [" + g4(c_min) + ", " + g4(c_max) +
           "] ratio=" + g4(c_max / c_min) + " (< 5); tent bound dominates " +
           std::to_string(dominated) + "/" + std::to_string(total);
  return pass;
}

bool crit_monte_carlo(std::string& detail) {
  struct Case {
    std::string name;
    WalkKernel kernel;
    BallRegion region;
    Id start;
  };
  std::vector<Case> cases;

  FiniteSpace path;
  {
    WalkKernel kernel = lazy_path_kernel(100, path);
    BallRegion region = ball_region(path, kernel, 50, 30.0);
    cases.push_back({"path/50", kernel, region, 50});
    cases.push_back({"path/35", std::move(kernel), std::move(region), 35});
  }
  FiniteSpace e1 = build_euclidean(1, 0.5, 0.01);
  {
    WalkKernel kernel = ball_kernel_w(e1, 0.105);
    Id c = nearest_pt(e1, 0.0, 0.0);
    BallRegion region = ball_region(e1, kernel, c, 0.4);
    cases.push_back({"interval/0", kernel, region, c});
    cases.push_back({"interval/0.15", std::move(kernel), std::move(region), nearest_pt(e1, 0.15, 0.0)});
    ScalarField beta;
    beta.values.assign(e1.size(), 2.0);
    WalkKernel kp = ball_kernel_p(e1, 0.105, beta);
    BallRegion regp = ball_region(e1, kp, c, 0.4);
    cases.push_back({"interval/rescaled", std::move(kp), std::move(regp), c});
  }
  FiniteSpace e2 = build_euclidean(2, 0.5, 0.02);
  {
    WalkKernel kernel = ball_kernel_w(e2, 0.11);
    Id c = nearest_pt(e2, 0.0, 0.0);
    BallRegion region = ball_region(e2, kernel, c, 0.3);
    cases.push_back({"disc/0", std::move(kernel), std::move(region), c});
  }
  FractalSpec gs;
  gs.kind = SpaceKind::gasket;
  gs.stage = 6;
  gs.p1 = 0.5;
  gs.p2 = 0.5;
  FiniteSpace gasket = build_fractal(gs);
  {
    const double s3 = std::sqrt(3.0);
    WalkKernel kernel = ball_kernel_w(gasket, 0.06);
    Id c = nearest_pt(gasket, 0.5, s3 / 6.0);
    BallRegion region = ball_region(gasket, kernel, c, 0.4);
    cases.push_back({"gasket/center", kernel, region, c});
    cases.push_back(
        {"gasket/junction", std::move(kernel), std::move(region), nearest_pt(gasket, 0.375, s3 / 8.0)});
    WalkKernel kg = scale_kernel(gasket, KernelKind::graph_symmetrized, 0.05, 1);
    Id anchor = nearest_state(gasket, kg, c);
    BallRegion regg = ball_region(gasket, kg, anchor, 0.45);
    cases.push_back({"gasket/net-graph", std::move(kg), std::move(regg), anchor});
  }
  FractalSpec ks;
  ks.kind = SpaceKind::koch;
  ks.stage = 6;
  ks.p1 = 0.3;
  ks.p2 = 1.2;
  FiniteSpace koch = build_fractal(ks);
  {
    WalkKernel kernel = ball_kernel_w(koch, 0.03);
    Id c = nearest_param(koch, 0.5);
    BallRegion region = ball_region(koch, kernel, c, 0.2);
    cases.push_back({"koch/0.5", std::move(kernel), std::move(region), c});
  }

  const std::int64_t n_paths = 10000;
  std::ostringstream d;
  bool pass = cases.size() >= 10;
  double worst_z = 0.0;
  std::string worst_name;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Case& cs = cases[i];
    ExitField field = solve_exit_times(cs.kernel, cs.region);
    double phi = field.values[cs.kernel.local_index(cs.start)];
    MonteCarloExit mc = monte_carlo_exit(cs.kernel, cs.region, cs.start, n_paths, 1000 + i);
    double z = std::abs(mc.mean - phi) / mc.stderr_mean;
    if (z > worst_z) {
      worst_z = z;
      worst_name = cs.name;
    }
    pass = pass && z <= 4.0;
  }
  MonteCarloExit rep1 = monte_carlo_exit(cases[0].kernel, cases[0].region, cases[0].start, n_paths, 1000);
  MonteCarloExit rep2 = monte_carlo_exit(cases[0].kernel, cases[0].region, cases[0].start, n_paths, 1000);
  bool deterministic = rep1.mean == rep2.mean && rep1.stderr_mean == rep2.stderr_mean;
  pass = pass && deterministic;
  d << cases.size() << " cases x " << n_paths << " paths: worst |mean-phi|/stderr=" << g4(worst_z)
    << " (" << worst_name << ", bound 4); repeat run identical=" << (deterministic ? "yes" : "no");
  detail = d.str();
  return pass;
}

bool crit_energy_stability(std::string& detail) {
  FiniteSpace g = build_euclidean(1, 1.0, 0.004);
  ScalarField beta;
  beta.values.assign(g.size(), 2.0);
  std::vector<std::vector<double>> fs(2, std::vector<double>(g.size()));
  for (Id i = 0; i < g.size(); ++i) {
    double x = g.point(i)[0];
    fs[0][i] = std::max(0.0, 1.0 - std::abs(x) / 0.5);
    fs[1][i] = std::max(0.0, 1.0 - std::abs(x - 0.2) / 0.3);
  }
  EnergySeries es = energy_scale_series(
      g, {0.16, 0.113, 0.08, 0.0566, 0.04, 0.0283, 0.02, 0.01414, 0.01}, beta, fs);
  bool pass = true;
  for (double s : es.stabilization) pass = pass && s < 1.5;
  detail = "tent-function energies over 9 scales: stabilization ratios " +
           g4(es.stabilization[0]) + ", " + g4(es.stabilization[1]) + " (bound 1.5)";
  return pass;
}

bool crit_exit_tail(std::string& detail) {
  FiniteSpace path;
  WalkKernel kernel = lazy_path_kernel(50, path);
  BallRegion region = ball_region(path, kernel, 25, 15.0);
  ExitField field = solve_exit_times(kernel, region);
  double ebar = field.values[25];
  // Common random numbers across the threshold grid: the empirical
  // distribution function of a single fixed sample is monotone by
  // construction, so any violation flags nondeterminism.
  double prev = -1.0, sup = 0.0;
  bool monotone = true;
  std::ostringstream d;
  d << "F(t) at t/E[exit] in {0.25, 0.5, 1, 2}:";
  for (double f : {0.25, 0.5, 1.0, 2.0}) {
    double v = exit_tail_estimate(kernel, region, 25, f * ebar, 10000, 77);
    monotone = monotone && v >= prev;
    prev = v;
    sup = std::max(sup, v);
    d << " " << g4(v);
  }
  bool pass = monotone && sup < 1.0;
  d << "  monotone=" << (monotone ? "yes" : "no") << " sup=" << g4(sup) << " (< 1)";
  detail = d.str();
  return pass;
}

CriterionResult run_one(const std::string& name, double budget, bool (*fn)(std::string&)) {
  CriterionResult res;
  res.name = name;
  res.budget_seconds = budget;
  Clock::time_point t0 = Clock::now();
  try {
    res.pass = fn(res.detail);
  } catch (const std::exception& ex) {
    res.pass = false;
    res.detail = std::string("exception: ") + ex.what();
  }
  res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (res.seconds > res.budget_seconds) {
    res.pass = false;
    res.detail += "  [exceeded " + g4(budget) + "s budget]";
  }
  return res;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(
    const std::function<void(const CriterionResult&)>& on_result) {
  struct Spec {
    const char* name;
    double budget;
    bool (*fn)(std::string&);
  };
  const Spec specs[] = {
      {"path_exit_closed_form", 5.0, crit_path_exit},
      {"interval_exit_profile", 30.0, crit_interval_profile},
      {"euclidean_walk_dimension", 300.0, crit_euclidean_beta},
      {"gasket_walk_dimension", 600.0, crit_gasket_beta},
      {"gasket_dimension_field", 60.0, crit_gasket_alpha},
      {"koch_local_exponents", 900.0, crit_koch_exponents},
      {"kernel_exact_identities", 600.0, crit_exact_identities},
      {"spectral_gap_products", 600.0, crit_gap_products},
      {"monte_carlo_exit_agreement", 120.0, crit_monte_carlo},
      {"energy_scale_stability", 300.0, crit_energy_stability},
      {"exit_tail_distribution", 300.0, crit_exit_tail},
  };
  std::vector<CriterionResult> results;
  for (const Spec& s : specs) {
    results.push_back(run_one(s.name, s.budget, s.fn));
    if (on_result) on_result(results.back());
  }
  return results;
}

}  // namespace exitdim
