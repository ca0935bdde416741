#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "exitdim/exit.hpp"
#include "exitdim/graph.hpp"
#include "exitdim/kernel.hpp"
#include "exitdim/net.hpp"
#include "exitdim/space.hpp"

using namespace exitdim;

namespace {

// Lazy walk on the path 0..n: stay/left/right each 1/3 at interior vertices.
struct LazyPath {
  FiniteSpace space;
  NetIndex net;
  ApproxGraph graph;
  WalkKernel kernel;
};

LazyPath lazy_path(int n) {
  LazyPath lp;
  lp.space = build_path(n);
  lp.net = build_epsilon_net(lp.space, 1.0, 1);
  lp.graph = proximity_graph(lp.space, lp.net, 2.0, true);
  lp.kernel = graph_kernel(lp.space, lp.graph, false);
  return lp;
}

// Independent oracle: dense solve of (I - T) phi = 1 where T is the interior
// tridiagonal of the lazy walk, assembled from first principles.
std::vector<double> lazy_path_exit_oracle(int n) {
  int m = n - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    A(k, k) = 1.0 - 1.0 / 3.0;
    if (k > 0) A(k, k - 1) = -1.0 / 3.0;
    if (k + 1 < m) A(k, k + 1) = -1.0 / 3.0;
  }
  Eigen::VectorXd phi = A.partialPivLu().solve(Eigen::VectorXd::Ones(m));
  std::vector<double> out(m);
  for (int k = 0; k < m; ++k) out[k] = phi[k];
  return out;
}

Id origin_id(const FiniteSpace& g) {
  Id best = 0;
  double bd = 1e300;
  for (Id i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) s += sq(g.point(i)[a]);
    if (s < bd) {
      bd = s;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("exit") {
  TEST_CASE("lazy path walk: solve matches dense oracle and (3/2)k(n-k)") {
    for (int n : {10, 100}) {
      auto lp = lazy_path(n);
      auto region = ball_region(lp.space, lp.kernel, n / 2, n / 2 - 1.0);
      REQUIRE(region.size() == n - 1);
      auto field = solve_exit_times(lp.kernel, region);
      CHECK(field.solver == "sparse_lu");
      CHECK(field.residual < 1e-9);
      auto oracle = lazy_path_exit_oracle(n);
      double worst_oracle = 0.0, worst_closed = 0.0;
      for (int k = 1; k < n; ++k) {
        double phi = field.values[k];
        double f = 1.5 * k * (n - k);
        worst_oracle = std::max(worst_oracle, std::abs(phi - oracle[k - 1]));
        // relative: storing 1/3-probabilities as doubles perturbs the exact
        // system by ~1e-17 per entry, which the inverse amplifies ~n^4 in
        // absolute terms while per-point relative error stays ~n^2 * 1e-17
        worst_closed = std::max(worst_closed, std::abs(phi - f) / f);
      }
      CHECK(worst_oracle < 1e-10);
      CHECK(worst_closed < 1e-9);
      // endpoints are outside the region: exactly zero
      CHECK(field.values[0] == 0.0);
      CHECK(field.values[n] == 0.0);
      CHECK(exit_time_max(field) == doctest::Approx(1.5 * (n / 2.0) * (n / 2.0)).epsilon(1e-9));
    }
  }

  TEST_CASE("one-step region: phi equals the waiting time when the self-jump is absent") {
    auto g = build_path(2);
    auto net = build_epsilon_net(g, 1.0, 1);
    auto graph = proximity_graph(g, net, 2.0, false);  // no self-loops
    auto kernel = graph_kernel(g, graph, false);
    auto region = ball_region(g, kernel, 1, 0.0);
    REQUIRE(region.size() == 1);
    auto field = solve_exit_times(kernel, region);
    CHECK(field.values[1] == doctest::Approx(1.0).epsilon(1e-14));
    auto mc = monte_carlo_exit(kernel, region, 1, 500, 3);
    CHECK(mc.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mc.stderr_mean == 0.0);
  }

  TEST_CASE("trapped region is rejected before solving") {
    auto g = build_path(4);
    NetIndex net;
    net.epsilon = 1.0;
    net.members = {0, 2, 4};
    auto graph = covering_graph(g, net, 1.0);  // threshold 2, hits no pair: self-loops only
    REQUIRE_FALSE(is_connected(graph));  // three isolated self-loops
    auto kernel = graph_kernel(g, graph, false);
    auto region = ball_region(g, kernel, 0, 2.0);
    REQUIRE(region.size() == 2);
    CHECK_THROWS_AS(solve_exit_times(kernel, region), InvalidArgument);
  }

  TEST_CASE("region validation") {
    auto lp = lazy_path(10);
    CHECK_THROWS_AS(ball_region(lp.space, lp.kernel, 5, -1.0), InvalidArgument);
    CHECK_THROWS_AS(ball_region(lp.space, lp.kernel, 999, 1.0), InvalidArgument);
    // whole space: complement empty
    CHECK_THROWS_AS(ball_region(lp.space, lp.kernel, 5, 100.0), InvalidArgument);
    // open ball of radius 0 cannot contain its center
    CHECK_THROWS_AS(ball_region(lp.space, lp.kernel, 5, 0.0, false), InvalidArgument);
  }

  TEST_CASE("1-d grid ball walk reproduces the quadratic exit profile") {
    auto g = build_euclidean(1, 1.0, 0.002);
    double r = 0.05;
    auto kernel = ball_kernel_w(g, r);
    double R = 1.0;
    auto region = ball_region(g, kernel, origin_id(g), R);
    auto field = solve_exit_times(kernel, region);
    CHECK(field.residual < 1e-9);
    // the absorbing boundary adds a near-constant overshoot offset of order
    // R/r steps, so deviations are judged against the profile height
    double f0 = 3.0 * R * R / (r * r);
    double worst_profile = 0.0;
    for (Id i : region.inside) {
      double x = kernel.state_point(i)[0];
      if (std::abs(x) > R - 3 * r) continue;
      double predicted = 3.0 * (R * R - x * x) / (r * r);
      worst_profile = std::max(worst_profile, std::abs(field.values[i] - predicted) / f0);
    }
    CHECK(worst_profile < 0.05);
    CHECK(field.values[origin_id(g)] == doctest::Approx(f0).epsilon(0.05));
    // positivity: phi >= waiting on the region, exactly 0 off it
    for (Id i = 0; i < kernel.state_count(); ++i) {
      if (region.member[i]) {
        CHECK(field.values[i] >= kernel.waiting[i] - 1e-12);
      } else {
        CHECK(field.values[i] == 0.0);
      }
    }
  }

  TEST_CASE("nested regions: pointwise monotone exit times") {
    auto g = build_euclidean(1, 1.0, 0.01);
    auto kernel = ball_kernel_w(g, 0.105);
    Id c = origin_id(g);
    auto inner = ball_region(g, kernel, c, 0.3);
    auto outer = ball_region(g, kernel, c, 0.5);
    auto fi = solve_exit_times(kernel, inner);
    auto fo = solve_exit_times(kernel, outer);
    for (Id i = 0; i < kernel.state_count(); ++i) {
      CHECK(fi.values[i] <= fo.values[i] + 1e-12);
    }
    CHECK(exit_time_max(fi) <= exit_time_max(fo));
  }

  TEST_CASE("iterative solver agrees with the direct one on a reversible kernel") {
    auto g = build_euclidean(1, 1.0, 0.01);
    auto kernel = ball_kernel_w(g, 0.105);
    auto region = ball_region(g, kernel, origin_id(g), 0.5);
    auto direct = solve_exit_times(kernel, region);
    auto iter = solve_exit_times(kernel, region, 10);  // force the iterative path
    CHECK(direct.solver == "sparse_lu");
    CHECK(iter.solver == "cg");
    CHECK(iter.residual < 1e-7);
    double worst = 0.0;
    for (Id i : region.inside) {
      worst = std::max(worst, std::abs(direct.values[i] - iter.values[i]));
    }
    CHECK(worst < 1e-6 * exit_time_max(direct));
  }

  TEST_CASE("iterative solver falls back to a nonsymmetric method when not reversible") {
    auto g = build_path(2);
    auto net = build_epsilon_net(g, 1.0, 1);
    auto graph = proximity_graph(g, net, 2.0, true);
    std::vector<double> masses = {1.0, 2.0, 7.0};
    auto kernel = graph_kernel(g, graph, false, &masses);
    REQUIRE(detailed_balance_violation(kernel) > 1e-3);
    auto region = ball_region(g, kernel, 1, 0.0);
    auto field = solve_exit_times(kernel, region, 0);
    CHECK(field.solver == "bicgstab");
    // 1x1 system: phi = 1 / (1 - P(1,1)), P(1,1) = 2/10
    CHECK(field.values[1] == doctest::Approx(1.25).epsilon(1e-9));
  }

  TEST_CASE("constant-exponent renormalized walk rescales exit times by r^beta") {
    auto g = build_euclidean(1, 1.0, 0.01);
    double r = 0.105;
    ScalarField beta;
    beta.values.assign(g.size(), 2.0);
    auto kw = ball_kernel_w(g, r);
    auto kp = ball_kernel_p(g, r, beta);
    Id c = origin_id(g);
    auto region_w = ball_region(g, kw, c, 0.4);
    auto region_p = ball_region(g, kp, c, 0.4);
    auto fw = solve_exit_times(kw, region_w);
    auto fp = solve_exit_times(kp, region_p);
    double scale = r * r;
    double worst = 0.0;
    for (Id i : region_w.inside) {
      worst = std::max(worst, std::abs(fp.values[i] - scale * fw.values[i]));
    }
    CHECK(worst < 1e-9 * scale * exit_time_max(fw));
  }

  TEST_CASE("Monte Carlo estimate brackets the solve on the lazy path") {
    auto lp = lazy_path(10);
    auto region = ball_region(lp.space, lp.kernel, 5, 4.0);
    auto field = solve_exit_times(lp.kernel, region);
    auto mc = monte_carlo_exit(lp.kernel, region, 5, 20000, 11);
    CHECK(mc.stderr_mean > 0.0);
    CHECK(std::abs(mc.mean - field.values[5]) <= 4.0 * mc.stderr_mean);

    auto again = monte_carlo_exit(lp.kernel, region, 5, 20000, 11);
    CHECK(again.mean == mc.mean);  // bitwise deterministic under a fixed seed
    CHECK(again.stderr_mean == mc.stderr_mean);
    auto other = monte_carlo_exit(lp.kernel, region, 5, 20000, 12);
    CHECK(other.mean != mc.mean);

    CHECK_THROWS_AS(monte_carlo_exit(lp.kernel, region, 0, 100, 1), InvalidArgument);
    CHECK_THROWS_AS(monte_carlo_exit(lp.kernel, region, 5, 0, 1), InvalidArgument);
  }

  TEST_CASE("exit-time tail fraction is 0 at t=0, 1 for huge t, monotone in t") {
    auto lp = lazy_path(10);
    auto region = ball_region(lp.space, lp.kernel, 5, 4.0);
    CHECK(exit_tail_estimate(lp.kernel, region, 5, 0.0, 2000, 5) == 0.0);
    CHECK(exit_tail_estimate(lp.kernel, region, 5, 37.5e6, 2000, 5) == 1.0);
    double prev = -1.0;
    for (double t : {5.0, 20.0, 50.0, 150.0}) {
      double p = exit_tail_estimate(lp.kernel, region, 5, t, 2000, 5);
      CHECK(p >= prev);
      prev = p;
    }
    double small = exit_tail_estimate(lp.kernel, region, 5, 5.0, 2000, 5);
    CHECK(small < 1.0);
  }
}
