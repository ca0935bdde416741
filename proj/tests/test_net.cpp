#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"
#include "exitdim/net.hpp"
#include "exitdim/space.hpp"

using namespace exitdim;

namespace {

FiniteSpace gasket6() {
  FractalSpec fs;
  fs.kind = SpaceKind::gasket;
  fs.stage = 6;
  fs.p1 = fs.p2 = 0.5;
  return build_fractal(fs);
}

// Brute-force verification of the net's defining properties by full scans.
void check_net_brute(const FiniteSpace& s, const NetIndex& net) {
  for (std::size_t i = 0; i < net.members.size(); ++i)
    for (std::size_t j = i + 1; j < net.members.size(); ++j)
      CHECK(s.distance(net.members[i], net.members[j]) >= net.epsilon);
  for (Id p = 0; p < s.size(); ++p) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Id m : net.members) dmin = std::min(dmin, s.distance(p, m));
    CHECK(dmin < net.epsilon);
  }
}

}  // namespace

TEST_SUITE("net") {
  TEST_CASE("epsilon above the diameter gives a single-member net") {
    auto g = gasket6();
    auto net = build_epsilon_net(g, 10.0, 3);
    CHECK(net.members.size() == 1);
  }

  TEST_CASE("integer-distance path: epsilon=1 keeps every state") {
    auto p = build_path(10);
    auto net = build_epsilon_net(p, 1.0, 5);
    CHECK(net.members.size() == 11);
  }

  TEST_CASE("gasket stage-6 net at 2^-4: brute-force validity, count bounds, regression") {
    auto g = gasket6();
    double eps = 1.0 / 16;
    auto net = build_epsilon_net(g, eps, 7);
    check_net_brute(g, net);
    double law = std::pow(eps, -std::log(3.0) / std::log(2.0));
    CHECK(static_cast<double>(net.members.size()) >= law / 4.0);
    CHECK(static_cast<double>(net.members.size()) <= law * 4.0);
    CHECK(net.members.size() == 58);  // fixed-seed regression value
    auto again = build_epsilon_net(g, eps, 7);
    CHECK(again.members == net.members);
  }

  TEST_CASE("extension keeps given members and rejects invalid seeds") {
    auto g = gasket6();
    auto coarse = build_epsilon_net(g, 0.25, 11);
    auto fine = build_epsilon_net(g, 0.125, 11, &coarse);
    for (Id m : coarse.members)
      CHECK(std::binary_search(fine.members.begin(), fine.members.end(), m));
    check_net_brute(g, fine);

    NetIndex bad;
    bad.epsilon = 0.125;
    bad.members = {0, 1};  // adjacent cells, far closer than 0.125
    CHECK_THROWS_AS(build_epsilon_net(g, 0.125, 11, &bad), InvalidArgument);
  }

  TEST_CASE("tiling: all-points net tiles trivially") {
    auto p = build_path(6);
    NetIndex net;
    net.epsilon = 0.5;
    net.members.resize(p.size());
    for (Id i = 0; i < p.size(); ++i) net.members[i] = i;
    auto t = build_voronoi_tiling(p, net);
    for (Id i = 0; i < p.size(); ++i) CHECK(t.assignment[i] == i);
  }

  TEST_CASE("tiling: equidistant point goes to the lower member id") {
    auto p = build_path(10);
    NetIndex net;
    net.epsilon = 5.0;
    net.members = {3, 7};
    auto t = build_voronoi_tiling(p, net);
    CHECK(t.assignment[5] == 3);  // d=2 to both members
    CHECK(t.assignment[6] == 7);
    CHECK(t.assignment[2] == 3);
  }

  TEST_CASE("tiling on a 1-d grid: half-ball containment and tile diameter") {
    auto g = build_euclidean(1, 1.0, 0.01);
    double eps = 0.1;
    auto net = build_epsilon_net(g, eps, 2);
    auto t = build_voronoi_tiling(g, net);
    std::map<Id, std::vector<Id>> tiles;
    for (Id p = 0; p < g.size(); ++p) tiles[t.assignment[p]].push_back(p);
    // partition totals
    std::size_t covered = 0;
    for (auto& [c, pts] : tiles) covered += pts.size();
    CHECK(covered == static_cast<std::size_t>(g.size()));
    for (Id p = 0; p < g.size(); ++p) {
      for (Id m : net.members)
        if (g.distance(p, m) < eps / 2) CHECK(t.assignment[p] == m);  // strict half ball
      CHECK(g.distance(p, t.assignment[p]) < eps);  // tile inside B_eps(center)
    }
    for (auto& [c, pts] : tiles)
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
          CHECK(g.distance(pts[i], pts[j]) < 2 * eps);
  }

  TEST_CASE("verify_net flags valid, undercovered, and duplicated nets") {
    auto g = gasket6();
    auto net = build_epsilon_net(g, 0.1, 9);
    auto rep = verify_net(g, net);
    CHECK(rep.ok);
    CHECK(rep.min_separation >= 0.1);
    CHECK(rep.max_covering_radius < 0.1);

    NetIndex broken = net;
    broken.members.erase(broken.members.begin());
    auto rep2 = verify_net(g, broken);
    CHECK_FALSE(rep2.ok);
    CHECK(rep2.max_covering_radius >= 0.1);

    NetIndex dup = net;
    dup.members.push_back(dup.members.back());
    auto rep3 = verify_net(g, dup);
    CHECK_FALSE(rep3.ok);
    CHECK(rep3.min_separation == 0.0);
  }

  TEST_CASE("cube tree: depth 1 equals the voronoi disjointization of the 1-net") {
    auto g = gasket6();
    auto tree = build_dyadic_cubes(g, 0.3, 1, 4);
    auto tiling = build_voronoi_tiling(g, tree.nets[0]);
    CHECK(tree.cube_of[0] == tiling.assignment);
  }

  TEST_CASE("cube tree on a 1-d grid: nesting, net law, sandwich bounds") {
    auto g = build_euclidean(1, 1.0, 0.005);
    double r = 0.3;
    int depth = 3;
    auto tree = build_dyadic_cubes(g, r, depth, 13);

    // levels are nets at scale r^k and nested
    double eps = 1.0;
    for (int k = 0; k < depth; ++k) {
      NetIndex level = tree.nets[k];
      level.epsilon = eps;
      auto rep = verify_net(g, level);
      CHECK(rep.ok);
      eps *= r;
    }
    for (int k = 0; k + 1 < depth; ++k)
      for (Id m : tree.nets[k].members)
        CHECK(std::binary_search(tree.nets[k + 1].members.begin(), tree.nets[k + 1].members.end(), m));

    // each level-(k+1) cube meets exactly one level-k cube
    for (int k = 0; k + 1 < depth; ++k) {
      std::map<Id, std::set<Id>> parents;
      for (Id p = 0; p < g.size(); ++p) parents[tree.cube_of[k + 1][p]].insert(tree.cube_of[k][p]);
      for (auto& [child, par] : parents) CHECK(par.size() == 1);
    }

    // sandwich: inner open ball inside the cube, cube inside outer closed ball
    double inner_c = (1 - 3 * r) / (2 - 2 * r);
    double outer_c = 1 / (1 - r);
    double scale = 1.0;
    for (int k = 0; k < depth; ++k) {
      for (Id p = 0; p < g.size(); ++p) {
        Id own = tree.cube_of[k][p];
        CHECK(g.distance(p, own) <= outer_c * scale);
        for (Id c : tree.nets[k].members)
          if (g.distance(p, c) < inner_c * scale) CHECK(own == c);
      }
      scale *= r;
    }
  }

  TEST_CASE("cube tree parameter validation") {
    auto g = build_euclidean(1, 1.0, 0.05);
    CHECK_THROWS_AS(build_dyadic_cubes(g, 0.4, 2, 1), InvalidArgument);
    CHECK_THROWS_AS(build_dyadic_cubes(g, 0.3, 0, 1), InvalidArgument);
  }
}
