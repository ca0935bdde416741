#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "exitdim/space.hpp"

using namespace exitdim;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kSqrt3 = std::numbers::sqrt3;

FractalSpec fractal(SpaceKind k, int stage, double p1, double p2) {
  FractalSpec s;
  s.kind = k;
  s.stage = stage;
  s.p1 = p1;
  s.p2 = p2;
  return s;
}

// Independent geometry replay used as the containment oracle: full regions
// (not just representative points) for gasket triangles and carpet/vicsek
// rectangles, emitted in the same labeling order the builder documents.
struct Tri {
  double vx, vy, s;
  bool contains(double x, double y, double tol) const {
    double lx = x - vx, ly = y - vy;
    return ly >= -tol && ly <= kSqrt3 * lx + tol && ly <= kSqrt3 * (s - lx) + tol;
  }
};
struct Rect {
  double x, y, w, h;
  bool contains(double px, double py, double tol) const {
    return px >= x - tol && px <= x + w + tol && py >= y - tol && py <= y + h + tol;
  }
};

void gasket_regions(int depth, Tri t, double a, double b, std::vector<Tri>& out) {
  if (depth == 0) {
    out.push_back(t);
    return;
  }
  double rho = 0.5 * (a + b), sc = t.s * rho, w = (b - a) / 3;
  gasket_regions(depth - 1, {t.vx, t.vy, sc}, a, a + w, out);
  gasket_regions(depth - 1, {t.vx + (t.s - sc), t.vy, sc}, a + w, a + 2 * w, out);
  gasket_regions(depth - 1, {t.vx + 0.5 * (t.s - sc), t.vy + kSqrt3 * 0.5 * (t.s - sc), sc},
                 a + 2 * w, b, out);
}

void carpet_regions(int depth, Rect r, double a, double b, std::vector<Rect>& out) {
  if (depth == 0) {
    out.push_back(r);
    return;
  }
  double rho = 0.5 * (a + b);
  double mw = rho * r.w, mh = rho * r.h, cw = 0.5 * (r.w - mw), ch = 0.5 * (r.h - mh);
  const double ox[8] = {0, cw, cw + mw, cw + mw, cw + mw, cw, 0, 0};
  const double oy[8] = {0, 0, 0, ch, ch + mh, ch + mh, ch + mh, ch};
  const double ww[8] = {cw, mw, cw, cw, cw, mw, cw, cw};
  const double hh[8] = {ch, ch, ch, mh, ch, ch, ch, mh};
  double w = (b - a) / 8;
  for (int i = 0; i < 8; ++i)
    carpet_regions(depth - 1, {r.x + ox[i], r.y + oy[i], ww[i], hh[i]}, a + i * w, a + (i + 1) * w,
                   out);
}

void vicsek_regions(int depth, Rect r, double a, double b, std::vector<Rect>& out) {
  if (depth == 0) {
    out.push_back(r);
    return;
  }
  double rho = 0.5 * (a + b), m = rho * r.w, c = 0.5 * (r.w - m), w = (b - a) / 3;
  vicsek_regions(depth - 1, {r.x, r.y, c, c}, a, a + w, out);
  vicsek_regions(depth - 1, {r.x + c + m, r.y, c, c}, a + 2 * w, b, out);
  vicsek_regions(depth - 1, {r.x + c, r.y + c, m, m}, a + w, a + 2 * w, out);
  vicsek_regions(depth - 1, {r.x, r.y + c + m, c, c}, a, a + w, out);
  vicsek_regions(depth - 1, {r.x + c + m, r.y + c + m, c, c}, a + 2 * w, b, out);
}

}  // namespace

TEST_SUITE("space") {
  TEST_CASE("generator point counts follow 4^n / 3^n / 8^n / 5^n") {
    CHECK(build_fractal(fractal(SpaceKind::koch, 3, 60 * kDeg, 60 * kDeg)).size() == 64);
    CHECK(build_fractal(fractal(SpaceKind::gasket, 4, 0.5, 0.5)).size() == 81);
    CHECK(build_fractal(fractal(SpaceKind::carpet, 3, 1.0 / 3, 1.0 / 3)).size() == 512);
    CHECK(build_fractal(fractal(SpaceKind::vicsek, 4, 1.0 / 3, 1.0 / 3)).size() == 625);
    CHECK(build_fractal(fractal(SpaceKind::gasket, 0, 0.5, 0.5)).size() == 1);
  }

  TEST_CASE("constant-angle koch stage 3 has all segment lengths (1/3)^3") {
    auto s = build_fractal(fractal(SpaceKind::koch, 3, 60 * kDeg, 60 * kDeg));
    for (double d : s.diameters) CHECK(d == doctest::Approx(1.0 / 27).epsilon(1e-12));
  }

  TEST_CASE("classical gasket stage 4 has all cell sides (1/2)^4") {
    auto s = build_fractal(fractal(SpaceKind::gasket, 4, 0.5, 0.5));
    for (double d : s.diameters) CHECK(d == doctest::Approx(1.0 / 16).epsilon(1e-12));
  }

  TEST_CASE("variable koch stage 6: 4096 segments, lengths shrink per generation and vary") {
    auto s5 = build_fractal(fractal(SpaceKind::koch, 5, 5 * kDeg, 80 * kDeg));
    auto s6 = build_fractal(fractal(SpaceKind::koch, 6, 5 * kDeg, 80 * kDeg));
    CHECK(s6.size() == 4096);
    double max5 = *std::max_element(s5.diameters.begin(), s5.diameters.end());
    double min5 = *std::min_element(s5.diameters.begin(), s5.diameters.end());
    double max6 = *std::max_element(s6.diameters.begin(), s6.diameters.end());
    double min6 = *std::min_element(s6.diameters.begin(), s6.diameters.end());
    CHECK(max6 < max5);
    CHECK(min6 < min5);
    CHECK(min6 < max6);  // lengths vary along the curve
    // every child is strictly shorter than its parent
    for (Id c = 0; c < s6.size(); ++c) CHECK(s6.diameters[c] < s5.diameters[c / 4]);
  }

  TEST_CASE("koch endpoints pinned to (0,0) and (1,0)") {
    for (int stage : {1, 4, 7}) {
      auto s = build_fractal(fractal(SpaceKind::koch, stage, 5 * kDeg, 80 * kDeg));
      const double* first = s.point(0);
      const double* last = s.point(s.size() - 1);
      // first cell runs from (0,0) along +x, last cell ends at (1,0) along +x
      CHECK(first[1] == 0.0);
      CHECK(first[0] == doctest::Approx(s.diameters[0] / 2).epsilon(1e-13));
      CHECK(last[1] == 0.0);
      CHECK(last[0] == doctest::Approx(1.0 - s.diameters[s.size() - 1] / 2).epsilon(1e-13));
      for (Id i = 0; i < s.size(); ++i) {
        CHECK(s.point(i)[0] >= -1e-12);
        CHECK(s.point(i)[0] <= 1 + 1e-12);
      }
    }
  }

  TEST_CASE("child centers lie in exactly one parent region (gasket)") {
    auto parent = build_fractal(fractal(SpaceKind::gasket, 3, 0.35, 0.5));
    auto child = build_fractal(fractal(SpaceKind::gasket, 4, 0.35, 0.5));
    std::vector<Tri> regions;
    gasket_regions(3, {0, 0, 1}, 0.35, 0.5, regions);
    REQUIRE(static_cast<Id>(regions.size()) == parent.size());
    for (Id c = 0; c < child.size(); ++c) {
      int hits = 0;
      int owner = -1;
      for (int p = 0; p < static_cast<int>(regions.size()); ++p)
        if (regions[p].contains(child.point(c)[0], child.point(c)[1], 1e-12)) {
          ++hits;
          owner = p;
        }
      CHECK(hits == 1);
      CHECK(owner == c / 3);
    }
  }

  TEST_CASE("child centers lie in exactly one parent region (carpet, vicsek)") {
    auto check_rects = [](SpaceKind kind, int stage, int branch, auto region_fn) {
      auto parent = build_fractal(fractal(kind, stage, 0.2, 0.6));
      auto child = build_fractal(fractal(kind, stage + 1, 0.2, 0.6));
      std::vector<Rect> regions;
      region_fn(stage, Rect{0, 0, 1, 1}, 0.2, 0.6, regions);
      REQUIRE(static_cast<Id>(regions.size()) == parent.size());
      for (Id c = 0; c < child.size(); ++c) {
        int hits = 0;
        int owner = -1;
        for (int p = 0; p < static_cast<int>(regions.size()); ++p)
          if (regions[p].contains(child.point(c)[0], child.point(c)[1], 1e-12)) {
            ++hits;
            owner = p;
          }
        CHECK(hits == 1);
        CHECK(owner == c / branch);
      }
    };
    check_rects(SpaceKind::carpet, 2, 8, [](int d, Rect r, double a, double b, auto& o) {
      carpet_regions(d, r, a, b, o);
    });
    check_rects(SpaceKind::vicsek, 3, 5, [](int d, Rect r, double a, double b, auto& o) {
      vicsek_regions(d, r, a, b, o);
    });
  }

  TEST_CASE("euclidean grid: counts, weights, coverage") {
    auto g1 = build_euclidean(1, 1.0, 0.01);
    CHECK(g1.size() == 401);
    CHECK(g1.point(0)[0] == doctest::Approx(-2.0));
    CHECK(g1.point(400)[0] == doctest::Approx(2.0));
    for (double w : g1.weights) CHECK(w == 0.01);
    CHECK(g1.total_mass == doctest::Approx(4.01));

    auto g2 = build_euclidean(2, 1.0, 0.05);
    for (Id i = 0; i < g2.size(); ++i) {
      CHECK(g2.weights[i] == doctest::Approx(0.0025).epsilon(1e-14));
      CHECK(std::hypot(g2.point(i)[0], g2.point(i)[1]) <= 2.0 + 1e-12);
    }
    CHECK_THROWS_AS(build_euclidean(1, 1.0, 2.0), InvalidArgument);
    CHECK_THROWS_AS(build_euclidean(3, 1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(build_euclidean(2, 1.0, 0.001, 1000), InvalidArgument);
  }

  TEST_CASE("path graph states and distances") {
    CHECK(build_path(2).size() == 3);
    auto p = build_path(10);
    CHECK(p.size() == 11);
    CHECK(p.distance(0, 10) == doctest::Approx(10.0));
    CHECK(p.metric == Metric::graph_distance);
    CHECK(build_path(1000).size() == 1001);
    CHECK(p.total_mass == doctest::Approx(11.0));
    CHECK_THROWS_AS(build_path(1), InvalidArgument);
  }

  TEST_CASE("koch_alpha closed form") {
    CHECK(koch_alpha(0.0, 5 * kDeg, 80 * kDeg) == doctest::Approx(1.001).epsilon(5e-4));
    CHECK(koch_alpha(1.0, 5 * kDeg, 80 * kDeg) == doctest::Approx(1.625).epsilon(5e-4));
    for (double t : {0.0, 0.3, 1.0})
      CHECK(koch_alpha(t, 60 * kDeg, 60 * kDeg) ==
            doctest::Approx(2 * std::log(2.0) / std::log(3.0)).epsilon(1e-14));
    CHECK(gasket_alpha(0.5, 0.5, 0.5) ==
          doctest::Approx(std::log(3.0) / std::log(2.0)).epsilon(1e-14));
  }

  TEST_CASE("sampled triangle inequality holds") {
    auto s = build_fractal(fractal(SpaceKind::koch, 5, 5 * kDeg, 80 * kDeg));
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<Id> pick(0, s.size() - 1);
    for (int k = 0; k < 1000; ++k) {
      Id a = pick(rng), b = pick(rng), c = pick(rng);
      CHECK(s.distance(a, c) <= s.distance(a, b) + s.distance(b, c) + 1e-12);
    }
  }

  TEST_CASE("assign_measure: uniform and diameter-power") {
    auto g = build_fractal(fractal(SpaceKind::gasket, 4, 0.5, 0.5));
    assign_measure(g, MeasureMode::uniform_cell);
    for (double w : g.weights) CHECK(w == doctest::Approx(1.0 / 81).epsilon(1e-13));
    double sum = 0;
    for (double w : g.weights) sum += w;
    CHECK(std::abs(sum - 1.0) < 1e-12);

    // constant exponent on a constant-ratio fractal reduces to uniform_cell
    ScalarField q;
    q.values.assign(g.size(), std::log(3.0) / std::log(2.0));
    assign_measure(g, MeasureMode::diameter_power, &q);
    for (double w : g.weights) CHECK(w == doctest::Approx(1.0 / 81).epsilon(1e-12));

    auto k = build_fractal(fractal(SpaceKind::koch, 6, 5 * kDeg, 80 * kDeg));
    auto alpha = local_dimension_field(k);
    assign_measure(k, MeasureMode::diameter_power, &alpha);
    double total = 0;
    for (double w : k.weights) {
      CHECK(w > 0);
      total += w;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);

    auto p = build_path(10);
    CHECK_THROWS_AS(assign_measure(p, MeasureMode::diameter_power, &alpha), InvalidArgument);
  }

  TEST_CASE("variable gasket parameters interpolate the ratio range") {
    auto g = build_fractal(fractal(SpaceKind::gasket, 5, 0.35, 0.5));
    CHECK(g.size() == 243);
    for (Id i = 0; i < g.size(); ++i) {
      CHECK(g.cell_param[i] >= 0.0);
      CHECK(g.cell_param[i] <= 1.0);
      CHECK(g.diameters[i] >= std::pow(0.35, 5) - 1e-12);
      CHECK(g.diameters[i] <= std::pow(0.5, 5) + 1e-12);
    }
    // cells fill [0,1] x [0, sqrt(3)/2]
    for (Id i = 0; i < g.size(); ++i) {
      CHECK(g.point(i)[0] > 0);
      CHECK(g.point(i)[0] < 1);
      CHECK(g.point(i)[1] > 0);
      CHECK(g.point(i)[1] < std::numbers::sqrt3 / 2);
    }
  }

  TEST_CASE("invalid generator parameters are rejected") {
    CHECK_THROWS_AS(build_fractal(fractal(SpaceKind::koch, 2, 0.0, 1.0)), InvalidArgument);
    CHECK_THROWS_AS(build_fractal(fractal(SpaceKind::koch, 2, 1.0, 1.6)), InvalidArgument);
    CHECK_THROWS_AS(build_fractal(fractal(SpaceKind::gasket, 2, 0.3, 0.6)), InvalidArgument);
    CHECK_THROWS_AS(build_fractal(fractal(SpaceKind::gasket, 2, 0.0, 0.0)), InvalidArgument);
    CHECK_THROWS_AS(build_fractal(fractal(SpaceKind::carpet, 2, 0.5, 0.4)), InvalidArgument);
    FractalSpec cap = fractal(SpaceKind::gasket, 20, 0.5, 0.5);
    CHECK_THROWS_AS(build_fractal(cap), InvalidArgument);
  }
}
