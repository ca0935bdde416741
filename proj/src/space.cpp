#include "exitdim/space.hpp"

#include <cmath>
#include <numbers>

namespace exitdim {

const char* to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "graph_distance";
}

const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::koch: return "koch";
    case SpaceKind::gasket: return "gasket";
    case SpaceKind::carpet: return "carpet";
    case SpaceKind::vicsek: return "vicsek";
    case SpaceKind::euclidean_grid: return "euclidean_grid";
    case SpaceKind::path_graph: return "path_graph";
  }
  return "?";
}

Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "graph_distance") return Metric::graph_distance;
  throw InvalidArgument("unknown metric: " + s);
}

SpaceKind space_kind_from_string(const std::string& s) {
  if (s == "koch") return SpaceKind::koch;
  if (s == "gasket") return SpaceKind::gasket;
  if (s == "carpet") return SpaceKind::carpet;
  if (s == "vicsek") return SpaceKind::vicsek;
  if (s == "euclidean_grid") return SpaceKind::euclidean_grid;
  if (s == "path_graph") return SpaceKind::path_graph;
  throw InvalidArgument("unknown space kind: " + s);
}

double koch_alpha(double t, double theta1, double theta2) {
  double theta = theta1 + t * (theta2 - theta1);
  return 2.0 * std::log(2.0) / std::log(2.0 + 2.0 * std::cos(theta));
}

double gasket_alpha(double t, double r1, double r2) {
  double rho = r1 + t * (r2 - r1);
  return std::log(3.0) / std::log(1.0 / rho);
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt3 = std::numbers::sqrt3;

// Midpoint of a parameter range; this is the contraction/angle the cell uses
// when it subdivides, and the nominal parameter value of the cell itself.
double range_mid(double a, double b) { return 0.5 * (a + b); }

double range_to_t(double a, double b, double p1, double p2) {
  if (p2 == p1) return 0.5;
  return (range_mid(a, b) - p1) / (p2 - p1);
}

std::int64_t ipow(std::int64_t base, int e) {
  std::int64_t v = 1;
  while (e-- > 0) v *= base;
  return v;
}

struct Emitter {
  FiniteSpace* out;
  double p1, p2;
  void push(double x, double y, double diam, double a, double b) {
    out->coords.push_back(x);
    out->coords.push_back(y);
    out->diameters.push_back(diam);
    out->cell_param.push_back(range_to_t(a, b, p1, p2));
  }
};

// Koch cell: directed segment p0 -> p1 carrying an angle range [a, b].
// Subdivision uses the mid-range angle theta and L = |p1-p0| / (2 + 2 cos theta):
// four children of equal length L, the middle two forming the bump on the left
// of the direction of travel, each child taking one quarter of [a, b].
void koch_rec(Emitter& em, int depth, const std::array<double, 2>& q0,
              const std::array<double, 2>& q1, double a, double b) {
  if (depth == 0) {
    double dx = q1[0] - q0[0], dy = q1[1] - q0[1];
    em.push(0.5 * (q0[0] + q1[0]), 0.5 * (q0[1] + q1[1]), std::sqrt(dx * dx + dy * dy), a, b);
    return;
  }
  double theta = range_mid(a, b);
  double dx = q1[0] - q0[0], dy = q1[1] - q0[1];
  double len = std::sqrt(dx * dx + dy * dy);
  double L = len / (2.0 + 2.0 * std::cos(theta));
  double ux = dx / len, uy = dy / len;
  double nx = -uy, ny = ux;
  std::array<double, 2> m1{q0[0] + L * ux, q0[1] + L * uy};
  std::array<double, 2> m2{m1[0] + L * (std::cos(theta) * ux + std::sin(theta) * nx),
                           m1[1] + L * (std::cos(theta) * uy + std::sin(theta) * ny)};
  std::array<double, 2> m3{q0[0] + (L + 2.0 * L * std::cos(theta)) * ux,
                           q0[1] + (L + 2.0 * L * std::cos(theta)) * uy};
  double w = (b - a) / 4.0;
  koch_rec(em, depth - 1, q0, m1, a, a + w);
  koch_rec(em, depth - 1, m1, m2, a + w, a + 2 * w);
  koch_rec(em, depth - 1, m2, m3, a + 2 * w, a + 3 * w);
  koch_rec(em, depth - 1, m3, q1, a + 3 * w, b);
}

// Gasket cell: upward equilateral triangle with bottom-left vertex v and side s.
// Children are the three corner triangles of side s * rho (rho = mid-range
// contraction), labeled bottom-left / bottom-right / top, ranges in thirds.
void gasket_rec(Emitter& em, int depth, double vx, double vy, double s, double a, double b) {
  if (depth == 0) {
    em.push(vx + 0.5 * s, vy + s * kSqrt3 / 6.0, s, a, b);
    return;
  }
  double rho = range_mid(a, b);
  double sc = s * rho;
  double w = (b - a) / 3.0;
  gasket_rec(em, depth - 1, vx, vy, sc, a, a + w);
  gasket_rec(em, depth - 1, vx + (s - sc), vy, sc, a + w, a + 2 * w);
  gasket_rec(em, depth - 1, vx + 0.5 * (s - sc), vy + kSqrt3 * 0.5 * (s - sc), sc, a + 2 * w, b);
}

// Carpet cell: axis-aligned rectangle (lower-left (vx,vy), base bw, height bh).
// The open center rectangle of base rho*bw and height rho*bh is removed; the
// eight surrounding rectangles survive, labeled R1..R8 counterclockwise from
// the bottom-left corner, ranges in eighths.
void carpet_rec(Emitter& em, int depth, double vx, double vy, double bw, double bh, double a,
                double b) {
  if (depth == 0) {
    em.push(vx + 0.5 * bw, vy + 0.5 * bh, std::sqrt(bw * bw + bh * bh), a, b);
    return;
  }
  double rho = range_mid(a, b);
  double mw = rho * bw, mh = rho * bh;
  double cw = 0.5 * (bw - mw), ch = 0.5 * (bh - mh);
  const double ox[8] = {0, cw, cw + mw, cw + mw, cw + mw, cw, 0, 0};
  const double oy[8] = {0, 0, 0, ch, ch + mh, ch + mh, ch + mh, ch};
  const double ww[8] = {cw, mw, cw, cw, cw, mw, cw, cw};
  const double hh[8] = {ch, ch, ch, mh, ch, ch, ch, mh};
  double w = (b - a) / 8.0;
  for (int i = 0; i < 8; ++i)
    carpet_rec(em, depth - 1, vx + ox[i], vy + oy[i], ww[i], hh[i], a + i * w, a + (i + 1) * w);
}

// Vicsek cell: axis-aligned square (lower-left (vx,vy), side L). The center
// square of side rho*L and the four corner squares of side (L - rho*L)/2
// survive (edge squares R2, R4, R6, R8 are removed). The parameter range is
// split in thirds: corner pair {R1, R7} first third, center R5 second,
// corner pair {R3, R9} last.
void vicsek_rec(Emitter& em, int depth, double vx, double vy, double L, double a, double b) {
  if (depth == 0) {
    em.push(vx + 0.5 * L, vy + 0.5 * L, L * std::sqrt(2.0), a, b);
    return;
  }
  double rho = range_mid(a, b);
  double m = rho * L;
  double c = 0.5 * (L - m);
  double w = (b - a) / 3.0;
  vicsek_rec(em, depth - 1, vx, vy, c, a, a + w);                      // R1 bottom-left
  vicsek_rec(em, depth - 1, vx + c + m, vy, c, a + 2 * w, b);          // R3 bottom-right
  vicsek_rec(em, depth - 1, vx + c, vy + c, m, a + w, a + 2 * w);      // R5 center
  vicsek_rec(em, depth - 1, vx, vy + c + m, c, a, a + w);              // R7 top-left
  vicsek_rec(em, depth - 1, vx + c + m, vy + c + m, c, a + 2 * w, b);  // R9 top-right
}

}  // namespace

FiniteSpace build_fractal(const FractalSpec& spec) {
  if (spec.stage < 0) throw InvalidArgument("stage must be >= 0");
  FiniteSpace s;
  s.kind = spec.kind;
  s.metric = Metric::euclidean;
  s.stage = spec.stage;

  std::int64_t branching = 0;
  switch (spec.kind) {
    case SpaceKind::koch:
      if (!(spec.p1 > 0 && spec.p1 <= spec.p2 && spec.p2 < kPi / 2))
        throw InvalidArgument("koch requires 0 < theta1 <= theta2 < pi/2");
      branching = 4;
      break;
    case SpaceKind::gasket:
      if (!((spec.p1 >= 0 && spec.p1 < spec.p2 && spec.p2 <= 0.5) ||
            (spec.p1 == spec.p2 && spec.p1 > 0 && spec.p1 <= 0.5)))
        throw InvalidArgument("gasket requires 0 <= r1 < r2 <= 1/2 or r1 == r2 in (0, 1/2]");
      branching = 3;
      break;
    case SpaceKind::carpet:
    case SpaceKind::vicsek:
      if (!((spec.p1 >= 0 && spec.p1 < spec.p2 && spec.p2 <= 1.0) ||
            (spec.p1 == spec.p2 && spec.p1 > 0 && spec.p1 < 1.0)))
        throw InvalidArgument("carpet/vicsek require 0 <= r1 < r2 <= 1 or r1 == r2 in (0, 1)");
      branching = spec.kind == SpaceKind::carpet ? 8 : 5;
      break;
    case SpaceKind::euclidean_grid:
      return build_euclidean(spec.dim, spec.R, spec.h, spec.point_cap);
    case SpaceKind::path_graph:
      return build_path(spec.n);
  }

  // 8^21 already overflows int64; reject absurd depths before ipow.
  if (spec.stage < 0 || spec.stage > 20)
    throw InvalidArgument("stage must lie in [0, 20]");
  std::int64_t count = ipow(branching, spec.stage);
  if (count > spec.point_cap) throw InvalidArgument("stage cap exceeded: point count over cap");
  s.dim = 2;
  s.params = {spec.p1, spec.p2};
  s.coords.reserve(2 * count);
  s.diameters.reserve(count);
  s.cell_param.reserve(count);

  Emitter em{&s, spec.p1, spec.p2};
  switch (spec.kind) {
    case SpaceKind::koch:
      koch_rec(em, spec.stage, {0.0, 0.0}, {1.0, 0.0}, spec.p1, spec.p2);
      break;
    case SpaceKind::gasket:
      gasket_rec(em, spec.stage, 0.0, 0.0, 1.0, spec.p1, spec.p2);
      break;
    case SpaceKind::carpet:
      carpet_rec(em, spec.stage, 0.0, 0.0, 1.0, 1.0, spec.p1, spec.p2);
      break;
    case SpaceKind::vicsek:
      vicsek_rec(em, spec.stage, 0.0, 0.0, 1.0, spec.p1, spec.p2);
      break;
    default:
      break;
  }

  s.weights.assign(s.diameters.size(), 1.0 / static_cast<double>(count));
  s.total_mass = 1.0;
  s.measure = "uniform_cell";
  return s;
}

FiniteSpace build_euclidean(int dim, double R, double h, std::int64_t point_cap) {
  if (dim != 1 && dim != 2) throw InvalidArgument("euclidean grid supports dim 1 or 2");
  if (!(h > 0 && h < R)) throw InvalidArgument("euclidean grid requires 0 < h < R");
  double extent = R + 1.0;
  long M = static_cast<long>(std::floor(extent / h));
  FiniteSpace s;
  s.kind = SpaceKind::euclidean_grid;
  s.metric = Metric::euclidean;
  s.dim = dim;
  s.params = {static_cast<double>(dim), R, h};
  double w = dim == 1 ? h : h * h;
  if (dim == 1) {
    if (2 * M + 1 > point_cap) throw InvalidArgument("grid exceeds point cap");
    for (long i = -M; i <= M; ++i) {
      s.coords.push_back(static_cast<double>(i) * h);
      s.weights.push_back(w);
    }
  } else {
    for (long iy = -M; iy <= M; ++iy) {
      double y = static_cast<double>(iy) * h;
      for (long ix = -M; ix <= M; ++ix) {
        double x = static_cast<double>(ix) * h;
        if (x * x + y * y <= extent * extent) {
          s.coords.push_back(x);
          s.coords.push_back(y);
          s.weights.push_back(w);
        }
      }
    }
    if (static_cast<std::int64_t>(s.weights.size()) > point_cap)
      throw InvalidArgument("grid exceeds point cap");
  }
  s.diameters.assign(s.weights.size(), 0.0);
  s.cell_param.assign(s.weights.size(), 0.5);
  s.total_mass = w * static_cast<double>(s.weights.size());
  s.measure = "lebesgue_cell";
  return s;
}

FiniteSpace build_path(long n) {
  if (n < 2) throw InvalidArgument("path graph requires n >= 2");
  FiniteSpace s;
  s.kind = SpaceKind::path_graph;
  s.metric = Metric::graph_distance;
  s.dim = 1;
  s.params = {static_cast<double>(n)};
  s.coords.resize(n + 1);
  for (long i = 0; i <= n; ++i) s.coords[i] = static_cast<double>(i);
  s.weights.assign(n + 1, 1.0);
  s.diameters.assign(n + 1, 0.0);
  s.cell_param.assign(n + 1, 0.5);
  s.total_mass = static_cast<double>(n + 1);
  s.measure = "counting";
  return s;
}

FractalSpec spec_of(const FiniteSpace& space) {
  FractalSpec spec;
  spec.kind = space.kind;
  spec.stage = space.stage;
  switch (space.kind) {
    case SpaceKind::euclidean_grid:
      spec.dim = static_cast<int>(space.params.at(0));
      spec.R = space.params.at(1);
      spec.h = space.params.at(2);
      break;
    case SpaceKind::path_graph:
      spec.n = static_cast<long>(space.params.at(0));
      break;
    default:
      spec.p1 = space.params.at(0);
      spec.p2 = space.params.at(1);
      break;
  }
  return spec;
}

ScalarField local_dimension_field(const FiniteSpace& space) {
  ScalarField f;
  f.label = "alpha";
  f.values.resize(space.size());
  switch (space.kind) {
    case SpaceKind::koch:
      for (Id i = 0; i < space.size(); ++i)
        f.values[i] = koch_alpha(space.cell_param[i], space.params[0], space.params[1]);
      break;
    case SpaceKind::gasket:
      for (Id i = 0; i < space.size(); ++i)
        f.values[i] = gasket_alpha(space.cell_param[i], space.params[0], space.params[1]);
      break;
    case SpaceKind::carpet:
    case SpaceKind::vicsek: {
      // Only at constant ratio 1/3 do all children contract by the same factor
      // (1/3); other ratios mix contractions and have no single exponent.
      if (space.params[0] != space.params[1] || std::abs(space.params[0] - 1.0 / 3.0) > 1e-12)
        throw InvalidArgument("closed-form local dimension needs carpet/vicsek ratio 1/3");
      double alpha = std::log(space.kind == SpaceKind::carpet ? 8.0 : 5.0) / std::log(3.0);
      for (Id i = 0; i < space.size(); ++i) f.values[i] = alpha;
      break;
    }
    case SpaceKind::euclidean_grid:
      for (Id i = 0; i < space.size(); ++i) f.values[i] = static_cast<double>(space.dim);
      break;
    case SpaceKind::path_graph:
      for (Id i = 0; i < space.size(); ++i) f.values[i] = 1.0;
      break;
  }
  return f;
}

void assign_measure(FiniteSpace& space, MeasureMode mode, const ScalarField* Q) {
  const Id n = space.size();
  std::vector<double> w(n);
  if (mode == MeasureMode::uniform_cell) {
    for (Id i = 0; i < n; ++i) w[i] = 1.0;
    space.measure = "uniform_cell";
  } else {
    if (Q == nullptr || static_cast<Id>(Q->values.size()) != n)
      throw InvalidArgument("diameter_power needs a per-point exponent field");
    for (Id i = 0; i < n; ++i) {
      double q = Q->values[i];
      if (!(q > 0) || !std::isfinite(q)) throw InvalidArgument("exponent field must be finite positive");
      w[i] = std::pow(space.diameters[i], q);
    }
    space.measure = "diameter_power";
  }
  double total = 0;
  for (double v : w) total += v;
  if (!(total > 0)) throw InvalidArgument("measure has zero total weight");
  for (Id i = 0; i < n; ++i) {
    w[i] /= total;
    if (!(w[i] > 0)) throw InvalidArgument("measure assigns zero mass to a cell");
  }
  space.weights = std::move(w);
  space.total_mass = 1.0;
}

double space_diameter_upper(const FiniteSpace& space) {
  const Id n = space.size();
  if (n <= 1) return 0.0;
  if (n <= 2048) {
    double best = 0;
    for (Id i = 0; i < n; ++i)
      for (Id j = i + 1; j < n; ++j) best = std::max(best, space.distance(i, j));
    return best;
  }
  double lo[2] = {space.coords[0], space.dim > 1 ? space.coords[1] : 0.0};
  double hi[2] = {lo[0], lo[1]};
  for (Id i = 0; i < n; ++i) {
    const double* p = space.point(i);
    for (int c = 0; c < space.dim; ++c) {
      lo[c] = std::min(lo[c], p[c]);
      hi[c] = std::max(hi[c], p[c]);
    }
  }
  double s = 0;
  for (int c = 0; c < space.dim; ++c) s += sq(hi[c] - lo[c]);
  return std::sqrt(s);
}

}  // namespace exitdim
