#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "exitdim/common.hpp"

namespace exitdim {

enum class Metric : std::uint8_t { euclidean = 0, graph_distance = 1 };
enum class SpaceKind : std::uint8_t {
  koch = 0,
  gasket = 1,
  carpet = 2,
  vicsek = 3,
  euclidean_grid = 4,
  path_graph = 5,
};

const char* to_string(Metric m);
const char* to_string(SpaceKind k);
Metric metric_from_string(const std::string& s);
SpaceKind space_kind_from_string(const std::string& s);

// A per-point real field (alpha, beta, Q, ...) over a FiniteSpace.
struct ScalarField {
  std::vector<double> values;
  std::string label = "other";
};

// Finite metric measure space: one representative point per cell/site, with
// per-cell masses, recorded cell diameters, and the generator parameter of the
// cell (position inside the variable-parameter range, in [0,1]).
struct FiniteSpace {
  SpaceKind kind = SpaceKind::path_graph;
  Metric metric = Metric::euclidean;
  int dim = 1;     // coordinates per point (1 or 2)
  int stage = 0;   // subdivision depth (fractals), 0 otherwise
  std::vector<double> params;  // generator parameters, see builders
  std::string measure = "uniform_cell";
  double total_mass = 1.0;

  std::vector<double> coords;      // dim * n, point i at coords[dim*i .. dim*i+dim)
  std::vector<double> weights;     // n masses, each > 0
  std::vector<double> diameters;   // n cell diameters (0 for grids / path)
  std::vector<double> cell_param;  // n values in [0,1] (0.5 when constant)

  Id size() const { return static_cast<Id>(weights.size()); }
  const double* point(Id i) const { return coords.data() + static_cast<std::size_t>(dim) * i; }

  double distance(Id i, Id j) const {
    const double* a = point(i);
    const double* b = point(j);
    double s = 0;
    for (int c = 0; c < dim; ++c) s += sq(a[c] - b[c]);
    return std::sqrt(s);
  }
  double distance_to(Id i, const double* x) const {
    const double* a = point(i);
    double s = 0;
    for (int c = 0; c < dim; ++c) s += sq(a[c] - x[c]);
    return std::sqrt(s);
  }
};

// Generator request. Parameter slots by kind:
//   koch:           p1 = theta1, p2 = theta2 (radians), 0 < theta1 <= theta2 < pi/2
//   gasket:         p1 = r1, p2 = r2, 0 <= r1 < r2 <= 1/2 or r1 == r2 in (0, 1/2]
//   carpet/vicsek:  p1 = r1, p2 = r2, 0 <= r1 < r2 <= 1  or r1 == r2 in (0, 1)
//   euclidean_grid: dim in {1,2}, R, h with 0 < h < R
//   path_graph:     n >= 2 (states 0..n)
struct FractalSpec {
  SpaceKind kind = SpaceKind::gasket;
  int stage = 0;
  double p1 = 0.5, p2 = 0.5;
  int dim = 1;
  double R = 1.0, h = 0.01;
  long n = 2;
  std::int64_t point_cap = 1000000;
};

FiniteSpace build_fractal(const FractalSpec& spec);
FiniteSpace build_euclidean(int dim, double R, double h, std::int64_t point_cap = 1000000);
FiniteSpace build_path(long n);

// Generator spec recovered from a built space (kind, stage, and the builder
// parameters; point_cap is not recorded and stays at its default).
FractalSpec spec_of(const FiniteSpace& space);

// Local dimension of the variable Koch curve at curve parameter t:
//   2 log 2 / log(2 + 2 cos(theta1 + t (theta2 - theta1))).
double koch_alpha(double t, double theta1, double theta2);
// Local dimension of the variable gasket: log 3 / log(1 / (r1 + t (r2 - r1))).
double gasket_alpha(double t, double r1, double r2);

// Per-point local-dimension field from the generator parameters (koch/gasket
// closed forms; constant-ratio carpet/vicsek similarity dimensions).
ScalarField local_dimension_field(const FiniteSpace& space);

enum class MeasureMode { uniform_cell, diameter_power };

// Replace weights: uniform_cell gives every cell equal mass; diameter_power
// weights cell i by diameter_i^{Q(i)}. Renormalizes to total mass 1.
void assign_measure(FiniteSpace& space, MeasureMode mode, const ScalarField* Q = nullptr);

// Max pairwise distance, exact for small spaces, bounding-box bound otherwise.
double space_diameter_upper(const FiniteSpace& space);

}  // namespace exitdim
