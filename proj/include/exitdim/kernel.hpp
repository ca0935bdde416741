#pragma once

#include <cstdint>
#include <vector>

#include "exitdim/graph.hpp"
#include "exitdim/space.hpp"

namespace exitdim {

enum class KernelKind : std::uint8_t {
  graph_uniform = 0,
  graph_symmetrized = 1,
  ball_w = 2,
  ball_p = 3,
};

const char* to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

// Row-stochastic jump kernel over a set of states (a subset of space points).
// Rows are indexed locally (state i = states[i], sorted ascending); columns
// store GLOBAL point ids, so a kernel whose rows were built only on a subset
// still scores jumps that leave the subset (those columns simply have no row
// and act as absorbing targets in exit problems).
struct WalkKernel {
  KernelKind kind = KernelKind::graph_uniform;
  Metric metric = Metric::euclidean;
  int dim = 1;
  Id space_points = 0;  // number of points in the originating space
  double r = 0;         // jump radius: rho*eps / 2*eta*eps for graphs, r for balls

  std::vector<Id> states;               // sorted global point ids
  std::vector<double> state_coords;     // dim * states.size()
  std::vector<double> state_weights;    // mu per state
  std::vector<double> waiting;          // tau per state (time units)
  std::vector<double> stationary_density;  // equilibrium density w.r.t. state_weights

  std::vector<std::size_t> row_ptr;  // states.size()+1
  std::vector<Id> col;               // global ids, sorted within each row
  std::vector<double> val;

  Id state_count() const { return static_cast<Id>(states.size()); }
  // local row index of a global point id, -1 when the point is not a state
  Id local_index(Id global) const;
  const double* state_point(Id local) const {
    return state_coords.data() + static_cast<std::size_t>(dim) * local;
  }
  double entry(Id local_row, Id global_col) const;  // 0 when absent
};

// Walks on a net graph. Vertex masses default to 1 (counting measure); pass
// tile masses for the measure-weighted variants. With V(x) = sum of masses
// over neighbors of x:
//   uniform:      P(x,y) = mass(y) / V(x)
//   symmetrized:  P(x,y) = a(x)^{-1} (1/V(x)) (1 + V(x)/V(y)) mass(y)
// waiting = 1. stationary_density: degree (uniform) or a(x) (symmetrized);
// only the symmetrized walk is guaranteed reversible w.r.t. its density.
WalkKernel graph_kernel(const FiniteSpace& space, const ApproxGraph& graph, bool symmetrized,
                        const std::vector<double>* vertex_weights = nullptr);

// Ball walk over open balls B_r(x) = {y : d(x,y) < r} (always containing x):
//   P(x,y) = a_r(x)^{-1} (1/v_r(x)) (1 + v_r(x)/v_r(y)) mu(y),  v_r = mu(B_r).
// waiting = 1, stationary_density = a_r. When `rows` is given, only those
// states get rows (columns still reach the whole space).
WalkKernel ball_kernel_w(const FiniteSpace& space, double r, const std::vector<Id>* rows = nullptr);

// Renormalized ball walk with per-point time exponent beta:
//   d_r(x) = v_r(x) r^{beta(x)},
//   P(x,y) = q_r(x)^{-1} (1/v_r(x)) (1 + d_r(x)/d_r(y)) mu(y),
// waiting(x) = r^{beta(x)}, stationary_density = q_r / waiting.
WalkKernel ball_kernel_p(const FiniteSpace& space, double r, const ScalarField& beta,
                         const std::vector<Id>* rows = nullptr);

// Kernel at a single scale: ball kinds jump within radius `scale` directly on
// the space; graph kinds walk on the covering graph (eta = 1, self-loops) of
// a fresh epsilon-net at epsilon = scale built with `seed`, weighted by tile
// masses. ball_p requires `beta`.
WalkKernel scale_kernel(const FiniteSpace& space, KernelKind kind, double scale,
                        std::uint64_t seed = 1, const ScalarField* beta = nullptr);

// (1/waiting(x)) * ((I - P) f)(x) per state; f is indexed by global point id.
std::vector<double> generator_apply(const WalkKernel& k, const std::vector<double>& f);

// max over stored entries (both endpoints states) of
// |pi(x) P(x,y) - pi(y) P(y,x)| with pi = stationary_density * state_weights.
double detailed_balance_violation(const WalkKernel& k);

// max row-sum deviation from 1 (diagnostic).
double row_sum_violation(const WalkKernel& k);

}  // namespace exitdim
