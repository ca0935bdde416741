#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "exitdim/kernel.hpp"

namespace exitdim {

// Absorption region for exit problems: the states of a walk kernel lying in a
// metric ball around a center point. The walk is killed the first time it
// steps to a column outside the region (including columns that are not kernel
// states at all).
struct BallRegion {
  Id center = -1;          // global point id of the ball center
  double radius = 0.0;
  bool closed = true;      // closed ball d <= radius; open variant d < radius
  std::vector<Id> inside;  // local state indices in the region, ascending
  std::vector<char> member;  // size = kernel.state_count(), 1 inside

  Id size() const { return static_cast<Id>(inside.size()); }
  bool contains_local(Id local) const {
    return local >= 0 && static_cast<std::size_t>(local) < member.size() && member[local] != 0;
  }
};

// Builds the region of kernel states inside the ball. The center must be a
// kernel state and the complement must be nonempty.
BallRegion ball_region(const FiniteSpace& space, const WalkKernel& kernel, Id center,
                       double radius, bool closed = true);

// Global id of the kernel state nearest to the space point `point`
// (ties to the lowest id). Used to anchor regions on kernels whose states
// are a strict subset of the space, e.g. net-graph walks.
Id nearest_state(const FiniteSpace& space, const WalkKernel& kernel, Id point);

// Throws InvalidArgument unless every region state can reach the complement
// through the kernel support; (I - P_B) is singular otherwise.
void check_exit_reachable(const WalkKernel& kernel, const BallRegion& region);

// Mean exit times: phi solves (I - P_B) phi = waiting on the region and is
// exactly 0 off it. residual = max over region rows of
// |phi(x) - waiting(x) - sum_y P(x,y) phi(y)|.
struct ExitField {
  BallRegion region;
  std::vector<double> values;  // one per kernel state (local index)
  double residual = 0.0;
  std::string solver;  // "sparse_lu", "cg", or "bicgstab"
};

// direct_limit: largest region size solved by sparse factorization; larger
// systems use a preconditioned iterative solve (conjugate gradients on the
// density-symmetrized system when the kernel is reversible).
ExitField solve_exit_times(const WalkKernel& kernel, const BallRegion& region,
                           Id direct_limit = 200000);

// Largest mean exit time over the region.
double exit_time_max(const ExitField& field);

struct MonteCarloExit {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::int64_t n_paths = 0;
};

// Samples the jump chain from `start` (a global point id inside the region)
// until it leaves, accumulating waiting(x) per visit. Deterministic given
// seed regardless of thread count (independent per-block RNG streams merged
// in block order).
MonteCarloExit monte_carlo_exit(const WalkKernel& kernel, const BallRegion& region, Id start,
                                std::int64_t n_paths, std::uint64_t seed);

// Fraction of sampled paths whose exit time is <= t, with per-jump holding
// times drawn exponential with mean waiting(x).
double exit_tail_estimate(const WalkKernel& kernel, const BallRegion& region, Id start, double t,
                          std::int64_t n_paths, std::uint64_t seed);

}  // namespace exitdim
