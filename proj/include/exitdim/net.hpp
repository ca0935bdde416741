#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "exitdim/space.hpp"

namespace exitdim {

// Maximal epsilon-separated subset: pairwise distances >= epsilon, every point
// of the space strictly within epsilon of some member.
struct NetIndex {
  double epsilon = 0;
  std::uint64_t seed = 0;
  std::vector<Id> members;  // sorted point ids
};

// Partition of all points into tiles owned by net members.
struct Tiling {
  NetIndex net;
  std::vector<Id> assignment;  // per-point owning member (a point id)
};

// Nested partitions: level-k centers form an r^k-net, N_k subset of N_{k+1},
// and cubes are chained nearest-center preimages.
struct CubeTree {
  double ratio = 0;
  int depth = 0;
  std::vector<NetIndex> nets;            // nets[k], k = 0..depth-1
  std::vector<std::vector<Id>> cube_of;  // cube_of[k][point] = level-k center id
};

struct NetReport {
  double min_separation = 0;
  double max_covering_radius = 0;
  bool ok = false;
};

// Greedy maximal epsilon-separated set over a seed-shuffled scan order,
// optionally forced to contain the members of extend_from.
NetIndex build_epsilon_net(const FiniteSpace& space, double epsilon, std::uint64_t seed,
                           const NetIndex* extend_from = nullptr);

// Assign every point to its nearest net member; ties go to the lowest id.
Tiling build_voronoi_tiling(const FiniteSpace& space, const NetIndex& net);

// Nested nets with epsilon_k = r^k (0 < r < 1/3) and chained nearest-center
// cube assignment from the finest level upward.
CubeTree build_dyadic_cubes(const FiniteSpace& space, double r, int depth, std::uint64_t seed);

NetReport verify_net(const FiniteSpace& space, const NetIndex& net);

// Total point mass of each tile, aligned with tiling.net.members.
std::vector<double> tile_masses(const FiniteSpace& space, const Tiling& tiling);

}  // namespace exitdim
