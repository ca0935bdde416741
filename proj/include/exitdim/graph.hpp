#pragma once

#include <cstdint>
#include <vector>

#include "exitdim/net.hpp"
#include "exitdim/space.hpp"

namespace exitdim {

enum class GraphKind : std::uint8_t { proximity = 0, covering = 1 };

// Symmetric adjacency over the members of an epsilon-net, CSR over vertex
// indices 0..m-1 (vertex i is net.members[i]); rows sorted, self entries kept
// when self_loops (isolated vertices keep a self-loop regardless).
struct ApproxGraph {
  NetIndex net;
  GraphKind kind = GraphKind::proximity;
  double param = 2.0;  // rho (proximity) or eta (covering)
  bool self_loops = true;
  std::vector<std::size_t> row_ptr;
  std::vector<Id> adj;

  Id vertex_count() const { return static_cast<Id>(net.members.size()); }
  Id degree(Id v) const { return static_cast<Id>(row_ptr[v + 1] - row_ptr[v]); }
  // jump radius of the edge predicate: rho*eps or 2*eta*eps
  double edge_radius() const {
    return (kind == GraphKind::proximity ? param : 2 * param) * net.epsilon;
  }
};

struct GraphStats {
  Id min_degree = 0;
  Id max_degree = 0;
  std::size_t edge_count = 0;  // unordered pairs plus self-loops
};

// Edge iff d(x, y) < rho * eps (rho >= 2); self-loops by default.
ApproxGraph proximity_graph(const FiniteSpace& space, const NetIndex& net, double rho,
                            bool self_loops = true);
// Edge iff d(x, y) < 2 * eta * eps (eta >= 1), the metric realization of
// "the balls B_{eta eps} around both members intersect".
ApproxGraph covering_graph(const FiniteSpace& space, const NetIndex& net, double eta,
                           bool self_loops = true);

bool is_connected(const ApproxGraph& g);
GraphStats graph_stats(const ApproxGraph& g);

// sup over sampled centers and given radii of mu(B_2r(x)) / mu(B_r(x)).
double doubling_ratio(const FiniteSpace& space, const std::vector<double>& radii,
                      Id max_centers = 2000, std::uint64_t seed = 1);

}  // namespace exitdim
