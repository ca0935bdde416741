#include "exitdim/graph.hpp"

#include <algorithm>
#include <numeric>

#include "exitdim/common.hpp"
#include "exitdim/hashgrid.hpp"

namespace exitdim {

namespace {

ApproxGraph build_graph(const FiniteSpace& space, const NetIndex& net, GraphKind kind,
                        double param, bool self_loops, double radius) {
  ApproxGraph g;
  g.net = net;
  g.kind = kind;
  g.param = param;
  g.self_loops = self_loops;
  const Id m = g.vertex_count();
  if (m == 0) throw InvalidArgument("graph needs a nonempty net");

  // vertex lookup: member point id -> vertex index
  HashGrid grid(space, radius, &net.members);
  std::vector<std::vector<Id>> rows(m);
  parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t v = lo; v < hi; ++v) {
      Id p = net.members[v];
      auto& row = rows[v];
      grid.for_near(space.point(p), radius, false, [&](Id q, double) { row.push_back(q); });
      // ids -> vertex indices (members sorted)
      for (Id& q : row)
        q = static_cast<Id>(std::lower_bound(net.members.begin(), net.members.end(), q) -
                            net.members.begin());
      std::sort(row.begin(), row.end());
      if (!self_loops && row.size() > 1)
        row.erase(std::remove(row.begin(), row.end(), static_cast<Id>(v)), row.end());
    }
  });

  g.row_ptr.assign(m + 1, 0);
  for (Id v = 0; v < m; ++v) g.row_ptr[v + 1] = g.row_ptr[v] + rows[v].size();
  g.adj.reserve(g.row_ptr[m]);
  for (Id v = 0; v < m; ++v) g.adj.insert(g.adj.end(), rows[v].begin(), rows[v].end());
  return g;
}

}  // namespace

ApproxGraph proximity_graph(const FiniteSpace& space, const NetIndex& net, double rho,
                            bool self_loops) {
  if (!(rho >= 2)) throw InvalidArgument("proximity graph requires rho >= 2");
  return build_graph(space, net, GraphKind::proximity, rho, self_loops, rho * net.epsilon);
}

ApproxGraph covering_graph(const FiniteSpace& space, const NetIndex& net, double eta,
                           bool self_loops) {
  if (!(eta >= 1)) throw InvalidArgument("covering graph requires eta >= 1");
  return build_graph(space, net, GraphKind::covering, eta, self_loops, 2 * eta * net.epsilon);
}

bool is_connected(const ApproxGraph& g) {
  const Id m = g.vertex_count();
  if (m == 0) return true;
  std::vector<char> seen(m, 0);
  std::vector<Id> stack{0};
  seen[0] = 1;
  Id visited = 1;
  while (!stack.empty()) {
    Id v = stack.back();
    stack.pop_back();
    for (std::size_t e = g.row_ptr[v]; e < g.row_ptr[v + 1]; ++e) {
      Id w = g.adj[e];
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        stack.push_back(w);
      }
    }
  }
  return visited == m;
}

GraphStats graph_stats(const ApproxGraph& g) {
  GraphStats s;
  const Id m = g.vertex_count();
  if (m == 0) return s;
  s.min_degree = s.max_degree = g.degree(0);
  std::size_t self = 0, entries = 0;
  for (Id v = 0; v < m; ++v) {
    Id d = g.degree(v);
    s.min_degree = std::min(s.min_degree, d);
    s.max_degree = std::max(s.max_degree, d);
    entries += d;
    for (std::size_t e = g.row_ptr[v]; e < g.row_ptr[v + 1]; ++e)
      if (g.adj[e] == v) ++self;
  }
  s.edge_count = (entries - self) / 2 + self;
  return s;
}

double doubling_ratio(const FiniteSpace& space, const std::vector<double>& radii, Id max_centers,
                      std::uint64_t seed) {
  if (radii.empty()) throw InvalidArgument("doubling ratio needs a nonempty radius grid");
  for (double r : radii)
    if (!(r > 0)) throw InvalidArgument("doubling radii must be positive");

  std::vector<Id> centers(space.size());
  std::iota(centers.begin(), centers.end(), 0);
  if (space.size() > max_centers) {
    auto rng = make_rng(seed, 0x646f7562u);
    std::shuffle(centers.begin(), centers.end(), rng);
    centers.resize(max_centers);
    std::sort(centers.begin(), centers.end());
  }

  double worst = 1.0;
  for (double r : radii) {
    HashGrid grid(space, 2 * r);
    std::vector<double> ratios(centers.size(), 1.0);
    parallel_for(static_cast<std::int64_t>(centers.size()), [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        double inner = 0, outer = 0;
        grid.for_near(space.point(centers[i]), 2 * r, false, [&](Id y, double d) {
          outer += space.weights[y];
          if (d < r) inner += space.weights[y];
        });
        ratios[i] = outer / inner;  // inner >= weight(center) > 0
      }
    });
    for (double v : ratios) worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace exitdim
