#include "exitdim/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "exitdim/common.hpp"

namespace exitdim {

namespace {

// Dynamic bucket grid over an incrementally inserted subset of space points.
// Supports "is anything strictly closer than eps" and exact nearest-point
// queries (expanding Chebyshev rings, ties to the lowest point id).
class PointGrid {
 public:
  PointGrid(const FiniteSpace& space, double cell_size)
      : space_(&space), cs_(cell_size), dim2_(space.dim > 1) {}

  void insert(Id p) {
    buckets_[key_at(space_->point(p))].push_back(p);
    ++count_;
  }

  std::size_t count() const { return count_; }

  bool any_within(const double* x, double eps) const {
    int range = static_cast<int>(std::floor(eps / cs_)) + 1;
    long cx = cell(x[0]), cy = dim2_ ? cell(x[1]) : 0;
    int yr = dim2_ ? range : 0;
    for (long dy = -yr; dy <= yr; ++dy)
      for (long dx = -range; dx <= range; ++dx) {
        auto it = buckets_.find(pack(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (Id j : it->second)
          if (space_->distance_to(j, x) < eps) return true;
      }
    return false;
  }

  // Nearest inserted point to x, optionally ignoring one id (requires that at
  // least one eligible point was inserted).
  std::pair<Id, double> nearest(const double* x, Id skip = -1) const {
    long cx = cell(x[0]), cy = dim2_ ? cell(x[1]) : 0;
    Id best_id = -1;
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](long ix, long iy) {
      auto it = buckets_.find(pack(ix, iy));
      if (it == buckets_.end()) return;
      for (Id j : it->second) {
        if (j == skip) continue;
        double d = space_->distance_to(j, x);
        if (d < best_d || (d == best_d && j < best_id)) {
          best_d = d;
          best_id = j;
        }
      }
    };
    for (long k = 0;; ++k) {
      // Any cell at Chebyshev ring k holds points at distance >= (k-1)*cs, so
      // once (k-1)*cs exceeds the best distance the search is complete.
      if (best_id >= 0 && static_cast<double>(k - 1) * cs_ > best_d) break;
      if (static_cast<double>(k) > 2.0e9) throw NumericError("nearest-point ring search overflow");
      if (k == 0) {
        consider(cx, cy);
      } else if (!dim2_) {
        consider(cx - k, 0);
        consider(cx + k, 0);
      } else {
        for (long dx = -k; dx <= k; ++dx) {
          consider(cx + dx, cy - k);
          consider(cx + dx, cy + k);
        }
        for (long dy = -k + 1; dy <= k - 1; ++dy) {
          consider(cx - k, cy + dy);
          consider(cx + k, cy + dy);
        }
      }
    }
    return {best_id, best_d};
  }

 private:
  long cell(double v) const { return static_cast<long>(std::floor(v / cs_)); }
  std::uint64_t key_at(const double* p) const { return pack(cell(p[0]), dim2_ ? cell(p[1]) : 0); }
  static std::uint64_t pack(long ix, long iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix + 0x40000000L)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy + 0x40000000L));
  }

  const FiniteSpace* space_;
  double cs_;
  bool dim2_;
  std::size_t count_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Id>> buckets_;
};

}  // namespace

NetIndex build_epsilon_net(const FiniteSpace& space, double epsilon, std::uint64_t seed,
                           const NetIndex* extend_from) {
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  const Id n = space.size();
  NetIndex net;
  net.epsilon = epsilon;
  net.seed = seed;

  PointGrid accepted(space, epsilon);
  if (extend_from != nullptr) {
    for (Id m : extend_from->members) {
      if (m < 0 || m >= n) throw InvalidArgument("extend_from member out of range");
      if (accepted.any_within(space.point(m), epsilon))
        throw InvalidArgument("extend_from violates epsilon separation");
      accepted.insert(m);
      net.members.push_back(m);
    }
  }

  std::vector<Id> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, 0x6e657473u);
  std::shuffle(order.begin(), order.end(), rng);

  for (Id p : order) {
    if (!accepted.any_within(space.point(p), epsilon)) {
      accepted.insert(p);
      net.members.push_back(p);
    }
  }
  std::sort(net.members.begin(), net.members.end());
  return net;
}

Tiling build_voronoi_tiling(const FiniteSpace& space, const NetIndex& net) {
  if (net.members.empty()) throw InvalidArgument("net has no members");
  Tiling t;
  t.net = net;
  t.assignment.resize(space.size());
  PointGrid members(space, net.epsilon);
  for (Id m : net.members) members.insert(m);
  for (Id p = 0; p < space.size(); ++p) t.assignment[p] = members.nearest(space.point(p)).first;
  return t;
}

CubeTree build_dyadic_cubes(const FiniteSpace& space, double r, int depth, std::uint64_t seed) {
  if (!(r > 0 && r < 1.0 / 3.0)) throw InvalidArgument("cube ratio must lie in (0, 1/3)");
  if (depth < 1) throw InvalidArgument("cube depth must be >= 1");
  CubeTree tree;
  tree.ratio = r;
  tree.depth = depth;
  tree.nets.reserve(depth);
  double eps = 1.0;
  for (int k = 0; k < depth; ++k) {
    const NetIndex* prev = k > 0 ? &tree.nets[k - 1] : nullptr;
    tree.nets.push_back(build_epsilon_net(space, eps, seed + static_cast<std::uint64_t>(k), prev));
    eps *= r;
  }

  // Finest-level assignment, then chain each level's centers to the next
  // coarser net by the nearest-center map.
  tree.cube_of.assign(depth, std::vector<Id>(space.size()));
  {
    Tiling finest = build_voronoi_tiling(space, tree.nets[depth - 1]);
    tree.cube_of[depth - 1] = std::move(finest.assignment);
  }
  for (int k = depth - 2; k >= 0; --k) {
    PointGrid members(space, tree.nets[k].epsilon);
    for (Id m : tree.nets[k].members) members.insert(m);
    std::unordered_map<Id, Id> lift;  // level-(k+1) center -> level-k center
    lift.reserve(tree.nets[k + 1].members.size());
    for (Id c : tree.nets[k + 1].members) lift[c] = members.nearest(space.point(c)).first;
    for (Id p = 0; p < space.size(); ++p) tree.cube_of[k][p] = lift[tree.cube_of[k + 1][p]];
  }
  return tree;
}

NetReport verify_net(const FiniteSpace& space, const NetIndex& net) {
  NetReport rep;
  rep.min_separation = std::numeric_limits<double>::infinity();
  rep.max_covering_radius = 0;
  if (net.members.empty()) {
    rep.ok = false;
    return rep;
  }
  PointGrid members(space, net.epsilon);
  for (Id m : net.members) members.insert(m);

  // Separation: nearest other member per member (a duplicated id shows up as
  // another entry at distance 0, handled by scanning for duplicates first).
  std::unordered_map<Id, int> copies;
  for (Id m : net.members) ++copies[m];
  bool has_dup = false;
  for (auto& [id, c] : copies) has_dup = has_dup || c > 1;
  if (has_dup) {
    rep.min_separation = 0;
  } else if (net.members.size() > 1) {
    for (Id m : net.members) {
      double d = members.nearest(space.point(m), m).second;
      rep.min_separation = std::min(rep.min_separation, d);
    }
  }

  for (Id p = 0; p < space.size(); ++p)
    rep.max_covering_radius = std::max(rep.max_covering_radius, members.nearest(space.point(p)).second);

  rep.ok = rep.min_separation >= net.epsilon && rep.max_covering_radius < net.epsilon;
  return rep;
}

std::vector<double> tile_masses(const FiniteSpace& space, const Tiling& tiling) {
  std::vector<double> out(tiling.net.members.size(), 0.0);
  for (Id p = 0; p < space.size(); ++p) {
    Id owner = tiling.assignment[p];
    auto it = std::lower_bound(tiling.net.members.begin(), tiling.net.members.end(), owner);
    out[it - tiling.net.members.begin()] += space.weights[p];
  }
  return out;
}

}  // namespace exitdim
