#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "exitdim/common.hpp"
#include "exitdim/space.hpp"

namespace exitdim {

// Uniform-bucket spatial index over the points of a FiniteSpace (dim 1 or 2),
// optionally restricted to a subset of point ids. Queries enumerate candidate
// buckets in a fixed order, so results are deterministic; callers that need
// sorted ids sort the collected list.
class HashGrid {
 public:
  HashGrid(const FiniteSpace& space, double cell_size, const std::vector<Id>* subset = nullptr)
      : space_(&space), cs_(cell_size > 0 ? cell_size : 1.0) {
    if (subset != nullptr) {
      buckets_.reserve(subset->size());
      for (Id i : *subset) buckets_[key_of(space.point(i))].push_back(i);
    } else {
      buckets_.reserve(static_cast<std::size_t>(space.size()));
      for (Id i = 0; i < space.size(); ++i) buckets_[key_of(space.point(i))].push_back(i);
    }
  }

  double cell_size() const { return cs_; }

  // Visit every point with distance(point, x) < rmax (strict) or <= rmax.
  template <class F>
  void for_near(const double* x, double rmax, bool closed, F&& f) const {
    int range = static_cast<int>(std::floor(rmax / cs_)) + 1;
    long cx = coord_cell(x[0]);
    long cy = space_->dim > 1 ? coord_cell(x[1]) : 0;
    int yr = space_->dim > 1 ? range : 0;
    for (long dy = -yr; dy <= yr; ++dy) {
      for (long dx = -range; dx <= range; ++dx) {
        auto it = buckets_.find(pack(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (Id j : it->second) {
          double d = space_->distance_to(j, x);
          if (closed ? (d <= rmax) : (d < rmax)) f(j, d);
        }
      }
    }
  }

  // Sorted ids of the ball around point center (open: d < r, closed: d <= r).
  std::vector<Id> ball(Id center, double r, bool closed) const {
    return ball_at(space_->point(center), r, closed);
  }
  std::vector<Id> ball_at(const double* x, double r, bool closed) const {
    std::vector<Id> out;
    for_near(x, r, closed, [&](Id j, double) { out.push_back(j); });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  long coord_cell(double v) const { return static_cast<long>(std::floor(v / cs_)); }
  std::uint64_t key_of(const double* p) const {
    return pack(coord_cell(p[0]), space_->dim > 1 ? coord_cell(p[1]) : 0);
  }
  static std::uint64_t pack(long ix, long iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix + 0x40000000L)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy + 0x40000000L));
  }

  const FiniteSpace* space_;
  double cs_;
  std::unordered_map<std::uint64_t, std::vector<Id>> buckets_;
};

}  // namespace exitdim
