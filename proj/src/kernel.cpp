#include "exitdim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "exitdim/common.hpp"
#include "exitdim/hashgrid.hpp"

namespace exitdim {

const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::graph_uniform: return "graph_uniform";
    case KernelKind::graph_symmetrized: return "graph_symmetrized";
    case KernelKind::ball_w: return "ball_w";
    case KernelKind::ball_p: return "ball_p";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "graph_uniform") return KernelKind::graph_uniform;
  if (s == "graph_symmetrized") return KernelKind::graph_symmetrized;
  if (s == "ball_w") return KernelKind::ball_w;
  if (s == "ball_p") return KernelKind::ball_p;
  throw InvalidArgument("unknown kernel kind: " + s);
}

Id WalkKernel::local_index(Id global) const {
  auto it = std::lower_bound(states.begin(), states.end(), global);
  if (it == states.end() || *it != global) return -1;
  return static_cast<Id>(it - states.begin());
}

double WalkKernel::entry(Id local_row, Id global_col) const {
  auto b = col.begin() + row_ptr[local_row], e = col.begin() + row_ptr[local_row + 1];
  auto it = std::lower_bound(b, e, global_col);
  if (it == e || *it != global_col) return 0.0;
  return val[it - col.begin()];
}

namespace {

void copy_state_meta(WalkKernel& k, const FiniteSpace& space) {
  k.metric = space.metric;
  k.dim = space.dim;
  k.space_points = space.size();
  k.state_coords.resize(k.states.size() * space.dim);
  for (std::size_t i = 0; i < k.states.size(); ++i)
    for (int c = 0; c < space.dim; ++c)
      k.state_coords[i * space.dim + c] = space.point(k.states[i])[c];
}

WalkKernel ball_kernel(const FiniteSpace& space, double r, const ScalarField* beta,
                       const std::vector<Id>* rows) {
  if (!(r > 0)) throw InvalidArgument("ball kernel needs r > 0");
  if (beta != nullptr) {
    if (static_cast<Id>(beta->values.size()) != space.size())
      throw InvalidArgument("beta field must cover every space point");
    for (double b : beta->values)
      if (!(b > 0) || !std::isfinite(b)) throw InvalidArgument("beta must be finite positive");
  }

  WalkKernel k;
  k.kind = beta != nullptr ? KernelKind::ball_p : KernelKind::ball_w;
  k.r = r;
  if (rows != nullptr) {
    k.states = *rows;
    std::sort(k.states.begin(), k.states.end());
    k.states.erase(std::unique(k.states.begin(), k.states.end()), k.states.end());
    if (k.states.empty()) throw InvalidArgument("row subset is empty");
    if (k.states.front() < 0 || k.states.back() >= space.size())
      throw InvalidArgument("row subset id out of range");
  } else {
    k.states.resize(space.size());
    std::iota(k.states.begin(), k.states.end(), 0);
  }
  copy_state_meta(k, space);
  const Id m = k.state_count();

  HashGrid grid(space, r);
  std::vector<std::vector<Id>> neigh(m);
  parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      neigh[i] = grid.ball(k.states[i], r, false);
    }
  });
  for (Id i = 0; i < m; ++i)
    if (neigh[i].size() < 2)
      throw InvalidArgument("isolated state at scale r: ball holds fewer than 2 points");

  // v_r = mu(B_r) at every point appearing as a row or column.
  std::vector<Id> needed = k.states;
  for (const auto& row : neigh) needed.insert(needed.end(), row.begin(), row.end());
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());

  std::vector<double> g_of(space.size(), 0.0);  // v_r (w-kernel) or d_r (p-kernel)
  parallel_for(static_cast<std::int64_t>(needed.size()), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t j = lo; j < hi; ++j) {
      Id u = needed[j];
      double v = 0;
      grid.for_near(space.point(u), r, false, [&](Id z, double) { v += space.weights[z]; });
      g_of[u] = beta != nullptr ? v * std::pow(r, beta->values[u]) : v;
    }
  });

  k.row_ptr.assign(m + 1, 0);
  for (Id i = 0; i < m; ++i) k.row_ptr[i + 1] = k.row_ptr[i] + neigh[i].size();
  k.col.resize(k.row_ptr[m]);
  k.val.resize(k.row_ptr[m]);
  k.state_weights.resize(m);
  k.waiting.resize(m);
  k.stationary_density.resize(m);

  parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      Id x = k.states[i];
      double gx = g_of[x];
      double vx = beta != nullptr ? gx / std::pow(r, beta->values[x]) : gx;
      std::size_t base = k.row_ptr[i];
      double norm = 0;
      for (std::size_t e = 0; e < neigh[i].size(); ++e) {
        Id y = neigh[i][e];
        double t = (1.0 + gx / g_of[y]) * space.weights[y] / vx;
        k.col[base + e] = y;
        k.val[base + e] = t;
        norm += t;
      }
      for (std::size_t e = 0; e < neigh[i].size(); ++e) k.val[base + e] /= norm;
      k.state_weights[i] = space.weights[x];
      double tau = beta != nullptr ? std::pow(r, beta->values[x]) : 1.0;
      k.waiting[i] = tau;
      k.stationary_density[i] = norm / tau;  // a_r (tau=1) or q_r/tau
    }
  });
  return k;
}

}  // namespace

WalkKernel graph_kernel(const FiniteSpace& space, const ApproxGraph& graph, bool symmetrized,
                        const std::vector<double>* vertex_weights) {
  const Id m = graph.vertex_count();
  if (m == 0) throw InvalidArgument("graph kernel needs vertices");
  if (vertex_weights != nullptr) {
    if (static_cast<Id>(vertex_weights->size()) != m)
      throw InvalidArgument("vertex weight count must match vertex count");
    for (double w : *vertex_weights)
      if (!(w > 0)) throw InvalidArgument("vertex weights must be positive");
  }
  for (Id v = 0; v < m; ++v)
    if (graph.degree(v) == 0) throw InvalidArgument("graph has an isolated vertex without self-loop");

  WalkKernel k;
  k.kind = symmetrized ? KernelKind::graph_symmetrized : KernelKind::graph_uniform;
  k.r = graph.edge_radius();
  k.states = graph.net.members;  // sorted
  copy_state_meta(k, space);

  auto mass = [&](Id v) { return vertex_weights != nullptr ? (*vertex_weights)[v] : 1.0; };
  std::vector<double> V(m, 0.0);  // neighborhood mass
  for (Id v = 0; v < m; ++v) {
    double s = 0;
    for (std::size_t e = graph.row_ptr[v]; e < graph.row_ptr[v + 1]; ++e) s += mass(graph.adj[e]);
    V[v] = s;
  }

  k.row_ptr.assign(graph.row_ptr.begin(), graph.row_ptr.end());
  k.col.resize(graph.adj.size());
  k.val.resize(graph.adj.size());
  k.state_weights.resize(m);
  k.waiting.assign(m, 1.0);
  k.stationary_density.resize(m);

  for (Id v = 0; v < m; ++v) {
    std::size_t lo = graph.row_ptr[v], hi = graph.row_ptr[v + 1];
    double norm = 0;
    for (std::size_t e = lo; e < hi; ++e) {
      Id u = graph.adj[e];
      double t = symmetrized ? (1.0 + V[v] / V[u]) * mass(u) / V[v] : mass(u) / V[v];
      k.col[e] = graph.net.members[u];  // global id (ascending since adj rows sorted)
      k.val[e] = t;
      norm += t;
    }
    if (symmetrized)
      for (std::size_t e = lo; e < hi; ++e) k.val[e] /= norm;
    k.state_weights[v] = mass(v);
    k.stationary_density[v] = symmetrized ? norm : static_cast<double>(graph.degree(v));
  }
  return k;
}

WalkKernel ball_kernel_w(const FiniteSpace& space, double r, const std::vector<Id>* rows) {
  return ball_kernel(space, r, nullptr, rows);
}

WalkKernel ball_kernel_p(const FiniteSpace& space, double r, const ScalarField& beta,
                         const std::vector<Id>* rows) {
  return ball_kernel(space, r, &beta, rows);
}

std::vector<double> generator_apply(const WalkKernel& k, const std::vector<double>& f) {
  if (static_cast<Id>(f.size()) != k.space_points)
    throw InvalidArgument("generator input must be indexed by global point id");
  const Id m = k.state_count();
  std::vector<double> out(m);
  parallel_for(m, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      double fx = f[k.states[i]];
      double acc = 0;
      for (std::size_t e = k.row_ptr[i]; e < k.row_ptr[i + 1]; ++e)
        acc += k.val[e] * (fx - f[k.col[e]]);
      out[i] = acc / k.waiting[i];
    }
  });
  return out;
}

double detailed_balance_violation(const WalkKernel& k) {
  double worst = 0;
  for (Id i = 0; i < k.state_count(); ++i) {
    double pi_x = k.stationary_density[i] * k.state_weights[i];
    for (std::size_t e = k.row_ptr[i]; e < k.row_ptr[i + 1]; ++e) {
      Id j = k.local_index(k.col[e]);
      if (j < 0) continue;  // restricted build: no reverse row stored
      double pi_y = k.stationary_density[j] * k.state_weights[j];
      double rev = k.entry(j, k.states[i]);
      worst = std::max(worst, std::abs(pi_x * k.val[e] - pi_y * rev));
    }
  }
  return worst;
}

double row_sum_violation(const WalkKernel& k) {
  double worst = 0;
  for (Id i = 0; i < k.state_count(); ++i) {
    double s = 0;
    for (std::size_t e = k.row_ptr[i]; e < k.row_ptr[i + 1]; ++e) {
      if (k.val[e] < 0) return std::numeric_limits<double>::infinity();
      s += k.val[e];
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

WalkKernel scale_kernel(const FiniteSpace& space, KernelKind kind, double scale,
                        std::uint64_t seed, const ScalarField* beta) {
  switch (kind) {
    case KernelKind::ball_w:
      return ball_kernel_w(space, scale);
    case KernelKind::ball_p:
      if (!beta) throw InvalidArgument("scale_kernel: ball_p needs a beta field");
      return ball_kernel_p(space, scale, *beta);
    case KernelKind::graph_uniform:
    case KernelKind::graph_symmetrized: {
      NetIndex net = build_epsilon_net(space, scale, seed);
      ApproxGraph graph = covering_graph(space, net, 1.0, true);
      Tiling tiling = build_voronoi_tiling(space, net);
      std::vector<double> masses = tile_masses(space, tiling);
      return graph_kernel(space, graph, kind == KernelKind::graph_symmetrized, &masses);
    }
  }
  throw InvalidArgument("scale_kernel: unknown kernel kind");
}

}  // namespace exitdim
