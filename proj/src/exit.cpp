#include "exitdim/exit.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <random>

#include "exitdim/common.hpp"

namespace exitdim {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Local state indices of the kernel columns in one region row, -1 for
// columns that are absorbing (outside the state set).
struct MaskedSystem {
  std::vector<Id> masked_of;  // state local index -> masked index, -1 outside
  Id m = 0;
};

MaskedSystem masked_index(const WalkKernel& kernel, const BallRegion& region) {
  MaskedSystem sys;
  sys.masked_of.assign(kernel.state_count(), -1);
  for (Id k = 0; k < region.size(); ++k) sys.masked_of[region.inside[k]] = k;
  sys.m = region.size();
  return sys;
}

// BFS over reversed region-internal edges seeded by the states with a direct
// absorbing transition.
void check_complement_reachable(const WalkKernel& kernel, const BallRegion& region,
                                const MaskedSystem& sys) {
  std::vector<std::vector<Id>> rev(sys.m);
  std::vector<char> reached(sys.m, 0);
  std::queue<Id> frontier;
  for (Id k = 0; k < sys.m; ++k) {
    Id i = region.inside[k];
    bool direct = false;
    for (std::size_t e = kernel.row_ptr[i]; e < kernel.row_ptr[i + 1]; ++e) {
      if (kernel.val[e] <= 0.0) continue;
      Id j = kernel.local_index(kernel.col[e]);
      Id mj = (j >= 0) ? sys.masked_of[j] : -1;
      if (mj < 0) {
        direct = true;
      } else if (mj != k) {
        rev[mj].push_back(k);
      }
    }
    if (direct && !reached[k]) {
      reached[k] = 1;
      frontier.push(k);
    }
  }
  while (!frontier.empty()) {
    Id k = frontier.front();
    frontier.pop();
    for (Id p : rev[k]) {
      if (!reached[p]) {
        reached[p] = 1;
        frontier.push(p);
      }
    }
  }
  std::string offenders;
  int listed = 0;
  for (Id k = 0; k < sys.m && listed < 8; ++k) {
    if (!reached[k]) {
      offenders += (listed ? "," : "") + std::to_string(kernel.states[region.inside[k]]);
      ++listed;
    }
  }
  if (listed > 0) {
    throw InvalidArgument("exit region traps the walk: complement unreachable from state ids [" +
                          offenders + "]");
  }
}

// I - P restricted to the region (masked rows and columns).
SpMat masked_operator(const WalkKernel& kernel, const BallRegion& region,
                      const MaskedSystem& sys) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(sys.m) * 8);
  for (Id k = 0; k < sys.m; ++k) {
    Id i = region.inside[k];
    double diag = 1.0;
    for (std::size_t e = kernel.row_ptr[i]; e < kernel.row_ptr[i + 1]; ++e) {
      Id j = kernel.local_index(kernel.col[e]);
      Id mj = (j >= 0) ? sys.masked_of[j] : -1;
      if (mj < 0) continue;
      if (mj == k) {
        diag -= kernel.val[e];
      } else {
        trip.emplace_back(k, mj, -kernel.val[e]);
      }
    }
    trip.emplace_back(k, k, diag);
  }
  SpMat A(sys.m, sys.m);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

double max_residual(const SpMat& A, const Vec& phi, const Vec& rhs) {
  Vec r = A * phi - rhs;
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

// (s, e) += b with Knuth's exact two-sum; e carries the rounding error.
inline void two_sum(double& s, double& e, double b) {
  double t = s + b;
  double bb = t - s;
  e += (s - (t - bb)) + (b - bb);
  s = t;
}

// rhs - A*phi accumulated in double-double arithmetic. The plain residual
// loses all digits past eps*|A||phi|, which caps iterative refinement at a
// forward error of cond(A)*eps*|phi|; the compensated residual lets
// refinement converge to a few ulps of the exact solution of the stored
// system instead.
Vec compensated_residual(const SpMat& A, const Vec& phi, const Vec& rhs) {
  Vec hi = rhs;
  Vec lo = Vec::Zero(rhs.size());
  for (int j = 0; j < A.outerSize(); ++j) {
    for (SpMat::InnerIterator it(A, j); it; ++it) {
      double p = -it.value() * phi[j];
      double perr = std::fma(-it.value(), phi[j], -p);
      two_sum(hi[it.row()], lo[it.row()], p);
      two_sum(hi[it.row()], lo[it.row()], perr);
    }
  }
  return hi + lo;
}

// One walk step from local state i: inverse-CDF sample of the row.
// Returns the local index of the landing state, or -1 when absorbed.
inline Id step_from(const WalkKernel& kernel, Id i, double u) {
  double acc = 0.0;
  std::size_t lo = kernel.row_ptr[i], hi = kernel.row_ptr[i + 1];
  for (std::size_t e = lo; e < hi; ++e) {
    acc += kernel.val[e];
    if (u < acc) return kernel.local_index(kernel.col[e]);
  }
  return kernel.local_index(kernel.col[hi - 1]);  // u landed on accumulated rounding
}

constexpr std::int64_t kStepCap = 100000000;  // per-path guard against trapped walks

}  // namespace

BallRegion ball_region(const FiniteSpace& space, const WalkKernel& kernel, Id center,
                       double radius, bool closed) {
  if (radius < 0.0 || !std::isfinite(radius)) {
    throw InvalidArgument("ball_region: radius must be finite and nonnegative");
  }
  if (kernel.local_index(center) < 0) {
    throw InvalidArgument("ball_region: center " + std::to_string(center) +
                          " is not a kernel state");
  }
  if (kernel.space_points != space.size()) {
    throw InvalidArgument("ball_region: kernel was built over a different space");
  }
  BallRegion region;
  region.center = center;
  region.radius = radius;
  region.closed = closed;
  region.member.assign(kernel.state_count(), 0);
  const double* c = space.point(center);
  for (Id i = 0; i < kernel.state_count(); ++i) {
    double d = 0.0;
    if (space.metric == Metric::euclidean) {
      double s = 0.0;
      for (int a = 0; a < space.dim; ++a) s += sq(kernel.state_point(i)[a] - c[a]);
      d = std::sqrt(s);
    } else {
      d = space.distance(kernel.states[i], center);
    }
    bool in = closed ? (d <= radius) : (d < radius);
    if (in) {
      region.member[i] = 1;
      region.inside.push_back(i);
    }
  }
  if (!region.contains_local(kernel.local_index(center))) {
    throw InvalidArgument("ball_region: center fell outside its own region");
  }
  if (region.size() == kernel.state_count()) {
    throw InvalidArgument("ball_region: region covers every state; exit is undefined");
  }
  return region;
}

Id nearest_state(const FiniteSpace& space, const WalkKernel& kernel, Id point) {
  if (point < 0 || point >= space.size()) {
    throw InvalidArgument("nearest_state: point id out of range");
  }
  Id best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (Id i = 0; i < kernel.state_count(); ++i) {
    double d;
    if (space.metric == Metric::euclidean) {
      double s = 0.0;
      for (int a = 0; a < space.dim; ++a) s += sq(kernel.state_point(i)[a] - space.point(point)[a]);
      d = std::sqrt(s);
    } else {
      d = space.distance(kernel.states[i], point);
    }
    if (d < bd) {
      bd = d;
      best = kernel.states[i];
    }
  }
  if (best < 0) throw InvalidArgument("nearest_state: kernel has no states");
  return best;
}

void check_exit_reachable(const WalkKernel& kernel, const BallRegion& region) {
  MaskedSystem sys = masked_index(kernel, region);
  check_complement_reachable(kernel, region, sys);
}

ExitField solve_exit_times(const WalkKernel& kernel, const BallRegion& region, Id direct_limit) {
  if (region.member.size() != static_cast<std::size_t>(kernel.state_count())) {
    throw InvalidArgument("solve_exit_times: region does not match the kernel");
  }
  if (region.size() == 0) throw InvalidArgument("solve_exit_times: empty region");
  MaskedSystem sys = masked_index(kernel, region);
  check_complement_reachable(kernel, region, sys);

  SpMat A = masked_operator(kernel, region, sys);
  Vec rhs(sys.m);
  for (Id k = 0; k < sys.m; ++k) rhs[k] = kernel.waiting[region.inside[k]];

  ExitField field;
  field.region = region;
  Vec phi;
  double tol = 1e-9;
  if (sys.m <= direct_limit) {
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
      throw NumericError("solve_exit_times: sparse factorization failed");
    }
    phi = lu.solve(rhs);
    // Iterative refinement with compensated residuals pushes the forward
    // error down to a few ulps of the solution scale; mean exit times grow
    // like diam^2/r^2, so the raw factorization alone can sit orders of
    // magnitude above that.
    for (int sweep = 0; sweep < 3; ++sweep) {
      Vec r = compensated_residual(A, phi, rhs);
      phi += lu.solve(r);
    }
    field.solver = "sparse_lu";
  } else {
    tol = 1e-7;
    // rho-symmetrized system: with D = diag(density * weights),
    // D^(1/2) (I - P_B) D^(-1/2) is symmetric positive definite for
    // reversible kernels.
    if (detailed_balance_violation(kernel) < 1e-10) {
      Vec dh(sys.m);
      for (Id k = 0; k < sys.m; ++k) {
        Id i = region.inside[k];
        dh[k] = std::sqrt(kernel.stationary_density[i] * kernel.state_weights[i]);
      }
      SpMat S = dh.asDiagonal() * A * dh.cwiseInverse().asDiagonal();
      SpMat St = SpMat(S.transpose());
      S = 0.5 * (S + St);
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(1e-13);
      cg.setMaxIterations(40 * sys.m);
      cg.compute(S);
      Vec psi = cg.solve(Vec(dh.asDiagonal() * rhs));
      phi = dh.cwiseInverse().asDiagonal() * psi;
      field.solver = "cg";
    } else {
      Eigen::BiCGSTAB<SpMat> it;
      it.setTolerance(1e-13);
      it.setMaxIterations(40 * sys.m);
      it.compute(A);
      phi = it.solve(rhs);
      field.solver = "bicgstab";
    }
  }
  field.residual = max_residual(A, phi, rhs);
  if (!(field.residual < tol)) {
    throw NumericError("solve_exit_times: residual " + std::to_string(field.residual) +
                       " exceeds tolerance (" + field.solver + ")");
  }
  field.values.assign(kernel.state_count(), 0.0);
  for (Id k = 0; k < sys.m; ++k) field.values[region.inside[k]] = phi[k];
  return field;
}

double exit_time_max(const ExitField& field) {
  double best = 0.0;
  for (Id i : field.region.inside) best = std::max(best, field.values[i]);
  return best;
}

namespace {

// Shared path sampler: runs `count` paths with the given RNG, reporting each
// path's total time through `record(time)`.
template <typename Record>
void run_paths(const WalkKernel& kernel, const BallRegion& region, Id start_local,
               std::int64_t count, std::mt19937_64& rng, bool exponential_holding,
               Record&& record) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::int64_t p = 0; p < count; ++p) {
    Id cur = start_local;
    double t = 0.0;
    std::int64_t steps = 0;
    while (true) {
      if (++steps > kStepCap) {
        throw NumericError("exit sampling exceeded the step cap; region may trap the walk");
      }
      double tau = kernel.waiting[cur];
      if (exponential_holding) {
        t += std::exponential_distribution<double>(1.0 / tau)(rng);
      } else {
        t += tau;
      }
      Id next = step_from(kernel, cur, unif(rng));
      if (next < 0 || !region.member[next]) break;
      cur = next;
    }
    record(t);
  }
}

constexpr std::int64_t kPathsPerBlock = 4096;

}  // namespace

MonteCarloExit monte_carlo_exit(const WalkKernel& kernel, const BallRegion& region, Id start,
                                std::int64_t n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw InvalidArgument("monte_carlo_exit: n_paths must be >= 1");
  Id start_local = kernel.local_index(start);
  if (!region.contains_local(start_local)) {
    throw InvalidArgument("monte_carlo_exit: start state is outside the region");
  }
  std::int64_t n_blocks = (n_paths + kPathsPerBlock - 1) / kPathsPerBlock;
  std::vector<double> sums(n_blocks, 0.0), sumsq(n_blocks, 0.0);
  parallel_for(n_blocks, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t b = lo; b < hi; ++b) {
      std::int64_t count = std::min(kPathsPerBlock, n_paths - b * kPathsPerBlock);
      auto rng = make_rng(seed, 0x6d630000u + static_cast<std::uint32_t>(b));
      run_paths(kernel, region, start_local, count, rng, false, [&](double t) {
        sums[b] += t;
        sumsq[b] += t * t;
      });
    }
  });
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    sum += sums[b];
    sum2 += sumsq[b];
  }
  MonteCarloExit out;
  out.n_paths = n_paths;
  out.mean = sum / static_cast<double>(n_paths);
  if (n_paths > 1) {
    double var = (sum2 - static_cast<double>(n_paths) * out.mean * out.mean) /
                 static_cast<double>(n_paths - 1);
    out.stderr_mean = std::sqrt(std::max(0.0, var) / static_cast<double>(n_paths));
  }
  return out;
}

double exit_tail_estimate(const WalkKernel& kernel, const BallRegion& region, Id start, double t,
                          std::int64_t n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw InvalidArgument("exit_tail_estimate: n_paths must be >= 1");
  if (t < 0.0 || !std::isfinite(t)) throw InvalidArgument("exit_tail_estimate: t must be >= 0");
  Id start_local = kernel.local_index(start);
  if (!region.contains_local(start_local)) {
    throw InvalidArgument("exit_tail_estimate: start state is outside the region");
  }
  std::int64_t n_blocks = (n_paths + kPathsPerBlock - 1) / kPathsPerBlock;
  std::vector<std::int64_t> hits(n_blocks, 0);
  parallel_for(n_blocks, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t b = lo; b < hi; ++b) {
      std::int64_t count = std::min(kPathsPerBlock, n_paths - b * kPathsPerBlock);
      auto rng = make_rng(seed, 0x74610000u + static_cast<std::uint32_t>(b));
      run_paths(kernel, region, start_local, count, rng, true, [&](double time) {
        if (time <= t) ++hits[b];
      });
    }
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(n_paths);
}

}  // namespace exitdim
