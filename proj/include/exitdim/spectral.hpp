#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

#include "exitdim/exit.hpp"
#include "exitdim/exponent.hpp"
#include "exitdim/kernel.hpp"
#include "exitdim/space.hpp"

namespace exitdim {

// Walk kernel restricted to a ball region with absorption outside: row i and
// column j of P run over the region states only, so row sums are <= 1 and the
// lost mass is the per-step exit probability. Indices below are region-local;
// states maps them back to global point ids. rho is the reversibility measure
// (stationary density times state weight) used to symmetrize P.
struct KilledOperator {
  BallRegion region;
  std::vector<Id> states;
  std::vector<double> waiting;
  std::vector<double> rho;
  std::vector<double> weights;
  Eigen::SparseMatrix<double> P;

  Id size() const { return static_cast<Id>(states.size()); }
};

// Requires the complement to be reachable from every region state, so that
// the killed walk genuinely loses mass and I - P is invertible.
KilledOperator killed_operator(const WalkKernel& kernel, const BallRegion& region);

// Largest |eigenvalue| of the killed operator, computed on the
// rho-symmetrized matrix by shifted power iterations from both spectral ends.
// Always < 1 for a valid killed operator.
double spectral_radius_killed(const KilledOperator& op, double tol = 1e-10,
                              std::int64_t max_iter = 500000);

// Neumann series K = sum_k P^k of the killed operator, with a certified
// geometric tail bound radius^terms / (1 - radius) below the requested
// tolerance. Dense construction squares partial sums (doubling), so `terms`
// is a power of two; above dense_limit the matrix is kept in operator form
// and applications iterate the series directly.
struct GreenMatrix {
  std::vector<Id> states;
  std::vector<double> waiting;
  std::vector<double> rho;
  std::vector<double> weights;
  double radius = 0.0;
  double tail_bound = 0.0;
  std::int64_t terms = 0;
  bool dense = true;
  Eigen::MatrixXd K;               // filled when dense
  Eigen::SparseMatrix<double> P;   // kept for operator-form application

  Id size() const { return static_cast<Id>(states.size()); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

  // Expected visits K(i,j), occupation density K(i,j) tau(j) / mu(j), and the
  // symmetric kernel K(i,j) / rho(j); i, j are region-local indices.
  double entry(Id i, Id j) const;
  double green_density(Id i, Id j) const;
  double green_symmetric(Id i, Id j) const;

  // K applied to the waiting times: the mean exit time profile.
  Eigen::VectorXd exit_times() const;
};

GreenMatrix green_matrix(const KilledOperator& op, double tol = 1e-10, Id dense_limit = 5000);

// Smallest eigenvalue of the time-weighted Dirichlet problem
// (I - P) f = lambda diag(waiting) f, i.e. the decay rate of the killed walk
// per unit time. Computed by inverse power iteration with a sparse LU of
// I - P, converged when the symmetrized eigen-residual is below tol * lambda.
double bottom_eigenvalue(const KilledOperator& op, double tol = 1e-8,
                         std::int64_t max_iter = 200000);

// One ball of the spectral-gap sweep: lambda1 * E+ is scale-invariant for
// walks with matched time normalization, so its min over balls is a
// Faber-Krahn-type constant and its spread diagnoses uniformity.
struct FaberKrahnEntry {
  Id center = -1;        // global id of the state anchoring the ball
  double R = 0.0;        // ball radius
  double scale = 0.0;    // kernel scale
  double lambda1 = 0.0;
  double e_plus = 0.0;   // largest mean exit time
  double product = 0.0;  // lambda1 * e_plus
};

struct FaberKrahnReport {
  double c_min = 0.0;
  double c_max = 0.0;
  std::vector<FaberKrahnEntry> table;
};

// Evaluates lambda1 * E+ on B_R[c] for every center, every R in R_grid, and
// every kernel scale in scale_grid. Centers are given as space point ids and
// snapped to the nearest kernel state. Solver failures propagate.
FaberKrahnReport faber_krahn_constant(const FiniteSpace& space, const std::vector<Id>& centers,
                                      const std::vector<double>& R_grid,
                                      const std::vector<double>& scale_grid, KernelKind kind,
                                      std::uint64_t net_seed = 1,
                                      const ScalarField* beta = nullptr);

// Discrete Dirichlet form at scale r with local time renormalization:
//   E_r(f) = sum_x mu(x) / (r^beta(x) v_r(x)) * sum_{d(x,y)<r} (f(x)-f(y))^2 mu(y)
// where v_r(x) is the open-ball mass around x. Deterministic accumulation
// (per-point partial sums reduced in index order) regardless of threading.
double dirichlet_energy(const FiniteSpace& space, double r, const ScalarField& beta,
                        const std::vector<double>& f);

// Rayleigh-quotient witness against the tent function
// psi(y) = (R - d(center,y)) / r on B_R[center]: lambda1 <= quotient <= the
// volume-ratio bound 4 r^2 mu(B_R) / (R^2 mu(B_{R/2})) certifies a
// Faber-Krahn-style upper estimate at working precision.
struct TentBound {
  double lambda1 = 0.0;
  double quotient = 0.0;
  double bound = 0.0;
};

TentBound tent_rayleigh(const FiniteSpace& space, Id center, double R, double r);

// Dirichlet energies of fixed test functions across a ladder of scales; the
// stabilization ratio (max/min over the finest <= 4 scales) per function
// quantifies convergence of the renormalized forms.
struct EnergySeries {
  std::vector<ScaleSeries> series;       // one per test function
  std::vector<double> stabilization;
};

EnergySeries energy_scale_series(const FiniteSpace& space, const std::vector<double>& scale_grid,
                                 const ScalarField& beta,
                                 const std::vector<std::vector<double>>& fs);

}  // namespace exitdim
