#include "exitdim/spectral.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "exitdim/common.hpp"
#include "exitdim/hashgrid.hpp"

namespace exitdim {

namespace {

// Deterministic start vector with full support: all-ones plus a small seeded
// jitter so power iterations cannot start orthogonal to an eigenvector.
Eigen::VectorXd start_vector(Id m, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x73760000u);
  std::uniform_real_distribution<double> jitter(-0.125, 0.125);
  Eigen::VectorXd v(m);
  for (Id i = 0; i < m; ++i) v[i] = 1.0 + jitter(rng);
  v /= v.norm();
  return v;
}

// Similarity transform D P D^{-1} with D = diag(sqrt(rho)), symmetrized.
// Exactly symmetric when rho P satisfies detailed balance; averaging removes
// the roundoff asymmetry so Eigen's symmetric solvers stay applicable.
Eigen::SparseMatrix<double> rho_symmetrized(const KilledOperator& op) {
  Id m = op.size();
  Eigen::VectorXd dh(m), dhinv(m);
  for (Id i = 0; i < m; ++i) {
    double s = std::sqrt(op.rho[static_cast<std::size_t>(i)]);
    dh[i] = s;
    dhinv[i] = 1.0 / s;
  }
  Eigen::SparseMatrix<double> s = dh.asDiagonal() * op.P * dhinv.asDiagonal();
  Eigen::SparseMatrix<double> st = s.transpose();
  Eigen::SparseMatrix<double> sym = 0.5 * (s + st);
  sym.makeCompressed();
  return sym;
}

// Relative asymmetry of diag(rho) P, zero (to roundoff) for reversible walks.
double masked_balance_violation(const KilledOperator& op) {
  Eigen::VectorXd rho(op.size());
  for (Id i = 0; i < op.size(); ++i) rho[i] = op.rho[static_cast<std::size_t>(i)];
  Eigen::SparseMatrix<double> flux = rho.asDiagonal() * op.P;
  Eigen::SparseMatrix<double> fluxT = flux.transpose();
  Eigen::SparseMatrix<double> gap = flux - fluxT;
  double worst = 0.0, scale = 0.0;
  for (int k = 0; k < flux.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(flux, k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  for (int k = 0; k < gap.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(gap, k); it; ++it)
      worst = std::max(worst, std::abs(it.value()));
  return scale > 0 ? worst / scale : 0.0;
}

// Extremal eigenvalue of the symmetric matrix S by power iteration on
// S + shift I (shift = +1 reaches the top of the spectrum, -1 the bottom,
// since all eigenvalues lie in [-1, 1] for a killed walk). Returns the
// Rayleigh quotient once the eigen-residual drops below tol.
double shifted_extreme(const Eigen::SparseMatrix<double>& s, double shift, double tol,
                       std::int64_t max_iter) {
  Eigen::VectorXd v = start_vector(static_cast<Id>(s.rows()), 17);
  double theta = 0.0;
  for (std::int64_t it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = s * v;
    theta = v.dot(w);
    if ((w - theta * v).norm() <= tol) return theta;
    Eigen::VectorXd u = shift > 0 ? Eigen::VectorXd(w + v) : Eigen::VectorXd(v - w);
    double n = u.norm();
    if (n == 0.0) return theta;  // v was an exact eigenvector of the shift
    v = u / n;
  }
  throw NumericError("spectral radius iteration did not converge");
}

}  // namespace

KilledOperator killed_operator(const WalkKernel& kernel, const BallRegion& region) {
  if (static_cast<Id>(region.member.size()) != kernel.state_count())
    throw InvalidArgument("killed operator: region does not match the kernel");
  check_exit_reachable(kernel, region);

  Id m = region.size();
  std::vector<Id> masked_of(static_cast<std::size_t>(kernel.state_count()), -1);
  for (Id i = 0; i < m; ++i) masked_of[static_cast<std::size_t>(region.inside[i])] = i;

  KilledOperator op;
  op.region = region;
  op.states.resize(static_cast<std::size_t>(m));
  op.waiting.resize(static_cast<std::size_t>(m));
  op.rho.resize(static_cast<std::size_t>(m));
  op.weights.resize(static_cast<std::size_t>(m));
  std::vector<Eigen::Triplet<double>> trips;
  for (Id i = 0; i < m; ++i) {
    Id local = region.inside[static_cast<std::size_t>(i)];
    op.states[static_cast<std::size_t>(i)] = kernel.states[static_cast<std::size_t>(local)];
    op.waiting[static_cast<std::size_t>(i)] = kernel.waiting[static_cast<std::size_t>(local)];
    op.weights[static_cast<std::size_t>(i)] = kernel.state_weights[static_cast<std::size_t>(local)];
    op.rho[static_cast<std::size_t>(i)] = kernel.stationary_density[static_cast<std::size_t>(local)] *
                                          kernel.state_weights[static_cast<std::size_t>(local)];
    for (Id e = kernel.row_ptr[static_cast<std::size_t>(local)];
         e < kernel.row_ptr[static_cast<std::size_t>(local) + 1]; ++e) {
      Id col_local = kernel.local_index(kernel.col[static_cast<std::size_t>(e)]);
      if (col_local < 0) continue;
      Id j = masked_of[static_cast<std::size_t>(col_local)];
      if (j < 0) continue;
      trips.emplace_back(static_cast<int>(i), static_cast<int>(j),
                         kernel.val[static_cast<std::size_t>(e)]);
    }
  }
  op.P.resize(static_cast<int>(m), static_cast<int>(m));
  op.P.setFromTriplets(trips.begin(), trips.end());
  op.P.makeCompressed();
  return op;
}

double spectral_radius_killed(const KilledOperator& op, double tol, std::int64_t max_iter) {
  if (!(tol > 0)) throw InvalidArgument("spectral radius: tolerance must be positive");
  Id m = op.size();
  if (m == 0) throw InvalidArgument("spectral radius: empty operator");
  if (m == 1) return std::abs(op.P.coeff(0, 0));
  Eigen::SparseMatrix<double> sym = rho_symmetrized(op);
  double top = shifted_extreme(sym, +1.0, tol, max_iter);
  double bottom = shifted_extreme(sym, -1.0, tol, max_iter);
  return std::max({top, -bottom, 0.0});
}

Eigen::VectorXd GreenMatrix::apply(const Eigen::VectorXd& v) const {
  if (v.size() != static_cast<Eigen::Index>(states.size()))
    throw InvalidArgument("green matrix: vector length mismatch");
  if (dense) return K * v;
  Eigen::VectorXd sum = v;
  Eigen::VectorXd w = v;
  for (std::int64_t k = 1; k < terms; ++k) {
    w = P * w;
    sum += w;
  }
  return sum;
}

double GreenMatrix::entry(Id i, Id j) const {
  Id m = size();
  if (i < 0 || i >= m || j < 0 || j >= m) throw InvalidArgument("green matrix: index out of range");
  if (dense) return K(i, j);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  e[j] = 1.0;
  return apply(e)[i];
}

double GreenMatrix::green_density(Id i, Id j) const {
  return entry(i, j) * waiting[static_cast<std::size_t>(j)] / weights[static_cast<std::size_t>(j)];
}

double GreenMatrix::green_symmetric(Id i, Id j) const {
  return entry(i, j) / rho[static_cast<std::size_t>(j)];
}

Eigen::VectorXd GreenMatrix::exit_times() const {
  Eigen::VectorXd tau(size());
  for (Id i = 0; i < size(); ++i) tau[i] = waiting[static_cast<std::size_t>(i)];
  return apply(tau);
}

GreenMatrix green_matrix(const KilledOperator& op, double tol, Id dense_limit) {
  if (!(tol > 0)) throw InvalidArgument("green matrix: tolerance must be positive");
  Id m = op.size();
  GreenMatrix g;
  g.states = op.states;
  g.waiting = op.waiting;
  g.rho = op.rho;
  g.weights = op.weights;
  g.radius = spectral_radius_killed(op, std::min(tol, 1e-10));
  if (g.radius >= 1.0 - 1e-9)
    throw NumericError("green matrix: spectral radius too close to 1 for a Neumann series");

  std::int64_t terms = 1;
  auto tail = [&](std::int64_t t) {
    return std::pow(g.radius, static_cast<double>(t)) / (1.0 - g.radius);
  };
  while (tail(terms) >= tol) {
    terms *= 2;
    if (terms > (std::int64_t{1} << 40))
      throw NumericError("green matrix: series too slow to truncate at this tolerance");
  }
  g.terms = terms;
  g.tail_bound = tail(terms);
  g.P = op.P;

  if (m <= dense_limit) {
    g.dense = true;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd q = Eigen::MatrixXd(op.P);
    std::int64_t have = 1;
    while (have < terms) {
      acc = acc + q * acc;
      have *= 2;
      if (have < terms) q = q * q;
    }
    g.K = std::move(acc);
  } else {
    g.dense = false;
  }
  return g;
}

double bottom_eigenvalue(const KilledOperator& op, double tol, std::int64_t max_iter) {
  if (!(tol > 0)) throw InvalidArgument("bottom eigenvalue: tolerance must be positive");
  Id m = op.size();
  if (m == 0) throw InvalidArgument("bottom eigenvalue: empty operator");
  if (m == 1) return (1.0 - op.P.coeff(0, 0)) / op.waiting[0];
  if (masked_balance_violation(op) > 1e-8)
    throw InvalidArgument("bottom eigenvalue: kernel is not reversible for its density");

  // Generalized problem (I - P) f = lambda diag(tau) f recast with
  // B = diag(rho tau): C = B^{-1/2} diag(rho)(I-P) B^{-1/2} is symmetric
  // positive definite and similar to diag(tau)^{-1}(I - P). Inverse power
  // iteration applies C^{-1} through one sparse LU factorization of I - P.
  Eigen::SparseMatrix<double> eye(static_cast<int>(m), static_cast<int>(m));
  eye.setIdentity();
  Eigen::SparseMatrix<double> a = eye - op.P;
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success)
    throw NumericError("bottom eigenvalue: killed operator is numerically singular");

  Eigen::VectorXd sq_rho_tau(m), inv_sq_rho_tau(m), tau_over_rho_sq(m), rho_vec(m);
  for (Id i = 0; i < m; ++i) {
    double rho = op.rho[static_cast<std::size_t>(i)];
    double tau = op.waiting[static_cast<std::size_t>(i)];
    sq_rho_tau[i] = std::sqrt(rho * tau);
    inv_sq_rho_tau[i] = 1.0 / sq_rho_tau[i];
    tau_over_rho_sq[i] = std::sqrt(tau / rho);
    rho_vec[i] = rho;
  }
  auto apply_c = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd z = inv_sq_rho_tau.cwiseProduct(w);
    Eigen::VectorXd t = rho_vec.cwiseProduct(z - op.P * z);
    return Eigen::VectorXd(inv_sq_rho_tau.cwiseProduct(t));
  };

  Eigen::VectorXd v = start_vector(m, 29);
  for (std::int64_t it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = sq_rho_tau.cwiseProduct(lu.solve(tau_over_rho_sq.cwiseProduct(v)));
    double n = w.norm();
    if (!(n > 0) || !std::isfinite(n))
      throw NumericError("bottom eigenvalue: inverse iteration broke down");
    v = w / n;
    Eigen::VectorXd cv = apply_c(v);
    double lambda = v.dot(cv);
    if ((cv - lambda * v).norm() <= tol * std::max(lambda, 1e-300)) return lambda;
  }
  throw NumericError("bottom eigenvalue: inverse iteration did not converge");
}

FaberKrahnReport faber_krahn_constant(const FiniteSpace& space, const std::vector<Id>& centers,
                                      const std::vector<double>& R_grid,
                                      const std::vector<double>& scale_grid, KernelKind kind,
                                      std::uint64_t net_seed, const ScalarField* beta) {
  if (centers.empty() || R_grid.empty() || scale_grid.empty())
    throw InvalidArgument("spectral sweep: centers, R grid, and scale grid must be non-empty");
  for (double R : R_grid)
    if (!(R > 0) || !std::isfinite(R)) throw InvalidArgument("spectral sweep: radii must be positive");
  for (double s : scale_grid)
    if (!(s > 0) || !std::isfinite(s)) throw InvalidArgument("spectral sweep: scales must be positive");

  FaberKrahnReport report;
  report.c_min = std::numeric_limits<double>::infinity();
  report.c_max = 0.0;
  for (double scale : scale_grid) {
    WalkKernel kernel = scale_kernel(space, kind, scale, net_seed, beta);
    for (Id center : centers) {
      Id anchor = nearest_state(space, kernel, center);
      for (double R : R_grid) {
        BallRegion region = ball_region(space, kernel, anchor, R);
        ExitField field = solve_exit_times(kernel, region);
        KilledOperator op = killed_operator(kernel, region);
        FaberKrahnEntry entry;
        entry.center = anchor;
        entry.R = R;
        entry.scale = scale;
        entry.e_plus = exit_time_max(field);
        entry.lambda1 = bottom_eigenvalue(op);
        entry.product = entry.lambda1 * entry.e_plus;
        report.c_min = std::min(report.c_min, entry.product);
        report.c_max = std::max(report.c_max, entry.product);
        report.table.push_back(entry);
      }
    }
  }
  return report;
}

double dirichlet_energy(const FiniteSpace& space, double r, const ScalarField& beta,
                        const std::vector<double>& f) {
  Id n = space.size();
  if (!(r > 0) || !std::isfinite(r)) throw InvalidArgument("dirichlet energy: scale must be positive");
  if (static_cast<Id>(beta.values.size()) != n)
    throw InvalidArgument("dirichlet energy: beta field does not match the space");
  if (static_cast<Id>(f.size()) != n)
    throw InvalidArgument("dirichlet energy: function does not match the space");

  HashGrid grid(space, r);
  std::vector<double> part(static_cast<std::size_t>(n), 0.0);
  parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t x = lo; x < hi; ++x) {
      double ball_mass = 0.0, quad = 0.0;
      double fx = f[static_cast<std::size_t>(x)];
      grid.for_near(space.point(static_cast<Id>(x)), r, /*closed=*/false, [&](Id y, double) {
        double mass = space.weights[static_cast<std::size_t>(y)];
        double diff = fx - f[static_cast<std::size_t>(y)];
        ball_mass += mass;
        quad += diff * diff * mass;
      });
      part[static_cast<std::size_t>(x)] =
          space.weights[static_cast<std::size_t>(x)] * quad /
          (std::pow(r, beta.values[static_cast<std::size_t>(x)]) * ball_mass);
    }
  });
  double total = 0.0;
  for (double v : part) total += v;
  return total;
}

TentBound tent_rayleigh(const FiniteSpace& space, Id center, double R, double r) {
  if (center < 0 || center >= space.size())
    throw InvalidArgument("tent bound: center out of range");
  if (!(r > 0) || !(R > r))
    throw InvalidArgument("tent bound: need 0 < r < R");

  // Kernel rows only where the killed walk can live: the ball plus one jump
  // of slack on each side of the boundary.
  std::vector<Id> rows;
  double mass_R = 0.0, mass_half = 0.0;
  for (Id i = 0; i < space.size(); ++i) {
    double d = space.distance(center, i);
    if (d <= R + 2.0 * r) rows.push_back(i);
    if (d <= R) mass_R += space.weights[static_cast<std::size_t>(i)];
    if (d <= R / 2.0) mass_half += space.weights[static_cast<std::size_t>(i)];
  }
  WalkKernel kernel = ball_kernel_w(space, r, &rows);
  BallRegion region = ball_region(space, kernel, center, R);
  KilledOperator op = killed_operator(kernel, region);

  Id m = op.size();
  Eigen::VectorXd psi(m), rho(m), rho_tau(m);
  for (Id i = 0; i < m; ++i) {
    double d = space.distance(center, op.states[static_cast<std::size_t>(i)]);
    psi[i] = (R - d) / r;
    rho[i] = op.rho[static_cast<std::size_t>(i)];
    rho_tau[i] = rho[i] * op.waiting[static_cast<std::size_t>(i)];
  }
  double num = psi.dot(rho.cwiseProduct(psi - op.P * psi));
  double den = psi.dot(rho_tau.cwiseProduct(psi));
  if (!(den > 0)) throw NumericError("tent bound: degenerate tent function");

  TentBound out;
  out.quotient = num / den;
  out.lambda1 = bottom_eigenvalue(op);
  out.bound = 4.0 * r * r * mass_R / (R * R * mass_half);
  if (out.lambda1 > out.quotient * (1.0 + 1e-9))
    throw NumericError("tent bound: eigenvalue exceeded its Rayleigh quotient");
  return out;
}

EnergySeries energy_scale_series(const FiniteSpace& space, const std::vector<double>& scale_grid,
                                 const ScalarField& beta,
                                 const std::vector<std::vector<double>>& fs) {
  if (scale_grid.empty()) throw InvalidArgument("energy series: empty scale grid");
  for (std::size_t i = 1; i < scale_grid.size(); ++i)
    if (!(scale_grid[i] < scale_grid[i - 1]))
      throw InvalidArgument("energy series: scales must be strictly decreasing");
  if (fs.empty()) throw InvalidArgument("energy series: no test functions");

  EnergySeries out;
  out.series.resize(fs.size());
  out.stabilization.resize(fs.size(), 1.0);
  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    ScaleSeries s;
    s.label = "dirichlet_energy";
    for (double scale : scale_grid)
      s.pairs.emplace_back(scale, dirichlet_energy(space, scale, beta, fs[fi]));
    std::size_t k = std::min<std::size_t>(4, s.pairs.size());
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = s.pairs.size() - k; i < s.pairs.size(); ++i) {
      lo = std::min(lo, s.pairs[i].second);
      hi = std::max(hi, s.pairs[i].second);
    }
    out.stabilization[fi] =
        hi == 0.0 ? 1.0
                  : (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    out.series[fi] = std::move(s);
  }
  return out;
}

}  // namespace exitdim
