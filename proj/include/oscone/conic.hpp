#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "oscone/matrix.hpp"

// Small dense semidefinite feasibility/optimization engine.
//
// Problems are given in equality standard form over a product of Hermitian
// PSD blocks:  find X in K,  <A_i, X> = b_i,  minimizing <C, X>.
// The solver runs a homogeneous self-dual embedded primal-dual interior
// point iteration with Nesterov-Todd scaling, so it terminates either at a
// verified (near-)optimal point or at a Farkas ray certifying primal
// infeasibility.  Every returned status is re-verified from scratch before
// it is reported; anything that fails re-verification degrades to
// Indeterminate.

namespace oscone {

enum class SolveStatus { Optimal, Feasible, Infeasible, Indeterminate };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

/// One Hermitian coefficient acting on one PSD block.
struct BlockTerm {
  int block = 0;
  Mat a;
};

struct LinearConstraint {
  std::vector<BlockTerm> terms;
  double rhs = 0.0;
};

struct ConicProblem {
  std::vector<int> block_dims;
  std::vector<LinearConstraint> constraints;
  std::vector<BlockTerm> objective;  // empty = pure feasibility

  void validate() const {
    for (const auto& c : constraints) {
      for (const auto& t : c.terms) check_term(t);
      if (!std::isfinite(c.rhs)) throw Malformed("conic: non-finite right-hand side");
    }
    for (const auto& t : objective) check_term(t);
  }

 private:
  void check_term(const BlockTerm& t) const {
    if (t.block < 0 || t.block >= static_cast<int>(block_dims.size()))
      throw Malformed("conic: block index out of range");
    const int n = block_dims[t.block];
    if (t.a.rows() != n || t.a.cols() != n)
      throw Malformed("conic: coefficient dimension disagrees with its block");
    if (hermitian_defect(t.a) > 1e-12 * (1.0 + max_abs(t.a)))
      throw Malformed("conic: coefficient matrix is not Hermitian");
  }
};

struct SolveOptions {
  double feas_tol = kFeasTol;
  int max_iter = 10000;
  std::uint64_t seed = 0;  // recorded for reproducibility of callers
};

struct ConicSolution {
  SolveStatus status = SolveStatus::Indeterminate;
  std::vector<Mat> block_values;
  bool has_objective = false;
  double objective_value = 0.0;

  // independently recomputed at exit
  double max_constraint_residual = std::numeric_limits<double>::infinity();
  double min_block_eigenvalue = -std::numeric_limits<double>::infinity();

  std::vector<double> y;       // dual multipliers (scaled by 1/tau)
  std::vector<double> farkas;  // normalized Farkas ray when Infeasible (b.y = 1)

  int iterations = 0;
  double mu = 0.0, tau = 0.0, kappa = 0.0;
  std::uint64_t seed = 0;
};

/// Residual report recomputed from scratch; never trusts solver internals.
struct ConicResidualReport {
  double max_constraint_residual = 0.0;
  double min_block_eigenvalue = 0.0;
  double objective_value = 0.0;
  double farkas_min_eigenvalue = 0.0;  // of -A^T(y); meaningful when Infeasible
  double farkas_b_dot_y = 0.0;
  bool ok = false;
};

namespace detail {

inline std::vector<Mat> zero_blocks(const std::vector<int>& dims) {
  std::vector<Mat> out;
  out.reserve(dims.size());
  for (int n : dims) out.push_back(Mat::Zero(n, n));
  return out;
}

inline Eigen::VectorXd apply_a(const ConicProblem& p, const std::vector<Mat>& x) {
  Eigen::VectorXd out(p.constraints.size());
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    double v = 0.0;
    for (const auto& t : p.constraints[i].terms) v += hs_inner(t.a, x[t.block]);
    out(static_cast<Index>(i)) = v;
  }
  return out;
}

inline std::vector<Mat> apply_at(const ConicProblem& p, const Eigen::VectorXd& y) {
  std::vector<Mat> out = zero_blocks(p.block_dims);
  for (std::size_t i = 0; i < p.constraints.size(); ++i)
    for (const auto& t : p.constraints[i].terms)
      out[t.block] += y(static_cast<Index>(i)) * t.a;
  return out;
}

inline double blocks_inner(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) v += hs_inner(a[i], b[i]);
  return v;
}

inline double blocks_min_eig(const std::vector<Mat>& xs) {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& x : xs)
    if (x.rows() > 0) v = std::min(v, herm_eigenvalues(x)(0));
  return std::isfinite(v) ? v : 0.0;
}

/// Largest alpha with x + alpha*dx staying PSD (x assumed positive definite).
inline double step_to_boundary(const Mat& x, const Mat& dx) {
  Eigen::LLT<Mat> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Mat l = llt.matrixL();
  Mat s = l.triangularView<Eigen::Lower>().solve(dx);
  s = l.triangularView<Eigen::Lower>().solve(Mat(s.adjoint())).adjoint();
  double lam = herm_eigenvalues(s)(0);
  if (lam >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lam;
}

}  // namespace detail

/// Recompute all residuals and eigenvalues of a claimed solution from scratch.
inline ConicResidualReport conic_verify(const ConicProblem& p, const ConicSolution& s,
                                        double feas_tol) {
  ConicResidualReport rep;
  if (s.status == SolveStatus::Infeasible) {
    if (s.farkas.size() != p.constraints.size()) return rep;
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
        s.farkas.data(), static_cast<Index>(s.farkas.size()));
    std::vector<Mat> zf = detail::apply_at(p, y);
    for (auto& z : zf) z = -z;
    double scale = 1.0;
    for (const auto& z : zf) scale = std::max(scale, max_abs(z));
    rep.farkas_min_eigenvalue = detail::blocks_min_eig(zf);
    double by = 0.0;
    for (std::size_t i = 0; i < p.constraints.size(); ++i) by += p.constraints[i].rhs * s.farkas[i];
    rep.farkas_b_dot_y = by;
    rep.ok = rep.farkas_min_eigenvalue >= -feas_tol * scale && by > feas_tol;
    return rep;
  }
  if (s.block_values.size() != p.block_dims.size()) return rep;
  Eigen::VectorXd ax = detail::apply_a(p, s.block_values);
  double res = 0.0;
  for (std::size_t i = 0; i < p.constraints.size(); ++i)
    res = std::max(res, std::abs(ax(static_cast<Index>(i)) - p.constraints[i].rhs));
  rep.max_constraint_residual = res;
  rep.min_block_eigenvalue = detail::blocks_min_eig(s.block_values);
  double obj = 0.0;
  for (const auto& t : p.objective) obj += hs_inner(t.a, s.block_values[t.block]);
  rep.objective_value = obj;
  rep.ok = res <= feas_tol && rep.min_block_eigenvalue >= -feas_tol;
  return rep;
}

inline ConicSolution conic_solve(const ConicProblem& p, const SolveOptions& opts = {}) {
  p.validate();
  if (opts.feas_tol <= 0.0) throw Malformed("conic: feas_tol must be positive");

  const int nblocks = static_cast<int>(p.block_dims.size());
  const int m = static_cast<int>(p.constraints.size());
  const double ftol = opts.feas_tol;

  ConicSolution sol;
  sol.seed = opts.seed;
  sol.has_objective = !p.objective.empty();

  double nu = 0.0;
  for (int n : p.block_dims) nu += n;

  std::vector<Mat> cb = detail::zero_blocks(p.block_dims);
  for (const auto& t : p.objective) cb[t.block] += hermitian_part(t.a);

  Eigen::VectorXd bvec(m);
  for (int i = 0; i < m; ++i) bvec(i) = p.constraints[i].rhs;
  const double bmax = m == 0 ? 0.0 : bvec.cwiseAbs().maxCoeff();
  double cmax = 0.0;
  for (const auto& c : cb) cmax = std::max(cmax, max_abs(c));

  std::vector<Mat> x, z;
  for (int n : p.block_dims) {
    x.push_back(identity(n));
    z.push_back(identity(n));
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  double tau = 1.0, kappa = 1.0;

  struct Direction {
    std::vector<Mat> dx, dz;
    Eigen::VectorXd dy;
    double dtau = 0.0, dkappa = 0.0;
  };

  auto finalize_feasible = [&]() {
    sol.block_values.clear();
    for (const auto& xb : x) sol.block_values.push_back(hermitian_part(xb / tau));
    sol.y.assign(y.data(), y.data() + m);
    for (auto& v : sol.y) v /= tau;
    ConicResidualReport rep = conic_verify(p, sol, ftol);
    sol.max_constraint_residual = rep.max_constraint_residual;
    sol.min_block_eigenvalue = rep.min_block_eigenvalue;
    sol.objective_value = rep.objective_value;
    sol.status = rep.ok
                     ? (sol.has_objective ? SolveStatus::Optimal : SolveStatus::Feasible)
                     : SolveStatus::Indeterminate;
  };

  const int iter_cap = std::min(opts.max_iter, 500);
  for (int iter = 0; iter < iter_cap; ++iter) {
    sol.iterations = iter;

    std::vector<Mat> aty = detail::apply_at(p, y);
    Eigen::VectorXd rp = detail::apply_a(p, x) - tau * bvec;
    std::vector<Mat> rd(nblocks);
    for (int bix = 0; bix < nblocks; ++bix) rd[bix] = aty[bix] - tau * cb[bix] + z[bix];
    double cx = detail::blocks_inner(cb, x);
    double by = bvec.dot(y);
    double rg = by - cx - kappa;
    double xz = detail::blocks_inner(x, z);
    double mu = (xz + tau * kappa) / (nu + 1.0);
    sol.mu = mu;
    sol.tau = tau;
    sol.kappa = kappa;

    double pres = m == 0 ? 0.0 : rp.cwiseAbs().maxCoeff() / tau;
    double dres = 0.0;
    for (const auto& r : rd) dres = std::max(dres, max_abs(r));
    dres /= tau;
    double relgap = (xz / (tau * tau)) / (1.0 + std::abs(cx / tau) + std::abs(by / tau));

    if (pres <= 0.5 * ftol && dres <= ftol * (1.0 + cmax) && relgap <= ftol) {
      finalize_feasible();
      if (sol.status != SolveStatus::Indeterminate) return sol;
    }

    // Farkas ray test: y with A^T(y) <= 0 and b.y > 0 certifies infeasibility.
    if (by > ftol && mu < 1e-2) {
      Eigen::VectorXd yn = y / by;
      std::vector<Mat> zf = detail::apply_at(p, yn);
      for (auto& zb : zf) zb = -zb;
      double scale = 1.0;
      for (const auto& zb : zf) scale = std::max(scale, max_abs(zb));
      if (detail::blocks_min_eig(zf) >= -ftol * scale) {
        sol.farkas.assign(yn.data(), yn.data() + m);
        sol.status = SolveStatus::Infeasible;
        if (conic_verify(p, sol, ftol).ok) return sol;
        sol.status = SolveStatus::Indeterminate;
        sol.farkas.clear();
      }
    }

    // Nesterov-Todd scaling point per block: W Z W = X.
    std::vector<Mat> w(nblocks), zi(nblocks), wrdw(nblocks);
    bool scale_ok = true;
    for (int bix = 0; bix < nblocks; ++bix) {
      Eigen::SelfAdjointEigenSolver<Mat> ex(hermitian_part(x[bix]));
      if (ex.eigenvalues()(0) <= 0.0) { scale_ok = false; break; }
      Mat xh = ex.operatorSqrt();
      Mat xi = ex.operatorInverseSqrt();
      xi = xi * xi;
      Eigen::SelfAdjointEigenSolver<Mat> em(hermitian_part(Mat(xh * z[bix] * xh)));
      if (em.eigenvalues()(0) <= 0.0) { scale_ok = false; break; }
      w[bix] = hermitian_part(Mat(xh * em.operatorInverseSqrt() * xh));
      zi[bix] = hermitian_part(Mat(w[bix] * xi * w[bix]));
      wrdw[bix] = hermitian_part(Mat(w[bix] * rd[bix] * w[bix]));
    }
    if (!scale_ok) break;

    // Schur complement M(i,j) = <A_i, W A_j W>, assembled blockwise.
    std::vector<std::vector<Mat>> g(m);  // g[i] aligned with constraint i's terms
    for (int i = 0; i < m; ++i) {
      const auto& terms = p.constraints[i].terms;
      g[i].reserve(terms.size());
      for (const auto& t : terms) g[i].push_back(Mat(w[t.block] * t.a * w[t.block]));
    }
    std::vector<std::vector<std::pair<int, int>>> by_block(nblocks);
    for (int i = 0; i < m; ++i)
      for (std::size_t ti = 0; ti < p.constraints[i].terms.size(); ++ti)
        by_block[p.constraints[i].terms[ti].block].push_back({i, static_cast<int>(ti)});
    Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
    for (int bix = 0; bix < nblocks; ++bix) {
      const auto& touch = by_block[bix];
      for (std::size_t a1 = 0; a1 < touch.size(); ++a1)
        for (std::size_t a2 = a1; a2 < touch.size(); ++a2) {
          auto [i, ti] = touch[a1];
          auto [j, tj] = touch[a2];
          double v = hs_inner(p.constraints[i].terms[ti].a, g[j][tj]);
          schur(i, j) += v;
          if (i != j) schur(j, i) += v;
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(schur);
    if (ldlt.info() != Eigen::Success) {
      schur.diagonal().array() += 1e-12 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
      ldlt.compute(schur);
      if (ldlt.info() != Eigen::Success) break;
    }

    std::vector<Mat> wcw(nblocks);
    for (int bix = 0; bix < nblocks; ++bix)
      wcw[bix] = hermitian_part(Mat(w[bix] * cb[bix] * w[bix]));
    Eigen::VectorXd u2 = detail::apply_a(p, wcw);
    Eigen::VectorXd dy_b = ldlt.solve(Eigen::VectorXd(u2 + bvec));
    double ccx = detail::blocks_inner(cb, wcw);

    auto make_dir = [&](double sigma, double eta) {
      Direction d;
      std::vector<Mat> f(nblocks);
      for (int bix = 0; bix < nblocks; ++bix)
        f[bix] = hermitian_part(Mat(sigma * mu * zi[bix] - x[bix] + eta * wrdw[bix]));
      Eigen::VectorXd g1 = -eta * rp - detail::apply_a(p, f);
      Eigen::VectorXd dy_a = ldlt.solve(g1);
      double rhs3 = -eta * rg + detail::blocks_inner(cb, f) + (sigma * mu - tau * kappa) / tau;
      double denom = (bvec - u2).dot(dy_b) + ccx + kappa / tau;
      double dtau = std::abs(denom) < 1e-300
                        ? 0.0
                        : (rhs3 - (bvec - u2).dot(dy_a)) / denom;
      d.dy = dy_a + dtau * dy_b;
      d.dtau = dtau;
      std::vector<Mat> atdy = detail::apply_at(p, d.dy);
      d.dx.resize(nblocks);
      d.dz.resize(nblocks);
      for (int bix = 0; bix < nblocks; ++bix) {
        d.dx[bix] = hermitian_part(
            Mat(w[bix] * atdy[bix] * w[bix] - dtau * wcw[bix] + f[bix]));
        d.dz[bix] = hermitian_part(Mat(-eta * rd[bix] - atdy[bix] + dtau * cb[bix]));
      }
      d.dkappa = (sigma * mu - tau * kappa - kappa * dtau) / tau;
      return d;
    };

    auto max_step = [&](const Direction& d) {
      double alpha = std::numeric_limits<double>::infinity();
      for (int bix = 0; bix < nblocks; ++bix) {
        alpha = std::min(alpha, detail::step_to_boundary(x[bix], d.dx[bix]));
        alpha = std::min(alpha, detail::step_to_boundary(z[bix], d.dz[bix]));
      }
      if (d.dtau < 0.0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0.0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    Direction aff = make_dir(0.0, 1.0);
    double alpha_aff = std::min(1.0, max_step(aff));
    double mu_aff = tau * kappa;
    {
      double s = 0.0;
      for (int bix = 0; bix < nblocks; ++bix)
        s += hs_inner(Mat(x[bix] + alpha_aff * aff.dx[bix]),
                      Mat(z[bix] + alpha_aff * aff.dz[bix]));
      mu_aff = (s + (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa)) /
               (nu + 1.0);
    }
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(0.99, std::max(1e-8, sigma));

    Direction dir = make_dir(sigma, 1.0);
    double alpha = std::min(1.0, 0.98 * max_step(dir));
    if (!std::isfinite(alpha) || alpha <= 1e-14) break;
    bool bad = !std::isfinite(dir.dtau) || !std::isfinite(dir.dkappa);
    for (int bix = 0; bix < nblocks && !bad; ++bix)
      bad = !dir.dx[bix].allFinite() || !dir.dz[bix].allFinite();
    if (bad) break;

    for (int bix = 0; bix < nblocks; ++bix) {
      x[bix] = hermitian_part(Mat(x[bix] + alpha * dir.dx[bix]));
      z[bix] = hermitian_part(Mat(z[bix] + alpha * dir.dz[bix]));
    }
    y += alpha * dir.dy;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
  }

  // one last attempt to salvage a verified feasible point
  finalize_feasible();
  if (sol.status == SolveStatus::Indeterminate) {
    sol.block_values.clear();
    sol.y.clear();
  }
  return sol;
}

}  // namespace oscone
