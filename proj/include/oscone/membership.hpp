#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "oscone/builtins.hpp"
#include "oscone/tensor.hpp"

// Cone membership queries.  The minimal cone is concrete positivity of the
// spatial realization.  The maximal cone is decided at a fixed Archimedean
// pad epsilon: a strictly negative pairing against a PSD trace-one witness
// refutes membership, and an alternating (see-saw) search over decompositions
// sum p_ij (x) q_ij produces certificates.  Each half-step is a conic program
// minimizing the l1 coefficient misfit with the other factor frozen; sides
// may be concrete operator matrices or dual-system functionals (Choi form).

namespace oscone {

struct MembershipOptions {
  double eps = kMembershipEps;
  double tol = kMembershipTol;
  int k_max = 0;  // 0: d_S * d_T
  std::uint64_t seed = 0;
  double solver_tol = kFeasTol;
  int solver_max_iter = 10000;
  int max_sweeps = 8;
  int restarts = 5;
};

/// Member iff the concrete realization is PSD within tol.
inline ConeVerdict min_cone_membership(const TensorElement& u, double tol = kPsdTol) {
  if (!u.hermitian(1e-12)) throw NotHermitian("min_cone_membership: element is not Hermitian");
  PsdReport rep = psd_check(u.realize(), tol);
  ConeVerdict v;
  v.value = rep.min_eigenvalue;
  v.verdict = rep.is_psd ? Verdict::Member : Verdict::NonMember;
  v.diagnostics.note = "spatial realization eigenvalue";
  return v;
}

namespace seesaw {

/// One tensor factor inside the alternating search.
struct SideModel {
  bool dual = false;
  SystemPtr sys;

  int var_dim(int k) const { return sys->ambient_dim() * k; }

  /// Hermitian functional matrix tying the variable block to one residual
  /// component: tr(tie * V) = sum_ij coeff_l(p_ij) * dq(i,j).
  Mat tie_matrix(const Mat& dq, int l, int /*k*/) const {
    if (!dual) return hermitian_part(kron(dq.transpose(), sys->riesz(l)));
    return hermitian_part(kron(sys->basis(l).transpose(), dq.transpose()));
  }

  /// Equality constraints keeping a concrete variable inside M_k(S).
  std::vector<Mat> subspace_constraints(int k) const {
    std::vector<Mat> out;
    if (dual) return out;
    for (const Mat& n : sys->complement()) {
      for (int i = 0; i < k; ++i) {
        out.push_back(hermitian_part(kron(matrix_unit(k, i, i), n)));
        for (int j = i + 1; j < k; ++j) {
          Mat xi = kron(matrix_unit(k, j, i), n);
          out.push_back(hermitian_part(xi));
          out.push_back(Mat((xi - xi.adjoint()) / cxd(0, 2)));
        }
      }
    }
    return out;
  }

  /// Read a solved variable back into certificate form, shifting by a unit
  /// multiple when rounding left the positivity witness marginally negative.
  CertificateSide extract(int k, Mat v) const {
    if (!dual) {
      SystemMatrix p = SystemMatrix::from_realization(sys, k, v);
      double lam = herm_eigenvalues(p.realize())(0);
      if (lam < 0.0)
        for (int i = 0; i < k; ++i) p.entry(i, i)(0) += -lam;
      return CertificateSide::of(std::move(p));
    }
    v = hermitian_part(v);
    double lam = herm_eigenvalues(v)(0);
    if (lam < 0.0) v += -lam * identity(v.rows());
    DualSystemMatrix f(sys, k);
    for (int l = 0; l < sys->dim(); ++l) {
      Mat fm(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          fm(i, j) = (detail::choi_pairing_matrix(sys->basis(l), k, i, j) * v).trace();
      f.fmat(l) = hermitian_part(fm);
    }
    return CertificateSide::of_dual(std::move(f), std::move(v));
  }

  RVec unit_coeffs() const {
    RVec u = RVec::Zero(sys->dim());
    if (!dual) {
      u(0) = 1.0;
    } else {
      DualFunctional d0 = dual_unit(sys);
      for (int l = 0; l < sys->dim(); ++l) u(l) = d0.values(l).real();
    }
    return u;
  }
};

inline Eigen::MatrixXcd expansion_grid(const CertificateSide& p, const CertificateSide& q) {
  const int ms = p.system()->dim(), mt = q.system()->dim();
  Eigen::MatrixXcd out(ms, mt);
  for (int l = 0; l < ms; ++l) {
    Mat dp = p.coeff_mat(l);
    for (int lp = 0; lp < mt; ++lp) out(l, lp) = dp.cwiseProduct(q.coeff_mat(lp)).sum();
  }
  return out;
}

/// Best side (in l1 coefficient misfit) against a frozen partner.  The grid
/// must be oriented with rows indexing the solving side's basis and columns
/// the partner's.  Returns false when the conic solve is indeterminate.
inline bool solve_side(const SideModel& side, const std::vector<Mat>& dq_other,
                       const Eigen::MatrixXd& target, int k, const MembershipOptions& opts,
                       CertificateSide* out, long* iteration_count) {
  const int ms = static_cast<int>(target.rows()), mt = static_cast<int>(target.cols());
  const int mr = ms * mt;
  ConicProblem prob;
  prob.block_dims.assign(1, side.var_dim(k));
  for (int i = 0; i < 2 * mr; ++i) prob.block_dims.push_back(1);

  int c = 0;
  for (int l = 0; l < ms; ++l)
    for (int lp = 0; lp < mt; ++lp, ++c) {
      LinearConstraint con;
      con.terms.push_back(BlockTerm{0, side.tie_matrix(dq_other[static_cast<std::size_t>(lp)], l, k)});
      con.terms.push_back(BlockTerm{1 + 2 * c, -Mat::Ones(1, 1)});
      con.terms.push_back(BlockTerm{2 + 2 * c, Mat::Ones(1, 1)});
      con.rhs = target(l, lp);
      prob.constraints.push_back(std::move(con));
    }
  for (Mat& n : side.subspace_constraints(k))
    prob.constraints.push_back(LinearConstraint{{BlockTerm{0, std::move(n)}}, 0.0});
  for (int i = 0; i < 2 * mr; ++i)
    prob.objective.push_back(BlockTerm{1 + i, Mat::Ones(1, 1)});

  SolveOptions sopts;
  sopts.feas_tol = opts.solver_tol;
  sopts.max_iter = opts.solver_max_iter;
  sopts.seed = opts.seed;
  ConicSolution s = conic_solve(prob, sopts);
  if (iteration_count) *iteration_count += s.iterations;
  if (s.status != SolveStatus::Optimal && s.status != SolveStatus::Feasible) return false;
  *out = side.extract(k, s.block_values[0]);
  return true;
}

/// Deterministic initial right factor for a given restart index.
inline CertificateSide initial_right(const SideModel& right, const Mat* realization, int ds,
                                     int k, int restart, const MembershipOptions& opts) {
  const SystemPtr& t = right.sys;
  const int dt = t->ambient_dim();
  SystemMatrix q(t, k);
  std::seed_seq seq{opts.seed, static_cast<std::uint64_t>(k),
                    static_cast<std::uint64_t>(restart)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> g;

  auto fill_random = [&]() {
    for (int i = 0; i < k; ++i) {
      for (int l = 0; l < t->dim(); ++l) q.entry(i, i)(l) = g(rng);
      for (int j = i + 1; j < k; ++j) {
        for (int l = 0; l < t->dim(); ++l) q.entry(i, j)(l) = cxd(g(rng), g(rng));
        q.entry(j, i) = q.entry(i, j).conjugate();
      }
    }
  };

  if (realization == nullptr) {
    // no joint realization available (dual partner): matrix-unit compression
    // pattern first, then random restarts
    if (restart == 0) {
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          q.entry(i, j) = t->coefficients(matrix_unit(dt, i % dt, j % dt));
    } else {
      fill_random();
    }
  } else if (restart == 0) {
    // partial-trace sketch from the leading eigenvectors of the realization
    Eigen::SelfAdjointEigenSolver<Mat> es(*realization);
    const Index n = realization->rows();
    std::vector<Vec> anchors;
    for (int r = 0; r < k; ++r) {
      if (r < n) {
        anchors.push_back(es.eigenvectors().col(n - 1 - r));
      } else {
        Vec v(n);
        for (Index i = 0; i < n; ++i) v(i) = cxd(g(rng), g(rng));
        anchors.push_back(v.normalized());
      }
    }
    for (int r = 0; r < k; ++r)
      for (int s = 0; s < k; ++s) {
        Mat outer = anchors[static_cast<std::size_t>(r)] *
                    anchors[static_cast<std::size_t>(s)].adjoint();
        Mat pt = Mat::Zero(dt, dt);  // trace out the S leg
        for (int a = 0; a < ds; ++a) pt += outer.block(a * dt, a * dt, dt, dt);
        q.entry(r, s) = t->coefficients(pt);
      }
  } else if (restart == 1 && k == ds) {
    // block sketch: the d_S x d_S grid of ambient blocks of the realization
    for (int r = 0; r < k; ++r)
      for (int s = 0; s < k; ++s)
        q.entry(r, s) = t->coefficients(realization->block(r * dt, s * dt, dt, dt));
  } else {
    fill_random();
  }

  double lam = herm_eigenvalues(q.realize())(0);
  if (lam < 0.05)
    for (int i = 0; i < k; ++i) q.entry(i, i)(0) += 0.05 - lam;
  return CertificateSide::of(q);
}

struct CoreResult {
  ConeVerdict verdict;
  bool member_found = false;
};

/// Alternating search for sum p_ij (x) q_ij matching the target coefficient
/// grid (already epsilon-padded).  Both side models see the same grid.
inline CoreResult seesaw_search(const SideModel& left, const SideModel& right,
                                const Eigen::MatrixXd& target, const Mat* realization,
                                const MembershipOptions& opts) {
  CoreResult res;
  const int ds = left.sys->ambient_dim();
  int k_max = opts.k_max > 0
                  ? opts.k_max
                  : left.sys->ambient_dim() * right.sys->ambient_dim();
  double best_resid = std::numeric_limits<double>::infinity();
  long iters = 0;
  int restarts_run = 0;

  auto coeff_mats = [](const CertificateSide& side) {
    std::vector<Mat> out;
    const int m = side.system()->dim();
    out.reserve(static_cast<std::size_t>(m));
    for (int l = 0; l < m; ++l) out.push_back(side.coeff_mat(l));
    return out;
  };

  auto residual_of = [&](const CertificateSide& p, const CertificateSide& q) {
    Eigen::MatrixXcd grid = expansion_grid(p, q);
    return (grid - target.cast<cxd>()).norm();
  };

  for (int k = 1; k <= k_max && !res.member_found; ++k) {
    int stagnant_restarts = 0;
    for (int restart = 0; restart < opts.restarts; ++restart) {
      if (stagnant_restarts >= 2 && best_resid > 1e3 * opts.tol) break;
      CertificateSide q = initial_right(right, realization, ds, k, restart, opts);
      CertificateSide p;
      double restart_best = std::numeric_limits<double>::infinity();
      int stall = 0;
      ++restarts_run;
      const Eigen::MatrixXd target_t = target.transpose();
      for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        if (!solve_side(left, coeff_mats(q), target, k, opts, &p, &iters)) break;
        double r1 = residual_of(p, q);
        if (r1 <= opts.tol) break;
        if (!solve_side(right, coeff_mats(p), target_t, k, opts, &q, &iters)) break;
        double r2 = residual_of(p, q);
        if (r2 <= opts.tol) break;
        if (r2 > 0.9 * restart_best) {
          if (++stall >= 2) break;
        } else {
          stall = 0;
        }
        restart_best = std::min(restart_best, r2);
      }
      if (p.size() == 0) continue;  // first solve failed
      double resid = residual_of(p, q);
      best_resid = std::min(best_resid, resid);
      if (resid > 0.5 * restart_best && resid > 100.0 * opts.tol) ++stagnant_restarts;
      if (resid <= opts.tol) {
        MaxConeCertificate cert;
        cert.scalar = Mat::Ones(1, k);
        cert.P = p;
        cert.Q = q;
        cert.epsilon = opts.eps;
        cert.residual = resid;
        res.verdict.verdict = Verdict::Member;
        res.verdict.value = resid;
        res.verdict.certificate = std::make_shared<MaxConeCertificate>(std::move(cert));
        res.verdict.diagnostics.k_used = k;
        res.member_found = true;
        break;
      }
    }
  }
  res.verdict.diagnostics.best_residual = best_resid;
  res.verdict.diagnostics.restarts = restarts_run;
  res.verdict.diagnostics.solver_iterations = iters;
  if (!res.member_found) res.verdict.diagnostics.k_used = k_max;
  return res;
}

}  // namespace seesaw

/// Maximal-cone membership of a level-1 element at fixed pad eps.
inline ConeVerdict max_cone_membership(const TensorElement& u, const MembershipOptions& opts = {}) {
  if (u.level() != 1)
    throw SizeMismatch("max_cone_membership: expected a level-1 element");
  if (!u.hermitian(1e-12)) throw NotHermitian("max_cone_membership: element is not Hermitian");

  TensorElement padded =
      u + TensorElement::unit(u.left(), u.right()).scaled(opts.eps);
  Mat realization = padded.realize();

  // Phase 1: PSD trace-one witness = minimizing eigenvector of the realization.
  auto [lam, vmin] = min_eig(realization);
  if (lam < -opts.tol) {
    MaxConeWitness wit{Mat(vmin * vmin.adjoint()), lam};
    WitnessCheck chk = verify_witness(wit, u, opts.eps, opts.tol);
    if (chk.ok) {
      ConeVerdict v;
      v.verdict = Verdict::NonMember;
      v.value = chk.pairing;
      v.witness = std::make_shared<MaxConeWitness>(MaxConeWitness{wit.w, chk.pairing});
      v.diagnostics.best_witness_value = chk.pairing;
      return v;
    }
  }

  // Phase 2: see-saw over decompositions of the padded element.
  seesaw::SideModel left{false, u.left()};
  seesaw::SideModel right{false, u.right()};
  Eigen::MatrixXcd grid = padded.coeff(0, 0);
  if (grid.imag().cwiseAbs().maxCoeff() > 1e-12)
    throw NotHermitian("max_cone_membership: Hermitian element must have real coefficients");
  seesaw::CoreResult core =
      seesaw::seesaw_search(left, right, grid.real(), &realization, opts);
  core.verdict.diagnostics.best_witness_value = lam;
  if (core.member_found) {
    if (lam < -opts.tol)
      throw std::logic_error("max_cone_membership: certificate and witness both verified");
    CertificateCheck chk =
        verify_certificate(*core.verdict.certificate, u,
                           std::max(kPsdTol, 10.0 * opts.solver_tol), opts.tol);
    if (!chk.ok) {
      core.verdict.verdict = Verdict::Unknown;
      core.verdict.certificate.reset();
      core.verdict.diagnostics.note = "certificate failed re-verification";
    }
  }
  return core.verdict;
}

/// Concrete system M_n(T) with basis built from matrix-unit patterns.
inline SystemPtr amplified_system(const SystemPtr& t, int n) {
  std::vector<Mat> gens;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int l = 0; l < t->dim(); ++l)
        gens.push_back(kron(matrix_unit(n, a, b), t->basis(l)));
  return make_system(gens, "M" + std::to_string(n) + "(" + t->name() + ")");
}

/// Rewrite a level-n element of S (x) T as a level-1 element of
/// S (x) M_n(T); the amplified unit is I_n (x) 1 (x) 1.
inline TensorElement flatten_level(const TensorElement& u, const SystemPtr& amplified) {
  const SystemPtr& s = u.left();
  const SystemPtr& t = u.right();
  const int n = u.level(), dt = t->ambient_dim();
  TensorElement out(s, amplified, 1);
  for (int l = 0; l < s->dim(); ++l) {
    Mat tl = Mat::Zero(n * dt, n * dt);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int lp = 0; lp < t->dim(); ++lp)
          if (u.coeff(a, b)(l, lp) != cxd(0, 0))
            tl += u.coeff(a, b)(l, lp) * kron(matrix_unit(n, a, b), t->basis(lp));
    out.coeff(0, 0).row(l) = amplified->coefficients(tl).transpose();
  }
  return out;
}

/// Level-n membership through the identification M_n(S (x) T) = S (x) M_n(T).
inline ConeVerdict max_cone_membership_level(const TensorElement& u,
                                             const MembershipOptions& opts = {}) {
  if (!u.hermitian(1e-12))
    throw NotHermitian("max_cone_membership_level: element is not Hermitian");
  if (u.level() == 1) return max_cone_membership(u, opts);
  SystemPtr amplified = amplified_system(u.right(), u.level());
  TensorElement flat = flatten_level(u, amplified);
  MembershipOptions inner = opts;
  if (inner.k_max == 0)
    inner.k_max = u.left()->ambient_dim() * amplified->ambient_dim();
  ConeVerdict v = max_cone_membership(flat, inner);
  v.diagnostics.note += (v.diagnostics.note.empty() ? "" : "; ");
  v.diagnostics.note += "decided after amplifying the right factor to level " +
                        std::to_string(u.level());
  return v;
}

struct NormBracket {
  double lo = 0.0;
  double hi = 0.0;
  int unknown_verdicts = 0;
  int membership_queries = 0;
};

/// Bisection bracket for the osy-max operator norm of U: the infimum of r
/// with [[r 1, U], [U^*, r 1]] in the maximal cone at level 2n.
inline NormBracket osy_max_norm(const TensorElement& u, double tol = 1e-2,
                                const MembershipOptions& base = {}) {
  NormBracket out;
  const int n = u.level();
  const SystemPtr& s = u.left();
  const SystemPtr& t = u.right();
  TensorElement uadj = u.adjoint();

  auto block_element = [&](double r) {
    TensorElement b(s, t, 2 * n);
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) {
        b.coeff(a, n + c) = u.coeff(a, c);
        b.coeff(n + a, c) = uadj.coeff(a, c);
      }
    for (int a = 0; a < 2 * n; ++a) b.coeff(a, a)(0, 0) += r;
    return b;
  };
  auto member_at = [&](double r) {
    MembershipOptions opts = base;
    opts.eps = std::min(base.eps, tol * 0.1);
    ++out.membership_queries;
    ConeVerdict v = max_cone_membership_level(block_element(r), opts);
    if (v.unknown()) ++out.unknown_verdicts;
    return v.member();
  };

  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * operator_norm(u.realize()));
  int doublings = 0;
  while (!member_at(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 12) break;
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (member_at(mid))
      hi = mid;
    else
      lo = mid;
  }
  out.lo = lo;
  out.hi = hi;
  return out;
}

struct ContractionReport {
  bool ok = false;
  double residual = 0.0;
  double norm_bound = 1.0;
  double input_norm_margin = 0.0;  // max input norm minus one
  MaxConeCertificate certificate;
};

/// Assemble U = A (X o Y) B from contractions and certify
/// [[1, U], [U^*, 1]] at level 2n in closed form, bounding the osy-max norm
/// of U by 1.
inline ContractionReport schur_contraction_check(const SchurDecomposition& dec,
                                                 double tol = kMembershipTol) {
  const int n = static_cast<int>(dec.a.rows());
  const int k = dec.x.size();
  const SystemPtr& s = dec.x.system();
  const SystemPtr& t = dec.y.system();

  double margin = std::max(std::max(operator_norm(dec.a), operator_norm(dec.b)),
                           std::max(operator_norm(dec.x.realize()),
                                    operator_norm(dec.y.realize()))) -
                  1.0;
  if (margin > 1e-9)
    throw PreconditionViolated("schur_contraction_check: inputs must be contractions");

  // block factor [[1, X],[X^*, 1]], positive because ||X|| <= 1
  auto corner_block = [&](const SystemMatrix& x) {
    SystemMatrix big(x.system(), 2 * k);
    SystemMatrix u = SystemMatrix::unit(x.system(), k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        big.entry(i, j) = u.entry(i, j);
        big.entry(k + i, k + j) = u.entry(i, j);
        big.entry(i, k + j) = x.entry(i, j);
        big.entry(k + i, j) = x.adjoint().entry(i, j);
      }
    return big;
  };
  SystemMatrix pbig = corner_block(dec.x);
  SystemMatrix qbig = corner_block(dec.y);
  Mat abig = Mat::Zero(2 * n, 2 * k);
  abig.block(0, 0, n, k) = dec.a;
  abig.block(n, k, n, k) = dec.b.adjoint();

  // scalar pad (I - AA^*) + (I - B^*B) carried on unit tensors
  Mat pad = Mat::Zero(2 * n, 2 * n);
  pad.block(0, 0, n, n) = identity(n) - dec.a * dec.a.adjoint();
  pad.block(n, n, n, n) = identity(n) - dec.b.adjoint() * dec.b;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(pad));
  RVec ev = es.eigenvalues().cwiseMax(0.0);
  Mat pad_root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                 es.eigenvectors().adjoint();
  SystemMatrix xpad = SystemMatrix::unit(s, 2 * n);
  SystemMatrix ypad(t, 2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) ypad.entry(i, j)(0) = 1.0;  // J pattern of units

  MaxConeCertificate cert;
  cert.scalar = Mat::Zero(2 * n, 2 * k + 2 * n);
  cert.scalar.block(0, 0, 2 * n, 2 * k) = abig;
  cert.scalar.block(0, 2 * k, 2 * n, 2 * n) = pad_root;
  cert.P = CertificateSide::of(pbig.direct_sum(xpad));
  cert.Q = CertificateSide::of(qbig.direct_sum(ypad));

  // target: [[1, U],[U^*, 1]] with U = A (X o Y) B
  TensorElement u = dec.assemble();
  TensorElement target(s, t, 2 * n);
  TensorElement uadj = u.adjoint();
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      target.coeff(a, n + c) = u.coeff(a, c);
      target.coeff(n + a, c) = uadj.coeff(a, c);
    }
  for (int a = 0; a < 2 * n; ++a) target.coeff(a, a)(0, 0) += 1.0;

  ContractionReport rep;
  rep.input_norm_margin = margin;
  CertificateCheck chk = verify_certificate(cert, target, kPsdTol, tol);
  rep.residual = chk.residual;
  rep.ok = chk.ok;
  cert.residual = chk.residual;
  rep.certificate = std::move(cert);
  return rep;
}

}  // namespace oscone
