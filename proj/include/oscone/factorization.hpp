#pragma once

#include <utility>
#include <vector>

#include "oscone/membership.hpp"

// The hat-map correspondence u <-> (u^: S^d -> T), the |||.||| norm with its
// perturbation certificate, constructive factorization of u^ through a matrix
// algebra, the reverse reconstruction of membership from a factorization, the
// symmetry swap, and the (min,max)-nuclearity detector.

namespace oscone {

/// Linear map S^d -> T attached to a level-1 element: row l holds the
/// T-coefficients of the image of the l-th dual basis functional.
struct HatMap {
  SystemPtr source;  // S (the domain is its dual)
  SystemPtr target;  // T
  Eigen::MatrixXcd matrix;

  /// Image of the functional with the given values on S's basis, as
  /// T-coefficients.
  Vec apply(const Vec& f_values) const { return matrix.transpose() * f_values; }
};

inline HatMap hat(const TensorElement& u) {
  if (u.level() != 1) throw SizeMismatch("hat: expected a level-1 element");
  return HatMap{u.left(), u.right(), u.coeff(0, 0)};
}

/// Self-adjoint basis of T with y_1 = 1_T kept exactly, trace-orthogonalized
/// and operator-norm normalized; the |||.||| expansion basis.
struct TripleNormContext {
  SystemPtr system;
  std::vector<Mat> ys;
  Eigen::MatrixXd from_stored;  // ctx coefficients = from_stored * stored coefficients

  static TripleNormContext for_system(const SystemPtr& t) {
    TripleNormContext ctx;
    ctx.system = t;
    const int d = t->ambient_dim(), m = t->dim();
    ctx.ys.push_back(identity(d));
    for (int l = 1; l < m; ++l) {
      Mat y = t->basis(l);
      for (const Mat& prev : ctx.ys) y -= (hs_inner(prev, y) / hs_inner(prev, prev)) * prev;
      double nrm = operator_norm(y);
      if (nrm < 1e-12) throw Malformed("triple norm context: degenerate basis");
      ctx.ys.push_back(Mat(y / nrm));
    }
    // stored-to-context transition: solve W^T c_ctx = c_stored with
    // W(i,:) = stored coefficients of ys[i]
    Eigen::MatrixXcd w(m, m);
    for (int i = 0; i < m; ++i) w.row(i) = t->coefficients(ctx.ys[static_cast<std::size_t>(i)]);
    if (w.imag().cwiseAbs().maxCoeff() > 1e-12)
      throw Malformed("triple norm context: basis transition is not real");
    ctx.from_stored = w.real().transpose().partialPivLu().inverse();
    return ctx;
  }

  /// Columns are the S-coefficient vectors x_i of u = sum_i x_i (x) y_i.
  Eigen::MatrixXcd expand(const TensorElement& u) const {
    if (u.level() != 1) throw SizeMismatch("triple norm: expected a level-1 element");
    if (u.right() != system) throw SizeMismatch("triple norm: context system mismatch");
    return u.coeff(0, 0) * from_stored.transpose().cast<cxd>();
  }
};

/// |||u||| = sum of operator norms of the left coefficients of u over the
/// context basis.
inline double triple_norm(const TensorElement& u, const TripleNormContext& ctx) {
  Eigen::MatrixXcd xs = ctx.expand(u);
  double total = 0.0;
  for (Index i = 0; i < xs.cols(); ++i) total += operator_norm(u.left()->realize(xs.col(i)));
  return total;
}

/// (|||u - w|||, max over dual basis functionals of ||(u^ - w^)(f)||_T).
inline std::pair<double, double> point_norm_gap(const TensorElement& u,
                                                const TensorElement& w,
                                                const TripleNormContext& ctx) {
  TensorElement diff = u - w;
  double triple = triple_norm(diff, ctx);
  HatMap h = hat(diff);
  double sup = 0.0;
  for (int l = 0; l < u.left()->dim(); ++l)
    sup = std::max(sup,
                   operator_norm(u.right()->realize(h.matrix.row(l).transpose())));
  return {triple, sup};
}

/// Closed-form certificate that |||u|||(1 (x) 1) + u lies in the ground-level
/// maximal cone; built from the 2x2 blocks of the perturbation argument, no
/// solver involved.
inline MaxConeCertificate perturbation_certificate(const TensorElement& u,
                                                   const TripleNormContext& ctx) {
  if (u.level() != 1)
    throw SizeMismatch("perturbation_certificate: expected a level-1 element");
  Eigen::MatrixXcd xs = ctx.expand(u);
  if (xs.imag().cwiseAbs().maxCoeff() > 1e-10)
    throw NotSelfAdjoint("perturbation_certificate: coefficients must be self-adjoint");

  const SystemPtr& s = u.left();
  const SystemPtr& t = u.right();
  const int m = static_cast<int>(xs.cols());

  std::vector<int> used;
  std::vector<double> norms;
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    double ni = operator_norm(s->realize(xs.col(i)));
    if (ni <= 0.0) continue;
    used.push_back(i);
    norms.push_back(ni);
    total += ni;
  }

  MaxConeCertificate cert;
  cert.epsilon = total;
  if (used.empty()) {
    cert.scalar = Mat::Zero(1, 1);
    cert.P = CertificateSide::of(SystemMatrix::unit(s, 1));
    cert.Q = CertificateSide::of(SystemMatrix::unit(t, 1));
    cert.residual = u.coeff_norm();
    return cert;
  }

  SystemMatrix p(s, 2 * static_cast<int>(used.size()));
  SystemMatrix q(t, 2 * static_cast<int>(used.size()));
  Mat row = Mat::Zero(1, 2 * static_cast<Index>(used.size()));
  for (std::size_t idx = 0; idx < used.size(); ++idx) {
    const int base = 2 * static_cast<int>(idx);
    const double ni = norms[idx];
    Vec xi = xs.col(used[idx]);
    Vec unit_s = Vec::Zero(s->dim());
    unit_s(0) = ni;
    p.entry(base, base) = unit_s;
    p.entry(base + 1, base + 1) = unit_s;
    p.entry(base, base + 1) = xi;
    p.entry(base + 1, base) = xi.conjugate();

    Vec yi = t->coefficients(ctx.ys[static_cast<std::size_t>(used[idx])]);
    Vec unit_t = Vec::Zero(t->dim());
    unit_t(0) = 1.0;
    q.entry(base, base) = unit_t;
    q.entry(base + 1, base + 1) = unit_t;
    q.entry(base, base + 1) = yi;
    q.entry(base + 1, base) = yi.conjugate();

    row(0, base) = row(0, base + 1) = 1.0 / std::sqrt(2.0);
  }
  cert.scalar = row;
  cert.P = CertificateSide::of(std::move(p));
  cert.Q = CertificateSide::of(std::move(q));
  cert.residual = verify_certificate(cert, u, kPsdTol, 1.0).residual;
  return cert;
}

// ---------------------------------------------------------------------------
// Factorization through a matrix algebra

/// CP maps phi: S^d -> M_k, phi(f) = [f(p_ij)], and psi: M_k -> T,
/// psi([a]) = sum a_ij q_ij, encoded by a certified decomposition.
struct FactorizationPair {
  CertificateSide P;  // S-side; phi
  SystemMatrix Q;     // T-side; psi
  double epsilon = 0.0;
  double residual = 0.0;       // coefficient residual of the source certificate
  double amplification = 0.0;  // C in the error bound eps*|f(1)| + C*residual

  int k() const { return P.size(); }

  /// psi(phi(f)) as T-coefficients, for f given by values on the source basis.
  Vec compose(const Vec& f_values) const {
    const int kk = k();
    const SystemPtr& t = Q.system();
    Mat phi = Mat::Zero(kk, kk);
    for (int l = 0; l < static_cast<int>(f_values.size()); ++l)
      phi += f_values(l) * P.coeff_mat(l);
    Vec out = Vec::Zero(t->dim());
    for (int i = 0; i < kk; ++i)
      for (int j = 0; j < kk; ++j) out += phi(i, j) * Q.entry(i, j);
    return out;
  }
};

/// sqrt(sum of squared operator norms of the target basis): converts a
/// coefficient-space residual into a point-norm error bound.
inline double coefficient_amplification(const SystemPtr& t) {
  double s = 0.0;
  for (int l = 0; l < t->dim(); ++l) {
    double n = operator_norm(t->basis(l));
    s += n * n;
  }
  return std::sqrt(s);
}

/// Per-dual-basis-functional composition error ||psi(phi(delta_l)) - u^(delta_l)||.
inline std::vector<double> composition_errors(const FactorizationPair& pair,
                                              const TensorElement& u) {
  HatMap h = hat(u);
  const SystemPtr& s = u.left();
  const SystemPtr& t = u.right();
  std::vector<double> errs;
  for (int l = 0; l < s->dim(); ++l) {
    Vec f = Vec::Zero(s->dim());
    f(l) = 1.0;
    Vec diff = pair.compose(f) - h.apply(f);
    errs.push_back(operator_norm(t->realize(diff)));
  }
  return errs;
}

/// Convert a maximal-cone certificate of u at pad eps into the explicit
/// factorization of u^ through M_k.
inline FactorizationPair factor_through_matrices(const TensorElement& u,
                                                 const MembershipOptions& opts = {}) {
  ConeVerdict v = max_cone_membership(u, opts);
  if (!v.member() || !v.certificate)
    throw NotInMaxCone("factor_through_matrices: membership not certified at this epsilon");
  const MaxConeCertificate& cert = *v.certificate;
  FactorizationPair pair;
  pair.P = cert.P;
  pair.Q = cert.Q.concrete;
  pair.epsilon = cert.epsilon;
  pair.residual = cert.residual;
  pair.amplification = coefficient_amplification(u.right());
  return pair;
}

/// Reverse direction: a PSD-verified pair encodes w = sum p_ij (x) q_ij; the
/// perturbation certificate of u - w upgrades it to membership of u at
/// eps' = |||u - w|||.
inline ConeVerdict reconstruct_membership(const FactorizationPair& pair,
                                          const TensorElement& u,
                                          const TripleNormContext& ctx) {
  if (pair.P.dual)
    throw NotPositive("reconstruct_membership: expected a concrete S-side pair");
  if (!psd_check(pair.P.concrete.realize(), 10.0 * kPsdTol).is_psd ||
      !psd_check(pair.Q.realize(), 10.0 * kPsdTol).is_psd)
    throw NotPositive("reconstruct_membership: pair fails PSD verification");

  const int k = pair.k();
  MaxConeCertificate base;
  base.scalar = Mat::Ones(1, k);
  base.P = pair.P;
  base.Q = CertificateSide::of(pair.Q);
  TensorElement w = base.expand(u.left(), u.right());

  TensorElement diff = u - w;
  MaxConeCertificate pert = perturbation_certificate(diff, ctx);
  const double eps_prime = pert.epsilon;

  MaxConeCertificate total;
  const Index kp = pert.scalar.cols();
  total.scalar = Mat::Zero(1, k + kp);
  total.scalar.block(0, 0, 1, k) = base.scalar;
  total.scalar.block(0, k, 1, kp) = pert.scalar;
  total.P = CertificateSide::of(pair.P.concrete.direct_sum(pert.P.concrete));
  total.Q = CertificateSide::of(pair.Q.direct_sum(pert.Q.concrete));
  total.epsilon = eps_prime;

  CertificateCheck chk = verify_certificate(total, u, 10.0 * kPsdTol, 1.0);
  total.residual = chk.residual;

  ConeVerdict out;
  out.verdict = Verdict::Member;
  out.value = chk.residual;
  out.certificate = std::make_shared<MaxConeCertificate>(std::move(total));
  out.diagnostics.best_residual = chk.residual;
  out.diagnostics.k_used = k;
  out.diagnostics.note = "reconstructed at eps' = " + std::to_string(eps_prime);
  return out;
}

/// theta: x (x) y -> y (x) x on elements.
inline TensorElement swap_factors(const TensorElement& u) { return u.swapped(); }

// ---------------------------------------------------------------------------
// Nuclearity

struct NuclearityReport {
  ConeVerdict verdict;
  double max_composition_error = 0.0;  // identity reproduction on the basis
};

/// Corollary-style CPAP detector: u = sum_l delta_l (x) y_l is max-positive
/// iff the identity of T factors through a matrix algebra approximately.  The
/// S-side cones are the CP cones of the dual system, searched in Choi form;
/// Member certificates are approximate identity factorizations.  No witness
/// family exists on the dual side, so the test never reports NonMember.
inline NuclearityReport nuclearity_test(const SystemPtr& t, double eps = kMembershipEps,
                                        int k_max = 0, const MembershipOptions& base = {}) {
  MembershipOptions opts = base;
  opts.eps = eps;
  opts.k_max = k_max > 0 ? k_max : t->ambient_dim() * t->ambient_dim();

  const int m = t->dim();
  seesaw::SideModel left{true, t};
  seesaw::SideModel right{false, t};
  RVec ul = left.unit_coeffs(), ur = right.unit_coeffs();
  Eigen::MatrixXd target = Eigen::MatrixXd::Identity(m, m) + eps * ul * ur.transpose();

  seesaw::CoreResult core = seesaw::seesaw_search(left, right, target, nullptr, opts);
  NuclearityReport rep;
  rep.verdict = core.verdict;
  if (!core.member_found) {
    rep.verdict.diagnostics.note = "no CPAP certificate found within the size ceiling";
    return rep;
  }

  // re-verify as an approximate identity factorization
  const MaxConeCertificate& cert = *core.verdict.certificate;
  FactorizationPair pair;
  pair.P = cert.P;
  pair.Q = cert.Q.concrete;
  pair.epsilon = eps;
  double worst = 0.0;
  for (int l = 0; l < m; ++l) {
    Vec f = Vec::Zero(m);
    f(l) = 1.0;  // y_l viewed as a functional on T^d
    Vec got = pair.compose(f);
    Vec want = Vec::Zero(m);
    want(l) = 1.0;
    worst = std::max(worst, operator_norm(t->realize(Vec(got - want))));
  }
  rep.max_composition_error = worst;
  rep.verdict.diagnostics.note =
      "CPAP certificate at (k=" + std::to_string(cert.k()) + ", eps=" + std::to_string(eps) + ")";
  return rep;
}

}  // namespace oscone
