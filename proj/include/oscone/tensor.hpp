#pragma once

#include <utility>
#include <vector>

#include "oscone/opsys.hpp"

// Elements of M_n(S (x) T) in canonical coefficients over basis pairs,
// Schur tensor products, the compression identities relating them to
// Kronecker form, and the certificate/witness types for maximal-cone
// membership.

namespace oscone {

class TensorElement {
 public:
  TensorElement() = default;
  TensorElement(SystemPtr left, SystemPtr right, int level)
      : left_(std::move(left)), right_(std::move(right)), level_(level),
        coeffs_(static_cast<std::size_t>(level) * level,
                Mat::Zero(left_->dim(), right_->dim())) {}

  /// n-fold amplified unit: the 1 (x) 1 pattern down the diagonal.
  static TensorElement unit(SystemPtr left, SystemPtr right, int level = 1) {
    TensorElement u(std::move(left), std::move(right), level);
    for (int a = 0; a < level; ++a) u.coeff(a, a)(0, 0) = 1.0;
    return u;
  }

  static TensorElement elementary(const SystemElement& x, const SystemElement& y) {
    TensorElement u(x.system, y.system, 1);
    u.coeff(0, 0) = x.coeffs * y.coeffs.transpose();
    return u;
  }

  const SystemPtr& left() const { return left_; }
  const SystemPtr& right() const { return right_; }
  int level() const { return level_; }

  Mat& coeff(int a, int b) { return coeffs_[static_cast<std::size_t>(a) * level_ + b]; }
  const Mat& coeff(int a, int b) const {
    return coeffs_[static_cast<std::size_t>(a) * level_ + b];
  }

  bool hermitian(double tol = 1e-12) const {
    for (int a = 0; a < level_; ++a)
      for (int b = 0; b < level_; ++b)
        if (max_abs(coeff(a, b) - coeff(b, a).conjugate()) > tol) return false;
    return true;
  }

  TensorElement adjoint() const {
    TensorElement out(left_, right_, level_);
    for (int a = 0; a < level_; ++a)
      for (int b = 0; b < level_; ++b) out.coeff(a, b) = coeff(b, a).conjugate();
    return out;
  }

  TensorElement operator+(const TensorElement& o) const {
    check_same_shape(o);
    TensorElement out = *this;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) out.coeffs_[i] += o.coeffs_[i];
    return out;
  }

  TensorElement operator-(const TensorElement& o) const {
    check_same_shape(o);
    TensorElement out = *this;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) out.coeffs_[i] -= o.coeffs_[i];
    return out;
  }

  TensorElement scaled(cxd t) const {
    TensorElement out = *this;
    for (auto& c : out.coeffs_) c *= t;
    return out;
  }

  /// Concrete spatial realization in M_level(M_dS (x) M_dT).
  Mat realize() const {
    const int ds = left_->ambient_dim(), dt = right_->ambient_dim();
    const int blk = ds * dt;
    Mat out = Mat::Zero(level_ * blk, level_ * blk);
    for (int a = 0; a < level_; ++a)
      for (int b = 0; b < level_; ++b) {
        const Mat& c = coeff(a, b);
        Mat block = Mat::Zero(blk, blk);
        for (int l = 0; l < left_->dim(); ++l)
          for (int lp = 0; lp < right_->dim(); ++lp)
            if (c(l, lp) != cxd(0, 0))
              block += c(l, lp) * kron(left_->basis(l), right_->basis(lp));
        out.block(a * blk, b * blk, blk, blk) = block;
      }
    return out;
  }

  /// Entrywise sup distance between coefficient tensors.
  double coeff_distance(const TensorElement& o) const {
    check_same_shape(o);
    double d = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
      d = std::max(d, max_abs(coeffs_[i] - o.coeffs_[i]));
    return d;
  }

  /// Frobenius norm of the coefficient tensor.
  double coeff_norm() const {
    double s = 0.0;
    for (const auto& c : coeffs_) s += c.squaredNorm();
    return std::sqrt(s);
  }

  /// Exchange factor roles by transposing the coefficient tensor.
  TensorElement swapped() const {
    TensorElement out(right_, left_, level_);
    for (int a = 0; a < level_; ++a)
      for (int b = 0; b < level_; ++b) out.coeff(a, b) = coeff(a, b).transpose();
    return out;
  }

 private:
  void check_same_shape(const TensorElement& o) const {
    if (left_ != o.left_ || right_ != o.right_ || level_ != o.level_)
      throw SizeMismatch("tensor elements have different shapes");
  }

  SystemPtr left_, right_;
  int level_ = 0;
  std::vector<Mat> coeffs_;
};

/// Scalar sandwich a * T * b of an operator-matrix-valued tensor element.
inline TensorElement sandwich_tensor(const Mat& a, const TensorElement& t, const Mat& b) {
  if (a.cols() != t.level() || b.rows() != t.level())
    throw SizeMismatch("sandwich_tensor: scalar matrix sizes disagree");
  TensorElement out(t.left(), t.right(), static_cast<int>(a.rows()));
  for (int i = 0; i < out.level(); ++i)
    for (int j = 0; j < static_cast<int>(b.cols()); ++j) {
      Mat acc = Mat::Zero(t.left()->dim(), t.right()->dim());
      for (int p = 0; p < t.level(); ++p)
        for (int q = 0; q < t.level(); ++q) acc += a(i, p) * b(q, j) * t.coeff(p, q);
      out.coeff(i, j) = acc;
    }
  return out;
}

inline TensorElement conjugate_tensor(const Mat& a, const TensorElement& t) {
  return sandwich_tensor(a, t, a.adjoint());
}

/// Schur tensor product [x_ij (x) y_ij].
inline TensorElement schur_product(const SystemMatrix& x, const SystemMatrix& y) {
  if (x.size() != y.size()) throw SizeMismatch("schur_product: operator matrix sizes differ");
  TensorElement out(x.system(), y.system(), x.size());
  for (int i = 0; i < x.size(); ++i)
    for (int j = 0; j < x.size(); ++j)
      out.coeff(i, j) = x.entry(i, j) * y.entry(i, j).transpose();
  return out;
}

/// The level-nm tensor element of X (x) Y with row-major pair indices.
inline TensorElement kron_tensor(const SystemMatrix& x, const SystemMatrix& y) {
  const int n = x.size(), m = y.size();
  TensorElement out(x.system(), y.system(), n * m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < m; ++l)
          out.coeff(i * m + k, j * m + l) = x.entry(i, j) * y.entry(k, l).transpose();
  return out;
}

/// Compression route: E (X (x) Y) E^* with E the matrix-unit block row;
/// equals schur_product(X, Y) entry for entry.
inline TensorElement compress_kron(const SystemMatrix& x, const SystemMatrix& y) {
  if (x.size() != y.size()) throw SizeMismatch("compress_kron: operator matrix sizes differ");
  const int n = x.size();
  return conjugate_tensor(matrix_units_row(n), kron_tensor(x, y));
}

/// Factors (X (x) J_m shuffled, Y (x) J_n) whose Schur product is X (x) Y;
/// both stay positive when X and Y are.
inline std::pair<SystemMatrix, SystemMatrix> kron_as_schur(const SystemMatrix& x,
                                                           const SystemMatrix& y) {
  const int n = x.size(), m = y.size();
  SystemMatrix f1(x.system(), n * m), f2(y.system(), n * m);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < m; ++l) {
          f1.entry(i * m + k, j * m + l) = x.entry(i, j);
          f2.entry(i * m + k, j * m + l) = y.entry(k, l);
        }
  return {std::move(f1), std::move(f2)};
}

// ---------------------------------------------------------------------------
// Certificates and witnesses

/// One factor of a certified decomposition A (X o Y) A^*.  A concrete side is
/// an operator matrix with PSD realization; a dual side is a matrix of
/// functionals whose complete positivity is witnessed by a PSD Choi matrix.
struct CertificateSide {
  bool dual = false;
  SystemMatrix concrete;
  DualSystemMatrix functionals;
  Mat choi;

  static CertificateSide of(SystemMatrix m) {
    CertificateSide s;
    s.concrete = std::move(m);
    return s;
  }
  static CertificateSide of_dual(DualSystemMatrix f, Mat choi_witness) {
    CertificateSide s;
    s.dual = true;
    s.functionals = std::move(f);
    s.choi = std::move(choi_witness);
    return s;
  }

  int size() const { return dual ? functionals.size() : concrete.size(); }
  const SystemPtr& system() const { return dual ? functionals.system() : concrete.system(); }

  /// Coefficient matrix [coeff_l(entry_ij)]_{ij} for basis index l.
  Mat coeff_mat(int l) const {
    if (dual) return functionals.fmat(l);
    const int k = concrete.size();
    Mat out(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) out(i, j) = concrete.entry(i, j)(l);
    return out;
  }

  /// Real coefficients of the side's order unit (1_S, or the trace state).
  RVec unit_coeffs() const {
    RVec u = RVec::Zero(system()->dim());
    if (!dual) {
      u(0) = 1.0;
    } else {
      DualFunctional d0 = dual_unit(system());
      for (int l = 0; l < system()->dim(); ++l) u(l) = d0.values(l).real();
    }
    return u;
  }

  /// Minimum eigenvalue of the positivity witness (realization or Choi).
  double psd_margin() const {
    const Mat w = dual ? choi : concrete.realize();
    return w.rows() == 0 ? 0.0 : herm_eigenvalues(w)(0);
  }
};

struct MaxConeCertificate {
  Mat scalar;  // n x k compression
  CertificateSide P, Q;
  double epsilon = 0.0;
  double residual = 0.0;

  int k() const { return P.size(); }
  int level() const { return static_cast<int>(scalar.rows()); }

  /// Coefficient tensor of scalar * (P o Q) * scalar^dagger, computed with
  /// matrix arithmetic only.
  TensorElement expand(const SystemPtr& left, const SystemPtr& right) const {
    const int n = level();
    TensorElement out(left, right, n);
    for (int l = 0; l < left->dim(); ++l) {
      Mat dp = P.coeff_mat(l);
      for (int lp = 0; lp < right->dim(); ++lp) {
        Mat had = dp.cwiseProduct(Q.coeff_mat(lp));
        Mat block = scalar * had * scalar.adjoint();
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) out.coeff(a, b)(l, lp) = block(a, b);
      }
    }
    return out;
  }

  MaxConeCertificate swapped() const {
    MaxConeCertificate out;
    out.scalar = scalar;
    out.P = Q;
    out.Q = P;
    out.epsilon = epsilon;
    out.residual = residual;
    return out;
  }
};

/// PSD trace-one density witness against membership: its pairing with the
/// concrete realization of the padded element is certified negative.
struct MaxConeWitness {
  Mat w;
  double pairing_value = 0.0;

  MaxConeWitness swapped(int ds, int dt) const {
    Mat u = canonical_shuffle(ds, dt);
    return MaxConeWitness{Mat(u * w * u.transpose()), pairing_value};
  }
};

struct CertificateCheck {
  double psd_margin_p = 0.0;
  double psd_margin_q = 0.0;
  double dual_pairing_defect = 0.0;  // Choi-vs-functional mismatch on dual sides
  double residual = 0.0;             // coefficient-space distance to u + eps * unit
  bool ok = false;
};

/// Re-verify a certificate against the element it claims to certify,
/// using eigenvalue checks and coefficient arithmetic only.
inline CertificateCheck verify_certificate(const MaxConeCertificate& cert,
                                           const TensorElement& u, double psd_tol = kPsdTol,
                                           double residual_tol = kMembershipTol) {
  CertificateCheck chk;
  chk.psd_margin_p = cert.P.psd_margin();
  chk.psd_margin_q = cert.Q.psd_margin();
  if (cert.P.dual)
    chk.dual_pairing_defect =
        std::max(chk.dual_pairing_defect,
                 dual_certificate_residual(cert.P.functionals, cert.P.choi));
  if (cert.Q.dual)
    chk.dual_pairing_defect =
        std::max(chk.dual_pairing_defect,
                 dual_certificate_residual(cert.Q.functionals, cert.Q.choi));

  TensorElement expanded = cert.expand(u.left(), u.right());
  TensorElement target = u;
  if (cert.epsilon != 0.0) {
    TensorElement pad = TensorElement::unit(u.left(), u.right(), u.level());
    RVec ul = cert.P.unit_coeffs(), ur = cert.Q.unit_coeffs();
    for (int a = 0; a < u.level(); ++a)
      pad.coeff(a, a) = (ul * ur.transpose()).cast<cxd>();
    target = target + pad.scaled(cert.epsilon);
  }
  chk.residual = (expanded - target).coeff_norm();
  chk.ok = chk.psd_margin_p >= -psd_tol && chk.psd_margin_q >= -psd_tol &&
           chk.dual_pairing_defect <= residual_tol && chk.residual <= residual_tol;
  return chk;
}

struct WitnessCheck {
  double min_eigenvalue = 0.0;
  double trace_defect = 0.0;
  double pairing = 0.0;
  bool ok = false;
};

inline WitnessCheck verify_witness(const MaxConeWitness& wit, const TensorElement& u,
                                   double eps, double tol = kMembershipTol) {
  WitnessCheck chk;
  chk.min_eigenvalue = herm_eigenvalues(wit.w)(0);
  chk.trace_defect = std::abs(wit.w.trace().real() - 1.0);
  TensorElement padded = u + TensorElement::unit(u.left(), u.right(), u.level()).scaled(eps);
  chk.pairing = (wit.w * padded.realize()).trace().real();
  chk.ok = chk.min_eigenvalue >= -kPsdTol && chk.trace_defect <= 1e-9 && chk.pairing < -tol;
  return chk;
}

// ---------------------------------------------------------------------------
// Lemma-style constructions

struct SchurDecomposition {
  Mat a;  // n x k
  SystemMatrix x;
  SystemMatrix y;
  Mat b;  // k x n

  TensorElement assemble() const { return sandwich_tensor(a, schur_product(x, y), b); }
};

/// Split P into elementary-tensor layers, one per right-basis direction, and
/// stack them as a single Schur product compressed by [I_n ... I_n].
inline SchurDecomposition decompose_as_schur(const TensorElement& p) {
  const SystemPtr& s = p.left();
  const SystemPtr& t = p.right();
  const int n = p.level(), mt = t->dim();
  SchurDecomposition dec;
  dec.x = SystemMatrix(s, n * mt);
  dec.y = SystemMatrix(t, n * mt);
  for (int layer = 0; layer < mt; ++layer)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Vec xs = Vec::Zero(s->dim());
        for (int l = 0; l < s->dim(); ++l) xs(l) = p.coeff(a, b)(l, layer);
        dec.x.entry(layer * n + a, layer * n + b) = xs;
        Vec ys = Vec::Zero(t->dim());
        ys(layer) = 1.0;
        dec.y.entry(layer * n + a, layer * n + b) = ys;
      }
  dec.a = Mat::Zero(n, n * mt);
  for (int layer = 0; layer < mt; ++layer)
    dec.a.block(0, layer * n, n, n) = identity(n);
  dec.b = dec.a.adjoint();
  return dec;
}

/// Lemma-1 normal form of a D-form element A (P (x) Q) A^*: a single Schur
/// certificate with the compression absorbed into the left factor.
inline MaxConeCertificate normal_form_level1(const Mat& a, const SystemMatrix& p,
                                             const SystemMatrix& q, double tol = kPsdTol) {
  const int k = p.size(), m = q.size();
  if (a.rows() != 1 || a.cols() != k * m)
    throw SizeMismatch("normal_form_level1: compression must be 1 x km");
  if (!psd_check(p.realize(), tol).is_psd || !psd_check(q.realize(), tol).is_psd)
    throw NotPositive("normal_form_level1: inputs must have PSD realizations");

  auto [f1, f2] = kron_as_schur(p, q);
  Mat da = Mat::Zero(k * m, k * m);
  for (int i = 0; i < k * m; ++i) da(i, i) = a(0, i);

  MaxConeCertificate cert;
  cert.scalar = Mat::Ones(1, k * m);
  cert.P = CertificateSide::of(f1.conjugate_by(da));
  cert.Q = CertificateSide::of(f2);
  cert.epsilon = 0.0;

  TensorElement direct = sandwich_tensor(a, kron_tensor(p, q), a.adjoint());
  cert.residual = (cert.expand(p.system(), q.system()) - direct).coeff_norm();
  return cert;
}

}  // namespace oscone
