#pragma once

#include <Eigen/Dense>
#include <utility>

#include "oscone/common.hpp"

// Dense complex matrix helpers: Kronecker gadgets, the canonical shuffle,
// and eigenvalue-backed PSD / norm queries shared by every cone check.

namespace oscone {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

struct PsdReport {
  double min_eigenvalue = 0.0;
  bool is_psd = false;
  double tolerance = kPsdTol;
};

inline Mat identity(Index n) { return Mat::Identity(n, n); }

inline Mat matrix_unit(Index d, Index i, Index j) {
  Mat e = Mat::Zero(d, d);
  e(i, j) = 1.0;
  return e;
}

/// Entrywise sup norm.
inline double max_abs(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermitian_defect(const Mat& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("hermitian_defect: matrix not square");
  return max_abs(m - m.adjoint());
}

inline Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

/// kron(a,b)[(i,k),(j,l)] = a(i,j) * b(k,l); left factor indexes the blocks.
inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// The n x n^2 block row [E_11 E_22 ... E_nn] of matrix units.
inline Mat matrix_units_row(Index n) {
  if (n < 1) throw DimensionMismatch("matrix_units_row: n must be >= 1");
  Mat e = Mat::Zero(n, n * n);
  for (Index i = 0; i < n; ++i) e(i, i * n + i) = 1.0;
  return e;
}

/// Permutation U of size nm with U * kron(a,b) * U^T = kron(b,a) for all
/// a in M_n, b in M_m (the commutation matrix).
inline Mat canonical_shuffle(Index n, Index m) {
  if (n < 1 || m < 1) throw DimensionMismatch("canonical_shuffle: sizes must be >= 1");
  Mat u = Mat::Zero(n * m, n * m);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < m; ++k) u(k * n + i, i * m + k) = 1.0;
  return u;
}

/// J_k, the all-ones matrix; spectrum {0^(k-1), k}.
inline Mat all_ones(Index k) {
  if (k < 1) throw DimensionMismatch("all_ones: k must be >= 1");
  return Mat::Ones(k, k);
}

/// Eigenvalues of the Hermitian part, ascending.
inline RVec herm_eigenvalues(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Minimum eigenvalue and a unit eigenvector of the Hermitian part.
inline std::pair<double, Vec> min_eig(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(h));
  return {es.eigenvalues()(0), es.eigenvectors().col(0)};
}

inline PsdReport psd_check(const Mat& h, double tol = kPsdTol) {
  if (h.rows() != h.cols()) throw DimensionMismatch("psd_check: matrix not square");
  if (hermitian_defect(h) > tol)
    throw NotHermitian("psd_check: matrix is not Hermitian within tolerance");
  PsdReport rep;
  rep.tolerance = tol;
  rep.min_eigenvalue = h.rows() == 0 ? 0.0 : herm_eigenvalues(h)(0);
  rep.is_psd = rep.min_eigenvalue >= -tol;
  return rep;
}

/// Largest singular value.
inline double operator_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(m.adjoint() * m), Eigen::EigenvaluesOnly);
  double top = es.eigenvalues()(es.eigenvalues().size() - 1);
  return top <= 0.0 ? 0.0 : std::sqrt(top);
}

inline double trace_re(const Mat& m) { return m.trace().real(); }

/// Re tr(a^* b), the real Hilbert-Schmidt pairing.
inline double hs_inner(const Mat& a, const Mat& b) {
  return (a.adjoint() * b).trace().real();
}

inline double frobenius(const Mat& m) { return m.norm(); }

}  // namespace oscone
