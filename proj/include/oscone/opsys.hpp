#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "oscone/conic.hpp"
#include "oscone/matrix.hpp"
#include "oscone/verdict.hpp"

// Finite-dimensional operator systems as concrete unital self-adjoint
// subspaces of M_d, their matrix-level cones, and dual systems whose cones
// are decided through completely positive map feasibility.

namespace oscone {

class OperatorSystem;
using SystemPtr = std::shared_ptr<const OperatorSystem>;

class OperatorSystem {
 public:
  /// `basis` must start with the identity and consist of Hermitian matrices
  /// that are linearly independent over the reals.
  static SystemPtr create(std::vector<Mat> basis, std::string name) {
    return SystemPtr(new OperatorSystem(std::move(basis), std::move(name)));
  }

  const std::string& name() const { return name_; }
  int ambient_dim() const { return d_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Mat>& basis() const { return basis_; }
  const Mat& basis(int l) const { return basis_[static_cast<std::size_t>(l)]; }

  /// Hermitian Riesz representative of the l-th coefficient functional:
  /// coeff_l(x) = tr(riesz(l) * x) for x in the span.
  const Mat& riesz(int l) const { return riesz_[static_cast<std::size_t>(l)]; }

  /// HS-orthonormal Hermitian basis of the orthocomplement of the span in M_d.
  const std::vector<Mat>& complement() const { return complement_; }

  bool is_full_algebra() const { return dim() == d_ * d_; }

  /// Coefficients of the HS-projection of x onto the span (equal to the
  /// coefficients of x when x lies in the span).
  Vec coefficients(const Mat& x) const {
    if (x.rows() != d_ || x.cols() != d_)
      throw DimensionMismatch("coefficients: ambient dimension mismatch");
    Vec c(dim());
    for (int l = 0; l < dim(); ++l) c(l) = (riesz_[static_cast<std::size_t>(l)] * x).trace();
    return c;
  }

  Mat realize(const Vec& coeffs) const {
    if (coeffs.size() != dim()) throw DimensionMismatch("realize: coefficient count mismatch");
    Mat out = Mat::Zero(d_, d_);
    for (int l = 0; l < dim(); ++l) out += coeffs(l) * basis_[static_cast<std::size_t>(l)];
    return out;
  }

  double projection_defect(const Mat& x) const { return max_abs(x - realize(coefficients(x))); }

 private:
  OperatorSystem(std::vector<Mat> basis, std::string name)
      : name_(std::move(name)), basis_(std::move(basis)) {
    if (basis_.empty()) throw Malformed("operator system: empty basis");
    d_ = static_cast<int>(basis_[0].rows());
    if (max_abs(basis_[0] - identity(d_)) != 0.0)
      throw Malformed("operator system: basis[0] must be the identity");
    for (const auto& b : basis_) {
      if (b.rows() != d_ || b.cols() != d_)
        throw DimensionMismatch("operator system: basis dimensions disagree");
      if (hermitian_defect(b) > 1e-12 * (1.0 + max_abs(b)))
        throw NotHermitian("operator system: basis element is not Hermitian");
    }
    const int m = dim();
    Eigen::MatrixXd gram(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        gram(i, j) = hs_inner(basis_[static_cast<std::size_t>(i)], basis_[static_cast<std::size_t>(j)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    lu.setThreshold(1e-10);
    if (lu.rank() < m)
      throw Malformed("operator system: basis is not linearly independent (Gram singular)");
    Eigen::MatrixXd ginv = lu.inverse();
    riesz_.reserve(static_cast<std::size_t>(m));
    for (int l = 0; l < m; ++l) {
      Mat dl = Mat::Zero(d_, d_);
      for (int j = 0; j < m; ++j) dl += ginv(j, l) * basis_[static_cast<std::size_t>(j)];
      riesz_.push_back(std::move(dl));
    }
    build_complement();
  }

  void build_complement() {
    // Hermitian canonical basis of M_d, Gram-Schmidt against the span.
    std::vector<Mat> cands;
    for (int i = 0; i < d_; ++i) cands.push_back(matrix_unit(d_, i, i));
    for (int i = 0; i < d_; ++i)
      for (int j = i + 1; j < d_; ++j) {
        cands.push_back(matrix_unit(d_, i, j) + matrix_unit(d_, j, i));
        cands.push_back(cxd(0, 1) * matrix_unit(d_, i, j) - cxd(0, 1) * matrix_unit(d_, j, i));
      }
    for (Mat c : cands) {
      c -= realize(coefficients(c));  // project out the span
      for (const auto& n : complement_) c -= hs_inner(n, c) * n;
      double nrm = frobenius(c);
      if (nrm > 1e-10) complement_.push_back(Mat(c / nrm));
    }
  }

  std::string name_;
  int d_ = 0;
  std::vector<Mat> basis_;
  std::vector<Mat> riesz_;
  std::vector<Mat> complement_;
};

/// Span of generators together with their adjoints and the identity; the
/// Hermitian basis comes from real-linear Gram-Schmidt with pivot 1e-10.
inline SystemPtr make_system(const std::vector<Mat>& generators, std::string name,
                             int ambient_dim = 0) {
  int d = ambient_dim;
  if (!generators.empty()) {
    d = static_cast<int>(generators[0].rows());
    for (const auto& g : generators)
      if (g.rows() != d || g.cols() != d)
        throw DimensionMismatch("make_system: generators differ in size");
  }
  if (d < 1) throw DimensionMismatch("make_system: ambient dimension required");

  std::vector<Mat> herm;
  for (const auto& g : generators) {
    herm.push_back(hermitian_part(g));
    herm.push_back(Mat((g - g.adjoint()) / cxd(0, 2)));
  }
  std::vector<Mat> basis{identity(d)};
  const double unit_norm2 = static_cast<double>(d);
  for (Mat h : herm) {
    h -= (hs_inner(identity(d), h) / unit_norm2) * identity(d);
    for (std::size_t l = 1; l < basis.size(); ++l) h -= hs_inner(basis[l], h) * basis[l];
    double nrm = frobenius(h);
    if (nrm > 1e-10) basis.push_back(Mat(h / nrm));
  }
  return OperatorSystem::create(std::move(basis), std::move(name));
}

// ---------------------------------------------------------------------------
// Elements and operator matrices

struct SystemElement {
  SystemPtr system;
  Vec coeffs;

  Mat realize() const { return system->realize(coeffs); }
  bool self_adjoint(double tol = 1e-12) const {
    return coeffs.imag().cwiseAbs().maxCoeff() <= tol;
  }
};

inline SystemElement system_element(SystemPtr sys, const Mat& x) {
  Vec c = sys->coefficients(x);
  if (sys->projection_defect(x) > 1e-9)
    throw Malformed("system_element: matrix does not lie in the system");
  return SystemElement{std::move(sys), std::move(c)};
}

class SystemMatrix {
 public:
  SystemMatrix() = default;
  SystemMatrix(SystemPtr sys, int size)
      : system_(std::move(sys)), size_(size),
        entries_(static_cast<std::size_t>(size) * size, Vec::Zero(system_->dim())) {}

  static SystemMatrix unit(SystemPtr sys, int size) {
    SystemMatrix u(std::move(sys), size);
    for (int i = 0; i < size; ++i) u.entry(i, i)(0) = 1.0;
    return u;
  }

  /// Project each d x d block of a kd x kd matrix onto the system.
  static SystemMatrix from_realization(SystemPtr sys, int size, const Mat& v,
                                       double* defect = nullptr) {
    const int d = sys->ambient_dim();
    if (v.rows() != size * d || v.cols() != size * d)
      throw DimensionMismatch("from_realization: size mismatch");
    SystemMatrix out(sys, size);
    double worst = 0.0;
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        Mat block = v.block(i * d, j * d, d, d);
        out.entry(i, j) = sys->coefficients(block);
        worst = std::max(worst, sys->projection_defect(block));
      }
    if (defect) *defect = worst;
    return out;
  }

  const SystemPtr& system() const { return system_; }
  int size() const { return size_; }

  Vec& entry(int i, int j) { return entries_[static_cast<std::size_t>(i) * size_ + j]; }
  const Vec& entry(int i, int j) const { return entries_[static_cast<std::size_t>(i) * size_ + j]; }

  Mat realize() const {
    const int d = system_->ambient_dim();
    Mat out = Mat::Zero(size_ * d, size_ * d);
    for (int i = 0; i < size_; ++i)
      for (int j = 0; j < size_; ++j)
        out.block(i * d, j * d, d, d) = system_->realize(entry(i, j));
    return out;
  }

  bool hermitian(double tol = 1e-12) const {
    for (int i = 0; i < size_; ++i)
      for (int j = 0; j < size_; ++j)
        if ((entry(i, j) - entry(j, i).conjugate()).cwiseAbs().maxCoeff() > tol) return false;
    return true;
  }

  SystemMatrix adjoint() const {
    SystemMatrix out(system_, size_);
    for (int i = 0; i < size_; ++i)
      for (int j = 0; j < size_; ++j) out.entry(i, j) = entry(j, i).conjugate();
    return out;
  }

  /// Scalar congruence a * X * a^dagger, a is r x size.
  SystemMatrix conjugate_by(const Mat& a) const {
    if (a.cols() != size_) throw SizeMismatch("conjugate_by: scalar matrix width mismatch");
    const int r = static_cast<int>(a.rows());
    SystemMatrix out(system_, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        Vec acc = Vec::Zero(system_->dim());
        for (int p = 0; p < size_; ++p)
          for (int q = 0; q < size_; ++q) acc += a(i, p) * std::conj(a(j, q)) * entry(p, q);
        out.entry(i, j) = acc;
      }
    return out;
  }

  SystemMatrix direct_sum(const SystemMatrix& other) const {
    if (system_ != other.system_) throw SizeMismatch("direct_sum: systems differ");
    SystemMatrix out(system_, size_ + other.size_);
    for (int i = 0; i < size_; ++i)
      for (int j = 0; j < size_; ++j) out.entry(i, j) = entry(i, j);
    for (int i = 0; i < other.size_; ++i)
      for (int j = 0; j < other.size_; ++j)
        out.entry(size_ + i, size_ + j) = other.entry(i, j);
    return out;
  }

  SystemMatrix scaled(double t) const {
    SystemMatrix out = *this;
    for (auto& e : out.entries_) e *= t;
    return out;
  }

 private:
  SystemPtr system_;
  int size_ = 0;
  std::vector<Vec> entries_;
};

/// Concrete operator-system cone at a matrix level: positivity of the
/// realization.  The certificate is the minimum eigenvalue.
inline ConeVerdict level_positive(const SystemMatrix& x, double tol = kPsdTol) {
  if (!x.hermitian(1e-12))
    throw NotHermitian("level_positive: operator matrix is not Hermitian");
  PsdReport rep = psd_check(x.realize(), tol);
  ConeVerdict v;
  v.value = rep.min_eigenvalue;
  v.verdict = rep.is_psd ? Verdict::Member : Verdict::NonMember;
  v.diagnostics.note = "concrete realization eigenvalue";
  return v;
}

// ---------------------------------------------------------------------------
// Dual systems: functionals are stored by their pairing values against the
// basis; positivity is decided through CP feasibility, never by realization.

struct DualFunctional {
  SystemPtr system;
  Vec values;  // pairing against each basis element

  cxd apply(const Vec& coeffs) const { return values.dot(coeffs.conjugate()); }
  bool self_adjoint(double tol = 1e-12) const {
    return values.imag().cwiseAbs().maxCoeff() <= tol;
  }
};

/// Normalized trace functional; faithful on a concrete system, used as the
/// dual order unit.
inline DualFunctional dual_unit(const SystemPtr& sys) {
  Vec v(sys->dim());
  for (int l = 0; l < sys->dim(); ++l)
    v(l) = sys->basis(l).trace() / static_cast<double>(sys->ambient_dim());
  return DualFunctional{sys, std::move(v)};
}

class DualSystemMatrix {
 public:
  DualSystemMatrix() = default;
  DualSystemMatrix(SystemPtr sys, int size)
      : system_(std::move(sys)), size_(size),
        fmats_(static_cast<std::size_t>(system_->dim()), Mat::Zero(size, size)) {}

  const SystemPtr& system() const { return system_; }
  int size() const { return size_; }

  /// k x k matrix of pairings [F_ij(b_l)] for basis index l.
  Mat& fmat(int l) { return fmats_[static_cast<std::size_t>(l)]; }
  const Mat& fmat(int l) const { return fmats_[static_cast<std::size_t>(l)]; }

  DualFunctional entry(int i, int j) const {
    Vec v(system_->dim());
    for (int l = 0; l < system_->dim(); ++l) v(l) = fmats_[static_cast<std::size_t>(l)](i, j);
    return DualFunctional{system_, std::move(v)};
  }

  void set_entry(int i, int j, const DualFunctional& f) {
    for (int l = 0; l < system_->dim(); ++l)
      fmats_[static_cast<std::size_t>(l)](i, j) = f.values(l);
  }

  bool hermitian(double tol = 1e-12) const {
    for (const auto& f : fmats_)
      if (hermitian_defect(f) > tol) return false;
    return true;
  }

 private:
  SystemPtr system_;
  int size_ = 0;
  std::vector<Mat> fmats_;
};

/// Farkas-style witness against membership in a dual matrix cone: y assembles
/// a PSD obstruction Z = -sum_c y_c A_c; its pairing with F is -1.
struct DualConeWitness {
  std::vector<double> y;
  Mat obstruction;
  double pairing_value = 0.0;
};

namespace detail {

/// Choi pairing functional: F_ij(b) = tr((b^T kron E_ji) C).
inline Mat choi_pairing_matrix(const Mat& b, int k, int i, int j) {
  return kron(b.transpose(), matrix_unit(k, j, i));
}

inline ConicProblem dual_membership_problem(const DualSystemMatrix& f) {
  const SystemPtr& sys = f.system();
  const int d = sys->ambient_dim(), k = f.size(), m = sys->dim();
  ConicProblem p;
  p.block_dims = {d * k};
  for (int l = 0; l < m; ++l) {
    const Mat& target = f.fmat(l);
    for (int i = 0; i < k; ++i) {
      Mat xi_ii = choi_pairing_matrix(sys->basis(l), k, i, i);
      p.constraints.push_back({{BlockTerm{0, hermitian_part(xi_ii)}}, target(i, i).real()});
      for (int j = i + 1; j < k; ++j) {
        Mat xi = choi_pairing_matrix(sys->basis(l), k, i, j);
        Mat a_re = hermitian_part(xi);
        Mat a_im = Mat((xi - xi.adjoint()) / cxd(0, 2));
        p.constraints.push_back({{BlockTerm{0, a_re}}, target(i, j).real()});
        p.constraints.push_back({{BlockTerm{0, a_im}}, target(i, j).imag()});
      }
    }
  }
  return p;
}

}  // namespace detail

/// Largest deviation between the pairings generated by a Choi matrix and the
/// stored values of F; used to re-verify Member certificates without a solver.
inline double dual_certificate_residual(const DualSystemMatrix& f, const Mat& choi) {
  const SystemPtr& sys = f.system();
  const int k = f.size();
  double worst = 0.0;
  for (int l = 0; l < sys->dim(); ++l)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        cxd got = (detail::choi_pairing_matrix(sys->basis(l), k, i, j) * choi).trace();
        worst = std::max(worst, std::abs(got - f.fmat(l)(i, j)));
      }
  return worst;
}

/// Matrix-level dual cone membership: F in M_k(S^d)^+ iff the associated map
/// S -> M_k is completely positive, decided as Choi-matrix feasibility.
inline ConeVerdict dual_cone_membership(const DualSystemMatrix& f, double tol = kFeasTol,
                                        int max_iter = 10000) {
  if (!f.hermitian(1e-10))
    throw NotHermitian("dual_cone_membership: functional matrix is not Hermitian");
  ConicProblem p = detail::dual_membership_problem(f);
  SolveOptions opts;
  opts.feas_tol = std::min(tol, kFeasTol);
  opts.max_iter = max_iter;
  ConicSolution s = conic_solve(p, opts);
  ConeVerdict v;
  v.diagnostics.solver_iterations = s.iterations;
  if (s.status == SolveStatus::Feasible || s.status == SolveStatus::Optimal) {
    Mat choi = s.block_values[0];
    PsdReport rep = psd_check(choi, tol);
    double resid = dual_certificate_residual(f, choi);
    if (rep.is_psd && resid <= 10.0 * opts.feas_tol) {
      v.verdict = Verdict::Member;
      v.value = rep.min_eigenvalue;
      v.choi = std::make_shared<Mat>(std::move(choi));
      v.diagnostics.best_residual = resid;
      return v;
    }
    v.diagnostics.note = "solver claimed feasible but certificate failed re-verification";
    return v;
  }
  if (s.status == SolveStatus::Infeasible) {
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
        s.farkas.data(), static_cast<Index>(s.farkas.size()));
    std::vector<Mat> zf = detail::apply_at(p, y);
    Mat obstruction = -zf[0];
    PsdReport rep = psd_check(hermitian_part(obstruction), tol * (1.0 + max_abs(obstruction)));
    if (rep.is_psd) {
      v.verdict = Verdict::NonMember;
      v.value = -1.0;  // pairing of F against the normalized obstruction
      v.dual_witness = std::make_shared<DualConeWitness>(
          DualConeWitness{s.farkas, std::move(obstruction), -1.0});
      return v;
    }
    v.diagnostics.note = "infeasibility ray failed re-verification";
    return v;
  }
  v.diagnostics.note = "solver indeterminate";
  return v;
}

}  // namespace oscone
