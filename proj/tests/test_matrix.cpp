#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "oscone/matrix.hpp"

using namespace oscone;

namespace {

Mat random_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = cxd(g(rng), g(rng));
  return m;
}

Mat random_hermitian(Index n, std::mt19937_64& rng) {
  Mat m = random_matrix(n, n, rng);
  return hermitian_part(m);
}

// Independent entrywise evaluation of the Kronecker formula.
Mat kron_oracle(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < b.rows(); ++k)
      for (Index j = 0; j < a.cols(); ++j)
        for (Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

}  // namespace

TEST_CASE("kron basics") {
  CHECK(max_abs(kron(identity(2), identity(2)) - identity(4)) == 0.0);

  Mat e11 = matrix_unit(2, 0, 0);
  CHECK(max_abs(kron(e11, e11) - matrix_unit(4, 0, 0)) == 0.0);

  Mat x(2, 2), d(2, 2);
  x << 0, 1, 1, 0;
  d << 2, 0, 0, 3;
  Mat k = kron(x, d);
  CHECK(max_abs(k - kron_oracle(x, d)) == 0.0);
  // blocks [[0,B],[B,0]] with B = diag(2,3)
  CHECK(k(0, 2) == cxd(2, 0));
  CHECK(k(1, 3) == cxd(3, 0));
  CHECK(max_abs(k.block(0, 0, 2, 2)) == 0.0);
  CHECK(max_abs(k.block(2, 2, 2, 2)) == 0.0);
}

TEST_CASE("kron is associative") {
  std::mt19937_64 rng(11);
  // exact on matrices whose scalar products are exact
  std::uniform_int_distribution<int> d(-3, 3);
  for (int t = 0; t < 10; ++t) {
    Mat a(2, 3), b(3, 2), c(2, 2);
    for (Mat* m : {&a, &b, &c})
      for (Index i = 0; i < m->rows(); ++i)
        for (Index j = 0; j < m->cols(); ++j) (*m)(i, j) = cxd(d(rng), d(rng));
    CHECK(max_abs(kron(kron(a, b), c) - kron(a, kron(b, c))) == 0.0);
  }
  // and to rounding error on generic complex input
  for (int t = 0; t < 10; ++t) {
    Mat a = random_matrix(2, 3, rng), b = random_matrix(3, 2, rng), c = random_matrix(2, 2, rng);
    CHECK(max_abs(kron(kron(a, b), c) - kron(a, kron(b, c))) < 1e-13);
  }
}

TEST_CASE("matrix_units_row") {
  CHECK(max_abs(matrix_units_row(1) - Mat::Ones(1, 1)) == 0.0);

  Mat e2 = matrix_units_row(2);
  Mat expected(2, 4);
  expected << 1, 0, 0, 0, 0, 0, 0, 1;
  CHECK(max_abs(e2 - expected) == 0.0);

  // n=3: ones exactly at (1,1),(2,5),(3,9) in 1-based coordinates.
  Mat e3 = matrix_units_row(3);
  REQUIRE(e3.rows() == 3);
  REQUIRE(e3.cols() == 9);
  Mat probe = Mat::Zero(3, 9);
  probe(0, 0) = probe(1, 4) = probe(2, 8) = 1.0;
  CHECK(max_abs(e3 - probe) == 0.0);

  // block definition: i-th block is E_ii
  for (Index i = 0; i < 3; ++i)
    CHECK(max_abs(e3.block(0, 3 * i, 3, 3) - matrix_unit(3, i, i)) == 0.0);
}

TEST_CASE("canonical_shuffle exchanges kron factors") {
  CHECK(max_abs(canonical_shuffle(1, 3) - identity(3)) == 0.0);

  // brute-force check of the defining property on all matrix-unit pairs
  auto check_pairs = [](Index n, Index m) {
    Mat u = canonical_shuffle(n, m);
    REQUIRE(max_abs(Mat(u * u.transpose()) - identity(n * m)) == 0.0);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < m; ++k)
          for (Index l = 0; l < m; ++l) {
            Mat a = matrix_unit(n, i, j), b = matrix_unit(m, k, l);
            CHECK(max_abs(Mat(u * kron(a, b) * u.transpose()) - kron(b, a)) == 0.0);
          }
  };
  check_pairs(2, 2);
  check_pairs(2, 3);

  // n=m=2 swaps the two middle coordinates
  Mat u22 = canonical_shuffle(2, 2);
  Mat swap = Mat::Zero(4, 4);
  swap(0, 0) = swap(1, 2) = swap(2, 1) = swap(3, 3) = 1.0;
  CHECK(max_abs(u22 - swap) == 0.0);
}

TEST_CASE("shuffle conjugation on random inputs") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    Mat a = random_matrix(2, 2, rng), b = random_matrix(3, 3, rng);
    Mat u = canonical_shuffle(2, 3);
    CHECK(max_abs(Mat(u * kron(a, b) * u.transpose()) - kron(b, a)) == 0.0);
  }
}

TEST_CASE("all_ones spectrum") {
  CHECK(max_abs(all_ones(1) - Mat::Ones(1, 1)) == 0.0);

  RVec ev2 = herm_eigenvalues(all_ones(2));
  CHECK(std::abs(ev2(0)) < 1e-12);
  CHECK(std::abs(ev2(1) - 2.0) < 1e-12);

  for (Index k : {4, 8}) {
    RVec ev = herm_eigenvalues(all_ones(k));
    for (Index i = 0; i + 1 < k; ++i) CHECK(std::abs(ev(i)) < 1e-12);
    CHECK(std::abs(ev(k - 1) - double(k)) < 1e-12);
  }
}

TEST_CASE("psd_check") {
  PsdReport r1 = psd_check(identity(3), 1e-10);
  CHECK(r1.is_psd);
  CHECK(r1.min_eigenvalue == Catch::Approx(1.0));

  Mat d(2, 2);
  d << 1, 0, 0, -1;
  PsdReport r2 = psd_check(d, 1e-10);
  CHECK_FALSE(r2.is_psd);
  CHECK(r2.min_eigenvalue == Catch::Approx(-1.0));

  PsdReport r3 = psd_check(all_ones(2), 1e-10);
  CHECK(r3.is_psd);
  CHECK(std::abs(r3.min_eigenvalue) < 1e-12);

  Mat nh(2, 2);
  nh << 0, 1, 0, 0;
  CHECK_THROWS_AS(psd_check(nh, 1e-10), NotHermitian);
}

TEST_CASE("psd_check is permutation invariant") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    Mat h = random_hermitian(4, rng);
    Mat u = canonical_shuffle(2, 2);  // a permutation
    PsdReport a = psd_check(h, 1e-10);
    PsdReport b = psd_check(Mat(u * h * u.adjoint()), 1e-10);
    CHECK(a.is_psd == b.is_psd);
    CHECK(a.min_eigenvalue == Catch::Approx(b.min_eigenvalue).margin(1e-12));
  }
}

TEST_CASE("operator_norm") {
  CHECK(operator_norm(identity(5)) == Catch::Approx(1.0));
  CHECK(operator_norm(all_ones(2)) == Catch::Approx(2.0));
  CHECK(operator_norm(matrix_unit(2, 0, 1)) == Catch::Approx(1.0));
}

TEST_CASE("min_eig returns eigenpair") {
  std::mt19937_64 rng(3);
  Mat h = random_hermitian(5, rng);
  auto [lam, v] = min_eig(h);
  CHECK((h * v - lam * v).norm() < 1e-10);
  CHECK(std::abs(v.norm() - 1.0) < 1e-12);
}
