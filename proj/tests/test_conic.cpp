#include <catch2/catch_amalgamated.hpp>
#include <cstring>
#include <random>

#include "oscone/conic.hpp"

using namespace oscone;

namespace {

Mat herm_from(std::initializer_list<std::initializer_list<double>> rows) {
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// constraint <a, X_block> = rhs on a single block
LinearConstraint pin(int block, const Mat& a, double rhs) {
  return LinearConstraint{{BlockTerm{block, a}}, rhs};
}

// constraints pinning every entry of a Hermitian block to the given target
void pin_block(ConicProblem& p, int block, const Mat& target) {
  const Index n = target.rows();
  for (Index i = 0; i < n; ++i) {
    p.constraints.push_back(pin(block, matrix_unit(n, i, i), target(i, i).real()));
    for (Index j = i + 1; j < n; ++j) {
      Mat re = matrix_unit(n, i, j) + matrix_unit(n, j, i);
      Mat im = cxd(0, 1) * matrix_unit(n, i, j) - cxd(0, 1) * matrix_unit(n, j, i);
      p.constraints.push_back(pin(block, re, 2.0 * target(i, j).real()));
      p.constraints.push_back(pin(block, im, 2.0 * target(i, j).imag()));
    }
  }
}

}  // namespace

TEST_CASE("conic: pinned scalar is feasible") {
  ConicProblem p;
  p.block_dims = {1};
  p.constraints.push_back(pin(0, Mat::Ones(1, 1), 1.0));
  ConicSolution s = conic_solve(p);
  REQUIRE(s.status == SolveStatus::Feasible);
  CHECK(std::abs(s.block_values[0](0, 0).real() - 1.0) < 1e-7);
  CHECK(s.max_constraint_residual <= 1e-8);
  CHECK(s.min_block_eigenvalue >= -1e-8);
}

TEST_CASE("conic: block pinned to an indefinite matrix is infeasible") {
  ConicProblem p;
  p.block_dims = {2};
  pin_block(p, 0, herm_from({{1, 2}, {2, 1}}));
  ConicSolution s = conic_solve(p);
  REQUIRE(s.status == SolveStatus::Infeasible);
  ConicResidualReport rep = conic_verify(p, s, 1e-8);
  CHECK(rep.ok);
  CHECK(rep.farkas_b_dot_y > 0.0);
}

TEST_CASE("conic: minimum eigenvalue via trace-one program") {
  // minimize <diag(1,-2), W>, tr W = 1, W psd  ->  lambda_min = -2, W = E_22
  ConicProblem p;
  p.block_dims = {2};
  p.constraints.push_back(pin(0, identity(2), 1.0));
  p.objective = {BlockTerm{0, herm_from({{1, 0}, {0, -2}})}};
  ConicSolution s = conic_solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  // oracle: direct eigendecomposition of the objective matrix
  RVec ev = herm_eigenvalues(herm_from({{1, 0}, {0, -2}}));
  CHECK(std::abs(s.objective_value - ev(0)) < 1e-7);
  CHECK(max_abs(s.block_values[0] - matrix_unit(2, 1, 1)) < 1e-6);
  ConicResidualReport rep = conic_verify(p, s, 1e-8);
  CHECK(rep.ok);
  CHECK(rep.max_constraint_residual <= 1e-8);
}

TEST_CASE("conic: verify rejects a perturbed solution") {
  ConicProblem p;
  p.block_dims = {2};
  p.constraints.push_back(pin(0, identity(2), 1.0));
  ConicSolution s = conic_solve(p);
  REQUIRE(s.status == SolveStatus::Feasible);
  CHECK(conic_verify(p, s, 1e-8).ok);
  s.block_values[0](0, 0) += 10.0 * 1e-8;
  CHECK_FALSE(conic_verify(p, s, 1e-8).ok);
}

TEST_CASE("conic: uniquely pinned block is recovered") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  Mat a(3, 3);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) a(i, j) = cxd(g(rng), g(rng));
  Mat target = hermitian_part(Mat(a * a.adjoint()));  // psd, generically pd
  ConicProblem p;
  p.block_dims = {3};
  pin_block(p, 0, target);
  ConicSolution s = conic_solve(p);
  REQUIRE(s.status == SolveStatus::Feasible);
  CHECK(frobenius(s.block_values[0] - target) < 1e-8);
}

TEST_CASE("conic: solve is deterministic") {
  ConicProblem p;
  p.block_dims = {2, 1};
  p.constraints.push_back(pin(0, identity(2), 1.0));
  p.constraints.push_back(
      LinearConstraint{{BlockTerm{0, herm_from({{0, 1}, {1, 0}})}, BlockTerm{1, Mat::Ones(1, 1)}},
                       0.5});
  p.objective = {BlockTerm{0, herm_from({{1, 0}, {0, -1}})}};
  ConicSolution s1 = conic_solve(p);
  ConicSolution s2 = conic_solve(p);
  CHECK(s1.status == s2.status);
  CHECK(std::memcmp(&s1.objective_value, &s2.objective_value, sizeof(double)) == 0);
  CHECK(s1.iterations == s2.iterations);
}

TEST_CASE("conic: two-block coupled feasibility") {
  // X 2x2 psd, s scalar psd, tr X = 1, X_01 + X_10 + s = 0.8: feasible
  ConicProblem p;
  p.block_dims = {2, 1};
  p.constraints.push_back(pin(0, identity(2), 1.0));
  p.constraints.push_back(LinearConstraint{
      {BlockTerm{0, herm_from({{0, 1}, {1, 0}})}, BlockTerm{1, Mat::Ones(1, 1)}}, 0.8});
  ConicSolution s = conic_solve(p);
  REQUIRE(s.status == SolveStatus::Feasible);
  CHECK(conic_verify(p, s, 1e-8).ok);
}

TEST_CASE("conic: l1 residual subproblem shape") {
  // minimize |e1| + |e2| with X a psd scalar, e_1 = x - 2, e_2 = 3x - 1,
  // encoded with slack pairs u_i - v_i = -e_i.  Minimum at x = 1/3: 5/3.
  ConicProblem p;
  p.block_dims = {1, 1, 1, 1, 1};  // x, u1, v1, u2, v2
  p.constraints.push_back(LinearConstraint{
      {BlockTerm{0, Mat::Ones(1, 1)}, BlockTerm{1, -Mat::Ones(1, 1)}, BlockTerm{2, Mat::Ones(1, 1)}},
      2.0});
  p.constraints.push_back(LinearConstraint{
      {BlockTerm{0, 3.0 * Mat::Ones(1, 1)}, BlockTerm{3, -Mat::Ones(1, 1)},
       BlockTerm{4, Mat::Ones(1, 1)}},
      1.0});
  p.objective = {BlockTerm{1, Mat::Ones(1, 1)}, BlockTerm{2, Mat::Ones(1, 1)},
                 BlockTerm{3, Mat::Ones(1, 1)}, BlockTerm{4, Mat::Ones(1, 1)}};
  ConicSolution s = conic_solve(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(std::abs(s.objective_value - 5.0 / 3.0) < 1e-6);
  CHECK(std::abs(s.block_values[0](0, 0).real() - 1.0 / 3.0) < 1e-6);
}

TEST_CASE("conic: random feasibility with interior point") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Mat a(4, 4);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) a(i, j) = cxd(g(rng), g(rng));
    Mat x0 = hermitian_part(Mat(a * a.adjoint())) + identity(4);  // strictly pd
    ConicProblem p;
    p.block_dims = {4};
    for (int c = 0; c < 6; ++c) {
      Mat h(4, 4);
      for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) h(i, j) = cxd(g(rng), g(rng));
      h = hermitian_part(h);
      p.constraints.push_back(pin(0, h, hs_inner(h, x0)));
    }
    ConicSolution s = conic_solve(p);
    REQUIRE(s.status == SolveStatus::Feasible);
    CHECK(conic_verify(p, s, 1e-8).ok);
  }
}

TEST_CASE("conic: malformed problems are rejected") {
  ConicProblem p;
  p.block_dims = {2};
  p.constraints.push_back(pin(0, Mat::Ones(1, 1), 1.0));  // wrong dimension
  CHECK_THROWS_AS(conic_solve(p), Malformed);

  ConicProblem q;
  q.block_dims = {2};
  Mat nh(2, 2);
  nh << 0, 1, 0, 0;
  q.constraints.push_back(pin(0, nh, 0.0));
  CHECK_THROWS_AS(conic_solve(q), Malformed);
}
