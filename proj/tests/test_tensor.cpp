#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "oscone/builtins.hpp"
#include "oscone/tensor.hpp"

using namespace oscone;

namespace {

std::mt19937_64 rng_for(const char* tag) {
  std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
  return std::mt19937_64(seq);
}

SystemMatrix random_hermitian_matrix(const SystemPtr& sys, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  SystemMatrix x(sys, k);
  for (int i = 0; i < k; ++i) {
    for (int l = 0; l < sys->dim(); ++l) x.entry(i, i)(l) = g(rng);
    for (int j = i + 1; j < k; ++j) {
      for (int l = 0; l < sys->dim(); ++l) x.entry(i, j)(l) = cxd(g(rng), g(rng));
      x.entry(j, i) = x.entry(i, j).conjugate();
    }
  }
  return x;
}

SystemMatrix random_psd_matrix(const SystemPtr& sys, int k, std::mt19937_64& rng) {
  SystemMatrix x = random_hermitian_matrix(sys, k, rng);
  double lam = herm_eigenvalues(x.realize())(0);
  if (lam < 0.05)
    for (int i = 0; i < k; ++i) x.entry(i, i)(0) += 0.1 - lam;
  return x;
}

// matrix-unit pattern [E_ij] over a full algebra
SystemMatrix unit_pattern(const SystemPtr& sys) {
  const int d = sys->ambient_dim();
  SystemMatrix p(sys, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) p.entry(i, j) = sys->coefficients(matrix_unit(d, i, j));
  return p;
}

TensorElement sum_entries(const TensorElement& t) {
  return sandwich_tensor(Mat::Ones(1, t.level()), t, Mat::Ones(t.level(), 1));
}

}  // namespace

TEST_CASE("schur product basics") {
  SystemPtr scalar = make_system({}, "scalars", 1);

  SystemMatrix one = SystemMatrix::unit(scalar, 1);
  TensorElement t = schur_product(one, one);
  CHECK(t.level() == 1);
  CHECK(t.coeff(0, 0)(0, 0) == cxd(1, 0));

  // scalar systems reduce to the Hadamard product
  SystemMatrix a(scalar, 2), b(scalar, 2);
  a.entry(0, 0)(0) = 1; a.entry(0, 1)(0) = 1; a.entry(1, 0)(0) = 1; a.entry(1, 1)(0) = 1;
  b.entry(0, 0)(0) = 2; b.entry(1, 1)(0) = 2;
  TensorElement h = schur_product(a, b);
  CHECK(h.coeff(0, 0)(0, 0) == cxd(2, 0));
  CHECK(h.coeff(0, 1)(0, 0) == cxd(0, 0));
  CHECK(h.coeff(1, 1)(0, 0) == cxd(2, 0));

  SystemMatrix wrong(scalar, 3);
  CHECK_THROWS_AS(schur_product(a, wrong), SizeMismatch);
}

TEST_CASE("compress_kron equals schur_product") {
  auto rng = rng_for("lemma5");
  std::vector<SystemPtr> systems = {*builtin_system("Cn:2"), *builtin_system("Mn:2"),
                                    pauli_xz_system()};
  for (const auto& s : systems)
    for (const auto& t : systems)
      for (int n : {1, 2, 3}) {
        SystemMatrix x = random_hermitian_matrix(s, n, rng);
        SystemMatrix y = random_hermitian_matrix(t, n, rng);
        CHECK(compress_kron(x, y).coeff_distance(schur_product(x, y)) <= 1e-12);
      }
}

TEST_CASE("the displayed 2x2 middle matrix") {
  // the Kronecker grid at n=2 carries x_ij (x) y_kl at pair position (ik),(jl)
  auto rng = rng_for("middle");
  SystemPtr s = *builtin_system("Cn:2");
  SystemMatrix x = random_hermitian_matrix(s, 2, rng);
  SystemMatrix y = random_hermitian_matrix(s, 2, rng);
  TensorElement grid = kron_tensor(x, y);
  REQUIRE(grid.level() == 4);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) {
          Mat expect = x.entry(i, j) * y.entry(k, l).transpose();
          CHECK(max_abs(grid.coeff(i * 2 + k, j * 2 + l) - expect) == 0.0);
        }
  // compressing by [E_11 E_22] picks the diagonal pairs
  TensorElement compressed = conjugate_tensor(matrix_units_row(2), grid);
  CHECK(compressed.coeff_distance(schur_product(x, y)) == 0.0);
}

TEST_CASE("decompose_as_schur reconstructs") {
  SystemPtr s = *builtin_system("Mn:2");
  SystemPtr t = *builtin_system("Cn:2");

  // elementary tensor at level 1
  SystemElement x{s, s->coefficients(matrix_unit(2, 0, 1) + matrix_unit(2, 1, 0))};
  SystemElement y{t, t->coefficients(identity(2))};
  TensorElement e = TensorElement::elementary(x, y);
  SchurDecomposition dec = decompose_as_schur(e);
  CHECK(dec.assemble().coeff_distance(e) <= 1e-12);

  // x_1 (x) y_1 + x_2 (x) y_2 at level 1 over C^2: two layers, A = [1 1]
  TensorElement two(s, t, 1);
  auto rng = rng_for("twoterm");
  std::normal_distribution<double> g;
  for (int l = 0; l < s->dim(); ++l)
    for (int lp = 0; lp < t->dim(); ++lp) two.coeff(0, 0)(l, lp) = g(rng);
  SchurDecomposition dec2 = decompose_as_schur(two);
  CHECK(dec2.x.size() == 2);
  CHECK(max_abs(dec2.a - Mat::Ones(1, 2)) == 0.0);
  CHECK(dec2.assemble().coeff_distance(two) <= 1e-12);

  // random level-2 element over a three-dimensional right system: k = 6
  SystemPtr t3 = pauli_xz_system();
  TensorElement p(s, t3, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int l = 0; l < s->dim(); ++l)
        for (int lp = 0; lp < t3->dim(); ++lp) p.coeff(a, b)(l, lp) = cxd(g(rng), g(rng));
  SchurDecomposition dec3 = decompose_as_schur(p);
  CHECK(dec3.x.size() == 6);
  CHECK(dec3.assemble().coeff_distance(p) <= 1e-12);
}

TEST_CASE("kron_as_schur") {
  SystemPtr s = *builtin_system("Mn:2");
  SystemPtr t = *builtin_system("Cn:2");
  auto rng = rng_for("t2prop");

  // n = m = 1 leaves the factors unchanged
  SystemMatrix x1 = random_psd_matrix(s, 1, rng);
  SystemMatrix y1 = random_psd_matrix(t, 1, rng);
  auto [f1, f2] = kron_as_schur(x1, y1);
  CHECK((f1.entry(0, 0) - x1.entry(0, 0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((f2.entry(0, 0) - y1.entry(0, 0)).cwiseAbs().maxCoeff() == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    SystemMatrix x = random_psd_matrix(s, 2, rng);
    SystemMatrix y = random_psd_matrix(t, 2, rng);
    auto [fx, fy] = kron_as_schur(x, y);
    CHECK(schur_product(fx, fy).coeff_distance(kron_tensor(x, y)) <= 1e-12);
    CHECK(level_positive(fx).member());
    CHECK(level_positive(fy).member());
  }
}

TEST_CASE("normal_form_level1") {
  SystemPtr s = *builtin_system("Cn:2");
  SystemPtr t = *builtin_system("Cn:2");

  // A = [1], P = Q = unit: u = 1 (x) 1
  MaxConeCertificate triv = normal_form_level1(
      Mat::Ones(1, 1), SystemMatrix::unit(s, 1), SystemMatrix::unit(t, 1));
  CHECK(triv.residual <= 1e-12);
  TensorElement u1 = TensorElement::unit(s, t);
  CHECK(verify_certificate(triv, u1, 1e-9, 1e-10).ok);

  auto rng = rng_for("remark9");
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    SystemMatrix p = random_psd_matrix(s, 2, rng);
    SystemMatrix q = random_psd_matrix(t, 2, rng);
    Mat a(1, 4);
    for (Index i = 0; i < 4; ++i) a(0, i) = cxd(g(rng), g(rng));
    MaxConeCertificate cert = normal_form_level1(a, p, q);
    CHECK(cert.residual <= 1e-12);
    TensorElement direct = sandwich_tensor(a, kron_tensor(p, q), a.adjoint());
    CertificateCheck chk = verify_certificate(cert, direct, 1e-9, 1e-10);
    CHECK(chk.ok);
  }

  SystemMatrix notpos(s, 1);
  notpos.entry(0, 0)(0) = -1.0;
  CHECK_THROWS_AS(
      normal_form_level1(Mat::Ones(1, 1), notpos, SystemMatrix::unit(t, 1)), NotPositive);
}

TEST_CASE("maximally entangled certificate") {
  SystemPtr m2 = *builtin_system("Mn:2");
  SystemMatrix p = unit_pattern(m2);

  // realization of [E_ij] is the rank-one Choi matrix of the identity
  RVec ev = herm_eigenvalues(p.realize());
  CHECK(std::abs(ev(3) - 2.0) < 1e-12);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(ev(i)) < 1e-12);

  TensorElement u = sum_entries(schur_product(p, p));
  MaxConeCertificate cert;
  cert.scalar = Mat::Ones(1, 2);
  cert.P = CertificateSide::of(p);
  cert.Q = CertificateSide::of(p);
  cert.residual = (cert.expand(m2, m2) - u).coeff_norm();
  CHECK(cert.residual <= 1e-12);
  CHECK(verify_certificate(cert, u, 1e-9, 1e-12).ok);

  // realization is twice a rank-one projection
  RVec uev = herm_eigenvalues(u.realize());
  CHECK(std::abs(uev(3) - 2.0) < 1e-12);
  CHECK(std::abs(uev(0)) < 1e-12);
}

TEST_CASE("witness verification") {
  SystemPtr m2 = *builtin_system("Mn:2");
  TensorElement u = TensorElement::unit(m2, m2).scaled(-2.0);
  MaxConeWitness wit{identity(4) / 4.0, 0.0};
  WitnessCheck chk = verify_witness(wit, u, 1.0, 1e-6);
  CHECK(chk.ok);
  CHECK(chk.pairing == Catch::Approx(-1.0));

  // the same witness fails against the unit
  WitnessCheck bad = verify_witness(wit, TensorElement::unit(m2, m2), 1.0, 1e-6);
  CHECK_FALSE(bad.ok);
}

TEST_CASE("cone axioms on certificates") {
  auto rng = rng_for("coneaxioms");
  std::normal_distribution<double> g;
  SystemPtr s = *builtin_system("Mn:2");
  SystemPtr t = *builtin_system("Cn:2");

  auto random_cert = [&](int k) {
    MaxConeCertificate c;
    c.scalar = Mat::Ones(1, k);
    c.P = CertificateSide::of(random_psd_matrix(s, k, rng));
    c.Q = CertificateSide::of(random_psd_matrix(t, k, rng));
    return c;
  };

  for (int trial = 0; trial < 5; ++trial) {
    MaxConeCertificate c1 = random_cert(2), c2 = random_cert(3);
    TensorElement u1 = c1.expand(s, t), u2 = c2.expand(s, t);

    // sum via direct sums and concatenated compressions
    MaxConeCertificate sum;
    sum.scalar = Mat::Ones(1, 5);
    sum.scalar.block(0, 0, 1, 2) = c1.scalar;
    sum.scalar.block(0, 2, 1, 3) = c2.scalar;
    sum.P = CertificateSide::of(c1.P.concrete.direct_sum(c2.P.concrete));
    sum.Q = CertificateSide::of(c1.Q.concrete.direct_sum(c2.Q.concrete));
    CHECK(verify_certificate(sum, u1 + u2, 1e-9, 1e-9).ok);

    // positive scaling via sqrt(t) * A
    MaxConeCertificate scaled = c1;
    scaled.scalar = std::sqrt(2.5) * c1.scalar;
    CHECK(verify_certificate(scaled, u1.scaled(2.5), 1e-9, 1e-9).ok);

    // compression B ( ) B^*: scalar 2x1 against the level-1 element
    Mat bmat(2, 1);
    bmat << cxd(g(rng), g(rng)), cxd(g(rng), g(rng));
    MaxConeCertificate compressed = c1;
    compressed.scalar = bmat * c1.scalar;
    CHECK(verify_certificate(compressed, conjugate_tensor(bmat, u1), 1e-9, 1e-9).ok);
  }
}

TEST_CASE("swap mechanics") {
  auto rng = rng_for("swap");
  std::normal_distribution<double> g;
  SystemPtr s = *builtin_system("Mn:2");
  SystemPtr t = *builtin_system("Cn:2");

  TensorElement u(s, t, 1);
  for (int l = 0; l < s->dim(); ++l)
    for (int lp = 0; lp < t->dim(); ++lp) u.coeff(0, 0)(l, lp) = g(rng);
  CHECK(u.swapped().swapped().coeff_distance(u) == 0.0);

  TensorElement one = TensorElement::unit(s, t);
  CHECK(one.swapped().coeff_distance(TensorElement::unit(t, s)) == 0.0);

  // swapped certificate verifies against the swapped element
  MaxConeCertificate c;
  c.scalar = Mat::Ones(1, 2);
  c.P = CertificateSide::of(random_psd_matrix(s, 2, rng));
  c.Q = CertificateSide::of(random_psd_matrix(t, 2, rng));
  TensorElement w = c.expand(s, t);
  CHECK(verify_certificate(c.swapped(), w.swapped(), 1e-9, 1e-9).ok);

  // swapped witness pairs identically
  TensorElement neg = TensorElement::unit(s, t).scaled(-3.0);
  MaxConeWitness wit{identity(4) / 4.0, 0.0};
  double before = verify_witness(wit, neg, 0.5, 1e-6).pairing;
  double after = verify_witness(wit.swapped(2, 2), neg.swapped(), 0.5, 1e-6).pairing;
  CHECK(before == Catch::Approx(after).margin(1e-12));
}

TEST_CASE("tensor element realization and hermiticity") {
  SystemPtr s = *builtin_system("Mn:2");
  TensorElement u = TensorElement::unit(s, s, 2);
  CHECK(max_abs(u.realize() - identity(8)) == 0.0);
  CHECK(u.hermitian());

  TensorElement v(s, s, 1);
  v.coeff(0, 0)(1, 0) = cxd(0, 1);
  CHECK_FALSE(v.hermitian());
}
