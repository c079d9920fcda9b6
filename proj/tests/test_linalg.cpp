#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qutritcr/errors.hpp"
#include "qutritcr/linalg.hpp"
#include "support.hpp"

using namespace qutritcr;

TEST_CASE("kron examples") {
  CHECK(max_abs_diff(kron(identity(3), identity(3)), identity(9)) == 0.0);

  const ComplexMatrix x01 = outer(3, 0, 1) + outer(3, 1, 0);
  const ComplexMatrix k = kron(outer(3, 1, 1), x01);
  int nonzero = 0;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) nonzero += k(i, j) != cplx(0.0);
  CHECK(nonzero == 2);
  CHECK(k(3, 4) == cplx(1.0));
  CHECK(k(4, 3) == cplx(1.0));

  const std::vector<cplx> d{1.0, 2.0, 3.0};
  const std::vector<cplx> expect{1, 1, 1, 2, 2, 2, 3, 3, 3};
  CHECK(max_abs_diff(kron(diagonal(d), identity(3)), diagonal(expect)) == 0.0);
}

TEST_CASE("kron dimensions and indexing") {
  ComplexMatrix a(2, 3), b(3, 2);
  for (int i = 0; i < a.size(); ++i) a(i) = cplx(i + 1, -i);
  for (int i = 0; i < b.size(); ++i) b(i) = cplx(2 * i, 1);
  const ComplexMatrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  REQUIRE(k.cols() == 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c) CHECK(k(3 * i + r, 2 * j + c) == a(i, j) * b(r, c));
}

TEST_CASE("property: kron is associative on integer matrices") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(-4, 4);
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix a(2, 2), b(3, 2), c(2, 3);
    for (auto* m : {&a, &b, &c})
      for (int i = 0; i < m->size(); ++i) (*m)(i) = cplx(pick(rng), pick(rng));
    CHECK(max_abs_diff(kron(kron(a, b), c), kron(a, kron(b, c))) == 0.0);
  }
}

TEST_CASE("expm_unitary examples") {
  const ComplexMatrix h = outer(3, 0, 1) + outer(3, 1, 0);
  CHECK(max_abs_diff(expm_unitary(h, 0.0), identity(3)) < 1e-15);

  ComplexMatrix expect = ComplexMatrix::Zero(3, 3);
  expect(0, 1) = expect(1, 0) = cplx(0, -1);
  expect(2, 2) = 1.0;
  CHECK(max_abs_diff(expm_unitary(h, kPi / 2.0), expect) < 1e-12);

  const ComplexMatrix g = test::random_hermitian(9, 11);
  CHECK(max_abs_diff(expm_unitary(g, 0.7) * expm_unitary(g, -0.7), identity(9)) < 1e-10);
}

TEST_CASE("expm_unitary rejects non-Hermitian input") {
  ComplexMatrix h = outer(3, 0, 1);
  CHECK_THROWS_AS(expm_unitary(h, 1.0), NotHermitian);
}

TEST_CASE("property: expm_unitary is a one-parameter group and unitary") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    const ComplexMatrix h = test::random_hermitian(trial % 2 ? 9 : 3, 100 + trial);
    const double s = u(rng), t = u(rng);
    const ComplexMatrix us = expm_unitary(h, s);
    CHECK(is_unitary(us));
    CHECK(max_abs_diff(us * expm_unitary(h, t), expm_unitary(h, s + t)) < 1e-9);
  }
}

TEST_CASE("partial trace examples") {
  CHECK(max_abs_diff(partial_trace(StateVector::ket(1, 2), Keep::First), outer(3, 1, 1)) < 1e-15);

  CHECK(max_abs_diff(partial_trace(test::bell(), Keep::First), identity(3) / 3.0) < 1e-15);

  ComplexVector v = ComplexVector::Zero(9);
  v(0) = v(4) = 1.0 / std::sqrt(2.0);
  const std::vector<cplx> half{0.5, 0.5, 0.0};
  CHECK(max_abs_diff(partial_trace(StateVector(v), Keep::Second), diagonal(half)) < 1e-15);

  CHECK_THROWS_AS(partial_trace(StateVector::basis(3, 0), Keep::First), DimMismatch);
}

TEST_CASE("property: reduced states are density matrices") {
  for (int trial = 0; trial < 50; ++trial) {
    const StateVector psi = test::random_state(9, 200 + trial);
    for (Keep keep : {Keep::First, Keep::Second}) {
      const ComplexMatrix rho = partial_trace(psi, keep);
      CHECK(is_hermitian(rho, 1e-12));
      CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }
}

TEST_CASE("StateVector enforces normalization") {
  ComplexVector v = ComplexVector::Zero(9);
  v(0) = 1.1;
  CHECK_THROWS_AS(StateVector{v}, NotNormalized);
  CHECK_THROWS_AS(StateVector::normalized(ComplexVector::Zero(9)), InvalidParams);
  CHECK(StateVector::normalized(v).norm() == doctest::Approx(1.0));
  CHECK(StateVector::ket(2, 1)[7] == cplx(1.0));
}
