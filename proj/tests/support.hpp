#pragma once

#include <random>

#include "qutritcr/linalg.hpp"

namespace qutritcr::test {

inline ComplexMatrix random_complex(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m(i) = cplx(n(rng), n(rng));
  return m;
}

inline ComplexMatrix random_hermitian(int dim, std::uint64_t seed) {
  const ComplexMatrix a = random_complex(dim, dim, seed);
  return 0.5 * (a + a.adjoint());
}

// Haar-ish unitary from the QR of a Gaussian matrix.
inline ComplexMatrix random_unitary(int dim, std::uint64_t seed) {
  Eigen::HouseholderQR<ComplexMatrix> qr(random_complex(dim, dim, seed));
  return qr.householderQ() * ComplexMatrix::Identity(dim, dim);
}

inline StateVector random_state(int dim, std::uint64_t seed) {
  return StateVector::normalized(random_complex(dim, 1, seed).col(0));
}

inline StateVector bell() {
  ComplexVector v = ComplexVector::Zero(kDim);
  v(0) = v(4) = v(8) = 1.0 / std::sqrt(3.0);
  return StateVector(v);
}

}  // namespace qutritcr::test
