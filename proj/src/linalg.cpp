#include "qutritcr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qutritcr/errors.hpp"

namespace qutritcr {

StateVector::StateVector(ComplexVector amplitudes) : amps_(std::move(amplitudes)) {
  if (amps_.size() != kLevels && amps_.size() != kDim) {
    throw DimMismatch("state dimension must be 3 or 9, got " + std::to_string(amps_.size()));
  }
  const double n2 = amps_.squaredNorm();
  if (std::abs(n2 - 1.0) > kNormTol) {
    throw NotNormalized("squared norm " + std::to_string(n2));
  }
}

StateVector StateVector::basis(int dim, int index) {
  if (index < 0 || index >= dim) throw OutOfRange("basis index " + std::to_string(index));
  ComplexVector v = ComplexVector::Zero(dim);
  v(index) = 1.0;
  return StateVector(std::move(v));
}

StateVector StateVector::ket(int q1, int q2) {
  if (q1 < 0 || q1 >= kLevels || q2 < 0 || q2 >= kLevels) {
    throw OutOfRange("qutrit level out of range");
  }
  return basis(kDim, kLevels * q1 + q2);
}

StateVector StateVector::product(const StateVector& first, const StateVector& second) {
  if (first.dim() != kLevels || second.dim() != kLevels) {
    throw DimMismatch("product needs two single-qutrit states");
  }
  ComplexVector v(kDim);
  for (int i = 0; i < kLevels; ++i)
    for (int j = 0; j < kLevels; ++j) v(kLevels * i + j) = first[i] * second[j];
  return StateVector(std::move(v));
}

StateVector StateVector::normalized(ComplexVector amplitudes) {
  const double n = amplitudes.norm();
  if (n == 0.0) throw InvalidParams("cannot normalize the zero vector");
  amplitudes /= n;
  return StateVector(std::move(amplitudes));
}

ComplexMatrix identity(int dim) { return ComplexMatrix::Identity(dim, dim); }

ComplexMatrix outer(int dim, int i, int j) {
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(i, j) = 1.0;
  return m;
}

ComplexMatrix diagonal(std::span<const cplx> entries) {
  const auto n = static_cast<Eigen::Index>(entries.size());
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) m(k, k) = entries[static_cast<std::size_t>(k)];
  return m;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimMismatch("matrix shapes differ");
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& a, double tol) {
  return a.rows() == a.cols() && max_abs_diff(a, a.adjoint()) <= tol;
}

bool is_unitary(const ComplexMatrix& u, double tol) {
  return u.rows() == u.cols() && max_abs_diff(u.adjoint() * u, identity(static_cast<int>(u.rows()))) <= tol;
}

ComplexMatrix expm_unitary(const ComplexMatrix& h, double s) {
  if (!is_hermitian(h)) throw NotHermitian("expm_unitary input is not Hermitian");
  // Symmetrize so roundoff-level asymmetry cannot leak into the eigenbasis.
  const ComplexMatrix hs = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(hs);
  const Eigen::VectorXd& w = eig.eigenvalues();
  ComplexVector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::polar(1.0, -w(k) * s);
  const ComplexMatrix& v = eig.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

ComplexMatrix partial_trace(const StateVector& psi, Keep keep) {
  if (psi.dim() != kDim) throw DimMismatch("partial trace needs a two-qutrit state");
  // Coefficient matrix m(q1, q2); rho_first = m m^dagger, rho_second = m^T conj(m).
  ComplexMatrix m(kLevels, kLevels);
  for (int i = 0; i < kLevels; ++i)
    for (int j = 0; j < kLevels; ++j) m(i, j) = psi[kLevels * i + j];
  if (keep == Keep::First) return m * m.adjoint();
  return m.transpose() * m.conjugate();
}

ComplexVector apply(const ComplexMatrix& u, const StateVector& psi) {
  if (u.cols() != psi.dim()) throw DimMismatch("operator/state dimension mismatch");
  return u * psi.amplitudes();
}

}  // namespace qutritcr
