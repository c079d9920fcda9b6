#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qutritcr {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Tolerances shared by every module.
inline constexpr double kHermTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kNormTol = 1e-9;

inline constexpr int kLevels = 3;
inline constexpr int kDim = kLevels * kLevels;

// Pure state of one qutrit (dim 3) or the pair (dim 9). Two-qutrit basis
// order is |q1 q2> with index 3*q1 + q2, q1 the control.
class StateVector {
 public:
  explicit StateVector(ComplexVector amplitudes);

  static StateVector basis(int dim, int index);
  // Two-qutrit product basis state |q1 q2>.
  static StateVector ket(int q1, int q2);
  static StateVector product(const StateVector& first, const StateVector& second);
  // Normalizes before construction; throws InvalidParams on a zero vector.
  static StateVector normalized(ComplexVector amplitudes);

  int dim() const { return static_cast<int>(amps_.size()); }
  const ComplexVector& amplitudes() const { return amps_; }
  cplx operator[](int i) const { return amps_(i); }
  double norm() const { return amps_.norm(); }

 private:
  ComplexVector amps_;
};

ComplexMatrix identity(int dim);
// |i><j| in dimension dim.
ComplexMatrix outer(int dim, int i, int j);
ComplexMatrix diagonal(std::span<const cplx> entries);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
bool is_hermitian(const ComplexMatrix& a, double tol = kHermTol);
bool is_unitary(const ComplexMatrix& u, double tol = kUnitaryTol);

// exp(-i h s) for Hermitian h via the eigendecomposition of h.
ComplexMatrix expm_unitary(const ComplexMatrix& h, double s);

enum class Keep { First, Second };

// Reduced density matrix of the kept qutrit of a two-qutrit pure state.
ComplexMatrix partial_trace(const StateVector& psi, Keep keep);

ComplexVector apply(const ComplexMatrix& u, const StateVector& psi);

}  // namespace qutritcr
