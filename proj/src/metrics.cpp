#include "qutritcr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "qutritcr/errors.hpp"

namespace qutritcr {
namespace {

constexpr double kGateUnitaryTol = 1e-7;
constexpr double kDensityTol = 1e-9;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

nlohmann::ordered_json metric_to_json(const MetricReport& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["value"] = m.value;
  if (m.stderr_value) j["stderr"] = *m.stderr_value;
  if (m.shots) j["shots"] = *m.shots;
  if (m.seed) j["seed"] = *m.seed;
  return j;
}

double state_fidelity(const StateVector& psi, const StateVector& phi) {
  if (psi.dim() != phi.dim()) throw DimMismatch("state_fidelity needs equal dimensions");
  return clamp01(std::norm(psi.amplitudes().dot(phi.amplitudes())));
}

double average_gate_fidelity(const ComplexMatrix& u, const ComplexMatrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw DimMismatch("average_gate_fidelity needs equal shapes");
  if (!is_unitary(u, kGateUnitaryTol) || !is_unitary(v, kGateUnitaryTol)) {
    throw NotUnitary("average_gate_fidelity needs unitary arguments");
  }
  const double d = static_cast<double>(u.rows());
  const double tr2 = std::norm((u.adjoint() * v).trace());
  return clamp01((tr2 + d) / (d * (d + 1.0)));
}

double concurrence(const StateVector& psi, Keep keep) {
  if (psi.dim() != kDim) throw DimMismatch("concurrence needs a two-qutrit state");
  const double p = purity(partial_trace(psi, keep));
  return std::sqrt(std::max(0.0, 1.5 * (1.0 - p)));
}

double purity(const ComplexMatrix& rho) {
  if (rho.rows() != kLevels || rho.cols() != kLevels) throw NotDensityMatrix("purity needs a 3x3 matrix");
  if (!is_hermitian(rho, kDensityTol)) throw NotDensityMatrix("matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > kDensityTol) throw NotDensityMatrix("trace is not 1");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kDensityTol) throw NotDensityMatrix("matrix has a negative eigenvalue");
  return std::clamp((rho * rho).trace().real(), 1.0 / kLevels, 1.0);
}

}  // namespace qutritcr
