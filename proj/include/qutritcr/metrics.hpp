#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "qutritcr/linalg.hpp"

namespace qutritcr {

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::optional<double> stderr_value;
  std::optional<long long> shots;
  std::optional<std::uint64_t> seed;
};

// One JSON object, keys in the order name, value, stderr, shots, seed.
nlohmann::ordered_json metric_to_json(const MetricReport& m);

// |<psi|phi>|^2.
double state_fidelity(const StateVector& psi, const StateVector& phi);

// (|Tr(u^dag v)|^2 + d) / (d (d + 1)); both arguments unitary within 1e-7.
double average_gate_fidelity(const ComplexMatrix& u, const ComplexMatrix& v);

// sqrt(3/2 (1 - Tr rho^2)) for the reduced state of the kept qutrit.
double concurrence(const StateVector& psi, Keep keep = Keep::First);

// Tr(rho^2) of a 3x3 density matrix; throws NotDensityMatrix.
double purity(const ComplexMatrix& rho);

}  // namespace qutritcr
