#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "qutritcr/device.hpp"
#include "qutritcr/linalg.hpp"
#include "qutritcr/schedule.hpp"

namespace qutritcr {

// literal: eta10 = 1/omega1, eta11 = 1/(omega1 + delta1).
// detuning: omega1 replaced by the control-target detuning omega1 - omega2.
enum class CoefficientModel { Literal, Detuning };

std::string to_string(CoefficientModel m);
CoefficientModel coefficient_model_from_string(const std::string& s);

struct CRCoefficients {
  double eta10 = 0.0;  // GHz^-1
  double eta11 = 0.0;
  double nu0 = 0.0;  // -eta10
  double nu1 = 0.0;  // eta10 - 2 eta11
  double nu2 = 0.0;  // 2 eta11
  CoefficientModel model = CoefficientModel::Detuning;

  std::array<double, 3> nu() const { return {nu0, nu1, nu2}; }
};

CRCoefficients cr_coefficients(const DeviceParams& p, CoefficientModel model = CoefficientModel::Detuning);

// (nu0|0><0| + nu1|1><1| + nu2|2><2|) on the control, tensored with the target
// ladder e^{i phi01}|0><1| + sqrt2 e^{i phi12}|1><2| + h.c., where
// phi_ab = 2pi (omega_d - w_ab) t at the dressed target transitions.
ComplexMatrix effective_hamiltonian(const DeviceParams& p, const CRCoefficients& c, double omega_d_ghz, double t);

struct IdealGate {
  std::string name;
  ComplexMatrix matrix;
};

// exp(-i theta/2 X) on the chosen two-level subspace of one qutrit.
ComplexMatrix rx(Subspace s, double theta);

// Sum_i |i><i| (x) R_X^{s}(signs[i] * theta).
IdealGate ideal_ucr(Subspace s, double theta, const std::array<double, 3>& signs = {1.0, 0.0, -1.0});

// Names: H3, X012, X01, X12, V, Zdiag (uses phi_a, phi_b). Throws UnknownGate.
IdealGate ideal_single_qutrit(const std::string& name, double phi_a = 0.0, double phi_b = 0.0);

// Lifts a single-qutrit gate onto transmon 1 (control) or 2 (target).
IdealGate on_transmon(const IdealGate& g, int transmon);

struct BellCircuit {
  std::vector<IdealGate> gates;  // 9x9, in application order
  StateVector target;
  // Control-side Zdiag angles of the final correction.
  double phi_a = 0.0;
  double phi_b = 0.0;
};

BellCircuit bell_reference_circuit();

// Product of the gates in application order (last gate leftmost).
ComplexMatrix circuit_unitary(const std::vector<IdealGate>& gates);

// {"name": ..., "dim": n, "matrix": [[[re, im], ...], ...]} row-major.
nlohmann::json gate_to_json(const IdealGate& g);
IdealGate gate_from_json(const nlohmann::json& j);

}  // namespace qutritcr
