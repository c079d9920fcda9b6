#include "qutritcr/effective_cr.hpp"

#include <cmath>

#include "qutritcr/errors.hpp"

namespace qutritcr {
namespace {

constexpr double kMinDenominator = 1e-6;  // GHz

double inverse(double x, const char* what) {
  if (std::abs(x) < kMinDenominator) throw SingularDenominator(std::string(what) + " is too close to zero");
  return 1.0 / x;
}

}  // namespace

std::string to_string(CoefficientModel m) { return m == CoefficientModel::Literal ? "literal" : "detuning"; }

CoefficientModel coefficient_model_from_string(const std::string& s) {
  if (s == "literal") return CoefficientModel::Literal;
  if (s == "detuning") return CoefficientModel::Detuning;
  throw InvalidParams("unknown coefficient model '" + s + "'");
}

CRCoefficients cr_coefficients(const DeviceParams& p, CoefficientModel model) {
  const double base = model == CoefficientModel::Literal ? p.omega1 : p.omega1 - p.omega2;
  CRCoefficients c;
  c.model = model;
  c.eta10 = inverse(base, "eta10 denominator");
  c.eta11 = inverse(base + p.delta1, "eta11 denominator");
  c.nu0 = -c.eta10;
  c.nu1 = c.eta10 - 2.0 * c.eta11;
  c.nu2 = 2.0 * c.eta11;
  return c;
}

ComplexMatrix effective_hamiltonian(const DeviceParams& p, const CRCoefficients& c, double omega_d_ghz, double t) {
  const auto tf = transition_frequencies(p, true);
  const cplx e01 = std::polar(1.0, kTwoPi * (omega_d_ghz - tf.w01_2) * t);
  const cplx e12 = std::polar(1.0, kTwoPi * (omega_d_ghz - tf.w12_2) * t);
  ComplexMatrix target = ComplexMatrix::Zero(kLevels, kLevels);
  target(0, 1) = e01;
  target(1, 0) = std::conj(e01);
  target(1, 2) = std::sqrt(2.0) * e12;
  target(2, 1) = std::conj(target(1, 2));
  const cplx nus[3] = {c.nu0, c.nu1, c.nu2};
  return kron(diagonal(nus), target);
}

ComplexMatrix rx(Subspace s, double theta) {
  const int a = s == Subspace::S01 ? 0 : 1;
  ComplexMatrix u = identity(kLevels);
  u(a, a) = u(a + 1, a + 1) = std::cos(theta / 2.0);
  u(a, a + 1) = u(a + 1, a) = cplx(0.0, -std::sin(theta / 2.0));
  return u;
}

IdealGate ideal_ucr(Subspace s, double theta, const std::array<double, 3>& signs) {
  if (!std::isfinite(theta)) throw InvalidParams("theta must be finite");
  ComplexMatrix u = ComplexMatrix::Zero(kDim, kDim);
  for (int i = 0; i < kLevels; ++i) {
    u.block(kLevels * i, kLevels * i, kLevels, kLevels) = rx(s, signs[static_cast<std::size_t>(i)] * theta);
  }
  return {"ucr" + to_string(s), u};
}

IdealGate ideal_single_qutrit(const std::string& name, double phi_a, double phi_b) {
  ComplexMatrix u = ComplexMatrix::Zero(kLevels, kLevels);
  if (name == "H3") {
    const cplx w = std::polar(1.0, kTwoPi / 3.0);
    for (int j = 0; j < kLevels; ++j) {
      for (int k = 0; k < kLevels; ++k) u(j, k) = std::pow(w, j * k) / std::sqrt(3.0);
    }
  } else if (name == "X012") {
    for (int j = 0; j < kLevels; ++j) u((j + 1) % kLevels, j) = 1.0;
  } else if (name == "X01") {
    u = rx(Subspace::S01, kPi);
  } else if (name == "X12") {
    u = rx(Subspace::S12, kPi);
  } else if (name == "V") {
    u = rx(Subspace::S12, -kPi / 2.0);
  } else if (name == "Zdiag") {
    const cplx d[3] = {1.0, std::polar(1.0, phi_a), std::polar(1.0, phi_b)};
    u = diagonal(d);
  } else {
    throw UnknownGate("no single-qutrit gate named '" + name + "'");
  }
  return {name, u};
}

IdealGate on_transmon(const IdealGate& g, int transmon) {
  if (g.matrix.rows() != kLevels) throw DimMismatch("on_transmon needs a 3x3 gate");
  if (transmon == 1) return {g.name + "(1)", kron(g.matrix, identity(kLevels))};
  if (transmon == 2) return {g.name + "(2)", kron(identity(kLevels), g.matrix)};
  throw InvalidParams("transmon must be 1 or 2");
}

BellCircuit bell_reference_circuit() {
  ComplexVector bell = ComplexVector::Zero(kDim);
  bell(0) = bell(4) = bell(8) = 1.0;
  // Pre-correction amplitudes on |00>,|11>,|22> are (-1, -i, -1)/sqrt3; a
  // control Zdiag(-pi/2, 0) aligns them up to a global phase.
  BellCircuit c{{}, StateVector::normalized(bell), -kPi / 2.0, 0.0};
  c.gates.push_back(on_transmon(ideal_single_qutrit("H3"), 1));
  c.gates.push_back(ideal_ucr(Subspace::S01, kPi));
  c.gates.back().name = "CR01";
  c.gates.push_back(ideal_ucr(Subspace::S12, kPi / 2.0));
  c.gates.back().name = "CSX12";
  c.gates.push_back(on_transmon(ideal_single_qutrit("V"), 2));
  c.gates.push_back(on_transmon(ideal_single_qutrit("X01"), 2));
  c.gates.push_back(on_transmon(ideal_single_qutrit("Zdiag", c.phi_a, c.phi_b), 1));
  return c;
}

ComplexMatrix circuit_unitary(const std::vector<IdealGate>& gates) {
  ComplexMatrix u = identity(kDim);
  for (const auto& g : gates) {
    if (g.matrix.rows() != kDim) throw DimMismatch("circuit gates must be 9x9");
    u = g.matrix * u;
  }
  return u;
}

nlohmann::json gate_to_json(const IdealGate& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < g.matrix.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < g.matrix.cols(); ++k) row.push_back({g.matrix(i, k).real(), g.matrix(i, k).imag()});
    rows.push_back(std::move(row));
  }
  return {{"name", g.name}, {"dim", g.matrix.rows()}, {"matrix", std::move(rows)}};
}

IdealGate gate_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("dim").get<Eigen::Index>();
    const auto& rows = j.at("matrix");
    if (n <= 0 || rows.size() != static_cast<std::size_t>(n)) throw ConfigError("gate matrix has wrong row count");
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (row.size() != static_cast<std::size_t>(n)) throw ConfigError("gate matrix has wrong column count");
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto& z = row.at(static_cast<std::size_t>(k));
        m(i, k) = cplx(z.at(0).get<double>(), z.at(1).get<double>());
      }
    }
    return {j.at("name").get<std::string>(), m};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed gate JSON: ") + e.what());
  }
}

}  // namespace qutritcr
