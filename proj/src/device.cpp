#include "qutritcr/device.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "qutritcr/errors.hpp"

namespace qutritcr {

void DeviceParams::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  if (!(finite(omega1) && finite(omega2) && finite(delta1) && finite(delta2) && finite(coupling_j))) {
    throw InvalidParams("device parameters must be finite");
  }
  if (levels != 3) throw InvalidParams("only three levels per transmon are modelled");
  if (omega1 <= 0.0 || omega2 <= 0.0) throw InvalidParams("transmon frequencies must be positive");
  if (delta1 >= 0.0 || delta2 >= 0.0) throw InvalidParams("anharmonicities must be negative");
  // J = 0 is accepted: the uncoupled device is a useful reference point.
  if (coupling_j < 0.0) throw InvalidParams("coupling must be non-negative");
  if (std::abs(coupling_j) >= std::abs(omega1 - omega2) / 10.0) {
    throw InvalidParams("coupling too strong for the dispersive regime");
  }
}

DeviceParams device_from_json(const nlohmann::json& j) {
  static const std::set<std::string> allowed{"omega1_ghz", "omega2_ghz", "delta1_ghz",
                                             "delta2_ghz", "j_ghz",      "levels"};
  if (!j.is_object()) throw ConfigError("device config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown device key '" + key + "'");
  }
  DeviceParams p;
  try {
    p.omega1 = j.value("omega1_ghz", p.omega1);
    p.omega2 = j.value("omega2_ghz", p.omega2);
    p.delta1 = j.value("delta1_ghz", p.delta1);
    p.delta2 = j.value("delta2_ghz", p.delta2);
    p.coupling_j = j.value("j_ghz", p.coupling_j);
    p.levels = j.value("levels", p.levels);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad device value: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json device_to_json(const DeviceParams& p) {
  return {{"omega1_ghz", p.omega1}, {"omega2_ghz", p.omega2}, {"delta1_ghz", p.delta1},
          {"delta2_ghz", p.delta2}, {"j_ghz", p.coupling_j},  {"levels", p.levels}};
}

void FrameSpec::validate() const {
  if (!std::isfinite(frame1) || !std::isfinite(frame2) || frame1 < 0.0 || frame2 < 0.0) {
    throw InvalidParams("frame frequencies must be finite and non-negative");
  }
}

ComplexMatrix lowering() {
  ComplexMatrix a = ComplexMatrix::Zero(kLevels, kLevels);
  for (int n = 1; n < kLevels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

ComplexMatrix lowering_on(int transmon) {
  if (transmon == 1) return kron(lowering(), identity(kLevels));
  if (transmon == 2) return kron(identity(kLevels), lowering());
  throw InvalidParams("transmon index must be 1 or 2");
}

ComplexMatrix number_on(int transmon) {
  const ComplexMatrix a = lowering_on(transmon);
  return a.adjoint() * a;
}

ComplexMatrix build_static_hamiltonian(const DeviceParams& p) {
  p.validate();
  const ComplexMatrix n1 = number_on(1);
  const ComplexMatrix n2 = number_on(2);
  const ComplexMatrix a1 = lowering_on(1);
  const ComplexMatrix a2 = lowering_on(2);
  const ComplexMatrix id = identity(kDim);
  ComplexMatrix h = p.omega1 * n1 + 0.5 * p.delta1 * n1 * (n1 - id) + p.omega2 * n2 +
                    0.5 * p.delta2 * n2 * (n2 - id) +
                    p.coupling_j * (a1.adjoint() * a2 + a1 * a2.adjoint());
  return kTwoPi * h;
}

ComplexMatrix drive_operator(const DeviceParams& /*p*/, int which) {
  const ComplexMatrix a = lowering_on(which);
  return a + a.adjoint();
}

std::array<double, kDim> dressed_energies(const DeviceParams& p) {
  const ComplexMatrix h = build_static_hamiltonian(p);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h);
  const ComplexMatrix& v = eig.eigenvectors();

  // Greedy maximum-overlap assignment: take the largest remaining
  // |<bare|eigen>|^2 and retire both its row and column.
  std::array<double, kDim> energies{};
  std::array<bool, kDim> bare_used{};
  std::array<bool, kDim> eig_used{};
  for (int round = 0; round < kDim; ++round) {
    double best = -1.0;
    int bi = -1;
    int ei = -1;
    for (int b = 0; b < kDim; ++b) {
      if (bare_used[b]) continue;
      for (int e = 0; e < kDim; ++e) {
        if (eig_used[e]) continue;
        const double w = std::norm(v(b, e));
        if (w > best) {
          best = w;
          bi = b;
          ei = e;
        }
      }
    }
    bare_used[bi] = true;
    eig_used[ei] = true;
    energies[bi] = eig.eigenvalues()(ei) / kTwoPi;
  }
  return energies;
}

TransitionFrequencies transition_frequencies(const DeviceParams& p, bool dressed) {
  p.validate();
  if (!dressed) {
    return {p.omega1, p.omega1 + p.delta1, p.omega2, p.omega2 + p.delta2};
  }
  const auto e = dressed_energies(p);
  auto at = [&](int q1, int q2) { return e[kLevels * q1 + q2]; };
  return {at(1, 0) - at(0, 0), at(2, 0) - at(1, 0), at(0, 1) - at(0, 0), at(0, 2) - at(0, 1)};
}

std::array<double, kDim> computational_frame(const DeviceParams& p) {
  const auto f = transition_frequencies(p, true);
  const std::array<double, kLevels> e1{0.0, f.w01_1, f.w01_1 + f.w12_1};
  const std::array<double, kLevels> e2{0.0, f.w01_2, f.w01_2 + f.w12_2};
  std::array<double, kDim> out{};
  for (int i = 0; i < kLevels; ++i)
    for (int j = 0; j < kLevels; ++j) out[kLevels * i + j] = e1[i] + e2[j];
  return out;
}

}  // namespace qutritcr
