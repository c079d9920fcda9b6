#pragma once

#include <array>

#include <json.hpp>

#include "qutritcr/linalg.hpp"

namespace qutritcr {

// Two fixed-frequency transmons truncated to three levels each. All values
// are cyclic frequencies in GHz; conversion to rad/ns happens once, when a
// Hamiltonian is built.
struct DeviceParams {
  double omega1 = 4.9;
  double omega2 = 5.5;
  double delta1 = -0.4;
  double delta2 = -0.3;
  double coupling_j = 0.0027;
  int levels = 3;

  static DeviceParams reference() { return {}; }
  // Throws InvalidParams naming the first violated invariant.
  void validate() const;
  bool operator==(const DeviceParams&) const = default;
};

// Device config keys are fixed; unknown keys are rejected.
DeviceParams device_from_json(const nlohmann::json& j);
nlohmann::json device_to_json(const DeviceParams& p);

// Rotation frequencies (GHz) applied to each transmon's number operator.
struct FrameSpec {
  double frame1 = 0.0;
  double frame2 = 0.0;

  static FrameSpec bare(const DeviceParams& p) { return {p.omega1, p.omega2}; }
  void validate() const;
};

// Single-transmon ladder operator a with a|n> = sqrt(n)|n-1>.
ComplexMatrix lowering();
// a embedded on transmon 1 or 2 of the pair.
ComplexMatrix lowering_on(int transmon);
ComplexMatrix number_on(int transmon);

// H0 in rad/ns: sum_i 2pi[omega_i n_i + delta_i/2 n_i(n_i-1)] + 2pi J (a1^dag a2 + a1 a2^dag).
ComplexMatrix build_static_hamiltonian(const DeviceParams& p);

// (a + a^dag) on the chosen transmon (1 or 2).
ComplexMatrix drive_operator(const DeviceParams& p, int which);

struct TransitionFrequencies {
  double w01_1 = 0.0;
  double w12_1 = 0.0;
  double w01_2 = 0.0;
  double w12_2 = 0.0;
};

TransitionFrequencies transition_frequencies(const DeviceParams& p, bool dressed);

// Exact eigenvalues of H0 in GHz, relabelled so entry 3*q1+q2 is the
// eigenstate with the largest overlap on the bare state |q1 q2>.
std::array<double, kDim> dressed_energies(const DeviceParams& p);

// Diagonal (GHz) of the frame in which each transmon's levels rotate at its
// own dressed transitions: 0, w01, w01 + w12. Gates are compared here.
std::array<double, kDim> computational_frame(const DeviceParams& p);

}  // namespace qutritcr
