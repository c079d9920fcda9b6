#pragma once

#include <array>
#include <optional>
#include <vector>

#include "qutritcr/device.hpp"
#include "qutritcr/hamiltonian.hpp"
#include "qutritcr/linalg.hpp"
#include "qutritcr/schedule.hpp"

namespace qutritcr {

struct EvolveOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-12;
  double max_step = 0.5;  // ns
  bool rwa = false;
  double rwa_cutoff_ghz = 2.0;
  // Simulation frame; defaults to each transmon's bare 0-1 frequency.
  std::optional<FrameSpec> frame;

  void validate() const;
  FrameSpec frame_for(const DeviceParams& p) const { return frame.value_or(FrameSpec::bare(p)); }
};

inline constexpr double kNormDriftValid = 1e-8;
inline constexpr double kNormDriftFatal = 1e-6;

struct EvolveStats {
  long accepted = 0;
  long rejected = 0;
  // |norm - 1| for states, max |U^dag U - I| for propagators. Runs above
  // kNormDriftValid are reported as invalid; above kNormDriftFatal they throw.
  double norm_drift = 0.0;
  bool valid() const { return norm_drift <= kNormDriftValid; }
};

// Solves i d(psi)/dt = H(t) psi with adaptive Dormand-Prince 8(5,3). No
// renormalization is applied.
StateVector evolve_state(const HamiltonianProvider& h, const StateVector& psi0, double t0, double t1,
                         const EvolveOptions& opts, EvolveStats* stats = nullptr);

// Evolves the columns of `initial` (dim x k) together.
ComplexMatrix evolve_columns(const HamiltonianProvider& h, const ComplexMatrix& initial, double t0,
                             double t1, const EvolveOptions& opts, EvolveStats* stats = nullptr);

ComplexMatrix evolve_unitary(const HamiltonianProvider& h, double t0, double t1, const EvolveOptions& opts,
                             EvolveStats* stats = nullptr);

// States at each requested time (non-decreasing, all >= t0), integrating
// through the sample points in one pass.
std::vector<StateVector> evolve_trajectory(const HamiltonianProvider& h, const StateVector& psi0, double t0,
                                           const std::vector<double>& times, const EvolveOptions& opts);

std::array<double, kDim> populations(const StateVector& psi);

// Maps simulation-frame amplitudes at time t into the computational frame
// (levels rotating at dressed transition frequencies).
ComplexMatrix frame_change(const DeviceParams& p, const FrameSpec& sim, double t);

// Runs a schedule from t = 0 to its end and returns the propagator in the
// computational frame, with the schedule's virtual phases applied. When
// `inputs` is given only those basis columns are propagated (others zero).
ComplexMatrix schedule_unitary(const DeviceParams& p, const Schedule& s, const EvolveOptions& opts,
                               const std::vector<int>& inputs = {}, EvolveStats* stats = nullptr);

// Same, for a single computational-frame input state.
StateVector schedule_state(const DeviceParams& p, const Schedule& s, const StateVector& psi0,
                           const EvolveOptions& opts, EvolveStats* stats = nullptr);

}  // namespace qutritcr
