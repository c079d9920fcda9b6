#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qutritcr/device.hpp"
#include "qutritcr/effective_cr.hpp"
#include "qutritcr/linalg.hpp"
#include "qutritcr/propagator.hpp"
#include "qutritcr/schedule.hpp"

namespace qutritcr {

struct CalibrationOptions {
  EvolveOptions evolve;  // full model used for final numbers
  double single_duration_ns = 64.0;
  int beta_points = 21;
  double cr01_amp_ghz = 0.45;
  double csx12_amp_ghz = 0.15;
  double risefall_ns = 20.0;
  // Stage 2 keeps the CR amplitude within this fraction of its default, so
  // the default keeps fixing the gate time.
  double cr_amp_window = 0.1;
  // Stage-2 CR search runs under the RWA first, then is polished in the
  // full model with a smaller simplex.
  bool rwa_presearch = true;
  int max_evaluations = 500;
  int refine_evaluations = 60;
  double min_single_fidelity = 0.999;
  double min_cr_fidelity = 0.95;

  void validate() const;
};

nlohmann::json calibration_options_to_json(const CalibrationOptions& o);
CalibrationOptions calibration_options_from_json(const nlohmann::json& j);

// Zdiag(phi_a, phi_b) on the control and on the target, applied after a gate.
struct VirtualPhases {
  std::array<double, 2> control{};
  std::array<double, 2> target{};
};

struct CalibratedGate {
  std::string name;
  Schedule schedule;  // ends with the virtual phases
  VirtualPhases phases;
  ComplexMatrix achieved;  // 9x9, computational frame, phases included
  ComplexMatrix target;    // 9x9
  double fidelity_to_target = 0.0;
  nlohmann::json params;  // pulse parameters for the record
};

// R_X^{subspace}(theta) on one transmon. A negative theta flips the carrier.
struct SingleQutritTarget {
  std::string name;
  int transmon = 1;
  Subspace subspace = Subspace::S01;
  double theta = kPi;
};

// DRAG pulse at the dressed transition. Amplitude from the pulse area, then
// refined; beta from a leakage scan. Throws CalibrationFailed below
// opts.min_single_fidelity.
CalibratedGate calibrate_single_qutrit(const DeviceParams& p, const SingleQutritTarget& target,
                                       const CalibrationOptions& opts);

// H3 on transmon 1 as R01(2 acos(1/sqrt3)) then R12(pi/2) and a virtual
// Zdiag. Only the image of |0> is constrained, so fidelity_to_target is the
// state fidelity of the |00> column against H3|0>|0>.
CalibratedGate calibrate_h3(const DeviceParams& p, const CalibratedGate& r01, const CalibratedGate& r12,
                            const EvolveOptions& opts);

// Empty for c = 0, X01 for c = 1, X01 then X12 for c = 2 (transmon 1).
// Verifies the control population; throws CalibrationFailed.
Schedule prepare_control_state(const DeviceParams& p, int c, const CalibratedGate& x01, const CalibratedGate& x12,
                               const EvolveOptions& opts);

struct RabiTrace {
  int control_state = 0;
  Subspace subspace = Subspace::S01;
  double amp_ghz = 0.0;
  std::vector<double> durations;                 // ns from the CR pulse start
  std::vector<std::array<double, kDim>> populations;
  // <sigma_y> of the target on the driven subspace, summed over control
  // levels. Populations cannot tell a rotation from its inverse; this can.
  std::vector<double> coherence;

  // Marginal population of one target level.
  std::vector<double> target_population(int level) const;
};

// Pulses that put the pair in the scan's initial state.
struct ScanPreparation {
  std::array<Schedule, 3> control;  // prepare_control_state(c)
  Schedule target_minus;            // |0> -> (|0> - |1>)/sqrt2 on transmon 2
};

// Control state prepared, target in |0> (01 scan) or |-> (12 scan), then one
// long CR pulse sampled at each duration. Without `prep` the initial product
// state is injected directly.
RabiTrace run_rabi_scan(const DeviceParams& p, Subspace s, double amp, const std::vector<double>& durations,
                        int control_state, const ScanPreparation* prep, const EvolveOptions& opts,
                        double risefall = 20.0);

struct FitResult {
  double freq = 0.0;  // GHz, cyclic
  double phase = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double rmse = 0.0;
};

nlohmann::ordered_json fit_to_json(const FitResult& f);

// y = offset + amplitude cos(2 pi freq t + phase). Seeded by the periodogram
// peak (lowest frequency on ties), refined by least squares. Throws
// NoOscillation when the peak is below 3x the spectral median.
FitResult fit_rabi(const std::vector<double>& t, const std::vector<double>& y);

// Signed resonant Rabi rate (GHz) of one trace: magnitude f sqrt(2a / w) from
// the population fit, w the population fraction taking part; sign from the
// phase of the coherence fit.
struct RateEstimate {
  FitResult population;
  FitResult coherence;
  double rate = 0.0;
};
RateEstimate estimate_rabi_rate(const RabiTrace& trace);

struct VirtualPhaseFit {
  VirtualPhases phases;
  double fidelity_before = 0.0;
  double fidelity = 0.0;
};

// Best (Zc (x) Zt) * achieved against the target, by coordinate ascent from
// zero angles. Never lowers the fidelity.
VirtualPhaseFit calibrate_virtual_phases(const ComplexMatrix& achieved, const ComplexMatrix& target);

// Zc (x) Zt as a 9x9 diagonal matrix.
ComplexMatrix virtual_phase_matrix(const VirtualPhases& v);

// Appends the virtual phases to a schedule at its end.
Schedule with_virtual_phases(const Schedule& s, const VirtualPhases& v);

struct CRTarget {
  std::string name;
  Subspace subspace = Subspace::S01;
  double theta = kPi;
  std::array<double, 3> signs{1.0, 0.0, -1.0};
};

// Stage 1: width from the fitted control-0 Rabi frequency at the default
// amplitude. Stage 2: simplex over (amp, width, carrier phase) with the four
// virtual phases solved in closed form at every point. Throws
// CalibrationFailed below opts.min_cr_fidelity.
CalibratedGate calibrate_cr_gate(const DeviceParams& p, const CRTarget& target, const CalibrationOptions& opts);

// Average gate fidelity for a possibly non-unitary block m against unitary t:
// (Tr(m m^dag) + |Tr(t^dag m)|^2) / (d (d + 1)).
double block_fidelity(const ComplexMatrix& m, const ComplexMatrix& t);

nlohmann::json calibrated_gate_to_json(const CalibratedGate& g);
CalibratedGate calibrated_gate_from_json(const nlohmann::json& j);

}  // namespace qutritcr
