#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qutritcr/calibration.hpp"
#include "qutritcr/device.hpp"
#include "qutritcr/metrics.hpp"

namespace qutritcr {

struct ExperimentConfig {
  DeviceParams device;
  std::uint64_t seed = 7;
  long long shots = 100000;
  std::string output = "out";
  CalibrationOptions calibration;

  void validate() const;
};

// Keys: device, seed, shots, output, calibration. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
// Reads a config file; QUTRITCR_SEED, when set, replaces the seed.
ExperimentConfig load_config(const std::filesystem::path& path);
std::optional<std::uint64_t> seed_from_env();

// FNV-1a (64-bit, hex) of the device and calibration settings; the seed,
// shot count and output path do not affect calibration.
std::string config_hash(const ExperimentConfig& c);

// Deterministic multinomial draw; throws BadDistribution.
std::array<long long, kDim> sample_shots(std::span<const double> probabilities, long long shots,
                                         std::uint64_t seed);

// Fidelity from measuring after the inverse ideal circuit: P(|00>) = F.
MetricReport estimate_fidelity_shots(const StateVector& psi, const ComplexMatrix& ideal_circuit, long long shots,
                                     std::uint64_t seed);

// Concurrence from counts in the state's Schmidt basis; stderr by the delta
// method on the multinomial covariance.
MetricReport estimate_concurrence_shots(const StateVector& psi, long long shots, std::uint64_t seed);

struct CalibrationStore {
  std::string config_hash;
  std::string timestamp;
  std::vector<CalibratedGate> gates;
  bool reused = false;  // true when an up-to-date store was found on disk

  const CalibratedGate& get(const std::string& name) const;
};

// Names in the order they are calibrated.
const std::vector<std::string>& store_gate_names();

nlohmann::json store_to_json(const CalibrationStore& s, const ExperimentConfig& c);
CalibrationStore store_from_json(const nlohmann::json& j);

// Single-qutrit gates, then H3, then the CR gates. An existing store whose
// hash matches and which holds every gate is returned untouched; an
// unreadable one is rebuilt. Progress goes to `log` when given.
CalibrationStore cmd_calibrate(const ExperimentConfig& c, const std::filesystem::path& store_path,
                               std::ostream* log = nullptr);

struct RabiRequest {
  Subspace subspace = Subspace::S01;
  int control = 0;
  double amp_ghz = 0.45;
  double t_max_ns = 1200.0;
  int points = 121;
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> store;  // reuse its X01(1)/X12(1)
};

struct RabiResult {
  std::array<RabiTrace, 3> traces;
  nlohmann::ordered_json sidecar;
  std::filesystem::path csv_path;
  std::filesystem::path sidecar_path;
};

// CSV (t_ns, p00..p22) for the requested control state and a JSON sidecar
// with fits for all three control states.
RabiResult cmd_rabi(const ExperimentConfig& c, const RabiRequest& r, std::ostream* log = nullptr);

struct BellResult {
  StateVector state;
  double fidelity = 0.0;
  double concurrence = 0.0;
  MetricReport fidelity_shots;
  MetricReport concurrence_shots;
  double duration_ns = 0.0;
  double norm_drift = 0.0;
  VirtualPhases final_phases;
  nlohmann::ordered_json result;
};

BellResult cmd_bell(const ExperimentConfig& c, const std::filesystem::path& store_path,
                    const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct GateFidelity {
  std::string name;
  double stored = 0.0;
  double recomputed = 0.0;
};

// Re-propagates a stored gate's schedule on the store's device.
GateFidelity cmd_gatefid(const std::filesystem::path& store_path, const std::string& gate);

}  // namespace qutritcr
