#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qutritcr/experiments.hpp"

using namespace qutritcr;

namespace {

// Exit codes: 0 ok, 1 library error, 2 bad usage, 3 finished outside tolerance.
constexpr int kErrorExit = 1;
constexpr int kToleranceExit = 3;

int run_rabi(const std::string& config, const std::string& subspace, int control, double amp, double t_max,
             int points, const std::string& out, const std::string& store) {
  ExperimentConfig c = load_config(config);
  RabiRequest r;
  r.subspace = subspace_from_string(subspace);
  r.control = control;
  r.amp_ghz = amp;
  r.t_max_ns = t_max;
  r.points = points;
  r.out_dir = out;
  if (!store.empty()) r.store = store;
  const RabiResult res = cmd_rabi(c, r, &std::cerr);
  std::cout << res.sidecar["summary"].dump(2) << '\n';
  return 0;
}

int run_calibrate(const std::string& config, const std::string& store) {
  cmd_calibrate(load_config(config), store, &std::cout);
  return 0;
}

int run_bell(const std::string& config, const std::string& store, std::optional<long long> shots,
             std::optional<std::uint64_t> seed, const std::string& out) {
  ExperimentConfig c = load_config(config);
  if (shots) c.shots = *shots;
  if (seed) c.seed = *seed;
  c.validate();
  const BellResult b = cmd_bell(c, store, out.empty() ? c.output : out, &std::cerr);
  std::printf("fidelity     %.6f  (shots: %.4f +- %.4f)\n", b.fidelity, b.fidelity_shots.value,
              b.fidelity_shots.stderr_value.value_or(0.0));
  std::printf("concurrence  %.6f  (shots: %.4f +- %.4f)\n", b.concurrence, b.concurrence_shots.value,
              b.concurrence_shots.stderr_value.value_or(0.0));
  std::printf("duration     %.2f ns\n", b.duration_ns);
  std::printf("norm drift   %.3g\n", b.norm_drift);
  if (b.norm_drift > kNormDriftValid) {
    std::fprintf(stderr, "norm drift above %.0e; result is not valid\n", kNormDriftValid);
    return kToleranceExit;
  }
  return 0;
}

int run_gatefid(const std::string& store, const std::string& gate) {
  const GateFidelity g = cmd_gatefid(store, gate);
  std::printf("%s  stored %.8f  recomputed %.8f\n", g.name.c_str(), g.stored, g.recomputed);
  return std::abs(g.stored - g.recomputed) <= 1e-6 ? 0 : kToleranceExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse-level simulation and calibration of cross-resonance gates on two transmon qutrits"};
  app.require_subcommand(1);

  std::string config = "configs/device.json";
  std::string store = "cal.json";
  std::string out;

  auto* rabi = app.add_subcommand("rabi", "Conditional Rabi scan of a CR drive");
  std::string subspace = "01";
  int control = 0;
  double amp = 0.45;
  double t_max = 1200.0;
  int points = 121;
  std::string rabi_store;
  rabi->add_option("--subspace", subspace, "Driven target subspace")->check(CLI::IsMember({"01", "12"}));
  rabi->add_option("--control", control, "Control state written to the CSV")->check(CLI::Range(0, 2));
  rabi->add_option("--amp-ghz", amp, "CR drive amplitude (GHz)")->check(CLI::PositiveNumber);
  rabi->add_option("--t-max-ns", t_max, "Longest CR duration (ns)")->check(CLI::PositiveNumber);
  rabi->add_option("--points", points, "Number of durations")->check(CLI::Range(2, 100000));
  rabi->add_option("--config", config)->check(CLI::ExistingFile);
  rabi->add_option("--out", out, "Output directory")->required();
  rabi->add_option("--store", rabi_store, "Reuse single-qutrit gates from this store");

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate all gates into a store");
  calibrate->add_option("--config", config)->check(CLI::ExistingFile);
  calibrate->add_option("--store", store);

  auto* bell = app.add_subcommand("bell", "Prepare the qutrit Bell state from calibrated pulses");
  std::optional<long long> shots;
  std::optional<std::uint64_t> seed;
  bell->add_option("--config", config)->check(CLI::ExistingFile);
  bell->add_option("--store", store);
  bell->add_option("--shots", shots)->check(CLI::PositiveNumber);
  bell->add_option("--seed", seed);
  bell->add_option("--out", out);

  auto* gatefid = app.add_subcommand("gatefid", "Recompute the fidelity of a stored gate");
  std::string gate;
  gatefid->add_option("--gate", gate)->required();
  gatefid->add_option("--store", store);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rabi) return run_rabi(config, subspace, control, amp, t_max, points, out, rabi_store);
    if (*calibrate) return run_calibrate(config, store);
    if (*bell) return run_bell(config, store, shots, seed, out);
    if (*gatefid) return run_gatefid(store, gate);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kErrorExit;
  }
  return 0;
}
