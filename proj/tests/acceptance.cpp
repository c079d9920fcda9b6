// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qutritcr/calibration.hpp"
#include "qutritcr/errors.hpp"
#include "qutritcr/experiments.hpp"
#include "qutritcr/metrics.hpp"
#include "support.hpp"

using namespace qutritcr;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> grid(double t_max, int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) t[static_cast<std::size_t>(k)] = t_max * k / (n - 1);
  return t;
}

template <class F>
void guarded(int n, F body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, false, std::string("threw ") + e.what());
  }
}

}  // namespace

int main() {
  ::setenv("SOURCE_DATE_EPOCH", "0", 1);
  ::unsetenv("QUTRITCR_SEED");
  const fs::path work = fs::current_path() / "acceptance_out";
  fs::remove_all(work);
  fs::create_directories(work);
  const ExperimentConfig config = load_config(fs::path(QUTRITCR_SOURCE_DIR) / "configs" / "device.json");
  const fs::path store = work / "cal.json";

  // A corrupted store must be rebuilt from scratch.
  std::ofstream(store) << "{ this is not a calibration store";

  std::optional<BellResult> bell;
  double bell_seconds = 0.0;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const CalibrationStore fresh = cmd_calibrate(config, store, &std::cerr);
    bell = cmd_bell(config, store, work / "bell_a", &std::cerr);
    bell_seconds = seconds_since(t0);
    std::printf("info: calibration store rebuilt=%s, calibrate+bell %.0f s\n", fresh.reused ? "no" : "yes",
                bell_seconds);
  } catch (const std::exception& e) {
    std::printf("info: Bell pipeline threw %s\n", e.what());
  }

  if (bell) {
    const bool in_band = bell->fidelity >= 0.95 && bell->fidelity >= 0.949 && bell->fidelity <= 0.989;
    report(1, in_band && bell_seconds <= 600.0 && bell->norm_drift <= kNormDriftValid,
           fmt("fidelity %.5f (band [0.949, 0.989]), shots %.4f +- %.4f, runtime %.0f s", bell->fidelity,
               bell->fidelity_shots.value, bell->fidelity_shots.stderr_value.value_or(0.0), bell_seconds) +
               fmt(", norm drift %.2g", bell->norm_drift));
    report(2, bell->concurrence >= 0.95,
           fmt("concurrence %.5f, shots %.4f +- %.4f", bell->concurrence, bell->concurrence_shots.value,
               bell->concurrence_shots.stderr_value.value_or(0.0)));
    const auto amps = bell->result.at("default_amplitudes_ghz");
    const auto cfg = config_to_json(config);
    const bool recorded = cfg.at("calibration").contains("cr01_amp_ghz") && cfg.at("calibration").contains("csx12_amp_ghz");
    report(3, bell->duration_ns >= 563.0 && bell->duration_ns <= 845.0 && recorded,
           fmt("duration %.2f ns (range [563, 845]); CR01 amp %.3f GHz, CSX12 amp %.3f GHz recorded in config",
               bell->duration_ns, amps.at("cr01").get<double>(), amps.at("csx12").get<double>()));
  } else {
    report(1, false, "Bell pipeline did not complete");
    report(2, false, "Bell pipeline did not complete");
    report(3, false, "Bell pipeline did not complete");
  }

  std::string rabi_csv, rabi_json;
  guarded(4, [&] {
    RabiRequest r;
    r.store = store;
    r.subspace = Subspace::S01;
    r.control = 1;
    r.amp_ghz = config.calibration.cr01_amp_ghz;
    r.t_max_ns = 1200.0;
    r.points = 121;
    r.out_dir = work / "rabi01";
    const RabiResult a = cmd_rabi(config, r, &std::cerr);
    rabi_csv = slurp(a.csv_path);
    rabi_json = slurp(a.sidecar_path);
    const auto& s01 = a.sidecar.at("summary");
    const bool idle =
        a.sidecar.at("fits").at("1").at("population").contains("error") ||
        (!s01.at("freq_ratio_1_0").is_null() && s01.at("freq_ratio_1_0").get<double>() <= 0.35);
    const double r20 = s01.at("freq_ratio_2_0").is_null() ? -1.0 : s01.at("freq_ratio_2_0").get<double>();
    const bool close = r20 > 0.0 && std::abs(r20 - 1.0) <= 0.15;

    r.subspace = Subspace::S12;
    r.control = 2;
    r.amp_ghz = config.calibration.csx12_amp_ghz;
    r.out_dir = work / "rabi12";
    const RabiResult b = cmd_rabi(config, r, &std::cerr);
    const auto& ph = b.sidecar.at("summary").at("phase_difference_2_0_rad");
    const double dphi = ph.is_null() ? -1.0 : ph.get<double>();
    const bool opposite = !ph.is_null() && std::abs(dphi - kPi) <= 0.3;
    const double r10 = s01.at("freq_ratio_1_0").is_null() ? -1.0 : s01.at("freq_ratio_1_0").get<double>();
    report(4, idle && close && opposite,
           fmt("01 drive: f1/f0 = %.4f (<= 0.35), f2/f0 = %.4f (|.-1| <= 0.15); 12 drive: phase difference %.4f rad "
               "(pi +- 0.3)",
               r10, r20, dphi));
  });

  guarded(5, [&] {
    EvolveOptions o;
    o.rwa = true;
    const auto t = grid(40000.0, 401);
    std::array<double, 3> rate{};
    for (int c = 0; c < 3; ++c) {
      const RabiTrace tr = run_rabi_scan(config.device, Subspace::S01, 0.03, t, c, nullptr, o);
      rate[static_cast<std::size_t>(c)] = estimate_rabi_rate(tr).rate;
    }
    const auto coeff = cr_coefficients(config.device, CoefficientModel::Detuning);
    const double p1 = coeff.nu1 / coeff.nu0, p2 = coeff.nu2 / coeff.nu0;
    const double m1 = rate[1] / rate[0], m2 = rate[2] / rate[0];
    const bool ok = std::abs(m1 / p1 - 1.0) <= 0.25 && std::abs(m2 / p2 - 1.0) <= 0.25;
    report(5, ok, fmt("amp 0.03 GHz: nu1/nu0 = %.4f (predicted %.4f), nu2/nu0 = %.4f (predicted %.4f)", m1, p1, m2, p2));
  });

  guarded(6, [&] {
    const BellCircuit ref = bell_reference_circuit();
    const std::vector<IdealGate> pre_gates(ref.gates.begin(), ref.gates.end() - 1);
    const ComplexVector pre = circuit_unitary(pre_gates) * StateVector::ket(0, 0).amplitudes();
    const double s = 1.0 / std::sqrt(3.0);
    double amp_err = std::abs(pre(0) + s) + std::abs(pre(4) - cplx(0, -s)) + std::abs(pre(8) + s);
    for (int k : {1, 2, 3, 5, 6, 7}) amp_err += std::abs(pre(k));
    const StateVector out(circuit_unitary(ref.gates) * StateVector::ket(0, 0).amplitudes());
    const double f = state_fidelity(out, ref.target);
    report(6, f >= 1.0 - 1e-9 && amp_err < 1e-12,
           fmt("ideal fidelity 1 - %.2g; pre-correction amplitude error %.2g", 1.0 - f, amp_err));
  });

  guarded(7, [&] {
    const double omega = kTwoPi * 0.01;
    const auto rabi = DenseHamiltonian::constant(0.5 * omega * (outer(3, 0, 1) + outer(3, 1, 0)));
    const StateVector s = evolve_state(rabi, StateVector::basis(3, 0), 0.0, 25.0, {});
    const double rabi_err = std::abs(std::norm(s[1]) - 0.5);
    EvolveStats st;
    evolve_state(DenseHamiltonian::constant(0.5 * kTwoPi * 0.05 * (outer(3, 0, 1) + outer(3, 1, 0))),
                 StateVector::basis(3, 0), 0.0, 1000.0, {}, &st);
    const ComplexMatrix h = test::random_hermitian(9, 5);
    const double expm_err =
        max_abs_diff(evolve_unitary(DenseHamiltonian::constant(h), 0.0, 30.0, {}), expm_unitary(h, 30.0));
    report(7, rabi_err <= 1e-6 && st.norm_drift <= 1e-8 && expm_err <= 1e-7,
           fmt("Rabi error %.2g (<= 1e-6), drift over 1 us %.2g (<= 1e-8), expm error %.2g (<= 1e-7)", rabi_err,
               st.norm_drift, expm_err));
  });

  guarded(8, [&] {
    // unitarity and Hermiticity
    bool structural = true;
    const CalibrationStore cal = store_from_json(nlohmann::json::parse(slurp(store)));
    for (const auto& g : cal.gates) structural = structural && is_unitary(g.achieved, 1e-7);
    const Schedule cr = cal.get("CR01(pi)").schedule;
    const RotatingFrameHamiltonian hrot(config.device, FrameSpec::bare(config.device), cr);
    for (double t = 0.0; t <= cr.duration(); t += 1.0) structural = structural && is_hermitian(hrot.matrix(t));

    double lu = 0.0;
    for (int k = 0; k < 20; ++k) {
      const StateVector psi = test::random_state(9, 40 + k);
      const ComplexMatrix local = kron(test::random_unitary(3, 60 + k), test::random_unitary(3, 80 + k));
      lu = std::max(lu, std::abs(concurrence(StateVector(local * psi.amplitudes())) - concurrence(psi)));
    }

    const auto t = grid(1000.0, 101);
    std::vector<double> y;
    for (double x : t) y.push_back(0.5 - 0.5 * std::cos(kTwoPi * 0.003 * x));
    const double fit_err = std::abs(fit_rabi(t, y).freq / 0.003 - 1.0);

    bool identical = false;
    if (bell) {
      const BellResult again = cmd_bell(config, store, work / "bell_b", nullptr);
      RabiRequest r;
      r.store = store;
      r.subspace = Subspace::S01;
      r.control = 1;
      r.amp_ghz = config.calibration.cr01_amp_ghz;
      r.t_max_ns = 1200.0;
      r.points = 121;
      r.out_dir = work / "rabi01_again";
      const RabiResult rr = cmd_rabi(config, r, nullptr);
      identical = slurp(work / "bell_a" / "bell.json") == slurp(work / "bell_b" / "bell.json") &&
                  slurp(work / "bell_a" / "metrics.jsonl") == slurp(work / "bell_b" / "metrics.jsonl") &&
                  !rabi_csv.empty() && rabi_csv == slurp(rr.csv_path) && rabi_json == slurp(rr.sidecar_path);
    }
    report(8, structural && lu <= 1e-9 && fit_err <= 0.005 && identical,
           std::string("unitarity/Hermiticity ") + (structural ? "ok" : "violated") +
               fmt(", concurrence LU invariance %.2g (<= 1e-9), 3 MHz fit error %.2g%% (<= 0.5%%)", lu, 100 * fit_err) +
               ", reruns " + (identical ? "byte-identical" : "differ"));
  });

  std::printf("acceptance: %d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
