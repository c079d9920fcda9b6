#include "qutritcr/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "qutritcr/errors.hpp"
#include "qutritcr/hamiltonian.hpp"
#include "qutritcr/metrics.hpp"

namespace qutritcr {
namespace {

constexpr int kBrentBits = 30;

double wrap_angle(double x) { return std::remainder(x, kTwoPi); }

double carrier_for(const DeviceParams& p, int transmon, Subspace s) {
  const auto f = transition_frequencies(p, true);
  if (transmon == 1) return s == Subspace::S01 ? f.w01_1 : f.w12_1;
  return s == Subspace::S01 ? f.w01_2 : f.w12_2;
}

// Integral of the real envelope over the pulse, in GHz * ns.
double pulse_area(const PulseShape& shape) {
  const double d = shape_duration(shape);
  if (d <= 0.0) return 0.0;
  auto f = [&](double t) { return sample_envelope(shape, t).real(); };
  if (const auto* g = std::get_if<GaussianSquare>(&shape)) {
    using boost::math::quadrature::gauss_kronrod;
    const double edge = gauss_kronrod<double, 61>::integrate(f, 0.0, g->risefall, 10, 1e-12);
    return 2.0 * edge + g->amp * g->width;
  }
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, d, 10, 1e-12);
}

std::vector<int> spectator_zero_inputs(int transmon) {
  return transmon == 1 ? std::vector<int>{0, 3, 6} : std::vector<int>{0, 1, 2};
}

ComplexMatrix block_of(const ComplexMatrix& u, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  ComplexMatrix b(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) b(r, c) = u(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  return b;
}

// Block fidelity after the best diagonal phase correction on the left; for a
// single qutrit the optimum aligns every diagonal entry of B T^dag.
double best_block_fidelity(const ComplexMatrix& b, const ComplexMatrix& t) {
  const ComplexMatrix m = b * t.adjoint();
  double s = 0.0;
  for (Eigen::Index k = 0; k < m.rows(); ++k) s += std::abs(m(k, k));
  const double d = static_cast<double>(b.rows());
  return std::clamp(((b * b.adjoint()).trace().real() + s * s) / (d * (d + 1.0)), 0.0, 1.0);
}

Schedule merged(const Schedule& a, const Schedule& b) {
  Schedule out = a;
  for (const auto& instr : b.instructions()) out.add(instr);
  return out;
}

template <class F>
std::pair<double, double> brent_min(F f, double lo, double hi, int max_iter = 40) {
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  return boost::math::tools::brent_find_minima(f, lo, hi, kBrentBits, iters);
}

}  // namespace

void CalibrationOptions::validate() const {
  evolve.validate();
  if (!(single_duration_ns > 0.0)) throw InvalidParams("single_duration_ns must be positive");
  if (beta_points < 2) throw InvalidParams("beta_points must be at least 2");
  if (!(cr01_amp_ghz > 0.0 && cr01_amp_ghz <= kDefaultMaxAmp)) throw InvalidParams("cr01_amp_ghz out of range");
  if (!(csx12_amp_ghz > 0.0 && csx12_amp_ghz <= kDefaultMaxAmp)) throw InvalidParams("csx12_amp_ghz out of range");
  if (!(risefall_ns > 0.0)) throw InvalidParams("risefall_ns must be positive");
  if (!(cr_amp_window >= 0.0 && cr_amp_window < 1.0)) throw InvalidParams("cr_amp_window must be in [0, 1)");
  if (max_evaluations < 1 || refine_evaluations < 0 || refine_evaluations > max_evaluations) {
    throw InvalidParams("evaluation budget is inconsistent");
  }
}

nlohmann::json calibration_options_to_json(const CalibrationOptions& o) {
  return {{"single_duration_ns", o.single_duration_ns},
          {"beta_points", o.beta_points},
          {"cr01_amp_ghz", o.cr01_amp_ghz},
          {"csx12_amp_ghz", o.csx12_amp_ghz},
          {"risefall_ns", o.risefall_ns},
          {"cr_amp_window", o.cr_amp_window},
          {"rwa_presearch", o.rwa_presearch},
          {"max_evaluations", o.max_evaluations},
          {"refine_evaluations", o.refine_evaluations},
          {"rel_tol", o.evolve.rel_tol},
          {"abs_tol", o.evolve.abs_tol},
          {"max_step_ns", o.evolve.max_step},
          {"rwa", o.evolve.rwa}};
}

CalibrationOptions calibration_options_from_json(const nlohmann::json& j) {
  CalibrationOptions o;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "single_duration_ns") o.single_duration_ns = value.get<double>();
      else if (key == "beta_points") o.beta_points = value.get<int>();
      else if (key == "cr01_amp_ghz") o.cr01_amp_ghz = value.get<double>();
      else if (key == "csx12_amp_ghz") o.csx12_amp_ghz = value.get<double>();
      else if (key == "risefall_ns") o.risefall_ns = value.get<double>();
      else if (key == "cr_amp_window") o.cr_amp_window = value.get<double>();
      else if (key == "rwa_presearch") o.rwa_presearch = value.get<bool>();
      else if (key == "max_evaluations") o.max_evaluations = value.get<int>();
      else if (key == "refine_evaluations") o.refine_evaluations = value.get<int>();
      else if (key == "rel_tol") o.evolve.rel_tol = value.get<double>();
      else if (key == "abs_tol") o.evolve.abs_tol = value.get<double>();
      else if (key == "max_step_ns") o.evolve.max_step = value.get<double>();
      else if (key == "rwa") o.evolve.rwa = value.get<bool>();
      else throw ConfigError("unknown calibration key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad calibration options: ") + e.what());
  }
  o.validate();
  return o;
}

double block_fidelity(const ComplexMatrix& m, const ComplexMatrix& t) {
  if (m.rows() != t.rows() || m.cols() != t.cols()) throw DimMismatch("block_fidelity needs equal shapes");
  const double d = static_cast<double>(m.rows());
  const double tr2 = std::norm((t.adjoint() * m).trace());
  return std::clamp(((m * m.adjoint()).trace().real() + tr2) / (d * (d + 1.0)), 0.0, 1.0);
}

ComplexMatrix virtual_phase_matrix(const VirtualPhases& v) {
  const double a[3] = {0.0, v.control[0], v.control[1]};
  const double b[3] = {0.0, v.target[0], v.target[1]};
  ComplexMatrix z = ComplexMatrix::Zero(kDim, kDim);
  for (int i = 0; i < kLevels; ++i)
    for (int j = 0; j < kLevels; ++j) z(kLevels * i + j, kLevels * i + j) = std::polar(1.0, a[i] + b[j]);
  return z;
}

Schedule with_virtual_phases(const Schedule& s, const VirtualPhases& v) {
  Schedule out = s;
  const double t = s.duration();
  for (auto& instr : virtual_zdiag(1, v.control[0], v.control[1], t)) out.add(instr);
  for (auto& instr : virtual_zdiag(2, v.target[0], v.target[1], t)) out.add(instr);
  return out;
}

VirtualPhaseFit calibrate_virtual_phases(const ComplexMatrix& achieved, const ComplexMatrix& target) {
  if (achieved.rows() != kDim || achieved.cols() != kDim || target.rows() != kDim || target.cols() != kDim) {
    throw DimMismatch("virtual phases need 9x9 matrices");
  }
  const ComplexMatrix mm = achieved * target.adjoint();
  cplx m[3][3];
  for (int i = 0; i < kLevels; ++i)
    for (int j = 0; j < kLevels; ++j) m[i][j] = mm(kLevels * i + j, kLevels * i + j);
  const double norm2 = (achieved * achieved.adjoint()).trace().real();
  auto fidelity_of = [&](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    cplx s = 0.0;
    for (int i = 0; i < kLevels; ++i)
      for (int j = 0; j < kLevels; ++j) s += std::polar(1.0, a[i] + b[j]) * m[i][j];
    return std::clamp((norm2 + std::norm(s)) / (kDim * (kDim + 1.0)), 0.0, 1.0);
  };

  // Each angle enters as e^{i x} X + R; the optimum aligns the two terms.
  auto ascend = [&](std::array<double, 3> a, std::array<double, 3> b) {
    double last = fidelity_of(a, b);
    for (int sweep = 0; sweep < 500; ++sweep) {
      for (int i = 1; i < kLevels; ++i) {
        cplx x = 0.0;
        cplx r = 0.0;
        for (int k = 0; k < kLevels; ++k)
          for (int j = 0; j < kLevels; ++j) {
            if (k == i) x += std::polar(1.0, b[j]) * m[k][j];
            else r += std::polar(1.0, a[k] + b[j]) * m[k][j];
          }
        if (std::abs(x) > 0.0 && std::abs(r) > 0.0) a[i] = wrap_angle(std::arg(r) - std::arg(x));
      }
      for (int j = 1; j < kLevels; ++j) {
        cplx x = 0.0;
        cplx r = 0.0;
        for (int i = 0; i < kLevels; ++i)
          for (int k = 0; k < kLevels; ++k) {
            if (k == j) x += std::polar(1.0, a[i]) * m[i][k];
            else r += std::polar(1.0, a[i] + b[k]) * m[i][k];
          }
        if (std::abs(x) > 0.0 && std::abs(r) > 0.0) b[j] = wrap_angle(std::arg(r) - std::arg(x));
      }
      const double f = fidelity_of(a, b);
      if (f - last < 1e-15) {
        last = std::max(last, f);
        break;
      }
      last = f;
    }
    return std::make_tuple(last, a, b);
  };

  VirtualPhaseFit out;
  out.fidelity_before = fidelity_of({0, 0, 0}, {0, 0, 0});
  auto [best, ba, bb] = ascend({0, 0, 0}, {0, 0, 0});
  // A few fixed extra starts guard against the rare local optimum.
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int start = 0; start < 8; ++start) {
    const std::array<double, 3> a0{0.0, angle(rng), angle(rng)};
    const std::array<double, 3> b0{0.0, angle(rng), angle(rng)};
    auto [f, a, b] = ascend(a0, b0);
    if (f > best + 1e-14) {
      best = f;
      ba = a;
      bb = b;
    }
  }
  if (best < out.fidelity_before) {
    best = out.fidelity_before;
    ba = {0, 0, 0};
    bb = {0, 0, 0};
  }
  out.phases.control = {ba[1], ba[2]};
  out.phases.target = {bb[1], bb[2]};
  out.fidelity = best;
  return out;
}

CalibratedGate calibrate_single_qutrit(const DeviceParams& p, const SingleQutritTarget& target,
                                       const CalibrationOptions& opts) {
  opts.validate();
  if (target.transmon != 1 && target.transmon != 2) throw InvalidParams("transmon must be 1 or 2");
  if (!std::isfinite(target.theta)) throw InvalidParams("theta must be finite");
  const IdealGate ideal3{target.name, rx(target.subspace, target.theta)};
  const ComplexMatrix ideal9 = on_transmon(ideal3, target.transmon).matrix;

  CalibratedGate out;
  out.name = target.name;
  out.target = ideal9;
  if (target.theta == 0.0) {
    out.achieved = schedule_unitary(p, out.schedule, opts.evolve);
    out.fidelity_to_target = average_gate_fidelity(out.achieved, ideal9);
    out.params = {{"kind", "none"}};
    return out;
  }

  const double duration = opts.single_duration_ns;
  const double sigma = duration / 4.0;
  const double carrier = carrier_for(p, target.transmon, target.subspace);
  const double phase = target.theta < 0.0 ? kPi : 0.0;
  const double scale = target.subspace == Subspace::S12 ? std::sqrt(2.0) : 1.0;
  const double unit_area = pulse_area(DragGaussian{1.0, sigma, duration, 0.0});
  const double amp0 = std::abs(target.theta) / (kTwoPi * unit_area * scale);

  auto make = [&](double amp, double beta) {
    Play play;
    play.channel = target.transmon;
    play.shape = DragGaussian{amp, sigma, duration, beta};
    play.carrier_ghz = carrier;
    play.carrier_phase = phase;
    play.frame = {target.transmon, target.subspace};
    return Schedule({play});
  };

  const auto inputs = spectator_zero_inputs(target.transmon);
  const int lo = target.subspace == Subspace::S01 ? 0 : 1;
  struct Eval {
    double fidelity;
    double leakage;
  };
  auto evaluate = [&](double amp, double beta) {
    const ComplexMatrix u = schedule_unitary(p, make(amp, beta), opts.evolve, inputs);
    const ComplexMatrix b = block_of(u, inputs);
    double leak = 0.0;
    for (int c = lo; c <= lo + 1; ++c) {
      for (int r = 0; r < kLevels; ++r) {
        if (r != lo && r != lo + 1) leak += std::norm(b(r, c));
      }
    }
    return Eval{best_block_fidelity(b, ideal3.matrix), 0.5 * leak};
  };

  auto refine_amp = [&](double center, double half_width, double beta) {
    auto [a, f] = brent_min([&](double amp) { return -evaluate(amp, beta).fidelity; },
                            center * (1.0 - half_width), std::min(kDefaultMaxAmp, center * (1.0 + half_width)), 30);
    (void)f;
    return a;
  };

  double amp = refine_amp(amp0, 0.2, 0.0);

  // Leakage scan over beta, then a local refinement between grid neighbours.
  const int n = opts.beta_points;
  const double step = 4.0 * sigma / (n - 1);
  double best_beta = 0.0;
  double best_leak = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const double beta = -2.0 * sigma + k * step;
    const double leak = evaluate(amp, beta).leakage;
    if (leak < best_leak) {
      best_leak = leak;
      best_beta = beta;
    }
  }
  // Leakage is flat near its minimum, so the final beta and amplitude are
  // polished on gate fidelity within one grid step of the leakage optimum.
  const double beta_lo = best_beta - step;
  const double beta_hi = best_beta + step;
  for (int round = 0; round < 2; ++round) {
    best_beta = brent_min([&](double beta) { return -evaluate(amp, beta).fidelity; }, beta_lo, beta_hi, 30).first;
    amp = refine_amp(amp, 0.05, best_beta);
  }

  const Schedule pulse = make(amp, best_beta);
  const ComplexMatrix u = schedule_unitary(p, pulse, opts.evolve);
  const VirtualPhaseFit vp = calibrate_virtual_phases(u, ideal9);
  out.phases = vp.phases;
  out.schedule = with_virtual_phases(pulse, vp.phases);
  out.achieved = virtual_phase_matrix(vp.phases) * u;
  out.fidelity_to_target = vp.fidelity;
  out.params = {{"kind", "drag"},
                {"transmon", target.transmon},
                {"subspace", to_string(target.subspace)},
                {"theta_rad", target.theta},
                {"amp_ghz", amp},
                {"beta_ns", best_beta},
                {"sigma_ns", sigma},
                {"duration_ns", duration},
                {"carrier_ghz", carrier},
                {"carrier_phase_rad", phase},
                {"leakage", evaluate(amp, best_beta).leakage}};
  if (out.fidelity_to_target < opts.min_single_fidelity) {
    throw CalibrationFailed(target.name + " reached fidelity " + std::to_string(out.fidelity_to_target));
  }
  return out;
}

CalibratedGate calibrate_h3(const DeviceParams& p, const CalibratedGate& r01, const CalibratedGate& r12,
                            const EvolveOptions& opts) {
  const Schedule pulses = concat({r01.schedule, r12.schedule});
  const ComplexMatrix u = schedule_unitary(p, pulses, opts);
  const ComplexMatrix h3 = ideal_single_qutrit("H3").matrix;

  // Align the control phases of the |00> column with H3|0>.
  const cplx ref = std::conj(h3(0, 0)) * u(0, 0);
  VirtualPhases v;
  for (int i = 1; i < kLevels; ++i) {
    const cplx here = std::conj(h3(i, 0)) * u(kLevels * i, 0);
    v.control[static_cast<std::size_t>(i - 1)] = wrap_angle(std::arg(ref) - std::arg(here));
  }
  CalibratedGate out;
  out.name = "H3(1)";
  out.phases = v;
  out.schedule = with_virtual_phases(pulses, v);
  out.achieved = virtual_phase_matrix(v) * u;
  out.target = on_transmon(ideal_single_qutrit("H3"), 1).matrix;
  ComplexVector want = ComplexVector::Zero(kDim);
  for (int i = 0; i < kLevels; ++i) want(kLevels * i) = h3(i, 0);
  out.fidelity_to_target = std::clamp(std::norm(want.dot(out.achieved.col(0))), 0.0, 1.0);
  out.params = {{"kind", "composite"}, {"parts", {r01.name, r12.name}}, {"scored_on", "first_column"}};
  return out;
}

Schedule prepare_control_state(const DeviceParams& p, int c, const CalibratedGate& x01, const CalibratedGate& x12,
                               const EvolveOptions& opts) {
  if (c < 0 || c > 2) throw InvalidParams("control state must be 0, 1 or 2");
  if (c == 0) return {};
  const Schedule s = c == 1 ? x01.schedule : concat({x01.schedule, x12.schedule});
  const auto pops = populations(schedule_state(p, s, StateVector::ket(0, 0), opts));
  double pc = 0.0;
  for (int j = 0; j < kLevels; ++j) pc += pops[static_cast<std::size_t>(kLevels * c + j)];
  const double need = c == 1 ? 0.999 : 0.998;
  if (pc < need) {
    throw CalibrationFailed("control preparation of |" + std::to_string(c) + "> reached population " +
                            std::to_string(pc));
  }
  return s;
}

std::vector<double> RabiTrace::target_population(int level) const {
  std::vector<double> out;
  out.reserve(populations.size());
  for (const auto& row : populations) {
    double s = 0.0;
    for (int i = 0; i < kLevels; ++i) s += row[static_cast<std::size_t>(kLevels * i + level)];
    out.push_back(s);
  }
  return out;
}

RabiTrace run_rabi_scan(const DeviceParams& p, Subspace s, double amp, const std::vector<double>& durations,
                        int control_state, const ScanPreparation* prep, const EvolveOptions& opts, double risefall) {
  if (control_state < 0 || control_state > 2) throw InvalidParams("control state must be 0, 1 or 2");
  if (durations.empty() || durations.front() < 0.0) throw InvalidParams("durations must be non-negative");
  for (std::size_t k = 1; k < durations.size(); ++k) {
    if (!(durations[k] > durations[k - 1])) throw InvalidParams("durations must be strictly increasing");
  }

  Schedule sched;
  ComplexVector psi0 = ComplexVector::Zero(kDim);
  if (prep != nullptr) {
    sched = prep->control[static_cast<std::size_t>(control_state)];
    if (s == Subspace::S12) sched = merged(sched, prep->target_minus);
    psi0(0) = 1.0;
  } else {
    const int c = control_state;
    if (s == Subspace::S01) {
      psi0(kLevels * c) = 1.0;
    } else {
      psi0(kLevels * c) = 1.0 / std::sqrt(2.0);
      psi0(kLevels * c + 1) = -1.0 / std::sqrt(2.0);
    }
  }
  const double t0 = sched.duration();
  // One pulse long enough that it never ramps down inside the grid.
  const Schedule cr = build_cr_schedule(p, s, amp, durations.back(), risefall, 0.0).shifted(t0);
  for (const auto& instr : cr.instructions()) sched.add(instr);

  const FrameSpec frame = opts.frame_for(p);
  const RotatingFrameHamiltonian h(p, frame, sched, {opts.rwa, opts.rwa_cutoff_ghz});
  std::vector<double> times;
  times.reserve(durations.size());
  for (double d : durations) times.push_back(t0 + d);
  const auto states = evolve_trajectory(h, StateVector(psi0), 0.0, times, opts);
  const ComplexMatrix corr = diagonal(sched.frame_correction());

  RabiTrace trace;
  trace.control_state = control_state;
  trace.subspace = s;
  trace.amp_ghz = amp;
  trace.durations = durations;
  const int a = s == Subspace::S01 ? 0 : 1;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const ComplexVector v = corr * frame_change(p, frame, times[k]) * states[k].amplitudes();
    std::array<double, kDim> pops{};
    double coh = 0.0;
    for (int i = 0; i < kDim; ++i) pops[static_cast<std::size_t>(i)] = std::norm(v(i));
    for (int i = 0; i < kLevels; ++i) coh += 2.0 * (std::conj(v(kLevels * i + a)) * v(kLevels * i + a + 1)).imag();
    trace.populations.push_back(pops);
    trace.coherence.push_back(coh);
  }
  return trace;
}

nlohmann::ordered_json fit_to_json(const FitResult& f) {
  nlohmann::ordered_json j;
  j["freq_ghz"] = f.freq;
  j["phase_rad"] = f.phase;
  j["amplitude"] = f.amplitude;
  j["offset"] = f.offset;
  j["rmse"] = f.rmse;
  return j;
}

FitResult fit_rabi(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  if (y.size() != n) throw DimMismatch("fit_rabi needs equal-length t and y");
  if (n < 16) throw InvalidParams("fit_rabi needs at least 16 samples");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(t[k] > t[k - 1])) throw InvalidParams("fit_rabi needs strictly increasing times");
  }
  const double span = t.back() - t.front();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> yc(n);
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    yc[k] = y[k] - mean;
    var += yc[k] * yc[k];
  }

  constexpr int kPad = 4;
  const double df = 1.0 / (kPad * span);
  const double nyquist = static_cast<double>(n - 1) / (2.0 * span);
  const int bins = std::max(1, static_cast<int>(std::floor(nyquist / df)));
  std::vector<double> power(static_cast<std::size_t>(bins));
  int peak = 0;
  for (int b = 0; b < bins; ++b) {
    const double f = (b + 1) * df;
    cplx s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += yc[k] * std::polar(1.0, -kTwoPi * f * (t[k] - t.front()));
    power[static_cast<std::size_t>(b)] = std::norm(s);
    if (power[static_cast<std::size_t>(b)] > power[static_cast<std::size_t>(peak)] * (1.0 + 1e-12)) peak = b;
  }
  std::vector<double> sorted = power;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double peak_power = power[static_cast<std::size_t>(peak)];
  if (var <= 1e-20 * static_cast<double>(n) || !(peak_power >= 3.0 * median) || peak_power <= 0.0) {
    throw NoOscillation("spectral peak is not above 3x the median");
  }

  // Variable projection: offset, cos and sin amplitudes are linear at fixed f.
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd yy = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  auto solve = [&](double f, Eigen::Vector3d* coef) {
    for (std::size_t k = 0; k < n; ++k) {
      const double x = kTwoPi * f * t[k];
      a(static_cast<Eigen::Index>(k), 0) = 1.0;
      a(static_cast<Eigen::Index>(k), 1) = std::cos(x);
      a(static_cast<Eigen::Index>(k), 2) = std::sin(x);
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(yy);
    if (coef != nullptr) *coef = c;
    return (a * c - yy).squaredNorm();
  };
  const double f_peak = (peak + 1) * df;
  const double lo = std::max(0.05 * df, f_peak - 2.0 * df);
  const double hi = f_peak + 2.0 * df;
  const double f_best = brent_min([&](double f) { return solve(f, nullptr); }, lo, hi, 100).first;

  Eigen::Vector3d c;
  const double rss = solve(f_best, &c);
  FitResult r;
  r.freq = f_best;
  r.offset = c(0);
  r.amplitude = std::hypot(c(1), c(2));
  r.phase = std::atan2(-c(2), c(1));
  r.rmse = std::sqrt(rss / static_cast<double>(n));
  return r;
}

RateEstimate estimate_rabi_rate(const RabiTrace& trace) {
  const int upper = trace.subspace == Subspace::S01 ? 1 : 2;
  const auto pop = trace.target_population(upper);
  const auto lower = trace.target_population(upper - 1);
  const double fraction = pop.front() + lower.front();
  if (!(fraction > 1e-6)) throw NoOscillation("no population in the driven subspace");
  RateEstimate est;
  est.population = fit_rabi(trace.durations, pop);
  est.coherence = fit_rabi(trace.durations, trace.coherence);
  const double mag = est.population.freq * std::sqrt(std::max(0.0, 2.0 * est.population.amplitude / fraction));
  // <sigma_y> = -(rate / f) sin(2 pi f t) for a positive rotation, i.e. phase +pi/2.
  est.rate = std::sin(est.coherence.phase) >= 0.0 ? mag : -mag;
  return est;
}

namespace {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
};

// GSL Nelder-Mead (nmsimplex2) with a hard evaluation budget.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                          const std::vector<double>& steps, int budget, double size_tol) {
  struct Ctx {
    const std::function<double(const std::vector<double>&)>* f;
    int evals = 0;
    int budget = 0;
    SimplexResult best;
  } ctx{&f, 0, budget, {x0, std::numeric_limits<double>::infinity(), 0}};

  const std::size_t n = x0.size();
  gsl_multimin_function fn;
  fn.n = n;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* params) -> double {
    auto* c = static_cast<Ctx*>(params);
    std::vector<double> x(v->size);
    for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
    if (c->evals >= c->budget) return c->best.value + 1.0;  // budget spent; discourage moves
    ++c->evals;
    const double val = (*c->f)(x);
    if (val < c->best.value) {
      c->best.value = val;
      c->best.x = x;
    }
    return val;
  };

  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* ss = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0[i]);
    gsl_vector_set(ss, i, steps[i]);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  while (ctx.evals < ctx.budget) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol) == GSL_SUCCESS) break;
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  ctx.best.evaluations = ctx.evals;
  return ctx.best;
}

}  // namespace

CalibratedGate calibrate_cr_gate(const DeviceParams& p, const CRTarget& target, const CalibrationOptions& opts) {
  opts.validate();
  const double angle0 = target.signs[0] * target.theta;
  if (!(std::abs(angle0) > 0.0)) throw InvalidParams("CR target needs a nonzero control-0 angle");
  const ComplexMatrix ideal = ideal_ucr(target.subspace, target.theta, target.signs).matrix;
  const double amp0 = target.subspace == Subspace::S01 ? opts.cr01_amp_ghz : opts.csx12_amp_ghz;
  const double rf = opts.risefall_ns;

  EvolveOptions search = opts.evolve;
  if (opts.rwa_presearch) search.rwa = true;

  // Stage 1: control-0 Rabi rate from a fitted trace, probing longer until
  // the trace spans more than one period.
  double probe = 1000.0;
  RateEstimate est;
  for (int attempt = 0;; ++attempt) {
    std::vector<double> grid(64);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = probe * static_cast<double>(k) / (grid.size() - 1);
    try {
      est = estimate_rabi_rate(run_rabi_scan(p, target.subspace, amp0, grid, 0, nullptr, search, rf));
      if (est.population.freq * probe >= 1.2) break;
    } catch (const NoOscillation&) {
      if (attempt >= 3) throw CalibrationFailed(target.name + ": no control-0 oscillation at the default amplitude");
    }
    if (attempt >= 3) throw CalibrationFailed(target.name + ": control-0 oscillation too slow to fit");
    probe *= 2.0;
  }
  const double phase0 = (est.rate > 0.0) == (angle0 > 0.0) ? 0.0 : kPi;
  const double ramp_equiv = pulse_area(GaussianSquare{1.0, 0.5 * rf, rf, 0.0});
  const double width0 = std::max(0.0, std::abs(angle0) / (kTwoPi * std::abs(est.rate)) - ramp_equiv);

  struct Candidate {
    double amp, width, phase;
  };
  auto schedule_for = [&](const Candidate& c) { return build_cr_schedule(p, target.subspace, c.amp, c.width, rf, c.phase); };
  auto fidelity = [&](const Candidate& c, const EvolveOptions& o) {
    if (!(c.amp > 0.0) || c.amp > kDefaultMaxAmp || c.width < 0.0) return -1.0;
    if (std::abs(c.amp / amp0 - 1.0) > opts.cr_amp_window + 1e-12) return -1.0;
    return calibrate_virtual_phases(schedule_unitary(p, schedule_for(c), o), ideal).fidelity;
  };

  // Stage 2: amplitude is searched relative to its default, width in units
  // of 100 ns, phase in radians.
  auto unpack = [&](const std::vector<double>& x) { return Candidate{amp0 * x[0], 100.0 * x[1], x[2]}; };
  const std::vector<double> x0{1.0, width0 / 100.0, phase0};
  int evaluations = 0;
  std::vector<double> x_best = x0;
  if (opts.rwa_presearch) {
    const int budget = opts.max_evaluations - opts.refine_evaluations;
    if (budget > 0) {
      const auto r = nelder_mead([&](const std::vector<double>& x) { return 1.0 - fidelity(unpack(x), search); }, x0,
                                 {0.05, 0.1, 0.1}, budget, 1e-4);
      evaluations += r.evaluations;
      x_best = r.x;
    }
  }
  const int refine_budget = opts.rwa_presearch ? opts.refine_evaluations : opts.max_evaluations;
  const double f_init = fidelity(unpack(x0), opts.evolve);
  ++evaluations;
  double f_best = f_init;
  std::vector<double> x_final = x0;
  if (refine_budget > 1) {
    const std::vector<double> steps = opts.rwa_presearch ? std::vector<double>{0.01, 0.03, 0.03}
                                                         : std::vector<double>{0.05, 0.1, 0.1};
    const auto r = nelder_mead([&](const std::vector<double>& x) { return 1.0 - fidelity(unpack(x), opts.evolve); },
                               x_best, steps, refine_budget - 1, 1e-4);
    evaluations += r.evaluations;
    if (1.0 - r.value > f_best) {
      f_best = 1.0 - r.value;
      x_final = r.x;
    }
  }

  const Candidate c = unpack(x_final);
  const Schedule pulse = schedule_for(c);
  const ComplexMatrix u = schedule_unitary(p, pulse, opts.evolve);
  const VirtualPhaseFit vp = calibrate_virtual_phases(u, ideal);
  CalibratedGate out;
  out.name = target.name;
  out.phases = vp.phases;
  out.schedule = with_virtual_phases(pulse, vp.phases);
  out.achieved = virtual_phase_matrix(vp.phases) * u;
  out.target = ideal;
  out.fidelity_to_target = vp.fidelity;
  out.params = {{"kind", "cr"},
                {"subspace", to_string(target.subspace)},
                {"theta_rad", target.theta},
                {"signs", target.signs},
                {"amp_ghz", c.amp},
                {"width_ns", c.width},
                {"risefall_ns", rf},
                {"carrier_phase_rad", c.phase},
                {"duration_ns", pulse.duration()},
                {"stage1", {{"rate_ghz", est.rate}, {"width_ns", width0}, {"fidelity", f_init}}},
                {"evaluations", evaluations}};
  if (out.fidelity_to_target < opts.min_cr_fidelity) {
    throw CalibrationFailed(target.name + " reached fidelity " + std::to_string(out.fidelity_to_target));
  }
  return out;
}

nlohmann::json calibrated_gate_to_json(const CalibratedGate& g) {
  return {{"name", g.name},
          {"params", g.params},
          {"virtual_phases",
           {{"control", {g.phases.control[0], g.phases.control[1]}},
            {"target", {g.phases.target[0], g.phases.target[1]}}}},
          {"fidelity", g.fidelity_to_target},
          {"schedule", schedule_to_json(g.schedule)},
          {"achieved", gate_to_json({g.name, g.achieved})["matrix"]},
          {"target", gate_to_json({g.name, g.target})["matrix"]}};
}

CalibratedGate calibrated_gate_from_json(const nlohmann::json& j) {
  try {
    CalibratedGate g;
    g.name = j.at("name").get<std::string>();
    g.params = j.at("params");
    const auto& vp = j.at("virtual_phases");
    g.phases.control = {vp.at("control").at(0).get<double>(), vp.at("control").at(1).get<double>()};
    g.phases.target = {vp.at("target").at(0).get<double>(), vp.at("target").at(1).get<double>()};
    g.fidelity_to_target = j.at("fidelity").get<double>();
    g.schedule = schedule_from_json(j.at("schedule"));
    g.achieved = gate_from_json({{"name", g.name}, {"dim", kDim}, {"matrix", j.at("achieved")}}).matrix;
    g.target = gate_from_json({{"name", g.name}, {"dim", kDim}, {"matrix", j.at("target")}}).matrix;
    if (!(g.fidelity_to_target >= 0.0 && g.fidelity_to_target <= 1.0)) throw ConfigError("fidelity out of range");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed calibrated gate: ") + e.what());
  }
}

}  // namespace qutritcr
