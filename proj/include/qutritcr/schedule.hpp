#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qutritcr/device.hpp"

namespace qutritcr {

inline constexpr double kDefaultMaxAmp = 1.0;  // GHz

// Lifted Gaussian: zero at both endpoints, peak amp at duration/2.
struct Gaussian {
  double amp = 0.0;
  double sigma = 0.0;
  double duration = 0.0;
};

// Flat top of length width between two lifted-Gaussian edges of length risefall.
struct GaussianSquare {
  double amp = 0.0;
  double sigma = 0.0;
  double risefall = 0.0;
  double width = 0.0;
};

// Lifted Gaussian in-phase; quadrature is beta * d/dt of the in-phase part.
struct DragGaussian {
  double amp = 0.0;
  double sigma = 0.0;
  double duration = 0.0;
  double beta = 0.0;  // ns
};

using PulseShape = std::variant<Gaussian, GaussianSquare, DragGaussian>;

double shape_duration(const PulseShape& shape);
void validate_shape(const PulseShape& shape, double max_amp = kDefaultMaxAmp);
PulseShape scaled(const PulseShape& shape, double factor);

// Complex envelope in GHz; t is relative to the pulse start.
std::complex<double> sample_envelope(const PulseShape& shape, double t);

enum class Subspace { S01, S12 };

std::string to_string(Subspace s);
Subspace subspace_from_string(const std::string& s);

// Phase frame a pulse follows: virtual phase shifts on (transmon, subspace)
// advance the carrier phase of every later pulse on that frame.
struct FrameRef {
  int transmon = 1;
  Subspace subspace = Subspace::S01;
  bool operator==(const FrameRef&) const = default;
};

struct Play {
  int channel = 1;
  double start = 0.0;
  PulseShape shape;
  double carrier_ghz = 0.0;
  double carrier_phase = 0.0;
  FrameRef frame;

  double end() const { return start + shape_duration(shape); }
};

// Zero-duration virtual Z acting on one transition of one transmon.
struct PhaseShift {
  int channel = 1;
  double start = 0.0;
  Subspace subspace = Subspace::S01;
  double angle = 0.0;
};

using Instruction = std::variant<Play, PhaseShift>;

// Real lab-frame drive coefficient (rad/ns) multiplying drive_operator(channel):
// 2pi Re[envelope(t - start) exp(-i(2pi f t + phase + virtual_phase))].
// A PhaseShift contributes nothing.
double drive_term(const Instruction& instr, double t, double virtual_phase = 0.0);

// A Play with its accumulated virtual phase folded into phase.
struct ResolvedPulse {
  int channel = 1;
  double start = 0.0;
  double end = 0.0;
  PulseShape shape;
  double carrier_ghz = 0.0;
  double phase = 0.0;
};

class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(std::vector<Instruction> instructions);

  // Throws InvalidParams if the instruction overlaps another on its channel.
  void add(Instruction instr);

  const std::vector<Instruction>& instructions() const { return instructions_; }
  double duration() const { return duration_; }
  bool empty() const { return instructions_.empty(); }

  Schedule shifted(double dt) const;

  // Plays in start order with their virtual phases resolved.
  std::vector<ResolvedPulse> resolved() const;

  // Diagonal (9 entries) of the accumulated virtual Z on both transmons.
  // Logical state = frame_correction() * simulated state.
  std::vector<std::complex<double>> frame_correction() const;

  // Drive coefficient (rad/ns) on a channel at time t, summed over pulses.
  double channel_drive(int channel, double t) const;

 private:
  std::vector<Instruction> instructions_;
  double duration_ = 0.0;
};

// Plays each schedule after the previous one; virtual phases carry over.
Schedule concat(const std::vector<Schedule>& schedules);

// Gaussian-square cross-resonance pulse on transmon 1 at the dressed
// transition of transmon 2 selected by subspace.
Schedule build_cr_schedule(const DeviceParams& p, Subspace subspace, double amp, double width,
                           double risefall = 20.0, double phase = 0.0);

// Virtual Zdiag(phi_a, phi_b) = diag(1, e^{i phi_a}, e^{i phi_b}) on a transmon.
std::vector<Instruction> virtual_zdiag(int transmon, double phi_a, double phi_b, double at);

nlohmann::json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

// Samples the envelope on [0, duration] with the given step; columns t_ns,re,im.
void write_envelope_csv(std::ostream& os, const PulseShape& shape, double step);

}  // namespace qutritcr
