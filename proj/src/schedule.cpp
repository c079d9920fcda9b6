#include "qutritcr/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "qutritcr/errors.hpp"

namespace qutritcr {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Gaussian centred at `center`, lifted so it vanishes `half_width` away from
// the centre and rescaled to peak 1. Returns value and time derivative.
struct LiftedSample {
  double value;
  double derivative;
};

LiftedSample lifted_gaussian(double t, double center, double half_width, double sigma) {
  const double x = t - center;
  const double g = std::exp(-0.5 * x * x / (sigma * sigma));
  const double edge = std::exp(-0.5 * half_width * half_width / (sigma * sigma));
  const double norm = 1.0 - edge;
  return {(g - edge) / norm, -x / (sigma * sigma) * g / norm};
}

double play_virtual_phase(const std::map<std::pair<int, int>, double>& phases, const FrameRef& f) {
  auto it = phases.find({f.transmon, static_cast<int>(f.subspace)});
  return it == phases.end() ? 0.0 : it->second;
}

double instruction_start(const Instruction& instr) {
  return std::visit([](const auto& i) { return i.start; }, instr);
}

double instruction_end(const Instruction& instr) {
  return std::visit(overloaded{[](const Play& p) { return p.end(); },
                               [](const PhaseShift& s) { return s.start; }},
                    instr);
}

void check_channel(int channel) {
  if (channel != 1 && channel != 2) throw InvalidParams("channel must be 1 or 2");
}

}  // namespace

double shape_duration(const PulseShape& shape) {
  return std::visit(overloaded{[](const Gaussian& g) { return g.duration; },
                               [](const GaussianSquare& g) { return g.width + 2.0 * g.risefall; },
                               [](const DragGaussian& g) { return g.duration; }},
                    shape);
}

void validate_shape(const PulseShape& shape, double max_amp) {
  auto check_amp = [max_amp](double amp) {
    if (!std::isfinite(amp) || std::abs(amp) > max_amp) {
      throw InvalidParams("pulse amplitude exceeds the drive cap");
    }
  };
  auto positive = [](double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidParams(std::string(what) + " must be positive");
  };
  std::visit(overloaded{[&](const Gaussian& g) {
                          check_amp(g.amp);
                          positive(g.sigma, "sigma");
                          positive(g.duration, "duration");
                        },
                        [&](const GaussianSquare& g) {
                          check_amp(g.amp);
                          positive(g.sigma, "sigma");
                          positive(g.risefall, "risefall");
                          if (!(g.width >= 0.0)) throw InvalidParams("width must be non-negative");
                        },
                        [&](const DragGaussian& g) {
                          check_amp(g.amp);
                          positive(g.sigma, "sigma");
                          positive(g.duration, "duration");
                          if (!std::isfinite(g.beta)) throw InvalidParams("beta must be finite");
                        }},
             shape);
}

PulseShape scaled(const PulseShape& shape, double factor) {
  PulseShape out = shape;
  std::visit([factor](auto& s) { s.amp *= factor; }, out);
  return out;
}

std::complex<double> sample_envelope(const PulseShape& shape, double t) {
  const double d = shape_duration(shape);
  constexpr double kSlack = 1e-9;
  if (t < -kSlack || t > d + kSlack) throw OutOfRange("envelope sampled outside [0, duration]");
  t = std::clamp(t, 0.0, d);
  return std::visit(
      overloaded{
          [t](const Gaussian& g) -> std::complex<double> {
            return g.amp * lifted_gaussian(t, 0.5 * g.duration, 0.5 * g.duration, g.sigma).value;
          },
          [t](const GaussianSquare& g) -> std::complex<double> {
            if (t < g.risefall) return g.amp * lifted_gaussian(t, g.risefall, g.risefall, g.sigma).value;
            if (t <= g.risefall + g.width) return g.amp;
            return g.amp * lifted_gaussian(t, g.risefall + g.width, g.risefall, g.sigma).value;
          },
          [t](const DragGaussian& g) -> std::complex<double> {
            const auto s = lifted_gaussian(t, 0.5 * g.duration, 0.5 * g.duration, g.sigma);
            return {g.amp * s.value, g.beta * g.amp * s.derivative};
          }},
      shape);
}

std::string to_string(Subspace s) { return s == Subspace::S01 ? "01" : "12"; }

Subspace subspace_from_string(const std::string& s) {
  if (s == "01") return Subspace::S01;
  if (s == "12") return Subspace::S12;
  throw InvalidParams("subspace must be \"01\" or \"12\", got \"" + s + "\"");
}

double drive_term(const Instruction& instr, double t, double virtual_phase) {
  const auto* play = std::get_if<Play>(&instr);
  if (play == nullptr) return 0.0;
  if (t < play->start - 1e-9 || t > play->end() + 1e-9) throw OutOfRange("drive_term outside pulse window");
  const auto env = sample_envelope(play->shape, t - play->start);
  const double arg = kTwoPi * play->carrier_ghz * t + play->carrier_phase + virtual_phase;
  return kTwoPi * (env * std::polar(1.0, -arg)).real();
}

Schedule::Schedule(std::vector<Instruction> instructions) {
  for (auto& i : instructions) add(std::move(i));
}

void Schedule::add(Instruction instr) {
  if (instruction_start(instr) < 0.0) throw InvalidParams("instruction start must be >= 0");
  if (const auto* play = std::get_if<Play>(&instr)) {
    check_channel(play->channel);
    validate_shape(play->shape);
    for (const auto& other : instructions_) {
      const auto* o = std::get_if<Play>(&other);
      if (o == nullptr || o->channel != play->channel) continue;
      constexpr double kEps = 1e-9;
      if (play->start < o->end() - kEps && o->start < play->end() - kEps) {
        throw InvalidParams("overlapping pulses on channel " + std::to_string(play->channel));
      }
    }
  } else {
    check_channel(std::get<PhaseShift>(instr).channel);
  }
  duration_ = std::max(duration_, instruction_end(instr));
  instructions_.push_back(std::move(instr));
}

Schedule Schedule::shifted(double dt) const {
  Schedule out;
  for (auto instr : instructions_) {
    std::visit([dt](auto& i) { i.start += dt; }, instr);
    out.add(std::move(instr));
  }
  return out;
}

namespace {

// Instructions in start order, list order breaking ties.
std::vector<const Instruction*> time_ordered(const std::vector<Instruction>& instrs) {
  std::vector<const Instruction*> order;
  order.reserve(instrs.size());
  for (const auto& i : instrs) order.push_back(&i);
  std::stable_sort(order.begin(), order.end(), [](const Instruction* a, const Instruction* b) {
    return instruction_start(*a) < instruction_start(*b);
  });
  return order;
}

}  // namespace

std::vector<ResolvedPulse> Schedule::resolved() const {
  std::map<std::pair<int, int>, double> phases;
  std::vector<ResolvedPulse> out;
  for (const Instruction* instr : time_ordered(instructions_)) {
    if (const auto* s = std::get_if<PhaseShift>(instr)) {
      phases[{s->channel, static_cast<int>(s->subspace)}] += s->angle;
      continue;
    }
    const auto& p = std::get<Play>(*instr);
    out.push_back({p.channel, p.start, p.end(), p.shape, p.carrier_ghz,
                   p.carrier_phase + play_virtual_phase(phases, p.frame)});
  }
  return out;
}

std::vector<std::complex<double>> Schedule::frame_correction() const {
  std::array<double, 2> p01{};
  std::array<double, 2> p12{};
  for (const auto& instr : instructions_) {
    if (const auto* s = std::get_if<PhaseShift>(&instr)) {
      (s->subspace == Subspace::S01 ? p01 : p12)[s->channel - 1] += s->angle;
    }
  }
  auto level_phase = [&](int transmon, int level) {
    const int k = transmon - 1;
    if (level == 0) return 0.0;
    if (level == 1) return p01[k];
    return p01[k] + p12[k];
  };
  std::vector<std::complex<double>> diag(kDim);
  for (int i = 0; i < kLevels; ++i)
    for (int j = 0; j < kLevels; ++j)
      diag[kLevels * i + j] = std::polar(1.0, level_phase(1, i) + level_phase(2, j));
  return diag;
}

double Schedule::channel_drive(int channel, double t) const {
  double total = 0.0;
  for (const auto& r : resolved()) {
    if (r.channel != channel || t < r.start || t > r.end) continue;
    const auto env = sample_envelope(r.shape, t - r.start);
    total += kTwoPi * (env * std::polar(1.0, -(kTwoPi * r.carrier_ghz * t + r.phase))).real();
  }
  return total;
}

Schedule concat(const std::vector<Schedule>& schedules) {
  Schedule out;
  double offset = 0.0;
  for (const auto& s : schedules) {
    for (auto instr : s.instructions()) {
      std::visit([offset](auto& i) { i.start += offset; }, instr);
      out.add(std::move(instr));
    }
    offset += s.duration();
  }
  return out;
}

Schedule build_cr_schedule(const DeviceParams& p, Subspace subspace, double amp, double width,
                           double risefall, double phase) {
  const auto f = transition_frequencies(p, true);
  GaussianSquare shape{amp, 0.5 * risefall, risefall, width};
  validate_shape(shape);
  Play play;
  play.channel = 1;
  play.start = 0.0;
  play.shape = shape;
  play.carrier_ghz = subspace == Subspace::S01 ? f.w01_2 : f.w12_2;
  play.carrier_phase = phase;
  play.frame = {2, subspace};
  return Schedule({play});
}

std::vector<Instruction> virtual_zdiag(int transmon, double phi_a, double phi_b, double at) {
  return {PhaseShift{transmon, at, Subspace::S01, phi_a},
          PhaseShift{transmon, at, Subspace::S12, phi_b - phi_a}};
}

namespace {

nlohmann::json shape_to_json(const PulseShape& shape) {
  return std::visit(
      overloaded{[](const Gaussian& g) -> nlohmann::json {
                   return {{"kind", "gaussian"}, {"amp_ghz", g.amp}, {"sigma_ns", g.sigma},
                           {"duration_ns", g.duration}};
                 },
                 [](const GaussianSquare& g) -> nlohmann::json {
                   return {{"kind", "gaussian_square"}, {"amp_ghz", g.amp}, {"sigma_ns", g.sigma},
                           {"risefall_ns", g.risefall},  {"width_ns", g.width}};
                 },
                 [](const DragGaussian& g) -> nlohmann::json {
                   return {{"kind", "drag"},          {"amp_ghz", g.amp}, {"sigma_ns", g.sigma},
                           {"duration_ns", g.duration}, {"beta_ns", g.beta}};
                 }},
      shape);
}

PulseShape shape_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    return Gaussian{j.at("amp_ghz").get<double>(), j.at("sigma_ns").get<double>(),
                    j.at("duration_ns").get<double>()};
  }
  if (kind == "gaussian_square") {
    return GaussianSquare{j.at("amp_ghz").get<double>(), j.at("sigma_ns").get<double>(),
                          j.at("risefall_ns").get<double>(), j.at("width_ns").get<double>()};
  }
  if (kind == "drag") {
    return DragGaussian{j.at("amp_ghz").get<double>(), j.at("sigma_ns").get<double>(),
                        j.at("duration_ns").get<double>(), j.at("beta_ns").get<double>()};
  }
  throw ConfigError("unknown pulse shape kind '" + kind + "'");
}

}  // namespace

nlohmann::json schedule_to_json(const Schedule& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& instr : s.instructions()) {
    if (const auto* p = std::get_if<Play>(&instr)) {
      out.push_back({{"channel", p->channel},
                     {"start_ns", p->start},
                     {"shape", shape_to_json(p->shape)},
                     {"carrier_ghz", p->carrier_ghz},
                     {"phase_rad", p->carrier_phase},
                     {"frame", {{"transmon", p->frame.transmon}, {"subspace", to_string(p->frame.subspace)}}}});
    } else {
      const auto& ps = std::get<PhaseShift>(instr);
      out.push_back({{"kind", "phase_shift"},
                     {"channel", ps.channel},
                     {"start_ns", ps.start},
                     {"subspace", to_string(ps.subspace)},
                     {"angle_rad", ps.angle}});
    }
  }
  return out;
}

Schedule schedule_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("schedule JSON must be an array");
  Schedule s;
  try {
    for (const auto& item : j) {
      if (item.value("kind", std::string("play")) == "phase_shift") {
        s.add(PhaseShift{item.value("channel", 1), item.value("start_ns", 0.0),
                         subspace_from_string(item.at("subspace").get<std::string>()),
                         item.at("angle_rad").get<double>()});
        continue;
      }
      Play p;
      p.channel = item.at("channel").get<int>();
      p.start = item.at("start_ns").get<double>();
      p.shape = shape_from_json(item.at("shape"));
      p.carrier_ghz = item.at("carrier_ghz").get<double>();
      p.carrier_phase = item.value("phase_rad", 0.0);
      p.frame = {p.channel, Subspace::S01};
      if (item.contains("frame")) {
        const auto& f = item.at("frame");
        p.frame = {f.at("transmon").get<int>(), subspace_from_string(f.at("subspace").get<std::string>())};
      }
      s.add(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad schedule JSON: ") + e.what());
  }
  return s;
}

void write_envelope_csv(std::ostream& os, const PulseShape& shape, double step) {
  if (!(step > 0.0)) throw InvalidParams("sample step must be positive");
  const double d = shape_duration(shape);
  const auto n = static_cast<long>(std::floor(d / step + 1e-9));
  os << "t_ns,re,im\n";
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * step;
    const auto v = sample_envelope(shape, t);
    os << t << ',' << v.real() << ',' << v.imag() << '\n';
  }
}

}  // namespace qutritcr
