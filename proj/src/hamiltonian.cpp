#include "qutritcr/hamiltonian.hpp"

#include <cmath>

#include "qutritcr/errors.hpp"

namespace qutritcr {

void HamiltonianProvider::apply(double t, const cplx* in, cplx* out, int cols) const {
  const int n = dim();
  const ComplexMatrix h = matrix(t);
  Eigen::Map<const ComplexMatrix> x(in, n, cols);
  Eigen::Map<ComplexMatrix> y(out, n, cols);
  y.noalias() = h * x;
}

DenseHamiltonian DenseHamiltonian::constant(ComplexMatrix h) {
  const int n = static_cast<int>(h.rows());
  return DenseHamiltonian(n, [h = std::move(h)](double) { return h; });
}

void TimeReversed::apply(double t, const cplx* in, cplx* out, int cols) const {
  fwd_.apply(total_ - t, in, out, cols);
  const int n = dim() * cols;
  for (int k = 0; k < n; ++k) out[k] = -out[k];
}

RotatingFrameHamiltonian::RotatingFrameHamiltonian(const DeviceParams& p, const FrameSpec& frame,
                                                   const Schedule& schedule, RwaSettings rwa)
    : pulses_(schedule.resolved()), rwa_(rwa) {
  p.validate();
  frame.validate();
  if (rwa.enabled && !(rwa.cutoff_ghz > 0.0)) throw InvalidParams("RWA cutoff must be positive");
  frame_ghz_ = {frame.frame1, frame.frame2};

  const ComplexMatrix h0 = build_static_hamiltonian(p);
  for (int i = 0; i < kLevels; ++i) {
    for (int j = 0; j < kLevels; ++j) {
      const int k = kLevels * i + j;
      diag_[k] = h0(k, k).real() - kTwoPi * (frame.frame1 * i + frame.frame2 * j);
    }
  }

  // Exchange a1^dag a2 rotates at (frame1 - frame2) in this frame.
  exchange_ = kTwoPi * p.coupling_j;
  exchange_freq_ = frame.frame1 - frame.frame2;
  exchange_kept_ = !rwa.enabled || std::abs(exchange_freq_) <= rwa.cutoff_ghz;

  auto add_entries = [this](const ComplexMatrix& m, int coef) {
    for (int r = 0; r < kDim; ++r)
      for (int c = 0; c < kDim; ++c)
        if (std::abs(m(r, c)) > 0.0) entries_.push_back({r, c, coef, m(r, c).real()});
  };
  const ComplexMatrix a1 = lowering_on(1);
  const ComplexMatrix a2 = lowering_on(2);
  add_entries(a1.adjoint() * a2, 0);
  add_entries(a1, 1);
  add_entries(a2, 2);
}

std::array<cplx, 2> RotatingFrameHamiltonian::drive_coefficients(double t) const {
  std::array<cplx, 2> g{};
  for (const auto& pulse : pulses_) {
    if (t < pulse.start || t > pulse.end) continue;
    const cplx env = sample_envelope(pulse.shape, t - pulse.start);
    const int k = pulse.channel - 1;
    const double fk = frame_ghz_[k];
    const double theta = kTwoPi * pulse.carrier_ghz * t + pulse.phase;
    // pi(E e^{-i theta} + E* e^{i theta}) e^{-i 2pi f_k t}: the first piece
    // rotates at -(f_d + f_k), the second at (f_d - f_k).
    const bool keep_sum = !rwa_.enabled || std::abs(pulse.carrier_ghz + fk) <= rwa_.cutoff_ghz;
    const bool keep_diff = !rwa_.enabled || std::abs(pulse.carrier_ghz - fk) <= rwa_.cutoff_ghz;
    const double frame_arg = kTwoPi * fk * t;
    if (keep_sum) g[k] += kPi * env * std::polar(1.0, -theta - frame_arg);
    if (keep_diff) g[k] += kPi * std::conj(env) * std::polar(1.0, theta - frame_arg);
  }
  return g;
}

std::array<cplx, 3> RotatingFrameHamiltonian::coefficients(double t) const {
  const auto g = drive_coefficients(t);
  cplx ex = exchange_kept_ ? exchange_ * std::polar(1.0, kTwoPi * exchange_freq_ * t) : cplx{};
  return {ex, g[0], g[1]};
}

ComplexMatrix RotatingFrameHamiltonian::matrix(double t) const {
  const auto c = coefficients(t);
  ComplexMatrix h = ComplexMatrix::Zero(kDim, kDim);
  for (int k = 0; k < kDim; ++k) h(k, k) = diag_[k];
  for (const auto& e : entries_) {
    const cplx v = c[e.coef] * e.value;
    h(e.row, e.col) += v;
    h(e.col, e.row) += std::conj(v);
  }
  return h;
}

void RotatingFrameHamiltonian::apply(double t, const cplx* in, cplx* out, int cols) const {
  const auto c = coefficients(t);
  for (int col = 0; col < cols; ++col) {
    const cplx* x = in + col * kDim;
    cplx* y = out + col * kDim;
    for (int k = 0; k < kDim; ++k) y[k] = diag_[k] * x[k];
    for (const auto& e : entries_) {
      const cplx v = c[e.coef] * e.value;
      y[e.row] += v * x[e.col];
      y[e.col] += std::conj(v) * x[e.row];
    }
  }
}

}  // namespace qutritcr
