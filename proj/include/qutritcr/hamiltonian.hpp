#pragma once

#include <functional>
#include <vector>

#include "qutritcr/device.hpp"
#include "qutritcr/linalg.hpp"
#include "qutritcr/schedule.hpp"

namespace qutritcr {

// Time-dependent generator H(t) in rad/ns. apply() is the hot path used by
// the integrator: out = H(t) * in for `cols` column vectors stored
// column-major with leading dimension dim().
class HamiltonianProvider {
 public:
  virtual ~HamiltonianProvider() = default;
  virtual int dim() const = 0;
  virtual ComplexMatrix matrix(double t) const = 0;
  virtual void apply(double t, const cplx* in, cplx* out, int cols) const;
};

// Wraps an arbitrary callable; used for analytic checks.
class DenseHamiltonian final : public HamiltonianProvider {
 public:
  DenseHamiltonian(int dim, std::function<ComplexMatrix(double)> fn) : dim_(dim), fn_(std::move(fn)) {}
  static DenseHamiltonian constant(ComplexMatrix h);

  int dim() const override { return dim_; }
  ComplexMatrix matrix(double t) const override { return fn_(t); }

 private:
  int dim_;
  std::function<ComplexMatrix(double)> fn_;
};

// s -> -H(T - s): undoes the evolution generated by `forward` over [0, T].
class TimeReversed final : public HamiltonianProvider {
 public:
  TimeReversed(const HamiltonianProvider& forward, double total) : fwd_(forward), total_(total) {}
  int dim() const override { return fwd_.dim(); }
  ComplexMatrix matrix(double t) const override { return -fwd_.matrix(total_ - t); }
  void apply(double t, const cplx* in, cplx* out, int cols) const override;

 private:
  const HamiltonianProvider& fwd_;
  double total_;
};

struct RwaSettings {
  bool enabled = false;
  double cutoff_ghz = 2.0;
};

// H_rot(t) = R(t)(H0 + H_drive(t))R(t)^dag - F with R(t) = exp(iFt) and
// F = 2pi(frame1 n1 + frame2 n2). Every term is a constant operator times a
// single phase factor, so the RWA simply drops factors rotating faster than
// the cutoff.
class RotatingFrameHamiltonian final : public HamiltonianProvider {
 public:
  RotatingFrameHamiltonian(const DeviceParams& p, const FrameSpec& frame, const Schedule& schedule,
                           RwaSettings rwa = {});

  int dim() const override { return kDim; }
  ComplexMatrix matrix(double t) const override;
  void apply(double t, const cplx* in, cplx* out, int cols) const override;

  // Coefficients multiplying the lowering operators of transmon 1 and 2
  // (rad/ns) at time t; the drive part is g a + conj(g) a^dag.
  std::array<cplx, 2> drive_coefficients(double t) const;

 private:
  struct Entry {
    int row;
    int col;
    int coef;  // 0: exchange, 1: transmon 1 drive, 2: transmon 2 drive
    double value;
  };

  std::array<double, kDim> diag_{};
  std::vector<Entry> entries_;
  std::vector<ResolvedPulse> pulses_;
  std::array<double, 2> frame_ghz_{};
  double exchange_ = 0.0;       // 2pi J, rad/ns
  double exchange_freq_ = 0.0;  // GHz
  bool exchange_kept_ = true;
  RwaSettings rwa_;

  std::array<cplx, 3> coefficients(double t) const;
};

}  // namespace qutritcr
