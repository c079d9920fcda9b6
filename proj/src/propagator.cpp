#include "qutritcr/propagator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "qutritcr/errors.hpp"

namespace qutritcr {
namespace {

// Dormand-Prince 8(5,3) tableau (Hairer, Norsett & Wanner), 12 stages
// plus the FSAL evaluation at the new point.
constexpr double kC[12] = {0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0};
constexpr double kA[12][12] = {
    {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0},
    {0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0},
    {-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0},
    {2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0},
};
constexpr double kB[12] = {0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259};
constexpr double kE3[13] = {-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0};
constexpr double kE5[13] = {0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0};

constexpr int kStages = 12;
constexpr int kMaxConsecutiveRejects = 200;
constexpr double kMinStep = 1e-12;
constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

// Adaptive DOP853 for i dX/dt = H(t) X on a block of columns. The error of
// each column is measured as a 2-norm scaled by abs_tol + rel_tol * |column|
// and the step is controlled by the worst column. Componentwise scaling
// would let near-zero amplitudes dictate the step size.
class Integrator {
 public:
  Integrator(const HamiltonianProvider& h, int cols, const EvolveOptions& opts)
      : h_(h), rows_(h.dim()), cols_(cols), abs_(opts.abs_tol), rel_(opts.rel_tol), max_step_(opts.max_step),
        dt_(std::min(opts.max_step, 0.01)) {
    for (auto& k : k_) k.resize(rows_, cols_);
    y_new_.resize(rows_, cols_);
    tmp_.resize(rows_, cols_);
  }

  // Advances x from t to t_end in place.
  void advance(ComplexMatrix& x, double& t, double t_end, EvolveStats& stats) {
    if (!(t < t_end)) return;
    if (!fsal_valid_ || t != fsal_t_) rhs(t, x, k_[0]);
    int consecutive = 0;
    bool rejected_last = false;
    while (t < t_end) {
      const bool clipped = dt_ >= t_end - t;
      const double h = clipped ? t_end - t : dt_;
      const double err = attempt(x, t, h);
      if (err < 1.0) {
        ++stats.accepted;
        consecutive = 0;
        double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, -1.0 / 8.0));
        if (rejected_last) factor = std::min(factor, 1.0);
        rejected_last = false;
        t = clipped ? t_end : t + h;
        x.swap(y_new_);
        std::swap(k_[0], k_[kStages]);
        // A clipped step says nothing about the natural step size.
        if (!clipped || h * factor > dt_) dt_ = std::min(max_step_, h * factor);
      } else {
        ++stats.rejected;
        rejected_last = true;
        dt_ = h * std::max(kMinFactor, kSafety * std::pow(err, -1.0 / 8.0));
        if (++consecutive > kMaxConsecutiveRejects || dt_ < kMinStep) {
          throw StepFailure("error control could not meet tolerances near t = " + std::to_string(t));
        }
      }
    }
    fsal_valid_ = true;
    fsal_t_ = t;
  }

 private:
  void rhs(double t, const ComplexMatrix& x, ComplexMatrix& out) {
    h_.apply(t, x.data(), out.data(), cols_);
    out *= cplx(0.0, -1.0);
  }

  // One trial step of size h; fills y_new_ and k_[kStages] and returns the
  // scaled error estimate.
  double attempt(const ComplexMatrix& x, double t, double h) {
    for (int s = 1; s < kStages; ++s) {
      tmp_ = x;
      for (int j = 0; j < s; ++j) {
        if (kA[s][j] != 0.0) tmp_ += (h * kA[s][j]) * k_[j];
      }
      rhs(t + kC[s] * h, tmp_, k_[s]);
    }
    y_new_ = x;
    for (int j = 0; j < kStages; ++j) {
      if (kB[j] != 0.0) y_new_ += (h * kB[j]) * k_[j];
    }
    rhs(t + h, y_new_, k_[kStages]);

    double worst = 0.0;
    for (int c = 0; c < cols_; ++c) {
      const double scale = abs_ + rel_ * std::max(x.col(c).norm(), y_new_.col(c).norm());
      double e5 = 0.0;
      double e3 = 0.0;
      for (int r = 0; r < rows_; ++r) {
        cplx s5 = 0.0;
        cplx s3 = 0.0;
        for (int j = 0; j <= kStages; ++j) {
          s5 += kE5[j] * k_[j](r, c);
          s3 += kE3[j] * k_[j](r, c);
        }
        e5 += std::norm(s5);
        e3 += std::norm(s3);
      }
      e5 /= scale * scale;
      e3 /= scale * scale;
      if (e5 == 0.0 && e3 == 0.0) continue;
      worst = std::max(worst, h * e5 / std::sqrt(e5 + 0.01 * e3));
    }
    return worst;
  }

  const HamiltonianProvider& h_;
  int rows_;
  int cols_;
  double abs_;
  double rel_;
  double max_step_;
  double dt_;
  std::array<ComplexMatrix, kStages + 1> k_;
  ComplexMatrix y_new_;
  ComplexMatrix tmp_;
  bool fsal_valid_ = false;
  double fsal_t_ = 0.0;
};

void check_interval(double t0, double t1) {
  if (!(t1 >= t0)) throw InvalidParams("evolution needs t1 >= t0");
}

void check_drift(EvolveStats& st) {
  if (st.norm_drift > kNormDriftFatal) {
    throw NormDrift("norm drift " + std::to_string(st.norm_drift) + " exceeds " + std::to_string(kNormDriftFatal));
  }
}

double column_drift(const ComplexMatrix& initial, const ComplexMatrix& final) {
  // Inner products are preserved by unitary evolution; compare Gram matrices.
  const ComplexMatrix g0 = initial.adjoint() * initial;
  const ComplexMatrix g1 = final.adjoint() * final;
  return g0.size() == 0 ? 0.0 : (g1 - g0).cwiseAbs().maxCoeff();
}

}  // namespace

void EvolveOptions::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidParams("tolerances must be positive");
  if (!(max_step > 0.0)) throw InvalidParams("max_step must be positive");
  if (rwa && !(rwa_cutoff_ghz > 0.0)) throw InvalidParams("RWA cutoff must be positive");
  if (frame) frame->validate();
}

ComplexMatrix evolve_columns(const HamiltonianProvider& h, const ComplexMatrix& initial, double t0, double t1,
                             const EvolveOptions& opts, EvolveStats* stats) {
  opts.validate();
  check_interval(t0, t1);
  if (initial.rows() != h.dim()) throw DimMismatch("initial columns do not match the Hamiltonian");
  const int cols = static_cast<int>(initial.cols());
  ComplexMatrix x = initial;
  EvolveStats st;
  double t = t0;
  Integrator integ(h, cols, opts);
  integ.advance(x, t, t1, st);
  st.norm_drift = column_drift(initial, x);
  if (stats != nullptr) *stats = st;
  check_drift(st);
  return x;
}

StateVector evolve_state(const HamiltonianProvider& h, const StateVector& psi0, double t0, double t1,
                         const EvolveOptions& opts, EvolveStats* stats) {
  ComplexMatrix out = evolve_columns(h, psi0.amplitudes(), t0, t1, opts, stats);
  // Drift up to kNormDriftFatal is tolerated but reported through stats;
  // StateVector itself insists on unit norm.
  return StateVector::normalized(out.col(0));
}

ComplexMatrix evolve_unitary(const HamiltonianProvider& h, double t0, double t1, const EvolveOptions& opts,
                             EvolveStats* stats) {
  return evolve_columns(h, identity(h.dim()), t0, t1, opts, stats);
}

std::vector<StateVector> evolve_trajectory(const HamiltonianProvider& h, const StateVector& psi0, double t0,
                                           const std::vector<double>& times, const EvolveOptions& opts) {
  opts.validate();
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < t0)) {
    throw InvalidParams("trajectory times must be sorted and >= t0");
  }
  ComplexMatrix x = psi0.amplitudes();
  Integrator integ(h, 1, opts);
  EvolveStats st;
  double t = t0;
  std::vector<StateVector> out;
  out.reserve(times.size());
  for (double target : times) {
    integ.advance(x, t, target, st);
    ComplexVector v = x.col(0);
    st.norm_drift = std::max(st.norm_drift, std::abs(v.norm() - 1.0));
    check_drift(st);
    out.push_back(StateVector::normalized(std::move(v)));
  }
  return out;
}

std::array<double, kDim> populations(const StateVector& psi) {
  if (psi.dim() != kDim) throw DimMismatch("populations need a two-qutrit state");
  std::array<double, kDim> p{};
  for (int k = 0; k < kDim; ++k) p[k] = std::norm(psi[k]);
  return p;
}

ComplexMatrix frame_change(const DeviceParams& p, const FrameSpec& sim, double t) {
  const auto comp = computational_frame(p);
  ComplexMatrix d = ComplexMatrix::Zero(kDim, kDim);
  for (int i = 0; i < kLevels; ++i) {
    for (int j = 0; j < kLevels; ++j) {
      const int k = kLevels * i + j;
      const double sim_energy = sim.frame1 * i + sim.frame2 * j;
      d(k, k) = std::polar(1.0, kTwoPi * (comp[k] - sim_energy) * t);
    }
  }
  return d;
}

ComplexMatrix schedule_unitary(const DeviceParams& p, const Schedule& s, const EvolveOptions& opts,
                               const std::vector<int>& inputs, EvolveStats* stats) {
  const FrameSpec frame = opts.frame_for(p);
  RotatingFrameHamiltonian h(p, frame, s, {opts.rwa, opts.rwa_cutoff_ghz});
  const double t1 = s.duration();
  std::vector<int> cols = inputs;
  if (cols.empty()) {
    for (int k = 0; k < kDim; ++k) cols.push_back(k);
  }
  // Frame change at t = 0 is the identity, so computational-frame basis
  // inputs are also simulation-frame basis inputs.
  ComplexMatrix init = ComplexMatrix::Zero(kDim, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) init(cols[c], static_cast<Eigen::Index>(c)) = 1.0;
  const ComplexMatrix evolved = evolve_columns(h, init, 0.0, t1, opts, stats);

  const auto corr = s.frame_correction();
  ComplexMatrix z = diagonal(corr);
  const ComplexMatrix mapped = z * frame_change(p, frame, t1) * evolved;
  ComplexMatrix u = ComplexMatrix::Zero(kDim, kDim);
  for (std::size_t c = 0; c < cols.size(); ++c) u.col(cols[c]) = mapped.col(static_cast<Eigen::Index>(c));
  return u;
}

StateVector schedule_state(const DeviceParams& p, const Schedule& s, const StateVector& psi0,
                           const EvolveOptions& opts, EvolveStats* stats) {
  const FrameSpec frame = opts.frame_for(p);
  RotatingFrameHamiltonian h(p, frame, s, {opts.rwa, opts.rwa_cutoff_ghz});
  const double t1 = s.duration();
  const ComplexMatrix evolved = evolve_columns(h, psi0.amplitudes(), 0.0, t1, opts, stats);
  const auto corr = s.frame_correction();
  ComplexVector v = diagonal(corr) * frame_change(p, frame, t1) * evolved.col(0);
  return StateVector::normalized(std::move(v));
}

}  // namespace qutritcr
