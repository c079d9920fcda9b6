#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "qutritcr/device.hpp"
#include "qutritcr/errors.hpp"
#include "qutritcr/hamiltonian.hpp"
#include "qutritcr/schedule.hpp"

using namespace qutritcr;

namespace {

DeviceParams uncoupled() {
  DeviceParams p;
  p.coupling_j = 0.0;
  return p;
}

}  // namespace

TEST_CASE("static Hamiltonian of an uncoupled pair is diagonal with the Duffing spectrum") {
  const ComplexMatrix h = build_static_hamiltonian(uncoupled());
  CHECK(is_hermitian(h));
  CHECK(h(5, 5).real() == doctest::Approx(kTwoPi * 15.6).epsilon(1e-14));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const auto& ev = es.eigenvalues();
  CHECK(std::any_of(ev.data(), ev.data() + ev.size(),
                    [](double e) { return std::abs(e - kTwoPi * 15.6) < 1e-10; }));
}

TEST_CASE("reference device: dressing shift is of order J^2 / detuning") {
  const DeviceParams p = DeviceParams::reference();
  CHECK(is_hermitian(build_static_hamiltonian(p)));
  const auto e = dressed_energies(p);
  const double expected = p.coupling_j * p.coupling_j / std::abs(p.omega1 - p.omega2);  // 1.2e-5 GHz
  const double shift = std::abs(e[1] - e[0] - p.omega2);
  CHECK(shift > 0.5 * expected);
  CHECK(shift < 2.0 * expected);
  CHECK(std::abs(e[3] - e[0] - p.omega1) == doctest::Approx(shift).epsilon(0.05));
}

TEST_CASE("drive operator matrix elements") {
  const DeviceParams p;
  const ComplexMatrix d2 = drive_operator(p, 2);
  const ComplexMatrix d1 = drive_operator(p, 1);
  CHECK(d2(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(d1(0, 3).real() == doctest::Approx(1.0));
  CHECK(d1(3, 6).real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(is_hermitian(d1));
  CHECK(is_hermitian(d2));
  CHECK_THROWS_AS(drive_operator(p, 3), InvalidParams);
}

TEST_CASE("transition frequencies") {
  const DeviceParams p;
  const auto bare = transition_frequencies(p, false);
  CHECK(bare.w01_2 == doctest::Approx(5.5));
  CHECK(bare.w12_2 == doctest::Approx(5.2));
  CHECK(bare.w12_1 == doctest::Approx(4.5));
  const auto dressed = transition_frequencies(p, true);
  CHECK(std::abs(dressed.w01_2 - 5.5) <= 5e-5);
  CHECK(std::abs(dressed.w12_2 - 5.2) <= 1e-4);
  CHECK(std::abs(dressed.w01_1 - 4.9) <= 5e-5);
}

TEST_CASE("device validation") {
  DeviceParams p;
  CHECK_NOTHROW(p.validate());
  p.delta1 = 0.1;
  CHECK_THROWS_AS(p.validate(), InvalidParams);
  p = {};
  p.coupling_j = 0.1;  // |J| must stay below |w1 - w2| / 10
  CHECK_THROWS_AS(p.validate(), InvalidParams);
  p = {};
  p.omega2 = -1.0;
  CHECK_THROWS_AS(build_static_hamiltonian(p), InvalidParams);
}

TEST_CASE("device JSON round trip and unknown keys") {
  const DeviceParams p;
  CHECK(device_from_json(device_to_json(p)) == p);
  const auto j = nlohmann::json::parse(
      R"({"omega1_ghz":4.9,"omega2_ghz":5.5,"delta1_ghz":-0.4,"delta2_ghz":-0.3,"j_ghz":0.0027,"levels":3})");
  CHECK(device_from_json(j) == p);
  auto bad = j;
  bad["mystery"] = 1;
  CHECK_THROWS_AS(device_from_json(bad), ConfigError);
}

TEST_CASE("bare frame without drive or coupling zeroes the 0-1 energies") {
  const DeviceParams p = uncoupled();
  const RotatingFrameHamiltonian h(p, FrameSpec::bare(p), Schedule{});
  const ComplexMatrix h0 = h.matrix(0.0);
  CHECK(max_abs_diff(h0, h.matrix(37.3)) < 1e-12);
  CHECK(h0.isDiagonal(1e-14));
  for (int idx : {0, 1, 3, 4}) CHECK(std::abs(h0(idx, idx)) < 1e-10);
  CHECK(h0(2, 2).real() == doctest::Approx(kTwoPi * p.delta2));
  CHECK(h0(6, 6).real() == doctest::Approx(kTwoPi * p.delta1));
}

TEST_CASE("zero frame reproduces the lab-frame Hamiltonian") {
  const DeviceParams p;
  const Schedule s = build_cr_schedule(p, Subspace::S01, 0.3, 40.0);
  const RotatingFrameHamiltonian h(p, FrameSpec{0.0, 0.0}, s);
  for (double t : {0.0, 13.7, 40.0, 61.2}) {
    const ComplexMatrix lab = build_static_hamiltonian(p) + s.channel_drive(1, t) * drive_operator(p, 1);
    CHECK(max_abs_diff(h.matrix(t), lab) < 1e-9);
  }
}

TEST_CASE("RWA drive on transmon 1 at 5.5 GHz rotates at 0.6 GHz in the bare frame") {
  const DeviceParams p;
  Schedule s;
  s.add(Play{1, 0.0, GaussianSquare{0.2, 5.0, 10.0, 100.0}, 5.5, 0.0, {2, Subspace::S01}});
  const RotatingFrameHamiltonian h(p, FrameSpec::bare(p), s, RwaSettings{true, 2.0});
  const double dt = 0.1;
  const cplx g0 = h.drive_coefficients(50.0)[0];
  const cplx g1 = h.drive_coefficients(50.0 + dt)[0];
  CHECK(std::abs(g0) == doctest::Approx(std::abs(g1)));
  CHECK(std::abs(std::arg(g1 / g0)) == doctest::Approx(kTwoPi * 0.6 * dt).epsilon(1e-9));
}

TEST_CASE("property: rotating-frame Hamiltonian is Hermitian on a 1 ns grid") {
  const DeviceParams p;
  const Schedule s = concat({build_cr_schedule(p, Subspace::S01, 0.45, 60.0),
                             build_cr_schedule(p, Subspace::S12, 0.15, 30.0, 20.0, 1.0)});
  for (bool rwa : {false, true}) {
    const RotatingFrameHamiltonian h(p, FrameSpec::bare(p), s, RwaSettings{rwa, 2.0});
    for (double t = 0.0; t <= s.duration(); t += 1.0) CHECK(is_hermitian(h.matrix(t)));
  }
}

TEST_CASE("property: static spectrum does not depend on the frame") {
  const DeviceParams p;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> ref(build_static_hamiltonian(p));
  for (FrameSpec f : {FrameSpec{0.0, 0.0}, FrameSpec::bare(p), FrameSpec{5.0, 5.2}}) {
    ComplexMatrix shifted = RotatingFrameHamiltonian(p, f, Schedule{}).matrix(0.0);
    shifted += kTwoPi * (f.frame1 * number_on(1) + f.frame2 * number_on(2));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(shifted);
    CHECK((es.eigenvalues() - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-9);
  }
}
