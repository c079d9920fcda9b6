#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qutritcr/errors.hpp"
#include "qutritcr/experiments.hpp"
#include "support.hpp"

using namespace qutritcr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qutritcr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// A store whose gates are placeholders: empty schedules acting as identity.
CalibrationStore placeholder_store(const ExperimentConfig& c) {
  CalibrationStore s;
  s.config_hash = config_hash(c);
  s.timestamp = "1970-01-01T00:00:00Z";
  for (const auto& name : store_gate_names()) {
    CalibratedGate g;
    g.name = name;
    g.achieved = identity(9);
    g.target = identity(9);
    g.fidelity_to_target = 1.0;
    g.params = {{"kind", "placeholder"}};
    s.gates.push_back(g);
  }
  return s;
}

}  // namespace

TEST_CASE("sample_shots: point mass") {
  std::array<double, 9> p{};
  p[0] = 1.0;
  const auto counts = sample_shots(p, 1000, 3);
  CHECK(counts[0] == 1000);
  for (int k = 1; k < 9; ++k) CHECK(counts[static_cast<std::size_t>(k)] == 0);
}

TEST_CASE("sample_shots: uniform counts are within five standard deviations") {
  std::array<double, 9> p;
  p.fill(1.0 / 9.0);
  const long long n = 9'000'000;
  const double sd = std::sqrt(n * (1.0 / 9.0) * (8.0 / 9.0));
  for (std::uint64_t seed : {0u, 7u, 12345u}) {
    const auto counts = sample_shots(p, n, seed);
    for (long long c : counts) CHECK(std::abs(static_cast<double>(c) - 1e6) <= 5.0 * sd);
  }
}

TEST_CASE("sample_shots is deterministic per seed") {
  const StateVector psi = test::random_state(9, 4);
  std::array<double, 9> p{};
  for (int k = 0; k < 9; ++k) p[static_cast<std::size_t>(k)] = std::norm(psi[k]);
  CHECK(sample_shots(p, 100000, 42) == sample_shots(p, 100000, 42));
  CHECK(sample_shots(p, 100000, 42) != sample_shots(p, 100000, 43));
}

TEST_CASE("sample_shots rejects bad distributions") {
  std::array<double, 9> p{};
  p[0] = 0.9;
  CHECK_THROWS_AS(sample_shots(p, 10, 1), BadDistribution);
  p[0] = 1.1;
  p[1] = -0.1;
  CHECK_THROWS_AS(sample_shots(p, 10, 1), BadDistribution);
  p[0] = std::nan("");
  p[1] = 0.0;
  CHECK_THROWS_AS(sample_shots(p, 10, 1), BadDistribution);
  std::array<double, 3> short_p{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(sample_shots(short_p, 10, 1), BadDistribution);
  p[0] = 1.0;
  CHECK_THROWS_AS(sample_shots(p, 0, 1), InvalidParams);
}

TEST_CASE("property: shot counts always sum to the shot number") {
  for (int k = 0; k < 30; ++k) {
    const StateVector psi = test::random_state(9, 900 + k);
    std::array<double, 9> p{};
    for (int i = 0; i < 9; ++i) p[static_cast<std::size_t>(i)] = std::norm(psi[i]);
    const long long shots = 1 + 997 * k;
    const auto counts = sample_shots(p, shots, static_cast<std::uint64_t>(k));
    long long total = 0;
    for (long long c : counts) {
      CHECK(c >= 0);
      total += c;
    }
    CHECK(total == shots);
  }
}

TEST_CASE("property: shot-estimated fidelity converges to the exact value") {
  const BellCircuit bell = bell_reference_circuit();
  const ComplexMatrix u = circuit_unitary(bell.gates);
  // a state with exact fidelity 0.9 to the ideal output
  ComplexVector v = std::sqrt(0.9) * bell.target.amplitudes();
  v(1) = std::sqrt(0.1);
  const StateVector psi(v);
  const double exact = state_fidelity(psi, bell.target);
  REQUIRE(exact == doctest::Approx(0.9));
  double previous = 1.0;
  for (long long shots : {1000LL, 10000LL, 100000LL}) {
    double mean_error = 0.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const MetricReport m = estimate_fidelity_shots(psi, u, shots, seed);
      mean_error += std::abs(m.value - exact) / 40.0;
      CHECK(std::abs(m.value - exact) <= 5.0 * m.stderr_value.value());
    }
    CHECK(mean_error < previous);
    CHECK(mean_error < 2.0 * std::sqrt(0.09 / static_cast<double>(shots)));
    previous = mean_error;
  }
}

TEST_CASE("shot-estimated concurrence") {
  const MetricReport bell = estimate_concurrence_shots(test::bell(), 100000, 8);
  CHECK(bell.value == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(bell.name == "concurrence_shots");
  CHECK(bell.seed == 8u);
  const MetricReport product = estimate_concurrence_shots(StateVector::ket(1, 2), 1000, 8);
  CHECK(product.value == 0.0);
  const StateVector psi = test::random_state(9, 77);
  const MetricReport m = estimate_concurrence_shots(psi, 100000, 3);
  CHECK(std::abs(m.value - concurrence(psi)) <= 5.0 * m.stderr_value.value());
}

TEST_CASE("config JSON, validation and seed override") {
  ExperimentConfig c;
  c.seed = 99;
  c.shots = 1234;
  const auto j = config_to_json(c);
  const ExperimentConfig back = config_from_json(j);
  CHECK(back.seed == 99u);
  CHECK(back.shots == 1234);
  CHECK(back.device == c.device);

  auto bad = j;
  bad["shots"] = 0;
  CHECK_THROWS_AS(config_from_json(bad), InvalidParams);
  bad = j;
  bad["pipeline"] = "x";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = j;
  bad["device"]["omega1_ghz"] = "fast";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);

  const fs::path dir = scratch("config");
  std::ofstream(dir / "c.json") << j.dump();
  ::unsetenv("QUTRITCR_SEED");
  CHECK(load_config(dir / "c.json").seed == 99u);
  ::setenv("QUTRITCR_SEED", "31", 1);
  CHECK(load_config(dir / "c.json").seed == 31u);
  ::setenv("QUTRITCR_SEED", "3x", 1);
  CHECK_THROWS_AS(load_config(dir / "c.json"), ConfigError);
  ::unsetenv("QUTRITCR_SEED");
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("config hash tracks calibration-relevant settings only") {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.seed = 1;
  b.shots = 5;
  b.output = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.device.coupling_j = 0.003;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.calibration.cr01_amp_ghz = 0.44;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("store JSON round trip") {
  const ExperimentConfig c;
  const CalibrationStore s = placeholder_store(c);
  const auto j = store_to_json(s, c);
  const CalibrationStore back = store_from_json(j);
  CHECK(back.config_hash == s.config_hash);
  CHECK(back.gates.size() == store_gate_names().size());
  CHECK(back.get("CSX12").name == "CSX12");
  CHECK_THROWS_AS(back.get("nope"), ConfigError);
  CHECK_THROWS_AS(store_from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("calibrate is a no-op when the store matches the config") {
  const ExperimentConfig c;
  const fs::path dir = scratch("store");
  const fs::path path = dir / "cal.json";
  const std::string text = store_to_json(placeholder_store(c), c).dump(2) + "\n";
  std::ofstream(path) << text;
  std::ostringstream log;
  const CalibrationStore s = cmd_calibrate(c, path, &log);
  CHECK(s.reused);
  CHECK(slurp(path) == text);
  CHECK(log.str().find("nothing to do") != std::string::npos);
}

TEST_CASE("gatefid resolves gate names loosely") {
  const ExperimentConfig c;
  const fs::path dir = scratch("gatefid");
  std::ofstream(dir / "cal.json") << store_to_json(placeholder_store(c), c).dump();
  const GateFidelity g = cmd_gatefid(dir / "cal.json", "csx12");
  CHECK(g.name == "CSX12");
  CHECK(g.recomputed == doctest::Approx(1.0));
  CHECK(cmd_gatefid(dir / "cal.json", "cr01").name == "CR01(pi)");
  CHECK(cmd_gatefid(dir / "cal.json", "V(2)").name == "V(2)");
  CHECK_THROWS_AS(cmd_gatefid(dir / "cal.json", "x01"), UnknownGate);
  CHECK_THROWS_AS(cmd_gatefid(dir / "nothing.json", "csx12"), ConfigError);
}

TEST_CASE("rabi pipeline writes N rows and reruns byte-identically") {
  ExperimentConfig c;
  c.calibration.evolve.rwa = true;
  RabiRequest r;
  r.subspace = Subspace::S12;
  r.control = 2;
  r.amp_ghz = 0.15;
  r.t_max_ns = 600.0;
  r.points = 31;
  r.out_dir = scratch("rabi_a");
  const RabiResult a = cmd_rabi(c, r);
  r.out_dir = scratch("rabi_b");
  const RabiResult b = cmd_rabi(c, r);

  const std::string csv = slurp(a.csv_path);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "t_ns,p00,p01,p02,p10,p11,p12,p20,p21,p22");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 31);

  CHECK(csv == slurp(b.csv_path));
  CHECK(slurp(a.sidecar_path) == slurp(b.sidecar_path));
  const auto side = nlohmann::json::parse(slurp(a.sidecar_path));
  CHECK(side.at("fits").size() == 3);
  CHECK(side.at("summary").contains("phase_difference_2_0_rad"));

  r.points = 1;
  CHECK_THROWS_AS(cmd_rabi(c, r), InvalidParams);
}
