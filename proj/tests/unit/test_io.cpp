#include <doctest.h>

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "json.hpp"
#include "ppr/commands.hpp"
#include "ppr/config.hpp"
#include "ppr/io.hpp"
#include "ppr/phase_core.hpp"
#include "ppr/errors.hpp"
#include "test_util.hpp"

using namespace ppr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ppr_unit_" + name + "_" + std::to_string(std::random_device{}()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<double>> read_grid(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // k
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double(format_double(-INFINITY)) == -INFINITY);
  CHECK_THROWS(parse_double("1.5x"));
}

TEST_CASE("state CSV round trip") {
  fs::path dir = scratch("csv");
  std::mt19937_64 rng(2);
  std::vector<PhaseState> states;
  for (int i = 0; i < 25; ++i) states.push_back(testutil::random_state(rng, 6));
  std::vector<std::vector<double>> lead;
  for (int i = 0; i < 25; ++i) lead.push_back({static_cast<double>(i), 0.5 * i});
  write_states_csv(dir / "s.csv", states, {"n", "t"}, lead);
  CHECK(read_states_csv(dir / "s.csv", 2) == states);

  Eigen::MatrixXd m = testutil::random_orthogonal(rng, 5);
  write_matrix_csv(dir / "m.csv", m);
  CHECK(read_matrix_csv(dir / "m.csv") == m);
  fs::remove_all(dir);
}

TEST_CASE("log10 grid uses a sentinel for exact zeros") {
  auto g = log10_grid({{0.0, 1e-3}, {100.0, std::nan("")}});
  CHECK(g[0][0] == kLog10ZeroSentinel);
  CHECK(g[0][1] == doctest::Approx(-3.0));
  CHECK(g[1][0] == doctest::Approx(2.0));
  CHECK(std::isnan(g[1][1]));
}

TEST_CASE("dataset round trip") {
  fs::path dir = scratch("ds");
  std::mt19937_64 rng(3);
  TrainingSet t;
  t.S = 2;
  t.fine = "test";
  for (int i = 0; i < 5; ++i) {
    t.inputs.push_back(testutil::random_state(rng, 2));
    t.targets.push_back({testutil::random_state(rng, 2), testutil::random_state(rng, 2)});
  }
  save_dataset(dir / "d.csv", t, {{"dt", 0.1}});
  LoadedDataset l = load_dataset(dir / "d.csv");
  CHECK(l.data.S == 2);
  CHECK(l.data.inputs == t.inputs);
  CHECK(l.data.targets == t.targets);
  CHECK(l.header["config"]["dt"] == 0.1);
  fs::remove_all(dir);
}

TEST_CASE("simulate command") {
  fs::path dir = scratch("sim");
  json doc = json::parse(R"({"system": {"system": "fpu", "m": 3, "omega": 50}, "dt": 0.5, "N": 0,
                             "solver": {"scheme": "vv", "h": "2^-7"}})");
  cmd_simulate(ExperimentConfig::from_json(doc), dir);
  auto traj = read_states_csv(dir / "trajectory.csv", 2);
  REQUIRE(traj.size() == 1u);
  CHECK(traj[0] == fpu_initial_state(FpuSystem(3, 50.0)));

  doc["N"] = 4;
  doc["reference"] = doc["solver"];
  cmd_simulate(ExperimentConfig::from_json(doc), dir);
  CHECK(read_states_csv(dir / "trajectory.csv", 2).size() == 5u);
  // solver against itself
  for (const auto& row : read_grid(dir / "errors.csv")) CHECK(row.size() >= 2u);
  json manifest = json::parse(read_text(dir / "manifest.json"));
  CHECK(manifest["tool_version"] == "ppr 0.1.0");
  CHECK(manifest["config"]["N"] == 4);
  for (const auto& f : manifest["files"]) {
    CHECK(fs::exists(dir / f["path"].get<std::string>()));
    CHECK(sha256_file(dir / f["path"].get<std::string>()) == f["sha256"]);
  }
  fs::remove_all(dir);
}

TEST_CASE("parareal command with coarse equal to fine") {
  fs::path dir = scratch("pr");
  json doc = json::parse(R"({"system": {"system": "fpu", "m": 3, "omega": 50},
    "parareal": {"mode": "procrustes", "N": 6, "K": 2, "dt": 0.5,
                 "coarse": {"scheme": "css4", "h": "2^-8"}, "fine": {"scheme": "css4", "h": "2^-8"}}})");
  cmd_parareal(ExperimentConfig::from_json(doc), dir);
  auto grid = read_grid(dir / "tableau_traj_err.csv");
  REQUIRE(grid.size() == 3u);
  for (std::size_t n = 0; n <= 3; ++n) CHECK(grid[1][n] <= -12.0);
  CHECK(fs::exists(dir / "correctors" / "omega_k1.csv"));
  CHECK(fs::exists(dir / "stiff_energies_k2.csv"));
  CHECK(fs::exists(dir / "summary.json"));

  // identical inputs produce identical outputs
  fs::path again = scratch("pr2");
  cmd_parareal(ExperimentConfig::from_json(doc), again);
  for (const char* f : {"tableau_traj_err.csv", "tableau_energy_err.csv", "tableau_states.csv"}) {
    CHECK(sha256_file(dir / f) == sha256_file(again / f));
  }
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("bench command: the fine solver against itself has zero trajectory error") {
  fs::path dir = scratch("bench");
  json doc = json::parse(R"({"system": {"system": "fpu", "m": 3, "omega": 50}, "dt": 0.25, "calls": 3,
    "fine": {"scheme": "css4", "h": "2^-8"},
    "solvers": [{"name": "self", "scheme": "css4", "h": "2^-8"}, {"name": "vv", "scheme": "vv", "h": "2^-4"}]})");
  cmd_bench(ExperimentConfig::from_json(doc), dir);
  std::ifstream in(dir / "bench.csv");
  std::string header, self, vv;
  std::getline(in, header);
  std::getline(in, self);
  std::getline(in, vv);
  CHECK(header.rfind("solver,traj_err,energy_err", 0) == 0);
  // energy error is the solver's own drift from H(u0), shared by both runs of the same scheme
  CHECK(self.rfind("self,0,", 0) == 0);
  CHECK(vv.rfind("vv,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("configuration errors are typed") {
  json bad = json::parse(R"({"system": {"system": "fpu", "m": 3, "omega": 50}, "dt": 0.3, "N": 2,
                             "solver": {"scheme": "vv", "h": "2^-7"}})");
  CHECK_THROWS_AS(cmd_simulate(ExperimentConfig::from_json(bad), fs::temp_directory_path() / "ppr_unit_bad"),
                  ConfigError);
  CHECK_THROWS_AS(system_from_json(json::parse(R"({"system": "lorenz"})")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), Error);
  fs::remove_all(fs::temp_directory_path() / "ppr_unit_bad");
}
