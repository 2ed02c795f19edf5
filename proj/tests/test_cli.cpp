#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "effham/cli.hpp"

using namespace effham;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("effham_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    FAIL("missing column " << name);
    return -1;
  }
  double at(std::size_t row, const std::string& name) const {
    return std::stod(rows[row][column(name)]);
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Csv read_csv(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in);
  Csv csv;
  std::string line;
  std::getline(in, line);
  csv.header = split(line);
  while (std::getline(in, line)) csv.rows.push_back(split(line));
  return csv;
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in);
  return json::parse(in);
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cli::RunConfig config(json j, const fs::path& out) {
  cli::Overrides ov;
  ov.out = out;
  return cli::resolve(j, ov);
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(EFFHAM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sweep writes the table and certificates") {
  const auto dir = fresh_dir("sweep");
  std::ostringstream log;
  const auto run = config({{"preset", "constant_drift(1)"}, {"sweep", {{"count", 61}}}}, dir);
  REQUIRE(cli::cmd_sweep(run, log) == cli::kOk);
  const auto csv = read_csv(dir / "hamiltonian.csv");
  CHECK(csv.header == std::vector<std::string>{"p", "H", "residual", "cw_gap"});
  REQUIRE(csv.rows.size() == 61);
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const double p = csv.at(r, "p");
    CHECK(std::abs(csv.at(r, "H") - (0.5 * (p + 1) * (p + 1) - 0.5)) <= 1e-3);
  }
  const auto cert = read_json(dir / "certificates.json");
  CHECK(cert["samples"].size() == 61);
  CHECK(cert["failures"] == 0);
  CHECK(cert["resolution"] == 256);
}

TEST_CASE("grid without zero is augmented with a warning") {
  const auto dir = fresh_dir("augment");
  std::ostringstream log;
  const auto run = config({{"preset", "discrete_asymmetric(2,1)"},
                           {"sweep", {{"p_min", -1}, {"p_max", 1}, {"count", 4}}}},
                          dir);
  REQUIRE(cli::cmd_sweep(run, log) == cli::kOk);
  CHECK(log.str().find("inserted") != std::string::npos);
  const auto csv = read_csv(dir / "hamiltonian.csv");
  REQUIRE(csv.rows.size() == 5);
  CHECK(csv.at(2, "p") == 0.0);
  CHECK(read_json(dir / "certificates.json")["grid_augmented"] == true);
}

TEST_CASE("invalid model exits 2 with a report") {
  const auto dir = fresh_dir("invalid");
  const json model = {{"kind", "discrete"},
                      {"length", 3},
                      {"hop_plus", {{1, 0, 1}}},
                      {"hop_minus", {1}}};
  std::ostringstream log;
  const auto run = config({{"model", model}}, dir);
  CHECK(cli::cmd_sweep(run, log) == cli::kInvalid);
  const auto report = read_json(dir / "validation.json");
  CHECK(report["valid"] == false);
  CHECK(report["violations"][0]["kind"].get<std::string>().find("hop") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "hamiltonian.csv"));
  CHECK(cli::cmd_validate(run, log) == cli::kInvalid);
}

TEST_CASE("check passes every verdict on the detailed-balance preset") {
  const auto dir = fresh_dir("check");
  std::ostringstream log;
  const auto run = config({{"preset", "detailed_balance_pair"},
                           {"sweep", {{"count", 21}, {"N", 128}}},
                           {"check", {{"grid", 128}}}},
                          dir);
  REQUIRE(cli::cmd_check(run, log) == cli::kOk);
  const auto v = read_json(dir / "check.json");
  for (const char* key : {"h0", "convexity", "symmetry", "coercivity", "detailed_balance"}) {
    INFO(key);
    CHECK(v[key]["pass"] == true);
  }
  CHECK(v["symmetry"]["expected"] == true);
}

TEST_CASE("check flags the asymmetry of a tilted model") {
  const auto dir = fresh_dir("check_tilt");
  std::ostringstream log;
  const auto run = config({{"preset", "constant_drift(1)"}, {"sweep", {{"count", 13}}}}, dir);
  REQUIRE(cli::cmd_check(run, log) == cli::kOk);
  const auto v = read_json(dir / "check.json");
  CHECK(v["symmetry"]["pass"] == false);
  CHECK(v["symmetry"]["consistent"] == true);
  CHECK(v["convexity"]["pass"] == true);
  CHECK(v["coercivity"]["pass"] == true);
}

TEST_CASE("simulate writes passing verdicts for constant drift") {
  const auto dir = fresh_dir("simulate");
  std::ostringstream log;
  const auto run = config({{"preset", "constant_drift(1)"},
                           {"threads", 4},
                           {"simulate", {{"paths", 1000}, {"seed", 5}, {"dump_trajectory", true}}}},
                          dir);
  REQUIRE(cli::cmd_simulate(run, log) == cli::kOk);
  const auto csv = read_csv(dir / "summary.csv");
  CHECK(csv.header ==
        std::vector<std::string>{"epsilon", "mean_v", "sd", "se", "predicted_v", "verdict"});
  REQUIRE(csv.rows.size() == 3);
  for (const auto& row : csv.rows) CHECK(row.back() == "pass");
  CHECK(read_json(dir / "concentration.json")["sd_monotone"] == true);
  const auto tr = read_csv(dir / "trajectory.csv");
  CHECK(tr.header == std::vector<std::string>{"t", "x_lifted", "i"});
  CHECK(tr.rows.size() > 10);
}

TEST_CASE("simulate without a seed is a config error") {
  const auto dir = fresh_dir("noseed");
  std::ostringstream log;
  const auto run = config({{"preset", "constant_drift(1)"}, {"simulate", {{"paths", 10}}}}, dir);
  CHECK(cli::cmd_simulate(run, log) == cli::kInvalid);
  CHECK(log.str().find("seed") != std::string::npos);
}

TEST_CASE("legendre of the quadratic preset is v^2/2") {
  const auto dir = fresh_dir("legendre");
  std::ostringstream log;
  const auto run = config({{"preset", "quadratic"},
                           {"threads", 4},
                           {"sweep", {{"p_min", -4}, {"p_max", 4}, {"count", 161}, {"N", 2048}}},
                           {"legendre", {{"v_min", -2}, {"v_max", 2}, {"count", 41}}}},
                          dir);
  REQUIRE(cli::cmd_legendre(run, log) == cli::kOk);
  const auto csv = read_csv(dir / "lagrangian.csv");
  CHECK(csv.header == std::vector<std::string>{"v", "L", "pstar", "boundary_flag"});
  REQUIRE(csv.rows.size() == 41);
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const double v = csv.at(r, "v");
    CHECK(std::abs(csv.at(r, "L") - 0.5 * v * v) <= 1e-6);
    CHECK(csv.rows[r].back() == "0");
  }
  const auto rate = read_json(dir / "path_rate.json");
  CHECK(std::abs(rate["rate"].get<double>()) <= 1e-5);
}

TEST_CASE("velocity command") {
  const auto dir = fresh_dir("velocity");
  std::ostringstream log;
  REQUIRE(cli::cmd_velocity(config({{"preset", "discrete_asymmetric(2,1)"}}, dir), log) == cli::kOk);
  const auto csv = read_csv(dir / "velocity.csv");
  CHECK(std::abs(csv.at(0, "velocity") - 1.0) <= 1e-8);
}

TEST_CASE("config errors are rejected") {
  cli::Overrides ov;
  CHECK_THROWS(cli::resolve({{"preset", "quadratic"}, {"colour", 1}}, ov));
  CHECK_THROWS(cli::resolve({{"preset", "quadratic"}, {"preset_file", "x"}}, ov));
  CHECK_THROWS(cli::resolve(json::object(), ov));
  CHECK_THROWS(cli::resolve({{"model_file", "/nonexistent/model.json"}}, ov));
  const auto dir = fresh_dir("badblock");
  std::ostringstream log;
  CHECK(cli::cmd_sweep(config({{"preset", "quadratic"}, {"sweep", {{"pmin", 1}}}}, dir), log) ==
        cli::kInvalid);
}

TEST_CASE("executable exit codes and determinism") {
  const auto dir = fresh_dir("binary");
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << json{{"preset", "two_state_flashing"},
                             {"sweep", {{"count", 7}, {"N", 64}}},
                             {"simulate", {{"paths", 50}, {"scales", {0.1, 0.05}}}}}
                            .dump();
  const auto a = dir / "a", b = dir / "b";
  CHECK(run_binary("sweep --config " + cfg.string() + " --out " + a.string()) == 0);
  CHECK(run_binary("sweep --config " + cfg.string() + " --out " + b.string() + " --threads 3") == 0);
  CHECK(slurp(a / "hamiltonian.csv") == slurp(b / "hamiltonian.csv"));
  CHECK(slurp(a / "certificates.json") == slurp(b / "certificates.json"));

  CHECK(run_binary("simulate --config " + cfg.string() + " --out " + a.string() + " --seed 9") == 0);
  CHECK(run_binary("simulate --config " + cfg.string() + " --out " + b.string() +
                   " --seed 9 --threads 2") == 0);
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  CHECK(run_binary("simulate --config " + cfg.string() + " --out " + a.string()) == 2);

  const auto bad = dir / "bad.json";
  std::ofstream(bad) << R"({"preset": "quadratic", "unknown": true})";
  CHECK(run_binary("sweep --config " + bad.string() + " --out " + a.string()) == 2);
  CHECK(run_binary("sweep --preset no_such_model --out " + a.string()) == 2);
  CHECK(run_binary("frobnicate") == 2);
  CHECK(run_binary("validate --preset detailed_balance_pair --out " + a.string()) == 0);
}
