#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "brillouin/cli.hpp"

using namespace brillouin;
using namespace brillouin::cli;

namespace {

RunConfig parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/brillouin_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("parse_config defaults and overrides") {
  const RunConfig def = parse_string("");
  CHECK(def.gamma_hz == 0.1e6);
  CHECK(def.Gamma_hz == 2e6);
  CHECK(def.g_over_Gamma == 30.0);
  CHECK(def.tau1_s == 11e-9);
  CHECK_FALSE(def.k_per_m.has_value());

  const RunConfig cfg = parse_string(
      "# comment line\n"
      "gamma_hz = 0.2e6   # trailing comment\n"
      "\n"
      "T_m_K=300\n"
      "delta_a_over_Gamma = 0.4\n"
      "samples = 50\n");
  CHECK(cfg.gamma_hz == 0.2e6);
  CHECK(cfg.T_m_K == 300.0);
  CHECK(cfg.delta_a_over_Gamma.value() == 0.4);
  CHECK(cfg.samples == 50);
}

TEST_CASE("parse_config diagnostics carry line numbers") {
  auto check_throws_with = [](const std::string& text, const std::string& needle) {
    try {
      parse_string(text);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  check_throws_with("gamma_hz = 0.2e6\nbogus_key = 1\n", "line 2");
  check_throws_with("gamma_hz = 0.2e6\nbogus_key = 1\n", "bogus_key");
  check_throws_with("gamma_hz = twelve\n", "not a number");
  check_throws_with("gamma_hz 0.2e6\n", "key=value");
  check_throws_with("gamma_hz = 1.5x\n", "trailing");
  check_throws_with("k_per_m = 10\ndelta_a_over_Gamma = 0.2\n", "mutually exclusive");
  check_throws_with("sweep_var = T_m_K\nsweep_min = 5\nsweep_max = 1\n", "sweep_min");
  check_throws_with("sweep_spacing = cubic\n", "linear or log");
}

TEST_CASE("parse_config_file reports missing files") {
  CHECK_THROWS_AS(parse_config_file("/nonexistent/cfg.ini"), ConfigError);
}

TEST_CASE("to_params converts units") {
  RunConfig cfg;
  const SystemParams p = to_params(cfg);
  CHECK(p.Gamma == Catch::Approx(2.0 * M_PI * 2e6).epsilon(1e-15));
  CHECK(p.g == Catch::Approx(30.0 * p.Gamma).epsilon(1e-15));
  CHECK(p.gamma_tilde == p.gamma);
  CHECK(p.v_opt == Catch::Approx(kSpeedOfLight / 2.4).epsilon(1e-15));
  // Default operating point: Delta_a = 0.2 Gamma.
  CHECK(detunings(p).delta_a / p.Gamma == Catch::Approx(0.2).epsilon(1e-12));

  cfg.k_per_m = 123.0;
  CHECK(to_params(cfg).k == 123.0);
  cfg.k_per_m.reset();
  cfg.delta_a_over_Gamma = 0.0;
  CHECK(to_params(cfg).k == 0.0);
  cfg.gamma_tilde_hz = 0.05e6;
  CHECK(to_params(cfg).gamma_tilde == Catch::Approx(2.0 * M_PI * 0.05e6).epsilon(1e-15));
}

TEST_CASE("sweep_values spacing") {
  RunConfig cfg;
  cfg.sweep_var = "T_m_K";
  cfg.sweep_min = 10.0;
  cfg.sweep_max = 300.0;
  cfg.sweep_count = 5;
  const auto lin = sweep_values(cfg);
  REQUIRE(lin.size() == 5);
  CHECK(lin.front() == 10.0);
  CHECK(lin.back() == 300.0);
  CHECK(lin[2] == Catch::Approx(155.0).epsilon(1e-12));
  cfg.sweep_spacing = "log";
  const auto lg = sweep_values(cfg);
  CHECK(lg.front() == Catch::Approx(10.0).epsilon(1e-12));
  CHECK(lg.back() == Catch::Approx(300.0).epsilon(1e-12));
  CHECK(lg[2] == Catch::Approx(std::sqrt(10.0 * 300.0)).epsilon(1e-12));
  cfg.sweep_min = 0.0;
  CHECK_THROWS_AS(sweep_values(cfg), ConfigError);
}

TEST_CASE("entangle output is reproducible and carries header plus summary") {
  RunConfig cfg;
  cfg.reproducible = true;
  cfg.samples = 40;
  cfg.tau1_s = 3e-9;
  TempFile out("entangle.csv");
  REQUIRE(cmd_entangle(cfg, out.path) == kExitOk);
  const std::string first = slurp(out.path);
  REQUIRE(cmd_entangle(cfg, out.path) == kExitOk);
  CHECK(first == slurp(out.path));
  CHECK(first.find("# gamma_hz=") != std::string::npos);
  CHECK(first.find("t_s,E_N_exact") != std::string::npos);
  CHECK(first.find("# summary peak_E_N=") != std::string::npos);
  CHECK(first.find("generated") == std::string::npos);
}

TEST_CASE("entangle sweep writes one file per coupling") {
  RunConfig cfg;
  cfg.reproducible = true;
  cfg.samples = 10;
  cfg.tau1_s = 3e-9;
  cfg.sweep_var = "g_over_Gamma";
  cfg.sweep_min = 10.0;
  cfg.sweep_max = 30.0;
  cfg.sweep_count = 2;
  TempFile out("sweepg.csv");
  TempFile g10("sweepg_g10.csv");
  TempFile g30("sweepg_g30.csv");
  REQUIRE(cmd_entangle(cfg, out.path) == kExitOk);
  CHECK(slurp(g10.path).find("g_over_Gamma=10") != std::string::npos);
  CHECK(slurp(g30.path).find("g_over_Gamma=30") != std::string::npos);

  cfg.sweep_var = "T_m_K";
  CHECK_THROWS_AS(cmd_entangle(cfg, out.path), ConfigError);
}

TEST_CASE("sweep-temp agrees with the entangle peak at the same point") {
  RunConfig cfg;
  cfg.reproducible = true;
  cfg.tau1_s = 3e-9;
  cfg.sweep_var = "T_m_K";
  cfg.sweep_min = 30.0;
  cfg.sweep_max = 30.0;
  cfg.sweep_count = 1;
  TempFile out("sweeptemp.csv");
  REQUIRE(cmd_sweep_temp(cfg, out.path) == kExitOk);
  const std::string text = slurp(out.path);
  CHECK(text.find("T_m_K,n_th,peak_E_N") != std::string::npos);

  // Extract the data row and compare its peak with a direct evaluation.
  std::istringstream in(text);
  std::string line, data_row;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && line.find("T_m_K,") != 0) data_row = line;
  }
  REQUIRE_FALSE(data_row.empty());
  double temp = 0.0, n_th = 0.0, peak = 0.0, peak_t = 0.0;
  REQUIRE(std::sscanf(data_row.c_str(), "%lf,%lf,%lf,%lf", &temp, &n_th, &peak, &peak_t) == 4);
  const SystemParams p = to_params(cfg);
  const auto direct = find_peak([&](double t) { return en_write_exact(p, t); }, cfg.tau1_s);
  CHECK(peak == Catch::Approx(direct.value).epsilon(1e-9));
  CHECK(n_th == Catch::Approx(thermal_occupancy(p)).epsilon(1e-12));

  RunConfig bad = cfg;
  bad.sweep_var = "k_per_m";
  CHECK_THROWS_AS(cmd_sweep_temp(bad, out.path), ConfigError);
}

TEST_CASE("sweep-k rejects a wrong axis and runs on the right one") {
  RunConfig cfg;
  cfg.reproducible = true;
  cfg.tau1_s = 2e-9;
  cfg.sweep_var = "k_per_m";
  cfg.sweep_min = 0.0;
  cfg.sweep_max = 2.0 * to_params(cfg).Gamma / (kSpeedOfLight / 2.4);
  cfg.sweep_count = 3;
  TempFile out("sweepk.csv");
  REQUIRE(cmd_sweep_k(cfg, out.path) == kExitOk);
  const std::string text = slurp(out.path);
  CHECK(text.find("k_per_m,delta_a_rad_s") != std::string::npos);
  RunConfig bad = cfg;
  bad.sweep_var = "T_m_K";
  CHECK_THROWS_AS(cmd_sweep_k(bad, out.path), ConfigError);
}

TEST_CASE("readout command emits the three protocol phases") {
  RunConfig cfg;
  cfg.reproducible = true;
  cfg.samples = 20;
  cfg.tau1_s = 1.5e-9;
  cfg.tau2_s = 1e-9;
  TempFile out("readout.csv");
  REQUIRE(cmd_readout(cfg, out.path) == kExitOk);
  const std::string text = slurp(out.path);
  CHECK(text.find(",write,") != std::string::npos);
  CHECK(text.find(",delay,") != std::string::npos);
  CHECK(text.find(",readout,") != std::string::npos);
  CHECK(text.find("# summary peak_E_N_tilde=") != std::string::npos);
  REQUIRE(cmd_readout(cfg, out.path) == kExitOk);
  CHECK(text == slurp(out.path));
}

TEST_CASE("validation checks pass at the default operating point") {
  RunConfig cfg;
  cfg.samples = 50;
  const auto checks = run_validation(cfg);
  REQUIRE(checks.size() >= 4);
  for (const auto& c : checks) {
    INFO(c.name << " measured " << c.measured << " bound " << c.bound);
    CHECK(c.pass);
  }
  std::ostringstream os;
  CHECK(cmd_validate(cfg, os) == kExitOk);
  CHECK(os.str().find("\"all_pass\": true") != std::string::npos);
}
