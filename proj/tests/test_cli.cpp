#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "msmooth/scenario.hpp"

using namespace msmooth;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "msmooth_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path o = scratch_dir() / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path e = scratch_dir() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string(CLI_BIN) + " " + args + " > " + o.string() +
                          " 2> " + e.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

// Ten 4 s cycles with one turbine: fast enough to shell out repeatedly.
std::string tiny_config(double alpha) {
  std::ostringstream ss;
  ss << "{\n"
     << "  \"alpha\": " << alpha << ",\n"
     << "  \"duration_s\": 40,\n"
     << "  \"horizon_steps\": 3,\n"
     << "  \"n_turbines\": 1,\n"
     << "  \"scheduled_mw\": 2.2\n"
     << "}\n";
  return ss.str();
}

}  // namespace

TEST_CASE("parse_scenario: defaults, overrides, rejects") {
  const ScenarioConfig dflt = parse_scenario("{}");
  CHECK(dflt.alpha == 0.3);
  CHECK(dflt.n_turbines == 4);
  CHECK(dflt.units.size() == 3);

  const ScenarioConfig some = parse_scenario(
      "{\"alpha\": 0.55, \"n_turbines\": 2, \"scheduled_mw\": 4.0}");
  CHECK(some.alpha == 0.55);
  CHECK(some.n_turbines == 2);
  CHECK(some.scheduled_mw == 4.0);
  CHECK(some.dt == 4.0);  // untouched keys keep defaults

  CHECK_THROWS_WITH_AS(parse_scenario("{\"alhpa\": 0.5}"),
                       doctest::Contains("alhpa"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("{\"alpha\": \"high\"}"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("not json at all"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[1,2,3]"), ConfigError);
  CHECK_THROWS_AS(
      parse_scenario("{\"wind\": {\"type\": \"sinusoid\"}}"), ConfigError);
}

TEST_CASE("scenario json round trips") {
  const std::string once = scenario_to_json(default_scenario());
  const std::string twice = scenario_to_json(parse_scenario(once));
  CHECK(once == twice);

  ScenarioConfig cfg = default_scenario();
  cfg.alpha = 0.7;
  cfg.wind.ou->seed = 9001;
  cfg.units[1].offer_price = 3.5;
  const ScenarioConfig back = parse_scenario(scenario_to_json(cfg));
  CHECK(back.alpha == 0.7);
  CHECK(back.wind.ou->seed == 9001);
  CHECK(back.units[1].offer_price == 3.5);
}

TEST_CASE("load_scenario maps file problems to IoError") {
  CHECK_THROWS_AS(load_scenario(scratch_dir() / "nope.json"), IoError);
  const fs::path p = write_file("ok.json", tiny_config(0.3));
  CHECK(load_scenario(p).n_turbines == 1);
}

TEST_CASE("cli: bad invocations") {
  const CliResult none = run_cli("");
  CHECK(none.code == 1);

  const CliResult unknown = run_cli("frobnicate");
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("Usage") != std::string::npos);

  const CliResult badflag = run_cli("run --no-such-flag");
  CHECK(badflag.code == 1);

  const CliResult missing = run_cli("run --config /definitely/not/here.json");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("io error") != std::string::npos);
  CHECK(missing.err.find("here.json") != std::string::npos);

  const fs::path garbled = write_file("garbled.json", "{\"alpha\": }");
  const CliResult bad = run_cli("run --config " + garbled.string());
  CHECK(bad.code == 1);
  CHECK(bad.err.find("config error") != std::string::npos);
}

TEST_CASE("cli: run produces the full output set") {
  const fs::path cfg = write_file("run_cfg.json", tiny_config(0.3));
  const fs::path out = scratch_dir() / "run_out";
  const CliResult r = run_cli("run --config " + cfg.string() + " --out " + out.string());
  REQUIRE(r.code == 0);
  for (const char* name : {"records.csv", "summary.json", "baseline_records.csv",
                           "baseline_summary.json", "timing.txt"}) {
    CAPTURE(name);
    CHECK(fs::exists(out / name));
  }
  CHECK(r.out.find("\"mode\": \"mpc\"") != std::string::npos);
  CHECK(r.out.find("energy") != std::string::npos);

  // Header plus ten cycles.
  std::istringstream lines(slurp(out / "records.csv"));
  int n = 0;
  std::string line;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 11);
}

TEST_CASE("cli: baseline subcommand stops at the baseline") {
  const fs::path cfg = write_file("base_cfg.json", tiny_config(0.3));
  const fs::path out = scratch_dir() / "base_out";
  const CliResult r = run_cli("baseline --config " + cfg.string() + " --out " + out.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "baseline_records.csv"));
  CHECK(fs::exists(out / "baseline_summary.json"));
  CHECK_FALSE(fs::exists(out / "records.csv"));
  CHECK(r.out.find("\"mode\": \"mppt\"") != std::string::npos);
}

TEST_CASE("cli: --alpha override matches an edited config") {
  const fs::path implicit = write_file("alpha_in_file.json", tiny_config(0.55));
  const fs::path base = write_file("alpha_default.json", tiny_config(0.3));
  const fs::path out_a = scratch_dir() / "alpha_a";
  const fs::path out_b = scratch_dir() / "alpha_b";
  REQUIRE(run_cli("run --config " + implicit.string() + " --out " + out_a.string()).code == 0);
  REQUIRE(run_cli("run --config " + base.string() + " --alpha 0.55 --out " +
                  out_b.string()).code == 0);
  CHECK(slurp(out_a / "records.csv") == slurp(out_b / "records.csv"));
  CHECK(slurp(out_a / "summary.json") == slurp(out_b / "summary.json"));
}

TEST_CASE("cli: --seed steers both synthetic traces") {
  const fs::path cfg = write_file("seed_cfg.json", tiny_config(0.3));
  const fs::path out_a = scratch_dir() / "seed_a";
  const fs::path out_b = scratch_dir() / "seed_b";
  const fs::path out_c = scratch_dir() / "seed_c";
  const std::string common = "run --config " + cfg.string() + " --seed 7 --out ";
  REQUIRE(run_cli(common + out_a.string()).code == 0);
  REQUIRE(run_cli(common + out_b.string()).code == 0);
  REQUIRE(run_cli("run --config " + cfg.string() + " --seed 8 --out " +
                  out_c.string()).code == 0);
  CHECK(slurp(out_a / "records.csv") == slurp(out_b / "records.csv"));
  CHECK(slurp(out_a / "records.csv") != slurp(out_c / "records.csv"));
}

TEST_CASE("cli: pareto sweep orders the front by alpha") {
  const fs::path cfg = write_file("pareto_cfg.json", tiny_config(0.3));
  const fs::path out = scratch_dir() / "pareto_out";
  const CliResult r = run_cli("pareto --config " + cfg.string() +
                              " --alphas 0.8,0.2 --out " + out.string());
  REQUIRE(r.code == 0);
  const std::string csv = slurp(out / "pareto.csv");
  std::istringstream lines(csv);
  std::string header, first, second;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, first));
  REQUIRE(std::getline(lines, second));
  CHECK(header ==
        "alpha,energy_kwh,mileage_quadratic_dollar2_s,mileage_settlement_dollars,"
        "mean_abs_agc_mw");
  CHECK(first.substr(0, 4) == "0.2,");
  CHECK(second.substr(0, 4) == "0.8,");
  CHECK(fs::exists(out / "summary_alpha_0p2.json"));
  CHECK(fs::exists(out / "summary_alpha_0p8.json"));

  const CliResult bad = run_cli("pareto --config " + cfg.string() +
                                " --alphas 0.2,1.4 --out " + out.string());
  CHECK(bad.code == 1);
}

TEST_CASE("cli: fit-cp reports the surface") {
  const fs::path out = scratch_dir() / "fit_out";
  const CliResult r = run_cli("fit-cp --out " + out.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out / "cp_fit.json"));
  for (const char* key : {"lambda_opt", "cp_max", "rmse", "c11", "c33"}) {
    CAPTURE(key);
    CHECK(r.out.find(key) != std::string::npos);
  }
}

TEST_CASE("cli: plot renders an svg from records") {
  const fs::path cfg = write_file("plot_cfg.json", tiny_config(0.3));
  const fs::path out = scratch_dir() / "plot_run";
  REQUIRE(run_cli("run --config " + cfg.string() + " --out " + out.string()).code == 0);

  const fs::path plot_out = scratch_dir() / "plot_svg";
  const CliResult r = run_cli("plot " + (out / "records.csv").string() + " " +
                              (out / "baseline_records.csv").string() + " --out " +
                              plot_out.string());
  REQUIRE(r.code == 0);
  const std::string svg = slurp(plot_out / "power.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  const CliResult gone = run_cli("plot /no/records/here.csv --out " + plot_out.string());
  CHECK(gone.code == 2);
}
