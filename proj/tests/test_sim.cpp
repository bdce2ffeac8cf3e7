#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "msmooth/sim.hpp"

using namespace msmooth;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "msmooth_sim_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two turbines over two minutes: enough steps for smoothing to show while the
// suite stays quick.
ScenarioConfig small_scenario() {
  ScenarioConfig cfg = default_scenario();
  cfg.n_turbines = 2;
  cfg.duration_s = 120.0;
  cfg.horizon_steps = 5;
  cfg.alpha = 0.25;
  cfg.scheduled_mw = 4.5;
  return cfg;
}

const RunResult& small_mpc() {
  static const RunResult r = run_scenario(small_scenario());
  return r;
}

const RunResult& small_mppt() {
  static const RunResult r = run_mppt_baseline(small_scenario());
  return r;
}

double total_variation(const std::vector<StepRecord>& recs) {
  double tv = 0.0;
  for (std::size_t k = 1; k < recs.size(); ++k)
    tv += std::abs(recs[k].farm_mw - recs[k - 1].farm_mw);
  return tv;
}

}  // namespace

TEST_CASE("ou_series follows the exact discretization") {
  const OuParams ou{9.0, 1.5, 60.0, 42};
  const double dt = 4.0;
  const std::vector<double> got = ou_series(ou, dt, 50, true);
  REQUIRE(got.size() == 50);

  NormalStream draws(ou.seed);
  const double decay = std::exp(-dt / ou.corr_time_s);
  const double shock = ou.stdev * std::sqrt(1.0 - decay * decay);
  double x = ou.mean;
  for (std::size_t k = 0; k < got.size(); ++k) {
    if (k > 0) x = ou.mean + (x - ou.mean) * decay + shock * draws.next();
    CHECK(got[k] == std::max(x, 0.0));
  }
  CHECK(got[0] == ou.mean);  // starts on the mean, consuming no draw
}

TEST_CASE("ou_series long-run statistics") {
  const OuParams ou{3.0, 2.0, 60.0, 12345};
  const double dt = 4.0;
  const int n = 200000;
  const std::vector<double> x = ou_series(ou, dt, n, false);

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0, lag1 = 0.0;
  for (int k = 0; k < n; ++k) {
    var += (x[k] - mean) * (x[k] - mean);
    if (k > 0) lag1 += (x[k] - mean) * (x[k - 1] - mean);
  }
  var /= n;
  lag1 /= (n - 1);

  CHECK(std::abs(mean - ou.mean) < 0.15);
  CHECK(std::sqrt(var) == doctest::Approx(ou.stdev).epsilon(0.03));
  CHECK(lag1 / var == doctest::Approx(std::exp(-dt / ou.corr_time_s)).epsilon(0.02));
}

TEST_CASE("ou_series determinism and edge cases") {
  const OuParams ou{5.0, 1.0, 30.0, 99};
  CHECK(ou_series(ou, 2.0, 64, false) == ou_series(ou, 2.0, 64, false));
  OuParams other = ou;
  other.seed = 100;
  CHECK(ou_series(ou, 2.0, 64, false) != ou_series(other, 2.0, 64, false));

  OuParams flat = ou;
  flat.stdev = 0.0;
  for (double v : ou_series(flat, 2.0, 16, false)) CHECK(v == 5.0);

  CHECK(ou_series(ou, 2.0, 0, false).empty());

  OuParams neg = ou;
  neg.mean = -5.0;
  const std::vector<double> clamped = ou_series(neg, 2.0, 200, true);
  double lo = 1.0;
  for (double v : clamped) {
    CHECK(v >= 0.0);
    lo = std::min(lo, v);
  }
  CHECK(lo == 0.0);  // a mean of -5 pins the clamp

  CHECK_THROWS_AS(ou_series(ou, 0.0, 4, false), ConfigError);
  OuParams bad = ou;
  bad.corr_time_s = 0.0;
  CHECK_THROWS_AS(ou_series(bad, 2.0, 4, false), ConfigError);
}

TEST_CASE("csv series: sampling and broadcast") {
  const fs::path two = write_file("two_rows.csv", "t_s,v\n0,8\n4,10\n");
  const auto a = load_csv_series(two, 1, 4.0, 100);
  REQUIRE(a.size() == 2);
  CHECK(a[0][0] == 8.0);
  CHECK(a[1][0] == 10.0);

  const fs::path wide = write_file("wide_gap.csv", "0,8\n8,10\n");
  const auto b = load_csv_series(wide, 1, 4.0, 100);
  REQUIRE(b.size() == 3);
  CHECK(b[1][0] == doctest::Approx(9.0).epsilon(1e-12));  // midpoint

  // One column broadcast across four turbines.
  const auto c = load_csv_series(two, 4, 4.0, 100);
  REQUIRE(c.size() == 2);
  for (int n = 0; n < 4; ++n) CHECK(c[1][static_cast<std::size_t>(n)] == 10.0);

  // Distinct columns stay distinct.
  const fs::path pair = write_file("pair.csv", "0,8,12\n4,10,14\n");
  const auto d = load_csv_series(pair, 2, 2.0, 100);
  REQUIRE(d.size() == 3);
  CHECK(d[1][0] == doctest::Approx(9.0));
  CHECK(d[1][1] == doctest::Approx(13.0));

  // Truncation: by max_steps, and by the end of the data (no extrapolation).
  CHECK(load_csv_series(two, 1, 4.0, 1).size() == 1);
  const fs::path short_t = write_file("short_t.csv", "0,8\n7.9,10\n");
  CHECK(load_csv_series(short_t, 1, 4.0, 100).size() == 2);

  // CRLF endings parse the same.
  const fs::path crlf = write_file("crlf.csv", "t,v\r\n0,8\r\n4,10\r\n");
  CHECK(load_csv_series(crlf, 1, 4.0, 100) == a);
}

TEST_CASE("csv series: malformed input names the file and line") {
  const fs::path bad_num = write_file("bad_num.csv", "0,8\n4,oops\n");
  CHECK_THROWS_WITH_AS(load_csv_series(bad_num, 1, 4.0, 10),
                       doctest::Contains("bad_num.csv:2"), ConfigError);

  const fs::path backwards = write_file("backwards.csv", "0,8\n4,9\n2,10\n");
  CHECK_THROWS_WITH_AS(load_csv_series(backwards, 1, 4.0, 10),
                       doctest::Contains("strictly increasing"), ConfigError);

  const fs::path ragged = write_file("ragged.csv", "0,8,9\n4,10\n");
  CHECK_THROWS_WITH_AS(load_csv_series(ragged, 1, 4.0, 10),
                       doctest::Contains("ragged"), ConfigError);

  const fs::path header_only = write_file("header_only.csv", "t_s,v\n");
  CHECK_THROWS_WITH_AS(load_csv_series(header_only, 1, 4.0, 10),
                       doctest::Contains("no data rows"), ConfigError);

  const fs::path narrow = write_file("narrow.csv", "0,8,9\n4,10,11\n");
  CHECK_THROWS_AS(load_csv_series(narrow, 4, 4.0, 10), ConfigError);

  CHECK_THROWS_AS(load_csv_series(scratch_dir() / "absent.csv", 1, 4.0, 10),
                  IoError);
}

TEST_CASE("summarize: energy, mileage, additivity") {
  StepRecord r;
  r.v = {9.0};
  r.omega = {1.2};
  r.beta = {0.0};
  r.command_mw = {3.6};
  r.p_e_mw = {3.6};
  r.farm_mw = 3.6;
  r.g_mw = {0.0, 0.0};
  const SimulationSummary one = summarize({r}, "mppt", 0.0, 1.0, 0.0);
  CHECK(one.energy_kwh == doctest::Approx(1.0).epsilon(1e-12));  // 3.6 MJ
  CHECK(one.mileage_settlement == 0.0);
  CHECK(one.mileage_quadratic == 0.0);

  StepRecord a = r, b = r;
  a.g_mw = {1.0, 0.0};
  a.gamma = 2.0;
  a.step_penalty = 4.0;
  b.g_mw = {0.0, 0.0};
  b.gamma = 2.0;
  const SimulationSummary two = summarize({a, b}, "mpc", 0.3, 1.0, 0.0);
  CHECK(two.mileage_settlement == doctest::Approx(4.0));  // 2*|1-0| + 2*|0-1|
  CHECK(two.mileage_quadratic == doctest::Approx(4.0));
  CHECK(two.steps == 2);

  // Energy and the quadratic index add across a split record stream.
  const SimulationSummary head = summarize({a}, "mpc", 0.3, 1.0, 0.0);
  const SimulationSummary tail = summarize({b}, "mpc", 0.3, 1.0, 0.0);
  CHECK(two.energy_kwh ==
        doctest::Approx(head.energy_kwh + tail.energy_kwh).epsilon(1e-9));
  CHECK(two.mileage_quadratic ==
        doctest::Approx(head.mileage_quadratic + tail.mileage_quadratic)
            .epsilon(1e-9));

  const SimulationSummary empty = summarize({}, "mpc", 0.3, 4.0, 0.0);
  CHECK(empty.steps == 0);
  CHECK(empty.energy_kwh == 0.0);
}

TEST_CASE("scenario validation") {
  CHECK_NOTHROW(default_scenario().validate());

  ScenarioConfig cfg = default_scenario();
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = default_scenario();
  cfg.cascade_substeps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = default_scenario();
  cfg.duration_s = 1.0;  // shorter than one step
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = default_scenario();
  cfg.wind.csv_path = "also_a_file.csv";  // both sources at once
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = default_scenario();
  cfg.units.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("runs reproduce byte for byte") {
  const ScenarioConfig cfg = small_scenario();
  const RunResult a = run_scenario(cfg);
  const RunResult b = run_scenario(cfg);

  const fs::path pa = scratch_dir() / "det_a.csv";
  const fs::path pb = scratch_dir() / "det_b.csv";
  write_records_csv(pa, a.records);
  write_records_csv(pb, b.records);
  CHECK(slurp(pa) == slurp(pb));
  CHECK(summary_to_json(a.summary) == summary_to_json(b.summary));
}

TEST_CASE("records csv round trips") {
  const fs::path p1 = scratch_dir() / "rt_1.csv";
  const fs::path p2 = scratch_dir() / "rt_2.csv";
  write_records_csv(p1, small_mpc().records);
  const std::vector<StepRecord> back = read_records_csv(p1);
  REQUIRE(back.size() == small_mpc().records.size());
  write_records_csv(p2, back);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("every record balances power against the plan") {
  for (const auto* run : {&small_mpc(), &small_mppt()}) {
    REQUIRE(!run->records.empty());
    for (const StepRecord& r : run->records) {
      const double residual =
          r.agc_mw - (r.imbalance_mw - (r.farm_mw - small_scenario().scheduled_mw));
      CHECK(std::abs(residual) <= 1e-9);
      if (r.dispatch_feasible) {
        double sum = 0.0;
        for (double g : r.g_mw) sum += g;
        CHECK(std::abs(sum - r.agc_mw) <= 1e-9);
      }
      double farm = 0.0;
      for (double pe : r.p_e_mw) farm += pe;
      CHECK(farm == doctest::Approx(r.farm_mw).epsilon(1e-12));
    }
  }
}

TEST_CASE("optimized run smooths the units' work without inventing energy") {
  const SimulationSummary& opt = small_mpc().summary;
  const SimulationSummary& base = small_mppt().summary;

  CHECK(opt.energy_available_kwh == base.energy_available_kwh);  // same wind
  CHECK(opt.energy_kwh <= opt.energy_available_kwh * 1.001);
  CHECK(base.energy_kwh <= base.energy_available_kwh * 1.001);
  CHECK(opt.mileage_quadratic < base.mileage_quadratic);
  CHECK(opt.mileage_settlement < base.mileage_settlement);
  CHECK(total_variation(small_mpc().records) <=
        total_variation(small_mppt().records));
  CHECK(opt.mode == "mpc");
  CHECK(base.mode == "mppt");
  CHECK(base.solver_iterations_mean == 0.0);
}

TEST_CASE("csv-driven scenario shrinks to the trace") {
  // 41 seconds of wind at dt=4 gives 11 samples; the run stops there even
  // though the configured duration asks for more.
  std::string wind_csv = "t_s,v1,v2\n";
  for (int k = 0; k <= 10; ++k) {
    wind_csv += std::to_string(4 * k) + "," + std::to_string(8.0 + 0.1 * k) +
                "," + std::to_string(9.0 - 0.05 * k) + "\n";
  }
  const fs::path wp = write_file("wind_trace.csv", wind_csv);

  ScenarioConfig cfg = small_scenario();
  cfg.wind.ou.reset();
  cfg.wind.csv_path = wp.string();
  cfg.duration_s = 400.0;
  const RunResult run = run_mppt_baseline(cfg);
  CHECK(run.records.size() == 11);
  CHECK(run.records.front().v[0] == doctest::Approx(8.0));
  CHECK(run.records.back().v[0] == doctest::Approx(9.0));
  CHECK(run.records.back().v[1] == doctest::Approx(8.5));
}
