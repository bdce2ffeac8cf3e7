#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "msmooth/scenario.hpp"
#include "msmooth/sim.hpp"
#include "msmooth/svg_plot.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace msmooth;

namespace {

struct CommonFlags {
  std::string config;
  double alpha = -1.0;       // <0 = not set
  int horizon = -1;
  long long seed = -1;
  std::string out = "out";
};

ScenarioConfig load_with_overrides(const CommonFlags& f) {
  ScenarioConfig cfg = f.config.empty() ? default_scenario() : load_scenario(f.config);
  if (f.alpha >= 0.0) cfg.alpha = f.alpha;
  if (f.horizon >= 1) cfg.horizon_steps = f.horizon;
  if (f.seed >= 0) {
    // One seed steers both synthetic traces; the offset keeps their draw
    // streams apart from each other and from the per-turbine wind seeds.
    if (cfg.wind.ou) cfg.wind.ou->seed = static_cast<std::uint64_t>(f.seed);
    if (cfg.imbalance.ou)
      cfg.imbalance.ou->seed = static_cast<std::uint64_t>(f.seed) + 1000000;
  }
  cfg.validate();
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw IoError("cannot write " + path.string());
  outf << text;
  if (!outf) throw IoError("write failed: " + path.string());
}

std::string summary_json_text(const SimulationSummary& s) { return summary_to_json(s); }

void print_comparison(const SimulationSummary& mpc, const SimulationSummary& mppt) {
  std::printf("\n%-22s %18s %22s %26s\n", "", "energy (kWh)",
              "mileage settle ($)", "mileage quadratic ($^2 s)");
  std::printf("%-22s %18.1f %22.2f %26.4g\n",
              ("proposed (alpha=" + std::to_string(mpc.alpha).substr(0, 4) + ")").c_str(),
              mpc.energy_kwh, mpc.mileage_settlement, mpc.mileage_quadratic);
  std::printf("%-22s %18.1f %22.2f %26.4g\n", "mppt baseline", mppt.energy_kwh,
              mppt.mileage_settlement, mppt.mileage_quadratic);
}

std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  std::string s = buf;
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

int run_cmd(const CommonFlags& f, bool with_proposed) {
  const ScenarioConfig cfg = load_with_overrides(f);
  ensure_dir(f.out);
  const fs::path out(f.out);

  const RunResult base = run_mppt_baseline(cfg);
  write_records_csv(out / "baseline_records.csv", base.records);
  write_summary_json(out / "baseline_summary.json", base.summary);

  if (!with_proposed) {
    std::cout << summary_json_text(base.summary);
    return 0;
  }

  const RunResult run = run_scenario(cfg);
  write_records_csv(out / "records.csv", run.records);
  write_summary_json(out / "summary.json", run.summary);
  write_timing(out / "timing.txt", run.timing);

  std::cout << summary_json_text(run.summary);
  print_comparison(run.summary, base.summary);
  return 0;
}

int pareto_cmd(const CommonFlags& f, std::vector<double> alphas) {
  if (alphas.empty()) throw ConfigError("pareto: need at least one alpha");
  for (double a : alphas)
    if (!(a >= 0.0) || !(a <= 1.0))
      throw ConfigError("pareto: alphas must be in [0, 1]");
  std::sort(alphas.begin(), alphas.end());
  const ScenarioConfig cfg = load_with_overrides(f);
  ensure_dir(f.out);
  const fs::path out(f.out);

  const int n = static_cast<int>(alphas.size());
  std::vector<SimulationSummary> summaries(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  const int workers = std::min(effective_threads(), n);
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
#endif
  for (int i = 0; i < n; ++i) {
    try {
      ScenarioConfig point = cfg;
      point.alpha = alphas[static_cast<std::size_t>(i)];
      summaries[static_cast<std::size_t>(i)] = run_scenario(point).summary;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  (void)workers;
  for (const std::string& e : errors)
    if (!e.empty()) throw ConfigError("pareto point failed: " + e);

  std::string front = "alpha,energy_kwh,mileage_quadratic_dollar2_s,"
                      "mileage_settlement_dollars,mean_abs_agc_mw\n";
  for (int i = 0; i < n; ++i) {
    const SimulationSummary& s = summaries[static_cast<std::size_t>(i)];
    write_summary_json(out / ("summary_alpha_" + alpha_tag(s.alpha) + ".json"), s);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g\n", s.alpha,
                  s.energy_kwh, s.mileage_quadratic, s.mileage_settlement,
                  s.mean_abs_agc_mw);
    front += buf;
  }
  write_text(out / "pareto.csv", front);
  std::cout << front;
  return 0;
}

int fit_cp_cmd(const CommonFlags& f) {
  const ScenarioConfig cfg = f.config.empty() ? default_scenario() : load_scenario(f.config);
  const CpFitReport rep = fit_cp(cfg.cp_grid);
  nlohmann::ordered_json j;
  j["coefficients"] = {
      {"c11", rep.coeffs.c[0][0]}, {"c12", rep.coeffs.c[0][1]},
      {"c13", rep.coeffs.c[0][2]}, {"c21", rep.coeffs.c[1][0]},
      {"c22", rep.coeffs.c[1][1]}, {"c23", rep.coeffs.c[1][2]},
      {"c31", rep.coeffs.c[2][0]}, {"c32", rep.coeffs.c[2][1]},
      {"c33", rep.coeffs.c[2][2]},
  };
  j["lambda_opt"] = rep.coeffs.lambda_opt;
  j["cp_max"] = rep.coeffs.cp_max;
  j["rmse"] = rep.rmse;
  j["r_squared"] = rep.r_squared;
  j["r_squared_centered"] = rep.r_squared_centered;
  j["max_abs_error"] = rep.max_abs_error;
  j["grid_points"] = rep.n_points;
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  ensure_dir(f.out);
  write_text(fs::path(f.out) / "cp_fit.json", text);
  return 0;
}

int plot_cmd(const std::string& records_path, const std::string& baseline_path,
             const CommonFlags& f) {
  const std::vector<StepRecord> records = read_records_csv(records_path);
  if (records.empty()) throw ConfigError(records_path + ": no records");
  std::vector<StepRecord> baseline;
  if (!baseline_path.empty()) baseline = read_records_csv(baseline_path);
  ensure_dir(f.out);
  const fs::path svg = fs::path(f.out) / "power.svg";
  write_text(svg, render_power_svg(records, baseline.empty() ? nullptr : &baseline));
  std::cout << svg.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wind-farm power smoothing against regulation mileage"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto add_common = [&](CLI::App* sub, bool with_alpha = true) {
    sub->add_option("--config", flags.config, "scenario JSON path");
    if (with_alpha)
      sub->add_option("--alpha", flags.alpha, "energy/mileage trade-off in [0,1]");
    sub->add_option("--horizon", flags.horizon, "look-ahead steps");
    sub->add_option("--seed", flags.seed, "seed for synthetic traces");
    sub->add_option("--out", flags.out, "output directory (default: out)");
  };

  CLI::App* run = app.add_subcommand("run", "optimized run plus mppt comparison");
  add_common(run);
  CLI::App* baseline = app.add_subcommand("baseline", "mppt baseline only");
  add_common(baseline, false);

  CLI::App* pareto = app.add_subcommand("pareto", "alpha sweep");
  add_common(pareto, false);
  std::string alphas_arg = "0.2,0.5,0.8";
  pareto->add_option("--alphas", alphas_arg, "comma-separated alpha list");

  CLI::App* fitcp = app.add_subcommand("fit-cp", "fit the power-coefficient surface");
  add_common(fitcp, false);

  CLI::App* plot = app.add_subcommand("plot", "render a records CSV to SVG");
  std::string records_path, baseline_path;
  plot->add_option("records", records_path, "step-record CSV")->required();
  plot->add_option("baseline", baseline_path, "baseline records CSV");
  plot->add_option("--out", flags.out, "output directory (default: out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (app.got_subcommand(run)) return run_cmd(flags, true);
    if (app.got_subcommand(baseline)) return run_cmd(flags, false);
    if (app.got_subcommand(pareto)) {
      std::vector<double> alphas;
      std::stringstream ss(alphas_arg);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        try {
          alphas.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw ConfigError("pareto: bad alpha '" + tok + "'");
        }
      }
      return pareto_cmd(flags, alphas);
    }
    if (app.got_subcommand(fitcp)) return fit_cp_cmd(flags);
    if (app.got_subcommand(plot)) return plot_cmd(records_path, baseline_path, flags);
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
