#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "msmooth/sim.hpp"

namespace msmooth {

void TraceSpec::validate() const {
  if (csv_path.empty() == !ou.has_value())
    throw ConfigError("trace: specify exactly one of csv path or ou process");
  if (ou) ou->validate();
}

void ScenarioConfig::validate() const {
  try {
    turbine.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(alpha >= 0.0) || !(alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (horizon_steps < 1) throw ConfigError("horizon must be at least one step");
  if (!(duration_s >= dt)) throw ConfigError("duration shorter than one step");
  if (n_turbines < 1) throw ConfigError("need at least one turbine");
  if (units.empty()) throw ConfigError("need at least one regulation unit");
  for (const AgcUnit& u : units) {
    try {
      u.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  wind.validate();
  imbalance.validate();
  try {
    cp_grid.validate();
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!std::isfinite(scheduled_mw) || scheduled_mw < 0.0)
    throw ConfigError("scheduled_mw must be finite and >= 0");
  if (!(penalty_weight > 0.0)) throw ConfigError("penalty weight must be positive");
  if (cascade_substeps < 1 || cascade_substeps > 100)
    throw ConfigError("cascade_substeps outside [1, 100]");
  if (!(forecast_noise_stdev >= 0.0))
    throw ConfigError("forecast_noise_stdev must be >= 0");
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.units = {
      {1, 0.7168, 2.0, 1.5},
      {2, 0.6074, 4.0, 4.0},
      {3, 1.0, 1.0, 2.5},
  };
  cfg.wind.ou = OuParams{9.0, 1.5, 60.0, 42};
  cfg.imbalance.ou = OuParams{0.0, 2.0, 60.0, 777};
  return cfg;
}

namespace {

// Wind per turbine and the imbalance series.  OU traces carry the full
// look-ahead; CSV traces end where the file ends and the horizon shrinks.
struct Traces {
  std::vector<std::vector<double>> wind;  // [step][turbine]
  std::vector<double> imbalance_mw;       // [step]
  int avail = 0;
};

Traces build_traces(const ScenarioConfig& cfg, const int want) {
  Traces tr;
  if (cfg.wind.ou) {
    tr.wind.assign(static_cast<std::size_t>(want),
                   std::vector<double>(static_cast<std::size_t>(cfg.n_turbines)));
    for (int n = 0; n < cfg.n_turbines; ++n) {
      OuParams p = *cfg.wind.ou;
      p.seed += static_cast<std::uint64_t>(n);  // decorrelate turbines
      const std::vector<double> col = ou_series(p, cfg.dt, want, true);
      for (int k = 0; k < want; ++k)
        tr.wind[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
            col[static_cast<std::size_t>(k)];
    }
  } else {
    tr.wind = load_csv_series(cfg.wind.csv_path, cfg.n_turbines, cfg.dt, want);
    for (const auto& row : tr.wind)
      for (double v : row)
        if (!(v >= 0.0)) throw ConfigError("wind series has negative speeds");
  }
  if (cfg.imbalance.ou) {
    tr.imbalance_mw =
        ou_series(*cfg.imbalance.ou, cfg.dt, static_cast<int>(tr.wind.size()), false);
  } else {
    const auto cols = load_csv_series(cfg.imbalance.csv_path, 1, cfg.dt, want);
    tr.imbalance_mw.resize(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) tr.imbalance_mw[k] = cols[k][0];
  }
  tr.avail = static_cast<int>(std::min(tr.wind.size(), tr.imbalance_mw.size()));
  if (tr.avail < 2) throw ConfigError("trace shorter than 2 steps");
  tr.wind.resize(static_cast<std::size_t>(tr.avail));
  tr.imbalance_mw.resize(static_cast<std::size_t>(tr.avail));
  return tr;
}

RunResult run_loop(const ScenarioConfig& cfg, bool optimize) {
  cfg.validate();
  TurbineParams turbine = cfg.turbine;
  if (turbine.cp.cp_max <= 0.0) turbine.cp = fit_cp(cfg.cp_grid).coeffs;

  const int T = cfg.horizon_steps;
  const int N = cfg.n_turbines;
  const std::size_t n_units = cfg.units.size();
  const Traces tr = build_traces(cfg, cfg.steps() + T);
  const int steps = std::min(cfg.steps(), tr.avail);
  const std::vector<RankedOffer> order = adjusted_offers(cfg.units);
  NormalStream forecast_noise(cfg.wind.ou ? cfg.wind.ou->seed ^ 0x5DEECE66Dull
                                          : 0x5DEECE66Dull);

  std::vector<TurbineState> states(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    const MpptReference r = mppt_reference(tr.wind[0][static_cast<std::size_t>(n)], turbine);
    states[static_cast<std::size_t>(n)] = {r.omega, turbine.beta_min,
                                           std::min(r.power, turbine.rated_power)};
  }

  RunResult out;
  out.records.reserve(static_cast<std::size_t>(steps));
  DecisionTrajectory warm;
  bool have_warm = false;
  double energy_available_j = 0.0;
  double solve_total = 0.0, solve_max = 0.0;
  const auto run_start = std::chrono::steady_clock::now();

  std::vector<double> g(n_units);
  for (int k = 0; k < steps; ++k) {
    StepRecord rec;
    rec.t = k * cfg.dt;
    rec.v.resize(static_cast<std::size_t>(N));
    rec.omega.resize(static_cast<std::size_t>(N));
    rec.beta.resize(static_cast<std::size_t>(N));
    rec.command_mw.resize(static_cast<std::size_t>(N));
    rec.p_e_mw.resize(static_cast<std::size_t>(N));
    rec.imbalance_mw = tr.imbalance_mw[static_cast<std::size_t>(k)];

    std::vector<double> cmd(static_cast<std::size_t>(N));
    if (optimize) {
      const int Tk = std::min(T, tr.avail - k);  // window shrinks at trace end
      HorizonProblem prob;
      prob.alpha = cfg.alpha;
      prob.t0 = rec.t;
      prob.dt = cfg.dt;
      prob.horizon_steps = Tk;
      prob.n_turbines = N;
      prob.turbine = turbine;
      prob.units = cfg.units;
      prob.scheduled_mw = cfg.scheduled_mw;
      prob.penalty_weight = cfg.penalty_weight;
      prob.wind.resize(static_cast<std::size_t>(Tk) * N);
      prob.imbalance.resize(static_cast<std::size_t>(Tk));
      for (int t = 0; t < Tk; ++t) {
        const int src = cfg.persistence_forecast ? k : k + t;
        prob.imbalance[static_cast<std::size_t>(t)] =
            tr.imbalance_mw[static_cast<std::size_t>(src)];
        for (int n = 0; n < N; ++n) {
          double v = tr.wind[static_cast<std::size_t>(src)][static_cast<std::size_t>(n)];
          if (t > 0 && cfg.forecast_noise_stdev > 0.0)
            v = std::max(0.0, v + cfg.forecast_noise_stdev * forecast_noise.next());
          prob.wind[static_cast<std::size_t>(t) * N + n] = v;
        }
      }
      prob.init = states;

      const auto t0 = std::chrono::steady_clock::now();
      const SolveResult sol =
          solve_horizon(prob, cfg.solver, have_warm ? &warm : nullptr);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      solve_total += wall;
      solve_max = std::max(solve_max, wall);

      for (int n = 0; n < N; ++n)
        cmd[static_cast<std::size_t>(n)] = electrical_power(
            prob.wind[static_cast<std::size_t>(n)], states[static_cast<std::size_t>(n)].omega,
            sol.traj.w(0, n), sol.traj.b(0, n), cfg.dt, turbine);
      rec.solver_iterations = sol.report.iterations;
      rec.solver_converged = sol.report.converged;
      if (k + 1 < steps) {
        warm = shift_warm_start(sol.traj, std::min(T, tr.avail - (k + 1)));
        have_warm = true;
      }
    } else {
      for (int n = 0; n < N; ++n) {
        const TurbineState& st = states[static_cast<std::size_t>(n)];
        const double v = tr.wind[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
        const MpptReference r = mppt_reference(v, turbine);
        const double beta_relaxed =
            std::max(turbine.beta_min, st.beta - turbine.pitch_rate_max * cfg.dt);
        const double p =
            electrical_power(v, st.omega, r.omega, beta_relaxed, cfg.dt, turbine);
        cmd[static_cast<std::size_t>(n)] =
            std::clamp(p, 0.0, turbine.rated_power);
      }
    }

    double farm_w = 0.0;
    for (int n = 0; n < N; ++n) {
      const double v = tr.wind[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
      const TrackingOutcome o =
          track_cycle(cmd[static_cast<std::size_t>(n)], states[static_cast<std::size_t>(n)],
                      v, cfg.dt, cfg.cascade_substeps, turbine);
      states[static_cast<std::size_t>(n)] = o.state;
      farm_w += o.achieved_w;
      rec.v[static_cast<std::size_t>(n)] = v;
      rec.omega[static_cast<std::size_t>(n)] = o.state.omega;
      rec.beta[static_cast<std::size_t>(n)] = o.state.beta;
      rec.command_mw[static_cast<std::size_t>(n)] = cmd[static_cast<std::size_t>(n)] * 1e-6;
      rec.p_e_mw[static_cast<std::size_t>(n)] = o.achieved_w * 1e-6;
      rec.any_clamped = rec.any_clamped || o.clamped;
      rec.any_pitch = rec.any_pitch || o.used_pitch;
      if (o.used_pitch && o.pre_pitch_omega < turbine.omega_max - 1e-3)
        rec.pitch_guard_ok = false;
      rec.tracking_ok = rec.tracking_ok && (o.command_met || o.clamped);
      energy_available_j +=
          std::min(mppt_reference(v, turbine).power, turbine.rated_power) * cfg.dt;
    }
    rec.farm_mw = farm_w * 1e-6;
    rec.agc_mw = rec.imbalance_mw - (rec.farm_mw - cfg.scheduled_mw);
    const DispatchView view = dispatch_into(rec.agc_mw, cfg.units, order, g);
    rec.g_mw = g;
    rec.gamma = view.gamma;
    rec.dispatch_feasible = view.feasible;
    rec.step_penalty = step_mileage_penalty(view.gamma, g);
    out.records.push_back(std::move(rec));
  }

  out.timing.total_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
  if (optimize && steps > 0) {
    out.timing.mean_solve_s = solve_total / steps;
    out.timing.max_solve_s = solve_max;
  }
  out.summary = summarize(out.records, optimize ? "mpc" : "mppt", cfg.alpha,
                          cfg.dt, energy_available_j / 3.6e6);
  return out;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg) { return run_loop(cfg, true); }
RunResult run_mppt_baseline(const ScenarioConfig& cfg) { return run_loop(cfg, false); }

SimulationSummary summarize(const std::vector<StepRecord>& records,
                            const std::string& mode, double alpha, double dt,
                            double energy_available_kwh) {
  SimulationSummary s;
  s.mode = mode;
  s.alpha = alpha;
  s.dt = dt;
  s.steps = static_cast<int>(records.size());
  s.energy_available_kwh = energy_available_kwh;
  if (records.empty()) return s;

  const std::size_t n_units = records.front().g_mw.size();
  std::vector<double> g_prev(n_units, 0.0);
  double iter_sum = 0.0;
  for (const StepRecord& r : records) {
    s.energy_kwh += r.farm_mw * 1e3 * dt / 3600.0;
    s.mileage_quadratic += r.step_penalty * dt;
    for (std::size_t i = 0; i < n_units; ++i) {
      s.mileage_settlement += r.gamma * std::abs(r.g_mw[i] - g_prev[i]);
      g_prev[i] = r.g_mw[i];
    }
    s.mean_abs_agc_mw += std::abs(r.agc_mw);
    s.max_abs_agc_mw = std::max(s.max_abs_agc_mw, std::abs(r.agc_mw));
    s.dispatch_infeasible_steps += r.dispatch_feasible ? 0 : 1;
    s.tracking_violation_steps += r.tracking_ok ? 0 : 1;
    s.clamped_steps += r.any_clamped ? 1 : 0;
    s.pitch_active_steps += r.any_pitch ? 1 : 0;
    s.pitch_guard_violations += r.pitch_guard_ok ? 0 : 1;
    iter_sum += r.solver_iterations;
  }
  s.mean_abs_agc_mw /= static_cast<double>(records.size());
  s.solver_iterations_mean = iter_sum / static_cast<double>(records.size());
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<StepRecord>& records) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw IoError("cannot write " + path.string());
  const std::size_t N = records.empty() ? 0 : records.front().v.size();
  const std::size_t U = records.empty() ? 0 : records.front().g_mw.size();
  outf << "t_s";
  for (std::size_t n = 0; n < N; ++n) outf << ",v_t" << n + 1;
  for (std::size_t n = 0; n < N; ++n) outf << ",omega_t" << n + 1;
  for (std::size_t n = 0; n < N; ++n) outf << ",beta_t" << n + 1;
  for (std::size_t n = 0; n < N; ++n) outf << ",cmd_mw_t" << n + 1;
  for (std::size_t n = 0; n < N; ++n) outf << ",pe_mw_t" << n + 1;
  outf << ",farm_pe_mw,imbalance_mw,agc_residual_mw";
  for (std::size_t i = 0; i < U; ++i) outf << ",g_mw_u" << i + 1;
  outf << ",gamma,step_penalty,solver_iterations,solver_converged,tracking_ok,"
          "any_clamped,any_pitch,pitch_guard_ok,dispatch_feasible\n";
  for (const StepRecord& r : records) {
    outf << fmt(r.t);
    for (double x : r.v) outf << ',' << fmt(x);
    for (double x : r.omega) outf << ',' << fmt(x);
    for (double x : r.beta) outf << ',' << fmt(x);
    for (double x : r.command_mw) outf << ',' << fmt(x);
    for (double x : r.p_e_mw) outf << ',' << fmt(x);
    outf << ',' << fmt(r.farm_mw) << ',' << fmt(r.imbalance_mw) << ','
         << fmt(r.agc_mw);
    for (double x : r.g_mw) outf << ',' << fmt(x);
    outf << ',' << fmt(r.gamma) << ',' << fmt(r.step_penalty) << ','
         << r.solver_iterations << ',' << int(r.solver_converged) << ','
         << int(r.tracking_ok) << ',' << int(r.any_clamped) << ','
         << int(r.any_pitch) << ',' << int(r.pitch_guard_ok) << ','
         << int(r.dispatch_feasible) << '\n';
  }
  if (!outf) throw IoError("write failed: " + path.string());
}

std::vector<StepRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw ConfigError(path.string() + ": empty file");
  std::size_t N = 0, U = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (col.starts_with("v_t")) ++N;
      if (col.starts_with("g_mw_u")) ++U;
    }
  }
  std::vector<StepRecord> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                          ": bad number '" + cell + "'");
      }
    }
    const std::size_t expect = 1 + 5 * N + 3 + U + 9;
    if (vals.size() != expect)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": wrong column count");
    StepRecord r;
    std::size_t i = 0;
    r.t = vals[i++];
    auto take = [&](std::vector<double>& dst) {
      dst.assign(vals.begin() + static_cast<std::ptrdiff_t>(i),
                 vals.begin() + static_cast<std::ptrdiff_t>(i + N));
      i += N;
    };
    take(r.v);
    take(r.omega);
    take(r.beta);
    take(r.command_mw);
    take(r.p_e_mw);
    r.farm_mw = vals[i++];
    r.imbalance_mw = vals[i++];
    r.agc_mw = vals[i++];
    r.g_mw.assign(vals.begin() + static_cast<std::ptrdiff_t>(i),
                  vals.begin() + static_cast<std::ptrdiff_t>(i + U));
    i += U;
    r.gamma = vals[i++];
    r.step_penalty = vals[i++];
    r.solver_iterations = static_cast<int>(vals[i++]);
    r.solver_converged = vals[i++] != 0.0;
    r.tracking_ok = vals[i++] != 0.0;
    r.any_clamped = vals[i++] != 0.0;
    r.any_pitch = vals[i++] != 0.0;
    r.pitch_guard_ok = vals[i++] != 0.0;
    r.dispatch_feasible = vals[i++] != 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

std::string summary_to_json(const SimulationSummary& s) {
  nlohmann::ordered_json j;
  j["mode"] = s.mode;
  j["alpha"] = s.alpha;
  j["steps"] = s.steps;
  j["dt_s"] = s.dt;
  j["energy_kwh"] = s.energy_kwh;
  j["energy_available_kwh"] = s.energy_available_kwh;
  j["mileage_settlement_dollars"] = s.mileage_settlement;
  j["mileage_quadratic_dollar2_s"] = s.mileage_quadratic;
  j["mean_abs_agc_mw"] = s.mean_abs_agc_mw;
  j["max_abs_agc_mw"] = s.max_abs_agc_mw;
  j["dispatch_infeasible_steps"] = s.dispatch_infeasible_steps;
  j["tracking_violation_steps"] = s.tracking_violation_steps;
  j["clamped_steps"] = s.clamped_steps;
  j["pitch_active_steps"] = s.pitch_active_steps;
  j["pitch_guard_violations"] = s.pitch_guard_violations;
  j["solver_iterations_mean"] = s.solver_iterations_mean;
  return j.dump(2) + "\n";
}

void write_summary_json(const std::filesystem::path& path,
                        const SimulationSummary& s) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw IoError("cannot write " + path.string());
  outf << summary_to_json(s);
  if (!outf) throw IoError("write failed: " + path.string());
}

void write_timing(const std::filesystem::path& path, const TimingStats& t) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw IoError("cannot write " + path.string());
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "mean_solve_s %.6f\nmax_solve_s %.6f\ntotal_s %.6f\n",
                t.mean_solve_s, t.max_solve_s, t.total_s);
  outf << buf;
}

}  // namespace msmooth
