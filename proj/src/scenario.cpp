#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "msmooth/scenario.hpp"

namespace msmooth {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

double num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j[key].get<double>();
}

int integer(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError(std::string(key) + " must be an integer");
  return j[key].get<int>();
}

TraceSpec parse_trace(const json& j, const std::string& where, TraceSpec fallback) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown_keys(j, {"type", "path", "mean", "stdev", "corr_time_s", "seed"},
                      where);
  if (!j.contains("type")) throw ConfigError(where + ": missing type");
  const std::string type = j["type"].get<std::string>();
  TraceSpec spec;
  if (type == "csv") {
    if (!j.contains("path") || !j["path"].is_string())
      throw ConfigError(where + ": csv trace needs a path");
    spec.csv_path = j["path"].get<std::string>();
  } else if (type == "ou") {
    OuParams base = fallback.ou.value_or(OuParams{});
    OuParams p;
    p.mean = num(j, "mean", base.mean);
    p.stdev = num(j, "stdev", base.stdev);
    p.corr_time_s = num(j, "corr_time_s", base.corr_time_s);
    p.seed = j.contains("seed") ? j["seed"].get<std::uint64_t>() : base.seed;
    spec.ou = p;
  } else {
    throw ConfigError(where + ": type must be 'csv' or 'ou'");
  }
  return spec;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario json: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario json: top level must be an object");
  reject_unknown_keys(j,
                      {"alpha", "dt_s", "horizon_steps", "duration_s", "n_turbines",
                       "turbine", "cp_grid", "units", "wind", "imbalance",
                       "scheduled_mw", "solver", "penalty_weight",
                       "cascade_substeps", "persistence_forecast",
                       "forecast_noise_stdev"},
                      "scenario");

  ScenarioConfig cfg = default_scenario();
  cfg.alpha = num(j, "alpha", cfg.alpha);
  cfg.dt = num(j, "dt_s", cfg.dt);
  cfg.horizon_steps = integer(j, "horizon_steps", cfg.horizon_steps);
  cfg.duration_s = num(j, "duration_s", cfg.duration_s);
  cfg.n_turbines = integer(j, "n_turbines", cfg.n_turbines);
  cfg.scheduled_mw = num(j, "scheduled_mw", cfg.scheduled_mw);
  cfg.penalty_weight = num(j, "penalty_weight", cfg.penalty_weight);
  cfg.cascade_substeps = integer(j, "cascade_substeps", cfg.cascade_substeps);
  cfg.forecast_noise_stdev =
      num(j, "forecast_noise_stdev", cfg.forecast_noise_stdev);
  if (j.contains("persistence_forecast")) {
    if (!j["persistence_forecast"].is_boolean())
      throw ConfigError("persistence_forecast must be a boolean");
    cfg.persistence_forecast = j["persistence_forecast"].get<bool>();
  }

  if (j.contains("turbine")) {
    const json& t = j["turbine"];
    reject_unknown_keys(t,
                        {"rho", "rotor_radius_m", "swept_area_m2", "inertia_kgm2",
                         "rated_power_w", "omega_min", "omega_max", "beta_min_deg",
                         "beta_max_deg", "pitch_rate_deg_s"},
                        "turbine");
    TurbineParams& p = cfg.turbine;
    p.rho = num(t, "rho", p.rho);
    p.rotor_radius = num(t, "rotor_radius_m", p.rotor_radius);
    p.swept_area = num(t, "swept_area_m2", p.swept_area);
    p.inertia = num(t, "inertia_kgm2", p.inertia);
    p.rated_power = num(t, "rated_power_w", p.rated_power);
    p.omega_min = num(t, "omega_min", p.omega_min);
    p.omega_max = num(t, "omega_max", p.omega_max);
    p.beta_min = num(t, "beta_min_deg", p.beta_min);
    p.beta_max = num(t, "beta_max_deg", p.beta_max);
    p.pitch_rate_max = num(t, "pitch_rate_deg_s", p.pitch_rate_max);
  }

  if (j.contains("cp_grid")) {
    const json& g = j["cp_grid"];
    reject_unknown_keys(g,
                        {"lambda_min", "lambda_max", "lambda_step", "beta_min",
                         "beta_max", "beta_step"},
                        "cp_grid");
    cfg.cp_grid.lambda_min = num(g, "lambda_min", cfg.cp_grid.lambda_min);
    cfg.cp_grid.lambda_max = num(g, "lambda_max", cfg.cp_grid.lambda_max);
    cfg.cp_grid.lambda_step = num(g, "lambda_step", cfg.cp_grid.lambda_step);
    cfg.cp_grid.beta_min = num(g, "beta_min", cfg.cp_grid.beta_min);
    cfg.cp_grid.beta_max = num(g, "beta_max", cfg.cp_grid.beta_max);
    cfg.cp_grid.beta_step = num(g, "beta_step", cfg.cp_grid.beta_step);
  }

  if (j.contains("units")) {
    if (!j["units"].is_array() || j["units"].empty())
      throw ConfigError("units must be a non-empty array");
    cfg.units.clear();
    for (const json& u : j["units"]) {
      reject_unknown_keys(u, {"id", "perf_score", "offer_price", "capacity_mw"},
                          "unit");
      AgcUnit unit;
      unit.id = integer(u, "id", static_cast<int>(cfg.units.size()) + 1);
      unit.perf_score = num(u, "perf_score", 1.0);
      unit.offer_price = num(u, "offer_price", 0.0);
      unit.capacity = num(u, "capacity_mw", 0.0);
      cfg.units.push_back(unit);
    }
  }

  if (j.contains("wind")) cfg.wind = parse_trace(j["wind"], "wind", cfg.wind);
  if (j.contains("imbalance"))
    cfg.imbalance = parse_trace(j["imbalance"], "imbalance", cfg.imbalance);

  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown_keys(s,
                        {"max_iterations", "rel_tolerance", "stall_iterations",
                         "time_budget_s", "fd_step", "armijo_c",
                         "line_search_trials", "parallel_gradient",
                         "oracle_grid"},
                        "solver");
    SolverConfig& c = cfg.solver;
    c.max_iterations = integer(s, "max_iterations", c.max_iterations);
    c.rel_tolerance = num(s, "rel_tolerance", c.rel_tolerance);
    c.stall_iterations = integer(s, "stall_iterations", c.stall_iterations);
    c.time_budget_s = num(s, "time_budget_s", c.time_budget_s);
    c.fd_step = num(s, "fd_step", c.fd_step);
    c.armijo_c = num(s, "armijo_c", c.armijo_c);
    c.line_search_trials = integer(s, "line_search_trials", c.line_search_trials);
    c.oracle_grid = integer(s, "oracle_grid", c.oracle_grid);
    if (s.contains("parallel_gradient")) {
      if (!s["parallel_gradient"].is_boolean())
        throw ConfigError("parallel_gradient must be a boolean");
      c.parallel_gradient = s["parallel_gradient"].get<bool>();
    }
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["alpha"] = cfg.alpha;
  j["dt_s"] = cfg.dt;
  j["horizon_steps"] = cfg.horizon_steps;
  j["duration_s"] = cfg.duration_s;
  j["n_turbines"] = cfg.n_turbines;
  j["turbine"] = {{"rho", cfg.turbine.rho},
                  {"rotor_radius_m", cfg.turbine.rotor_radius},
                  {"swept_area_m2", cfg.turbine.swept_area},
                  {"inertia_kgm2", cfg.turbine.inertia},
                  {"rated_power_w", cfg.turbine.rated_power},
                  {"omega_min", cfg.turbine.omega_min},
                  {"omega_max", cfg.turbine.omega_max},
                  {"beta_min_deg", cfg.turbine.beta_min},
                  {"beta_max_deg", cfg.turbine.beta_max},
                  {"pitch_rate_deg_s", cfg.turbine.pitch_rate_max}};
  j["cp_grid"] = {{"lambda_min", cfg.cp_grid.lambda_min},
                  {"lambda_max", cfg.cp_grid.lambda_max},
                  {"lambda_step", cfg.cp_grid.lambda_step},
                  {"beta_min", cfg.cp_grid.beta_min},
                  {"beta_max", cfg.cp_grid.beta_max},
                  {"beta_step", cfg.cp_grid.beta_step}};
  j["units"] = json::array();
  for (const AgcUnit& u : cfg.units)
    j["units"].push_back({{"id", u.id},
                          {"perf_score", u.perf_score},
                          {"offer_price", u.offer_price},
                          {"capacity_mw", u.capacity}});
  auto trace = [](const TraceSpec& t) {
    json out;
    if (t.ou) {
      out["type"] = "ou";
      out["mean"] = t.ou->mean;
      out["stdev"] = t.ou->stdev;
      out["corr_time_s"] = t.ou->corr_time_s;
      out["seed"] = t.ou->seed;
    } else {
      out["type"] = "csv";
      out["path"] = t.csv_path;
    }
    return out;
  };
  j["wind"] = trace(cfg.wind);
  j["imbalance"] = trace(cfg.imbalance);
  j["scheduled_mw"] = cfg.scheduled_mw;
  j["solver"] = {{"max_iterations", cfg.solver.max_iterations},
                 {"rel_tolerance", cfg.solver.rel_tolerance},
                 {"stall_iterations", cfg.solver.stall_iterations},
                 {"time_budget_s", cfg.solver.time_budget_s},
                 {"fd_step", cfg.solver.fd_step},
                 {"armijo_c", cfg.solver.armijo_c},
                 {"line_search_trials", cfg.solver.line_search_trials},
                 {"parallel_gradient", cfg.solver.parallel_gradient},
                 {"oracle_grid", cfg.solver.oracle_grid}};
  j["penalty_weight"] = cfg.penalty_weight;
  j["cascade_substeps"] = cfg.cascade_substeps;
  j["persistence_forecast"] = cfg.persistence_forecast;
  j["forecast_noise_stdev"] = cfg.forecast_noise_stdev;
  return j.dump(2) + "\n";
}

}  // namespace msmooth
