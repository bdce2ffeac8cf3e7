#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "msmooth/cascade.hpp"
#include "msmooth/market.hpp"
#include "msmooth/mpc.hpp"
#include "msmooth/turbine.hpp"

namespace msmooth {

// Config or input-content problems (exit code 1 at the CLI).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Filesystem problems: missing or unwritable paths (exit code 2).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Standard-normal draws via Box-Muller on raw mt19937_64 output.
// std::normal_distribution is not pinned across standard libraries; this is.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform() {
    return (rng_() >> 11) * 0x1.0p-53;  // [0, 1) with 53 bits
  }
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_ = false;
};

struct OuParams {
  double mean = 0.0;
  double stdev = 0.0;
  double corr_time_s = 60.0;
  std::uint64_t seed = 0;
  void validate() const;
};

// Exact discretization of an Ornstein-Uhlenbeck process; the draw sequence is
// fixed by the seed alone.
std::vector<double> ou_series(const OuParams& ou, double dt, int steps,
                              bool clamp_nonneg);

// One trace source: either a CSV file or a synthetic process.
struct TraceSpec {
  std::string csv_path;      // empty when synthetic
  std::optional<OuParams> ou;
  void validate() const;
};

// Reads `t_s,v1[,v2,...]`, then samples each column at t0 + k*dt by linear
// interpolation.  Columns map to turbines; a single column is broadcast.
// Returns at most max_steps rows and never extrapolates: sampling stops at
// the last timestamp, so a short file yields a short series.
std::vector<std::vector<double>> load_csv_series(
    const std::filesystem::path& path, int n_columns, double dt, int max_steps);

struct ScenarioConfig {
  double alpha = 0.3;
  double dt = 4.0;           // s
  int horizon_steps = 10;
  double duration_s = 3600.0;
  int n_turbines = 4;
  TurbineParams turbine;     // cp filled from fit_cp(cp_grid) when not preset
  CpFitGrid cp_grid;
  std::vector<AgcUnit> units;
  TraceSpec wind;
  TraceSpec imbalance;       // system imbalance z, MW (load minus schedule)
  double scheduled_mw = 9.0; // farm's committed schedule; the units cover
                             // z - (farm output - schedule)
  SolverConfig solver;
  double penalty_weight = 1e3;
  int cascade_substeps = 1;           // tracking sub-steps per AGC cycle
  bool persistence_forecast = false;  // forecast = hold step-0 values
  double forecast_noise_stdev = 0.0;  // m/s on wind forecasts past step 0
  void validate() const;     // throws ConfigError
  int steps() const { return static_cast<int>(duration_s / dt); }
};

// Baseline scenario: four turbines, a three-unit AGC book, OU wind and
// imbalance.
ScenarioConfig default_scenario();

struct StepRecord {
  double t = 0.0;                  // s
  std::vector<double> v;           // per turbine, m/s
  std::vector<double> omega;       // rad/s
  std::vector<double> beta;        // deg
  std::vector<double> command_mw;  // per turbine
  std::vector<double> p_e_mw;
  double farm_mw = 0.0;
  double imbalance_mw = 0.0;       // system imbalance z this step
  double agc_mw = 0.0;             // residual handed to the units
  std::vector<double> g_mw;        // per unit award
  double gamma = 0.0;
  double step_penalty = 0.0;       // $^2
  int solver_iterations = 0;
  bool solver_converged = true;
  bool tracking_ok = true;
  bool any_clamped = false;
  bool any_pitch = false;
  bool pitch_guard_ok = true;      // every pitching turbine was rotor-pinned
  bool dispatch_feasible = true;
};

struct SimulationSummary {
  std::string mode;                    // "mpc" or "mppt"
  double alpha = 0.0;
  int steps = 0;
  double dt = 0.0;
  double energy_kwh = 0.0;             // farm electrical energy
  double energy_available_kwh = 0.0;   // capped MPPT capture for the same wind
  double mileage_settlement = 0.0;     // $, priced |delta g|
  double mileage_quadratic = 0.0;      // $^2 s, sum of step penalties * dt
  double mean_abs_agc_mw = 0.0;
  double max_abs_agc_mw = 0.0;
  int dispatch_infeasible_steps = 0;
  int tracking_violation_steps = 0;
  int clamped_steps = 0;
  int pitch_active_steps = 0;
  int pitch_guard_violations = 0;
  double solver_iterations_mean = 0.0;
};

// Wall-clock diagnostics, kept apart from the record stream so outputs stay
// reproducible byte for byte.
struct TimingStats {
  double mean_solve_s = 0.0;
  double max_solve_s = 0.0;
  double total_s = 0.0;
};

struct RunResult {
  std::vector<StepRecord> records;
  SimulationSummary summary;
  TimingStats timing;
};

// Pure fold over records; energy_available must be supplied by the caller
// because records carry no MPPT reference.
SimulationSummary summarize(const std::vector<StepRecord>& records,
                            const std::string& mode, double alpha, double dt,
                            double energy_available_kwh);

// Receding-horizon run: solve, apply the first step through the cascade,
// re-dispatch on what was actually produced, advance.  Near the end of a
// finite trace the look-ahead window shrinks instead of padding.
RunResult run_scenario(const ScenarioConfig& cfg);

// Same loop with per-turbine MPPT commands instead of optimization.
RunResult run_mppt_baseline(const ScenarioConfig& cfg);

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<StepRecord>& records);
std::vector<StepRecord> read_records_csv(const std::filesystem::path& path);
// Flat JSON object, keys in a fixed order (ends with a newline).
std::string summary_to_json(const SimulationSummary& s);
void write_summary_json(const std::filesystem::path& path,
                        const SimulationSummary& s);
void write_timing(const std::filesystem::path& path, const TimingStats& t);

}  // namespace msmooth
