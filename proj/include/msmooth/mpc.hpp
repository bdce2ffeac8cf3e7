#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "msmooth/market.hpp"
#include "msmooth/turbine.hpp"

namespace msmooth {

// One receding-horizon instance: commit rotor speed and pitch for every
// turbine at every step; electrical output follows from the swing equation
// and whatever the farm misses of the imbalance goes to AGC units.
struct HorizonProblem {
  double alpha = 0.5;          // 1 = pure energy capture, 0 = pure mileage relief
  double t0 = 0.0;             // s, start of the window (bookkeeping only)
  double dt = 4.0;             // s, AGC cycle
  int horizon_steps = 10;      // T
  int n_turbines = 4;          // N
  TurbineParams turbine;
  std::vector<AgcUnit> units;
  std::vector<double> wind;       // T*N row-major [t*N + n], m/s
  std::vector<double> imbalance;  // T entries, MW, system imbalance forecast
  double scheduled_mw = 0.0;      // farm's committed schedule; AGC covers
                                  // imbalance - (farm output - schedule)
  std::vector<TurbineState> init; // N entries, state at t0 - dt
  double penalty_weight = 1e3;    // on squared normalized power-bound violations
  void validate() const;          // throws std::invalid_argument
};

struct DecisionTrajectory {
  int steps = 0;
  int turbines = 0;
  std::vector<double> omega;  // steps*turbines row-major, rad/s
  std::vector<double> beta;   // same layout, deg
  void resize(int t, int n) {
    steps = t;
    turbines = n;
    omega.assign(static_cast<std::size_t>(t) * n, 0.0);
    beta.assign(static_cast<std::size_t>(t) * n, 0.0);
  }
  double& w(int t, int n) { return omega[static_cast<std::size_t>(t) * turbines + n]; }
  double& b(int t, int n) { return beta[static_cast<std::size_t>(t) * turbines + n]; }
  double w(int t, int n) const { return omega[static_cast<std::size_t>(t) * turbines + n]; }
  double b(int t, int n) const { return beta[static_cast<std::size_t>(t) * turbines + n]; }
};

// Wind-dependent per-slot constants plus the ranked offer book, computed once
// per problem so repeated objective evaluations stay cheap.
struct PrecomputedProblem {
  std::vector<double> omega_mpp;  // T*N
  std::vector<double> p_mpp;      // T*N, W (MPPT capture, capped at rated)
  std::vector<RankedOffer> order;
  double e_base = 0.0;  // J, N*rated*T*dt
  double c_base = 0.0;  // $, priciest adjusted offer * total band
  explicit PrecomputedProblem(const HorizonProblem& prob);
};

struct EvalScratch {
  std::vector<double> g;  // regulation awards, MW
  explicit EvalScratch(std::size_t n_units) : g(n_units, 0.0) {}
};

// Scalar objective: -alpha * normalized energy + (1-alpha) * normalized
// mileage penalty + soft power-bound penalty.
double objective_value(const HorizonProblem& prob, const PrecomputedProblem& pre,
                       const DecisionTrajectory& traj, EvalScratch& scratch);

struct ObjectiveBreakdown {
  double objective = 0.0;
  double energy_term = 0.0;        // normalized, enters with -alpha
  double mileage_term = 0.0;       // normalized, enters with +(1-alpha)
  double penalty_term = 0.0;
  double energy_wh = 0.0;          // farm electrical energy over the horizon
  double mileage_dollar2_s = 0.0;  // sum of step penalties * dt
  double max_bound_violation_w = 0.0;
  bool dispatch_saturated = false;
};
ObjectiveBreakdown objective_breakdown(const HorizonProblem& prob,
                                       const PrecomputedProblem& pre,
                                       const DecisionTrajectory& traj);

// Clamp every decision into its box, then sweep pitch forward so each step
// moves at most pitch_rate_max * dt from the previous one (seeded from the
// initial state).
void project_feasible(const HorizonProblem& prob, DecisionTrajectory& traj);

// Central-difference gradient in the unit-box coordinates (each decision
// scaled to [0,1] over its band).  h is the relative step.  grad.size() must
// be 2*T*N: omega block first, then beta.
void fd_gradient_serial(const HorizonProblem& prob, const PrecomputedProblem& pre,
                        const DecisionTrajectory& traj, double h,
                        std::span<double> grad);
void fd_gradient_parallel(const HorizonProblem& prob, const PrecomputedProblem& pre,
                          const DecisionTrajectory& traj, double h,
                          std::span<double> grad);

struct SolverConfig {
  int max_iterations = 200;
  double rel_tolerance = 1e-6;  // on objective improvement
  int stall_iterations = 3;     // consecutive below-tolerance iterations to stop
  double time_budget_s = 1e9;
  double fd_step = 1e-4;        // fraction of each decision band
  double armijo_c = 1e-4;
  int line_search_trials = 30;
  bool parallel_gradient = true;
  int oracle_grid = 50;         // points per axis for brute_force_oracle
  void validate() const;
};

struct SolverReport {
  double objective = 0.0;
  double energy_term = 0.0;
  double mileage_term = 0.0;
  double penalty_term = 0.0;
  double energy_wh = 0.0;
  double mileage_dollar2_s = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;  // kept in memory; never serialized with results
  double max_bound_violation_w = 0.0;
  std::vector<double> objective_history;  // one entry per iteration
};

struct SolveResult {
  DecisionTrajectory traj;
  SolverReport report;
};

// Projected gradient descent with backtracking line search.  warm, when
// given, seeds the search (it is projected first); otherwise the MPPT
// trajectory does.
SolveResult solve_horizon(const HorizonProblem& prob, const SolverConfig& cfg,
                          const DecisionTrajectory* warm = nullptr);

// Receding-horizon warm start: drop the first step, duplicate the last.
// steps, when non-negative, truncates or pads (by duplication) the result to
// that many steps — used when the horizon shrinks at the end of a trace.
DecisionTrajectory shift_warm_start(const DecisionTrajectory& prev, int steps = -1);

// MPPT decision trajectory for the problem's wind field (pre-projection).
DecisionTrajectory mppt_trajectory(const HorizonProblem& prob,
                                   const PrecomputedProblem& pre);

struct OracleResult {
  double objective = 0.0;
  DecisionTrajectory traj;
  std::uint64_t evaluations = 0;
};

// Exhaustive grid search over the decision box.  Only for single-turbine
// problems with one or two steps; throws std::invalid_argument otherwise.
OracleResult brute_force_oracle(const HorizonProblem& prob, int grid_points);

// Worker count for parallel regions: min(omp threads, MILEAGE_SMOOTH_THREADS).
int effective_threads();

}  // namespace msmooth
