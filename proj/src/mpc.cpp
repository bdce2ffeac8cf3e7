#include "msmooth/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msmooth {

void HorizonProblem::validate() const {
  turbine.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("problem: dt must be positive");
  if (horizon_steps < 1) throw std::invalid_argument("problem: need at least one step");
  if (n_turbines < 1) throw std::invalid_argument("problem: need at least one turbine");
  if (!(alpha >= 0.0) || !(alpha <= 1.0))
    throw std::invalid_argument("problem: alpha must be in [0, 1]");
  if (units.empty()) throw std::invalid_argument("problem: no regulation units");
  for (const AgcUnit& u : units) u.validate();
  const std::size_t tn = static_cast<std::size_t>(horizon_steps) * n_turbines;
  if (wind.size() != tn)
    throw std::invalid_argument("problem: wind field size mismatch");
  if (imbalance.size() != static_cast<std::size_t>(horizon_steps))
    throw std::invalid_argument("problem: imbalance series size mismatch");
  if (init.size() != static_cast<std::size_t>(n_turbines))
    throw std::invalid_argument("problem: initial state count mismatch");
  for (double v : wind)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("problem: wind speeds must be finite and >= 0");
  if (!std::isfinite(scheduled_mw) || scheduled_mw < 0.0)
    throw std::invalid_argument("problem: scheduled_mw must be finite and >= 0");
  if (!(penalty_weight > 0.0))
    throw std::invalid_argument("problem: penalty weight must be positive");
}

PrecomputedProblem::PrecomputedProblem(const HorizonProblem& prob) {
  const std::size_t tn = static_cast<std::size_t>(prob.horizon_steps) * prob.n_turbines;
  omega_mpp.resize(tn);
  p_mpp.resize(tn);
  for (std::size_t k = 0; k < tn; ++k) {
    const MpptReference r = mppt_reference(prob.wind[k], prob.turbine);
    omega_mpp[k] = r.omega;
    p_mpp[k] = r.power;
  }
  order = adjusted_offers(prob.units);
  e_base = static_cast<double>(prob.n_turbines) * prob.turbine.rated_power *
           prob.horizon_steps * prob.dt;
  double band = 0.0, top = 0.0;
  for (const AgcUnit& u : prob.units) {
    band += u.capacity;
    top = std::max(top, u.adjusted_price());
  }
  c_base = top * band;
}

namespace {

struct StepAccum {
  double energy_j = 0.0;
  double mileage = 0.0;  // $^2 s
  double penalty = 0.0;  // normalized squared violations
  double max_violation_w = 0.0;
  bool saturated = false;
};

// Single pass over the horizon shared by the scalar objective and the
// breakdown report.
void accumulate(const HorizonProblem& prob, const PrecomputedProblem& pre,
                const DecisionTrajectory& traj, EvalScratch& scratch,
                StepAccum& acc) {
  const int T = prob.horizon_steps;
  const int N = prob.n_turbines;
  const double rated = prob.turbine.rated_power;
  const double inv_rated = 1.0 / rated;
  for (int t = 0; t < T; ++t) {
    double farm_w = 0.0;
    for (int n = 0; n < N; ++n) {
      const std::size_t k = static_cast<std::size_t>(t) * N + n;
      const double w_prev = t == 0 ? prob.init[n].omega : traj.w(t - 1, n);
      const double p_e = electrical_power(prob.wind[k], w_prev, traj.w(t, n),
                                          traj.b(t, n), prob.dt, prob.turbine);
      farm_w += p_e;
      const double upper = pre.p_mpp[k] + kinetic_headroom(w_prev, pre.omega_mpp[k],
                                                           prob.dt, prob.turbine.inertia);
      const double over = std::max(p_e - upper, 0.0);
      const double under = std::max(-p_e, 0.0);
      acc.penalty += (over * over + under * under) * (inv_rated * inv_rated);
      acc.max_violation_w = std::max({acc.max_violation_w, over, under});
    }
    acc.energy_j += farm_w * prob.dt;
    const double residual_mw =
        prob.imbalance[t] - (farm_w * 1e-6 - prob.scheduled_mw);
    const DispatchView view =
        dispatch_into(residual_mw, prob.units, pre.order, scratch.g);
    acc.saturated = acc.saturated || !view.feasible;
    acc.mileage += step_mileage_penalty(view.gamma, scratch.g) * prob.dt;
  }
}

}  // namespace

double objective_value(const HorizonProblem& prob, const PrecomputedProblem& pre,
                       const DecisionTrajectory& traj, EvalScratch& scratch) {
  StepAccum acc;
  accumulate(prob, pre, traj, scratch, acc);
  return -prob.alpha * (acc.energy_j / pre.e_base) +
         (1.0 - prob.alpha) * (acc.mileage / (pre.c_base * pre.c_base)) +
         prob.penalty_weight * acc.penalty;
}

ObjectiveBreakdown objective_breakdown(const HorizonProblem& prob,
                                       const PrecomputedProblem& pre,
                                       const DecisionTrajectory& traj) {
  EvalScratch scratch(prob.units.size());
  StepAccum acc;
  accumulate(prob, pre, traj, scratch, acc);
  ObjectiveBreakdown out;
  out.energy_term = acc.energy_j / pre.e_base;
  out.mileage_term = acc.mileage / (pre.c_base * pre.c_base);
  out.penalty_term = prob.penalty_weight * acc.penalty;
  out.objective = -prob.alpha * out.energy_term +
                  (1.0 - prob.alpha) * out.mileage_term + out.penalty_term;
  out.energy_wh = acc.energy_j / 3600.0;
  out.mileage_dollar2_s = acc.mileage;
  out.max_bound_violation_w = acc.max_violation_w;
  out.dispatch_saturated = acc.saturated;
  return out;
}

void project_feasible(const HorizonProblem& prob, DecisionTrajectory& traj) {
  const TurbineParams& p = prob.turbine;
  const int T = traj.steps;
  const int N = traj.turbines;
  for (double& w : traj.omega) w = std::clamp(w, p.omega_min, p.omega_max);
  for (double& b : traj.beta) b = std::clamp(b, p.beta_min, p.beta_max);
  const double rate = p.pitch_rate_max * prob.dt;
  for (int n = 0; n < N; ++n) {
    double prev = prob.init[n].beta;
    for (int t = 0; t < T; ++t) {
      double& b = traj.b(t, n);
      b = std::clamp(b, prev - rate, prev + rate);
      prev = b;
    }
  }
}

DecisionTrajectory mppt_trajectory(const HorizonProblem& prob,
                                   const PrecomputedProblem& pre) {
  DecisionTrajectory traj;
  traj.resize(prob.horizon_steps, prob.n_turbines);
  for (std::size_t k = 0; k < pre.omega_mpp.size(); ++k) {
    traj.omega[k] = pre.omega_mpp[k];
    traj.beta[k] = prob.turbine.beta_min;
  }
  return traj;
}

DecisionTrajectory shift_warm_start(const DecisionTrajectory& prev, int steps) {
  DecisionTrajectory out = prev;
  const int N = prev.turbines;
  if (prev.steps >= 2) {
    for (int t = 0; t + 1 < prev.steps; ++t) {
      for (int n = 0; n < N; ++n) {
        out.w(t, n) = prev.w(t + 1, n);
        out.b(t, n) = prev.b(t + 1, n);
      }
    }
  }
  if (steps >= 1 && steps != out.steps && out.steps >= 1) {
    DecisionTrajectory fit;
    fit.resize(steps, N);
    for (int t = 0; t < steps; ++t) {
      const int src = std::min(t, out.steps - 1);
      for (int n = 0; n < N; ++n) {
        fit.w(t, n) = out.w(src, n);
        fit.b(t, n) = out.b(src, n);
      }
    }
    return fit;
  }
  return out;
}

void SolverConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("solver: max_iterations < 1");
  if (!(rel_tolerance > 0.0)) throw std::invalid_argument("solver: rel_tolerance <= 0");
  if (stall_iterations < 1) throw std::invalid_argument("solver: stall_iterations < 1");
  if (!(time_budget_s > 0.0)) throw std::invalid_argument("solver: time budget <= 0");
  if (!(fd_step > 0.0) || fd_step > 0.1)
    throw std::invalid_argument("solver: fd_step outside (0, 0.1]");
  if (!(armijo_c > 0.0) || armijo_c >= 1.0)
    throw std::invalid_argument("solver: armijo_c outside (0, 1)");
  if (line_search_trials < 1) throw std::invalid_argument("solver: no line search trials");
  if (oracle_grid < 2 || oracle_grid > 128)
    throw std::invalid_argument("solver: oracle_grid outside [2, 128]");
}

int effective_threads() {
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("MILEAGE_SMOOTH_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return n;
}

}  // namespace msmooth
