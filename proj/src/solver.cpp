#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "msmooth/cascade.hpp"
#include "msmooth/mpc.hpp"

namespace msmooth {

namespace {

// Feasible trajectory that chases the unit-relieving farm output: every
// turbine takes an equal share of schedule + forecast imbalance.  Lands in
// the mileage-favoring basin, which plain descent from the MPPT start rarely
// reaches.
DecisionTrajectory absorbing_trajectory(const HorizonProblem& prob) {
  DecisionTrajectory traj;
  traj.resize(prob.horizon_steps, prob.n_turbines);
  std::vector<TurbineState> st = prob.init;
  for (int t = 0; t < prob.horizon_steps; ++t) {
    const double share_w =
        (prob.scheduled_mw + prob.imbalance[static_cast<std::size_t>(t)]) * 1e6 /
        prob.n_turbines;
    const double cmd =
        std::clamp(share_w, 0.0, prob.turbine.rated_power);
    for (int n = 0; n < prob.n_turbines; ++n) {
      const std::size_t k = static_cast<std::size_t>(n);
      const double v =
          prob.wind[static_cast<std::size_t>(t) * prob.n_turbines + k];
      const TrackingOutcome out = track_step(cmd, st[k], v, prob.dt, prob.turbine);
      st[k] = out.state;
      traj.w(t, n) = out.state.omega;
      traj.b(t, n) = out.state.beta;
    }
  }
  return traj;
}

// Forward sweep that retracks any slot whose electrical power breaches the
// soft bound (or goes negative).  Descent can flatline on a penalty plateau
// and report a trajectory a few percent over the wall; retracking the
// offending slots to just under it removes the penalty at negligible mileage
// cost.  Returned trajectory respects the boxes and the pitch-rate chain.
DecisionTrajectory repair_bounds(const HorizonProblem& prob,
                                 const PrecomputedProblem& pre,
                                 const DecisionTrajectory& in) {
  const TurbineParams& p = prob.turbine;
  const double margin = 2e-3 * p.rated_power;
  const double rate = p.pitch_rate_max * prob.dt;
  DecisionTrajectory out = in;
  for (int t = 0; t < prob.horizon_steps; ++t) {
    for (int n = 0; n < prob.n_turbines; ++n) {
      const std::size_t k =
          static_cast<std::size_t>(t) * prob.n_turbines + n;
      const double w_prev = t == 0 ? prob.init[n].omega : out.w(t - 1, n);
      const double b_prev = t == 0 ? prob.init[n].beta : out.b(t - 1, n);
      double w = std::clamp(out.w(t, n), p.omega_min, p.omega_max);
      double b = std::clamp(std::clamp(out.b(t, n), b_prev - rate, b_prev + rate),
                            p.beta_min, p.beta_max);
      const double v = prob.wind[k];
      const double p_e = electrical_power(v, w_prev, w, b, prob.dt, p);
      const double upper =
          pre.p_mpp[k] +
          kinetic_headroom(w_prev, pre.omega_mpp[k], prob.dt, p.inertia);
      if (p_e > upper || p_e < 0.0) {
        const double target = std::clamp(p_e, 0.0, std::max(upper - margin, 0.0));
        TurbineState prev{w_prev, b_prev, 0.0};
        const TrackingOutcome fix = track_step(target, prev, v, prob.dt, p);
        w = fix.state.omega;
        b = fix.state.beta;
      }
      out.w(t, n) = w;
      out.b(t, n) = b;
    }
  }
  return out;
}

// Exhaustive scan over a coarse decision grid, then a finer re-scan of the
// winning cell's neighborhood; worthwhile only when the problem is one or two
// slots, where the landscape's far-flung optima (full capture, deep
// discharge, pitch shedding) sit outside every heuristic start's basin.
DecisionTrajectory coarse_grid_start(const HorizonProblem& prob,
                                     const PrecomputedProblem& pre, int g) {
  const int slots = prob.horizon_steps * prob.n_turbines;
  const TurbineParams& p = prob.turbine;
  EvalScratch scratch(prob.units.size());
  const std::size_t axes = static_cast<std::size_t>(2) * slots;
  std::vector<double> lo(axes), hi(axes), at(axes), best_at(axes, 0.0);
  for (int s = 0; s < slots; ++s) {
    lo[2 * s] = p.omega_min;
    hi[2 * s] = p.omega_max;
    lo[2 * s + 1] = p.beta_min;
    hi[2 * s + 1] = p.beta_max;
  }
  DecisionTrajectory x;
  x.resize(prob.horizon_steps, prob.n_turbines);
  DecisionTrajectory trial = x;
  DecisionTrajectory best = x;
  double f_best = 0.0;
  bool have = false;
  auto scan = [&](int pts) {
    std::vector<int> idx(axes, 0);
    for (;;) {
      for (std::size_t a = 0; a < axes; ++a)
        at[a] = lo[a] + (hi[a] - lo[a]) * idx[a] / (pts - 1);
      for (int s = 0; s < slots; ++s) {
        x.omega[static_cast<std::size_t>(s)] = at[2 * s];
        x.beta[static_cast<std::size_t>(s)] = at[2 * s + 1];
      }
      trial = x;
      project_feasible(prob, trial);
      const double f = objective_value(prob, pre, trial, scratch);
      if (!have || f < f_best) {
        f_best = f;
        best = trial;
        best_at = at;
        have = true;
      }
      std::size_t a = 0;
      while (a < idx.size() && ++idx[a] == pts) idx[a++] = 0;
      if (a == idx.size()) break;
    }
  };
  scan(g);
  for (std::size_t a = 0; a < axes; ++a) {
    const double span = 1.5 * (hi[a] - lo[a]) / (g - 1);
    lo[a] = std::max(lo[a], best_at[a] - span);
    hi[a] = std::min(hi[a], best_at[a] + span);
  }
  scan(13);
  return best;
}

struct Descent {
  DecisionTrajectory x;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

Descent descend(const HorizonProblem& prob, const PrecomputedProblem& pre,
                const SolverConfig& cfg, DecisionTrajectory start,
                const std::chrono::steady_clock::time_point& t_start) {
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
        .count();
  };
  const std::size_t tn =
      static_cast<std::size_t>(prob.horizon_steps) * prob.n_turbines;
  const std::size_t dim = 2 * tn;
  const double w_band = prob.turbine.omega_max - prob.turbine.omega_min;
  const double b_band = prob.turbine.beta_max - prob.turbine.beta_min;

  Descent d;
  d.x = std::move(start);
  project_feasible(prob, d.x);

  EvalScratch scratch(prob.units.size());
  double f = objective_value(prob, pre, d.x, scratch);

  std::vector<double> grad(dim);
  DecisionTrajectory trial = d.x;
  d.history.reserve(static_cast<std::size_t>(cfg.max_iterations));

  double step = 0.25;  // in unit-box distance
  int stall = 0;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (cfg.parallel_gradient)
      fd_gradient_parallel(prob, pre, d.x, cfg.fd_step, grad);
    else
      fd_gradient_serial(prob, pre, d.x, cfg.fd_step, grad);

    double s = step;
    bool accepted = false;
    double f_trial = f;
    for (int ls = 0; ls < cfg.line_search_trials; ++ls) {
      for (std::size_t k = 0; k < tn; ++k)
        trial.omega[k] = d.x.omega[k] - s * grad[k] * w_band;
      for (std::size_t k = 0; k < tn; ++k)
        trial.beta[k] = d.x.beta[k] - s * grad[tn + k] * b_band;
      project_feasible(prob, trial);

      // Armijo on the projected move, inner product in unit-box coordinates.
      double dir = 0.0;
      for (std::size_t k = 0; k < tn; ++k)
        dir += grad[k] * (trial.omega[k] - d.x.omega[k]) / w_band;
      for (std::size_t k = 0; k < tn; ++k)
        dir += grad[tn + k] * (trial.beta[k] - d.x.beta[k]) / b_band;

      f_trial = objective_value(prob, pre, trial, scratch);
      if (f_trial <= f + cfg.armijo_c * dir) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }

    double improvement = 0.0;
    if (accepted && f_trial < f) {
      improvement = (f - f_trial) / std::max(std::abs(f), 1e-12);
      std::swap(d.x.omega, trial.omega);
      std::swap(d.x.beta, trial.beta);
      f = f_trial;
      step = std::min(s * 2.0, 4.0);
    } else {
      // A steep penalty wall can defeat every trial at this scale; restart
      // the next search well below it instead of repeating the same sweep.
      step = std::max(step * 0.0625, 1e-6);
    }
    d.history.push_back(f);
    d.iterations = iter + 1;

    stall = improvement < cfg.rel_tolerance ? stall + 1 : 0;
    if (stall >= cfg.stall_iterations) {
      d.converged = true;
      break;
    }
    if (elapsed() > cfg.time_budget_s) break;
  }
  d.objective = f;
  return d;
}

}  // namespace

SolveResult solve_horizon(const HorizonProblem& prob, const SolverConfig& cfg,
                          const DecisionTrajectory* warm) {
  prob.validate();
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const PrecomputedProblem pre(prob);

  // The landscape splits into a capture basin and an absorb basin (plus the
  // previous plan when warm-started); descend from each and keep the best.
  std::vector<DecisionTrajectory> starts;
  if (warm && warm->steps == prob.horizon_steps &&
      warm->turbines == prob.n_turbines)
    starts.push_back(*warm);
  starts.push_back(mppt_trajectory(prob, pre));
  starts.push_back(absorbing_trajectory(prob));
  const int slots = prob.horizon_steps * prob.n_turbines;
  if (slots <= 2)
    starts.push_back(coarse_grid_start(prob, pre, slots == 1 ? 24 : 14));

  Descent best;
  bool have = false;
  for (DecisionTrajectory& s : starts) {
    Descent d = descend(prob, pre, cfg, std::move(s), t_start);
    if (!have || d.objective < best.objective) {
      best = std::move(d);
      have = true;
    }
  }

  {
    DecisionTrajectory fixed = repair_bounds(prob, pre, best.x);
    EvalScratch scratch(prob.units.size());
    const double f_fixed = objective_value(prob, pre, fixed, scratch);
    if (f_fixed < best.objective) {
      best.x = std::move(fixed);
      best.objective = f_fixed;
    }
  }

  SolveResult out;
  const ObjectiveBreakdown bd = objective_breakdown(prob, pre, best.x);
  out.traj = std::move(best.x);
  out.report.objective = bd.objective;
  out.report.energy_term = bd.energy_term;
  out.report.mileage_term = bd.mileage_term;
  out.report.penalty_term = bd.penalty_term;
  out.report.energy_wh = bd.energy_wh;
  out.report.mileage_dollar2_s = bd.mileage_dollar2_s;
  out.report.max_bound_violation_w = bd.max_bound_violation_w;
  out.report.iterations = best.iterations;
  out.report.converged = best.converged;
  out.report.objective_history = std::move(best.history);
  out.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

}  // namespace msmooth
