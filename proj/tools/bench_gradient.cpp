// Times the finite-difference gradient, serial vs OpenMP, on one horizon
// problem and checks the two paths agree bit for bit.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "msmooth/mpc.hpp"
#include "msmooth/sim.hpp"

using namespace msmooth;
using Clock = std::chrono::steady_clock;

int main(int argc, char** argv) {
  int turbines = 4, steps = 10, reps = 40;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string k = argv[i];
    const int v = std::atoi(argv[i + 1]);
    if (k == "--turbines") turbines = v;
    else if (k == "--steps") steps = v;
    else if (k == "--reps") reps = v;
    else {
      std::fprintf(stderr, "usage: bench_gradient [--turbines N] [--steps T] [--reps R]\n");
      return 1;
    }
  }

  ScenarioConfig cfg = default_scenario();
  cfg.n_turbines = turbines;
  cfg.horizon_steps = steps;
  CpFitReport rep = fit_cp(cfg.cp_grid);
  cfg.turbine.cp = rep.coeffs;

  HorizonProblem prob;
  prob.alpha = cfg.alpha;
  prob.dt = cfg.dt;
  prob.horizon_steps = steps;
  prob.n_turbines = turbines;
  prob.turbine = cfg.turbine;
  prob.units = cfg.units;
  prob.scheduled_mw = cfg.scheduled_mw;
  prob.penalty_weight = cfg.penalty_weight;
  const std::vector<double> wind = ou_series(*cfg.wind.ou, cfg.dt, steps, true);
  prob.imbalance = ou_series(*cfg.imbalance.ou, cfg.dt, steps, false);
  prob.wind.assign(static_cast<std::size_t>(steps) * turbines, 0.0);
  for (int t = 0; t < steps; ++t)
    for (int n = 0; n < turbines; ++n)
      prob.wind[static_cast<std::size_t>(t) * turbines + n] =
          wind[static_cast<std::size_t>(t)] + 0.2 * n;
  prob.init.assign(static_cast<std::size_t>(turbines), TurbineState{});
  for (int n = 0; n < turbines; ++n) {
    MpptReference r = mppt_reference(prob.wind[static_cast<std::size_t>(n)], cfg.turbine);
    prob.init[static_cast<std::size_t>(n)] = {r.omega, cfg.turbine.beta_min, r.power};
  }
  prob.validate();

  PrecomputedProblem pre(prob);
  DecisionTrajectory x = mppt_trajectory(prob, pre);
  const double h = SolverConfig{}.fd_step;
  std::vector<double> gs(2 * static_cast<std::size_t>(steps) * turbines);
  std::vector<double> gp(gs.size());

  // Warm both paths once so thread-pool spin-up does not skew the clock.
  fd_gradient_serial(prob, pre, x, h, gs);
  fd_gradient_parallel(prob, pre, x, h, gp);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fd_gradient_serial(prob, pre, x, h, gs);
  const double serial_us =
      std::chrono::duration<double, std::micro>(Clock::now() - t0).count() / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fd_gradient_parallel(prob, pre, x, h, gp);
  const double parallel_us =
      std::chrono::duration<double, std::micro>(Clock::now() - t0).count() / reps;

  bool identical = gs.size() == gp.size();
  for (std::size_t i = 0; identical && i < gs.size(); ++i)
    identical = gs[i] == gp[i];

  std::printf("turbines=%d steps=%d coords=%zu reps=%d threads=%d\n", turbines,
              steps, gs.size(), reps, effective_threads());
  std::printf("serial    %10.1f us/gradient\n", serial_us);
  std::printf("parallel  %10.1f us/gradient\n", parallel_us);
  std::printf("speedup   %10.2fx\n", serial_us / parallel_us);
  std::printf("bit-identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
