#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "msmooth/mpc.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msmooth {

namespace {

struct Best {
  double value = std::numeric_limits<double>::infinity();
  std::uint64_t index = 0;  // flat candidate index, ties go to the lowest
  std::uint64_t evals = 0;
};

}  // namespace

OracleResult brute_force_oracle(const HorizonProblem& prob, int grid_points) {
  prob.validate();
  if (prob.n_turbines != 1)
    throw std::invalid_argument("oracle: single-turbine problems only");
  if (prob.horizon_steps < 1 || prob.horizon_steps > 2)
    throw std::invalid_argument("oracle: at most two steps");
  if (grid_points < 2 || grid_points > 128)
    throw std::invalid_argument("oracle: grid_points outside [2, 128]");

  const PrecomputedProblem pre(prob);
  const TurbineParams& p = prob.turbine;
  const int G = grid_points;
  std::vector<double> omegas(G), betas(G);
  for (int i = 0; i < G; ++i) {
    omegas[i] = p.omega_min + (p.omega_max - p.omega_min) * i / (G - 1);
    betas[i] = p.beta_min + (p.beta_max - p.beta_min) * i / (G - 1);
  }
  const double rate = p.pitch_rate_max * prob.dt;
  const double beta0 = prob.init[0].beta;
  const int T = prob.horizon_steps;

  const std::uint64_t n_outer = static_cast<std::uint64_t>(G) * G;

  const int threads = effective_threads();
  std::vector<Best> slot(n_outer);

#ifdef _OPENMP
#pragma omp parallel num_threads(threads)
#endif
  {
    DecisionTrajectory traj;
    traj.resize(T, 1);
    EvalScratch scratch(prob.units.size());
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (std::int64_t outer = 0; outer < static_cast<std::int64_t>(n_outer); ++outer) {
      const int i0 = static_cast<int>(outer / G);
      const int j0 = static_cast<int>(outer % G);
      if (std::abs(betas[j0] - beta0) > rate + 1e-12) continue;
      Best& best = slot[static_cast<std::size_t>(outer)];
      traj.w(0, 0) = omegas[i0];
      traj.b(0, 0) = betas[j0];
      if (T == 1) {
        best.value = objective_value(prob, pre, traj, scratch);
        best.index = static_cast<std::uint64_t>(outer);
        best.evals = 1;
        continue;
      }
      for (int i1 = 0; i1 < G; ++i1) {
        traj.w(1, 0) = omegas[i1];
        for (int j1 = 0; j1 < G; ++j1) {
          if (std::abs(betas[j1] - betas[j0]) > rate + 1e-12) continue;
          traj.b(1, 0) = betas[j1];
          const double f = objective_value(prob, pre, traj, scratch);
          ++best.evals;
          const std::uint64_t flat =
              static_cast<std::uint64_t>(outer) * G * G +
              static_cast<std::uint64_t>(i1) * G + j1;
          if (f < best.value) {
            best.value = f;
            best.index = flat;
          }
        }
      }
    }
  }

  // Serial reduction keeps the winner independent of the thread count.
  Best overall;
  std::uint64_t total_evals = 0;
  for (const Best& b : slot) {
    total_evals += b.evals;
    if (b.value < overall.value) {
      overall.value = b.value;
      overall.index = b.index;
    }
  }
  if (!std::isfinite(overall.value))
    throw std::runtime_error("oracle: no feasible candidate on the grid");

  OracleResult out;
  out.objective = overall.value;
  out.evaluations = total_evals;
  out.traj.resize(T, 1);
  if (T == 1) {
    out.traj.w(0, 0) = omegas[overall.index / G];
    out.traj.b(0, 0) = betas[overall.index % G];
  } else {
    const std::uint64_t j1 = overall.index % G;
    const std::uint64_t i1 = (overall.index / G) % G;
    const std::uint64_t j0 = (overall.index / (static_cast<std::uint64_t>(G) * G)) % G;
    const std::uint64_t i0 = overall.index / (static_cast<std::uint64_t>(G) * G * G);
    out.traj.w(0, 0) = omegas[i0];
    out.traj.b(0, 0) = betas[j0];
    out.traj.w(1, 0) = omegas[i1];
    out.traj.b(1, 0) = betas[j1];
  }
  return out;
}

}  // namespace msmooth
