#include <cstddef>

#include "msmooth/mpc.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msmooth {

namespace {

// Central difference on one decision slot; the trajectory is restored before
// returning.  h_phys is the physical perturbation (band * relative step),
// denom the matching 2h in unit-box units.
double slot_derivative(const HorizonProblem& prob, const PrecomputedProblem& pre,
                       DecisionTrajectory& traj, EvalScratch& scratch,
                       std::size_t flat, bool is_beta, double h_phys,
                       double inv_denom) {
  double& slot = is_beta ? traj.beta[flat] : traj.omega[flat];
  const double saved = slot;
  slot = saved + h_phys;
  const double f_plus = objective_value(prob, pre, traj, scratch);
  slot = saved - h_phys;
  const double f_minus = objective_value(prob, pre, traj, scratch);
  slot = saved;
  return (f_plus - f_minus) * inv_denom;
}

}  // namespace

void fd_gradient_serial(const HorizonProblem& prob, const PrecomputedProblem& pre,
                        const DecisionTrajectory& traj, double h,
                        std::span<double> grad) {
  const std::size_t tn = traj.omega.size();
  const double w_band = prob.turbine.omega_max - prob.turbine.omega_min;
  const double b_band = prob.turbine.beta_max - prob.turbine.beta_min;
  const double inv_denom = 1.0 / (2.0 * h);
  DecisionTrajectory work = traj;
  EvalScratch scratch(prob.units.size());
  for (std::size_t k = 0; k < tn; ++k)
    grad[k] = slot_derivative(prob, pre, work, scratch, k, false, h * w_band, inv_denom);
  for (std::size_t k = 0; k < tn; ++k)
    grad[tn + k] =
        slot_derivative(prob, pre, work, scratch, k, true, h * b_band, inv_denom);
}

void fd_gradient_parallel(const HorizonProblem& prob, const PrecomputedProblem& pre,
                          const DecisionTrajectory& traj, double h,
                          std::span<double> grad) {
#ifndef _OPENMP
  fd_gradient_serial(prob, pre, traj, h, grad);
#else
  const std::size_t tn = traj.omega.size();
  const double w_band = prob.turbine.omega_max - prob.turbine.omega_min;
  const double b_band = prob.turbine.beta_max - prob.turbine.beta_min;
  const double inv_denom = 1.0 / (2.0 * h);
  const int threads = effective_threads();
  // Each coordinate writes its own slot with arithmetic identical to the
  // serial kernel, so the result does not depend on the thread count.
#pragma omp parallel num_threads(threads)
  {
    DecisionTrajectory work = traj;
    EvalScratch scratch(prob.units.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(2 * tn); ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      const bool is_beta = k >= tn;
      const std::size_t flat = is_beta ? k - tn : k;
      grad[k] = slot_derivative(prob, pre, work, scratch, flat, is_beta,
                                h * (is_beta ? b_band : w_band), inv_denom);
    }
  }
#endif
}

}  // namespace msmooth
