#pragma once

#include "msmooth/turbine.hpp"

namespace msmooth {

struct PitchSolution {
  double beta = 0.0;   // deg, clamped to [beta_min, beta_max]
  bool in_range = true;  // false when the target cp is unreachable at this lambda
};

// Solves cp(lambda, beta) = cp_target for beta: smallest root inside the pitch
// band.  Unreachable targets fall back to the nearer stop (beta_min when the
// target exceeds what beta_min captures, beta_max when below what full pitch
// sheds) with in_range = false.
PitchSolution pitch_from_cp(double cp_target, double lambda,
                            const TurbineParams& p);

struct TrackingOutcome {
  TurbineState state;           // after the step
  double achieved_w = 0.0;      // electrical output, W
  bool used_pitch = false;      // pitch stage engaged this step
  bool clamped = false;         // an actuator sits at a stop
  bool command_met = false;     // |achieved - command| within tolerance
  double residual_w = 0.0;      // achieved minus command
  double pre_pitch_omega = 0.0; // rotor-stage speed before any pitching
};

// Rotor speed first, pitch only when the rotor pins at omega_max with power
// to spare; otherwise pitch drifts back toward beta_min at the rate limit.
TrackingOutcome track_step(double p_command_w, const TurbineState& prev,
                           double v, double dt, const TurbineParams& p);

// Same command held over `substeps` equal slices of dt (wind constant).
// achieved_w is the cycle-mean output; flags OR across slices; pre_pitch_omega
// is the lowest pre-pitch speed among pitching slices (the one the activation
// guard must hold for), or the highest rotor-stage speed when no slice pitched.
TrackingOutcome track_cycle(double p_command_w, const TurbineState& prev,
                            double v, double dt, int substeps,
                            const TurbineParams& p);

}  // namespace msmooth
