#include "msmooth/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msmooth {

PitchSolution pitch_from_cp(double cp_target, double lambda,
                            const TurbineParams& p) {
  const auto& c = p.cp.c;
  // cp as a quadratic in beta at fixed lambda: A b^2 + B b + C
  const double l2 = lambda * lambda;
  const double A = c[0][0] * l2 + c[1][0] * lambda + c[2][0];
  const double B = c[0][1] * l2 + c[1][1] * lambda + c[2][1];
  const double C = c[0][2] * l2 + c[1][2] * lambda + c[2][2];

  auto fallback = [&]() {
    PitchSolution s;
    s.in_range = false;
    // More capture wanted than beta_min gives -> flatten out; less than full
    // pitch sheds -> feather all the way.
    s.beta = cp_target >= cp_eval(lambda, p.beta_min, p.cp) ? p.beta_min
                                                            : p.beta_max;
    return s;
  };

  double roots[2];
  int n_roots = 0;
  if (std::abs(A) < 1e-14) {
    if (std::abs(B) < 1e-14) return fallback();
    roots[n_roots++] = (cp_target - C) / B;
  } else {
    const double disc = B * B - 4.0 * A * (C - cp_target);
    if (disc < 0.0) return fallback();
    const double sq = std::sqrt(disc);
    roots[n_roots++] = (-B - sq) / (2.0 * A);
    roots[n_roots++] = (-B + sq) / (2.0 * A);
  }

  PitchSolution best;
  bool have = false;
  for (int i = 0; i < n_roots; ++i) {
    const double b = roots[i];
    if (b < p.beta_min - 1e-9 || b > p.beta_max + 1e-9) continue;
    if (!have || b < best.beta) {
      best.beta = std::clamp(b, p.beta_min, p.beta_max);
      best.in_range = true;
      have = true;
    }
  }
  return have ? best : fallback();
}

TrackingOutcome track_step(double p_command_w, const TurbineState& prev,
                           double v, double dt, const TurbineParams& p) {
  constexpr double kTolW = 1.0;
  TrackingOutcome out;

  const double rate = p.pitch_rate_max * dt;
  const double beta_relaxed = std::max(p.beta_min, prev.beta - rate);

  const RotorStep rotor =
      step_rotor(v, beta_relaxed, p_command_w, prev.omega, dt, p);
  out.pre_pitch_omega = rotor.omega;

  double omega = rotor.omega;
  double beta = beta_relaxed;
  const bool surplus = rotor.clamped_high && rotor.residual > kTolW;
  const double wind_power = 0.5 * p.rho * p.swept_area * v * v * v;

  if (surplus && wind_power > 1e-9) {
    // Rotor pinned with power to spare: pitch to shed the rest.  Required
    // capture = command plus what spinning up to omega_max absorbs.
    out.used_pitch = true;
    const double capture =
        p_command_w + p.inertia * omega * (omega - prev.omega) / dt;
    const double lambda = omega * p.rotor_radius / v;
    const PitchSolution sol =
        pitch_from_cp(std::max(capture, 0.0) / wind_power, lambda, p);
    beta = std::clamp(sol.beta, prev.beta - rate, prev.beta + rate);
    beta = std::clamp(beta, p.beta_min, p.beta_max);
  }

  out.state.omega = omega;
  out.state.beta = beta;
  out.achieved_w = electrical_power(v, prev.omega, omega, beta, dt, p);
  out.state.p_e = out.achieved_w;
  out.residual_w = out.achieved_w - p_command_w;
  out.command_met = std::abs(out.residual_w) <= kTolW;
  out.clamped = rotor.clamped_low || !out.command_met;
  return out;
}

TrackingOutcome track_cycle(double p_command_w, const TurbineState& prev,
                            double v, double dt, int substeps,
                            const TurbineParams& p) {
  if (substeps < 1) throw std::invalid_argument("track_cycle: substeps < 1");
  if (substeps == 1) return track_step(p_command_w, prev, v, dt, p);

  constexpr double kTolW = 1.0;
  const double h = dt / substeps;
  TurbineState state = prev;
  double energy_j = 0.0;
  double pre_pitch_min = 1e300, pre_pitch_max = -1e300;
  bool used_pitch = false, clamped = false;
  for (int s = 0; s < substeps; ++s) {
    const TrackingOutcome sub = track_step(p_command_w, state, v, h, p);
    energy_j += sub.achieved_w * h;
    if (sub.used_pitch) {
      used_pitch = true;
      pre_pitch_min = std::min(pre_pitch_min, sub.pre_pitch_omega);
    }
    pre_pitch_max = std::max(pre_pitch_max, sub.pre_pitch_omega);
    clamped = clamped || sub.clamped;
    state = sub.state;
  }
  TrackingOutcome out;
  out.state = state;
  out.achieved_w = energy_j / dt;
  out.state.p_e = out.achieved_w;
  out.used_pitch = used_pitch;
  out.pre_pitch_omega = used_pitch ? pre_pitch_min : pre_pitch_max;
  out.residual_w = out.achieved_w - p_command_w;
  out.command_met = std::abs(out.residual_w) <= kTolW;
  out.clamped = clamped || !out.command_met;
  return out;
}

}  // namespace msmooth
