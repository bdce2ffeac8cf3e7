#include "msmooth/turbine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msmooth {

double cp_eval(double lambda, double beta, const CpCoefficients& cp) {
  if (!(lambda > 0.0)) throw std::domain_error("cp_eval: lambda must be positive");
  const auto& c = cp.c;
  const double b2 = beta * beta;
  const double a = c[0][0] * b2 + c[0][1] * beta + c[0][2];
  const double b = c[1][0] * b2 + c[1][1] * beta + c[1][2];
  const double d = c[2][0] * b2 + c[2][1] * beta + c[2][2];
  const double val = (a * lambda + b) * lambda + d;
  return val > 0.0 ? val : 0.0;
}

double cp_reference(double lambda, double beta) {
  // 1/li = 1/(l + 0.08 b) - 0.035/(b^3 + 1)
  const double inv_li = 1.0 / (lambda + 0.08 * beta) - 0.035 / (beta * beta * beta + 1.0);
  return 0.5176 * (116.0 * inv_li - 0.4 * beta - 5.0) * std::exp(-21.0 * inv_li) +
         0.0068 * lambda;
}

void CpFitGrid::validate() const {
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min) || !(lambda_step > 0.0))
    throw std::invalid_argument("cp fit grid: bad lambda range");
  if (!(beta_min >= 0.0) || !(beta_max > beta_min) || !(beta_step > 0.0))
    throw std::invalid_argument("cp fit grid: bad beta range");
}

void TurbineParams::validate() const {
  if (!(rho > 0.0) || !(swept_area > 0.0) || !(rotor_radius > 0.0))
    throw std::invalid_argument("turbine: rho, area, radius must be positive");
  if (!(inertia > 0.0) || !(rated_power > 0.0))
    throw std::invalid_argument("turbine: inertia and rated power must be positive");
  if (!(omega_min > 0.0) || !(omega_max > omega_min))
    throw std::invalid_argument("turbine: need 0 < omega_min < omega_max");
  if (!(beta_max > beta_min) || beta_min < 0.0)
    throw std::invalid_argument("turbine: need 0 <= beta_min < beta_max");
  if (!(pitch_rate_max > 0.0))
    throw std::invalid_argument("turbine: pitch rate must be positive");
}

double aero_power(double v, double omega, double beta, const TurbineParams& p) {
  if (v <= 0.0) return 0.0;
  const double lambda = omega * p.rotor_radius / v;
  if (lambda <= 0.0) return 0.0;
  const double cp = cp_eval(lambda, beta, p.cp);
  return 0.5 * p.rho * p.swept_area * v * v * v * cp;
}

double electrical_power(double v, double omega_prev, double omega_now,
                        double beta, double dt, const TurbineParams& p) {
  const double captured = aero_power(v, omega_now, beta, p);
  const double inertial = p.inertia * omega_now * (omega_now - omega_prev) / dt;
  return captured - inertial;
}

MpptReference mppt_reference(double v, const TurbineParams& p) {
  MpptReference r;
  if (v <= 0.0) {
    r.omega = p.omega_min;
    r.power = 0.0;
    return r;
  }
  r.omega = std::clamp(p.cp.lambda_opt * v / p.rotor_radius, p.omega_min, p.omega_max);
  r.power = std::min(aero_power(v, r.omega, p.beta_min, p), p.rated_power);
  return r;
}

double kinetic_headroom(double omega_prev, double omega_mpp, double dt,
                        double inertia) {
  return 0.5 * inertia * (omega_prev * omega_prev - omega_mpp * omega_mpp) / dt;
}

namespace {

// d/domega of electrical_power at fixed v, beta.
double electrical_power_slope(double v, double omega_prev, double omega,
                              double beta, double dt, const TurbineParams& p) {
  const double h = 1e-6;
  const double lo = std::max(omega - h, 1e-9);
  const double hi = omega + h;
  return (electrical_power(v, omega_prev, hi, beta, dt, p) -
          electrical_power(v, omega_prev, lo, beta, dt, p)) /
         (hi - lo);
}

}  // namespace

RotorStep step_rotor(double v, double beta, double p_command,
                     double omega_prev, double dt, const TurbineParams& p) {
  constexpr double kTolW = 1.0;  // W
  RotorStep out;

  auto f = [&](double w) {
    return electrical_power(v, omega_prev, w, beta, dt, p) - p_command;
  };

  // Scan a widened band for sign changes; several roots can exist because
  // captured power rises and falls with omega while the inertial term is
  // monotone.  Pick the bracket nearest the current speed.
  const double lo = std::max(p.omega_min - 0.5, 0.05);
  const double hi = p.omega_max + 0.5;
  constexpr int kScan = 64;
  double best_a = 0.0, best_b = 0.0, best_dist = 1e300;
  bool found = false;
  double prev_w = lo, prev_f = f(lo);
  bool all_neg = prev_f < 0.0, all_pos = prev_f > 0.0;
  for (int i = 1; i <= kScan; ++i) {
    const double w = lo + (hi - lo) * i / kScan;
    const double fw = f(w);
    all_neg = all_neg && fw < 0.0;
    all_pos = all_pos && fw > 0.0;
    if ((prev_f <= 0.0 && fw >= 0.0) || (prev_f >= 0.0 && fw <= 0.0)) {
      const double mid = 0.5 * (prev_w + w);
      const double dist = std::abs(mid - omega_prev);
      if (dist < best_dist) {
        best_dist = dist;
        best_a = prev_w;
        best_b = w;
        found = true;
      }
    }
    prev_w = w;
    prev_f = fw;
  }

  if (!found) {
    if (all_neg) {
      // Command exceeds even a full kinetic discharge: pin at the low stop,
      // which releases the most stored energy in one step.
      out.omega = p.omega_min;
      out.clamped_low = true;
    } else {
      // Surplus even at full acceleration: run at the high stop, pitch takes
      // over from there.
      out.omega = p.omega_max;
      out.clamped_high = true;
    }
    out.residual = f(out.omega);
    out.command_met = std::abs(out.residual) <= kTolW;
    return out;
  }

  // Safeguarded Newton on the chosen bracket, bisection fallback.
  double a = best_a, b = best_b;
  double fa = f(a);
  double w = 0.5 * (a + b);
  for (int it = 0; it < 50; ++it) {
    const double fw = f(w);
    if (std::abs(fw) <= kTolW * 0.25) break;
    if ((fa <= 0.0) == (fw <= 0.0)) {
      a = w;
      fa = fw;
    } else {
      b = w;
    }
    const double slope = electrical_power_slope(v, omega_prev, w, beta, dt, p);
    double next = (slope != 0.0) ? w - fw / slope : 0.5 * (a + b);
    if (!(next > a) || !(next < b)) next = 0.5 * (a + b);
    if (std::abs(next - w) < 1e-14) {
      w = next;
      break;
    }
    w = next;
  }

  if (w < p.omega_min) {
    out.omega = p.omega_min;
    out.clamped_low = true;
  } else if (w > p.omega_max) {
    out.omega = p.omega_max;
    out.clamped_high = true;
  } else {
    out.omega = w;
  }
  out.residual = f(out.omega);
  out.command_met = std::abs(out.residual) <= kTolW;
  return out;
}

}  // namespace msmooth
