#pragma once

#include <array>
#include <cstddef>

namespace msmooth {

// Power-coefficient polynomial, quadratic in both tip-speed ratio and pitch:
//   cp(l, b) = (c11 b^2 + c12 b + c13) l^2
//            + (c21 b^2 + c22 b + c23) l
//            + (c31 b^2 + c32 b + c33)
// clamped below at zero.  c[i][j] maps to c{i+1}{j+1}.
struct CpCoefficients {
  std::array<std::array<double, 3>, 3> c{};
  double lambda_opt = 0.0;  // argmax of the fitted surface at beta_min
  double cp_max = 0.0;      // value there
};

double cp_eval(double lambda, double beta, const CpCoefficients& cp);

// Analytic surface the polynomial is fitted to (exponential form, negative
// values possible at extreme lambda/beta).
double cp_reference(double lambda, double beta);

struct CpFitGrid {
  double lambda_min = 3.0;
  double lambda_max = 12.0;
  double lambda_step = 0.25;
  double beta_min = 0.0;   // deg
  double beta_max = 20.0;  // deg
  double beta_step = 1.0;
  void validate() const;
};

struct CpFitReport {
  CpCoefficients coeffs;
  double rmse = 0.0;                // clamped surfaces, whole grid
  double r_squared = 0.0;           // uncentered (fraction of raw sum of squares)
  double r_squared_centered = 0.0;  // conventional, about the grid mean
  double max_abs_error = 0.0;
  std::size_t n_points = 0;
};

// Least-squares fit of the nine coefficients against cp_reference over the
// grid, with the surface optimum at beta_min pinned near the reference one.
CpFitReport fit_cp(const CpFitGrid& grid);

struct TurbineParams {
  double rho = 1.225;             // air density, kg/m^3
  double rotor_radius = 63.0;     // m
  double swept_area = 12469.0;    // m^2
  double inertia = 3.544e7;       // rotor + drivetrain, kg m^2
  double rated_power = 5.0e6;     // electrical, W
  double omega_min = 0.5;         // rad/s
  double omega_max = 1.5;
  double beta_min = 0.0;          // deg
  double beta_max = 25.0;
  double pitch_rate_max = 5.0;    // deg/s
  CpCoefficients cp;
  void validate() const;  // throws std::invalid_argument
};

struct TurbineState {
  double omega = 0.0;  // rad/s
  double beta = 0.0;   // deg
  double p_e = 0.0;    // last electrical output, W
};

// Mechanical power captured from the wind, W.
double aero_power(double v, double omega, double beta, const TurbineParams& p);

// Electrical output over one step: captured power minus what went into
// accelerating the rotor (backward difference on omega).
double electrical_power(double v, double omega_prev, double omega_now,
                        double beta, double dt, const TurbineParams& p);

struct MpptReference {
  double omega = 0.0;  // rad/s, clamped to the rotor band
  double power = 0.0;  // W, capped at rated
};
MpptReference mppt_reference(double v, const TurbineParams& p);

// Extra headroom from rotor deceleration toward the MPPT speed, W.
// Positive when omega_prev exceeds omega_mpp.
double kinetic_headroom(double omega_prev, double omega_mpp, double dt,
                        double inertia);

struct RotorStep {
  double omega = 0.0;        // rad/s, inside [omega_min, omega_max]
  bool clamped_low = false;
  bool clamped_high = false;
  bool command_met = false;  // residual within tolerance
  double residual = 0.0;     // achieved minus commanded, W
};

// Solves electrical_power(v, omega_prev, omega, beta, dt) = p_command for
// omega, preferring the root nearest omega_prev, then clamps to the band.
RotorStep step_rotor(double v, double beta, double p_command,
                     double omega_prev, double dt, const TurbineParams& p);

}  // namespace msmooth
