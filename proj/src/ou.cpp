#include <cmath>

#include "msmooth/sim.hpp"

namespace msmooth {

void OuParams::validate() const {
  if (!(stdev >= 0.0)) throw ConfigError("ou: stdev must be >= 0");
  if (!(corr_time_s > 0.0)) throw ConfigError("ou: correlation time must be positive");
}

std::vector<double> ou_series(const OuParams& ou, double dt, int steps,
                              bool clamp_nonneg) {
  ou.validate();
  if (!(dt > 0.0)) throw ConfigError("ou: dt must be positive");
  NormalStream draws(ou.seed);
  const double decay = std::exp(-dt / ou.corr_time_s);
  const double shock = ou.stdev * std::sqrt(1.0 - decay * decay);
  std::vector<double> out(static_cast<std::size_t>(std::max(steps, 0)));
  double x = ou.mean;
  for (int k = 0; k < steps; ++k) {
    if (k > 0) x = ou.mean + (x - ou.mean) * decay + shock * draws.next();
    out[static_cast<std::size_t>(k)] = clamp_nonneg ? std::max(x, 0.0) : x;
  }
  return out;
}

}  // namespace msmooth
