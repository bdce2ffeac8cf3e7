#pragma once

#include <vector>

#include "msmooth/sim.hpp"

namespace msmooth::test {

// One fit per test binary; everything downstream shares the coefficients.
inline const CpFitReport& fit_report() {
  static const CpFitReport rep = fit_cp(CpFitGrid{});
  return rep;
}

inline TurbineParams std_turbine() {
  TurbineParams p;
  p.cp = fit_report().coeffs;
  return p;
}

// Three-unit regulation book used across the suites (scores 0.7168 / 0.6074 /
// 1.0, offers 2 / 4 / 1 $/MW, bands 1.5 / 4 / 2.5 MW).
inline std::vector<AgcUnit> regulation_book() {
  return {{1, 0.7168, 2.0, 1.5}, {2, 0.6074, 4.0, 4.0}, {3, 1.0, 1.0, 2.5}};
}

}  // namespace msmooth::test
