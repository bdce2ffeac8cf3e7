#pragma once

#include <string>
#include <vector>

#include "msmooth/sim.hpp"

namespace msmooth {

// Farm output against the target it was asked to track, with an optional
// baseline series overlaid.  Self-contained SVG document.
std::string render_power_svg(const std::vector<StepRecord>& records,
                             const std::vector<StepRecord>* baseline);

}  // namespace msmooth
