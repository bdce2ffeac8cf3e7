#pragma once

#include <span>
#include <vector>

namespace msmooth {

struct AgcUnit {
  int id = 0;
  double perf_score = 1.0;   // in (0, 1]
  double offer_price = 0.0;  // $/MW
  double capacity = 0.0;     // MW, symmetric regulation band
  void validate() const;     // throws std::invalid_argument
  double adjusted_price() const { return offer_price / perf_score; }
};

struct RankedOffer {
  std::size_t unit = 0;  // index into the input span
  double adjusted_price = 0.0;
};

// Merit order: ascending adjusted price; ties go to the larger capacity,
// then the lower unit id.
std::vector<RankedOffer> adjusted_offers(std::span<const AgcUnit> units);

struct DispatchResult {
  std::vector<double> g;   // awarded regulation per unit (input order), MW
  double gamma = 0.0;      // clearing price = marginal unit's adjusted price, $/MW
  bool feasible = true;    // false when |imbalance| exceeds total capacity
  double residual = 0.0;   // imbalance minus sum(g), MW (zero when feasible)
};

// Fills units in merit order until the imbalance is covered; the last unit
// touched sets the clearing price.  Negative imbalance mirrors to the
// downward band.  Saturates (feasible = false) beyond total capacity.
DispatchResult dispatch(double imbalance, std::span<const AgcUnit> units);

// Pre-ranked variant used in hot loops: writes awards into g_out
// (size = units.size()), no allocation.
struct DispatchView {
  double gamma = 0.0;
  bool feasible = true;
  double residual = 0.0;
};
DispatchView dispatch_into(double imbalance, std::span<const AgcUnit> units,
                           std::span<const RankedOffer> order,
                           std::span<double> g_out);

// Sum of (gamma * g_i)^2 over units, $^2.
double step_mileage_penalty(double gamma, std::span<const double> g);

// Settlement-style mileage cost: each unit's |delta g| since the previous
// step (from zero at the first), priced at that step's clearing price.
// Returns total $ for the series.
double settlement_mileage(std::span<const DispatchResult> steps);

}  // namespace msmooth
