#include "msmooth/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msmooth {

void AgcUnit::validate() const {
  if (!(perf_score > 0.0) || perf_score > 1.0)
    throw std::invalid_argument("agc unit: perf score must be in (0, 1]");
  if (offer_price < 0.0)
    throw std::invalid_argument("agc unit: offer price must be non-negative");
  if (!(capacity > 0.0))
    throw std::invalid_argument("agc unit: capacity must be positive");
}

std::vector<RankedOffer> adjusted_offers(std::span<const AgcUnit> units) {
  if (units.empty())
    throw std::invalid_argument("adjusted_offers: empty unit list");
  std::vector<RankedOffer> out(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!(units[i].perf_score > 0.0))
      throw std::domain_error("adjusted_offers: perf score must be positive");
    out[i] = {i, units[i].adjusted_price()};
  }
  // Cheapest effective price first; ties go to the bigger unit, then lower id.
  std::stable_sort(out.begin(), out.end(),
                   [units](const RankedOffer& a, const RankedOffer& b) {
                     if (a.adjusted_price != b.adjusted_price)
                       return a.adjusted_price < b.adjusted_price;
                     if (units[a.unit].capacity != units[b.unit].capacity)
                       return units[a.unit].capacity > units[b.unit].capacity;
                     return units[a.unit].id < units[b.unit].id;
                   });
  return out;
}

DispatchView dispatch_into(double imbalance, std::span<const AgcUnit> units,
                           std::span<const RankedOffer> order,
                           std::span<double> g_out) {
  DispatchView view;
  std::fill(g_out.begin(), g_out.end(), 0.0);
  if (units.empty()) {
    view.feasible = imbalance == 0.0;
    view.residual = imbalance;
    return view;
  }
  const double sign = imbalance < 0.0 ? -1.0 : 1.0;
  double remaining = std::abs(imbalance);
  view.gamma = order.front().adjusted_price;  // zero imbalance clears at the cheapest offer
  for (const RankedOffer& offer : order) {
    if (remaining <= 0.0) break;
    const double take = std::min(remaining, units[offer.unit].capacity);
    g_out[offer.unit] = sign * take;
    view.gamma = offer.adjusted_price;
    remaining -= take;
  }
  if (remaining > 0.0) {
    view.feasible = false;
    view.residual = sign * remaining;
  }
  return view;
}

DispatchResult dispatch(double imbalance, std::span<const AgcUnit> units) {
  for (const AgcUnit& u : units) u.validate();
  const std::vector<RankedOffer> order = adjusted_offers(units);
  DispatchResult res;
  res.g.resize(units.size());
  const DispatchView view = dispatch_into(imbalance, units, order, res.g);
  res.gamma = view.gamma;
  res.feasible = view.feasible;
  res.residual = view.residual;
  return res;
}

double step_mileage_penalty(double gamma, std::span<const double> g) {
  double sum = 0.0;
  for (double gi : g) sum += (gamma * gi) * (gamma * gi);
  return sum;
}

double settlement_mileage(std::span<const DispatchResult> steps) {
  if (steps.empty()) return 0.0;
  const std::size_t n_units = steps.front().g.size();
  double total = 0.0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const DispatchResult& s = steps[t];
    if (s.g.size() != n_units)
      throw std::invalid_argument("settlement_mileage: ragged dispatch series");
    for (std::size_t i = 0; i < n_units; ++i) {
      const double prev = t == 0 ? 0.0 : steps[t - 1].g[i];
      total += s.gamma * std::abs(s.g[i] - prev);
    }
  }
  return total;
}

}  // namespace msmooth
