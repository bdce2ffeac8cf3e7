#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"
#include "msmooth/market.hpp"

using namespace msmooth;
using msmooth::test::regulation_book;

namespace {

// Cheapest total adjusted cost over a 0.1 MW grid for three units; the
// merit-order dispatch must never beat it and never lose to it.
double grid_min_cost(double imbalance, const std::vector<AgcUnit>& u) {
  const double s = imbalance < 0.0 ? -1.0 : 1.0;
  const double need = std::abs(imbalance);
  auto steps = [](double cap) { return static_cast<int>(std::round(cap / 0.1)); };
  double best = 1e300;
  for (int i = 0; i <= steps(u[0].capacity); ++i)
    for (int j = 0; j <= steps(u[1].capacity); ++j) {
      const double g0 = 0.1 * i, g1 = 0.1 * j;
      const double g2 = need - g0 - g1;
      if (g2 < -1e-9 || g2 > u[2].capacity + 1e-9) continue;
      const double cost = u[0].adjusted_price() * g0 +
                          u[1].adjusted_price() * g1 +
                          u[2].adjusted_price() * std::max(g2, 0.0);
      best = std::min(best, cost);
    }
  (void)s;
  return best;
}

double dispatch_cost(const DispatchResult& d, const std::vector<AgcUnit>& u) {
  double cost = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    cost += u[i].adjusted_price() * std::abs(d.g[i]);
  return cost;
}

}  // namespace

TEST_CASE("adjusted offers and merit order") {
  const auto units = regulation_book();
  const auto order = adjusted_offers(units);
  REQUIRE(order.size() == 3);
  CHECK(order[0].unit == 2);  // 1.0000
  CHECK(order[1].unit == 0);  // 2.7902
  CHECK(order[2].unit == 1);  // 6.5854
  CHECK(order[0].adjusted_price == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(order[1].adjusted_price == doctest::Approx(2.0 / 0.7168).epsilon(1e-12));
  CHECK(order[2].adjusted_price == doctest::Approx(4.0 / 0.6074).epsilon(1e-12));
  CHECK(order[1].adjusted_price == doctest::Approx(2.7902).epsilon(1e-4));
  CHECK(order[2].adjusted_price == doctest::Approx(6.5854).epsilon(1e-4));
}

TEST_CASE("merit-order tie breaks") {
  std::vector<AgcUnit> units = {{7, 1.0, 3.0, 2.0}, {4, 1.0, 3.0, 4.0}};
  auto order = adjusted_offers(units);
  CHECK(order[0].unit == 1);  // same price, larger band first
  CHECK(order[1].unit == 0);

  units = {{7, 1.0, 3.0, 2.0}, {4, 1.0, 3.0, 2.0}};
  order = adjusted_offers(units);
  CHECK(order[0].unit == 1);  // same price and band, lower id first
  CHECK(order[1].unit == 0);

  const std::vector<AgcUnit> one = {{1, 0.9, 2.0, 3.0}};
  CHECK(adjusted_offers(one).size() == 1);
  CHECK(adjusted_offers(one)[0].unit == 0);
}

TEST_CASE("unit validation") {
  AgcUnit u{1, 0.5, 2.0, 1.0};
  CHECK_NOTHROW(u.validate());
  u.perf_score = 0.0;
  CHECK_THROWS_AS(u.validate(), std::invalid_argument);
  u = {1, 0.5, -1.0, 1.0};
  CHECK_THROWS_AS(u.validate(), std::invalid_argument);
  u = {1, 0.5, 2.0, 0.0};
  CHECK_THROWS_AS(u.validate(), std::invalid_argument);
  const std::vector<AgcUnit> bad = {{1, 0.0, 2.0, 1.0}};
  CHECK_THROWS_AS(adjusted_offers(bad), std::domain_error);
  CHECK_THROWS_AS(adjusted_offers(std::vector<AgcUnit>{}), std::invalid_argument);
}

TEST_CASE("dispatch fills in merit order") {
  const auto units = regulation_book();

  const DispatchResult zero = dispatch(0.0, units);
  CHECK(zero.feasible);
  CHECK(zero.residual == 0.0);
  for (double g : zero.g) CHECK(g == 0.0);
  CHECK(zero.gamma == doctest::Approx(1.0).epsilon(1e-12));  // cheapest offer

  const DispatchResult up = dispatch(5.0, units);
  CHECK(up.feasible);
  CHECK(up.g[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(up.g[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(up.g[2] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(up.gamma == doctest::Approx(4.0 / 0.6074).epsilon(1e-12));
  CHECK(up.residual == 0.0);

  const DispatchResult down = dispatch(-9.0, units);
  CHECK_FALSE(down.feasible);
  CHECK(down.g[0] == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(down.g[1] == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(down.g[2] == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(down.residual == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(down.gamma == doctest::Approx(4.0 / 0.6074).epsilon(1e-12));
}

TEST_CASE("dispatch balance, sign, and capacity") {
  const auto units = regulation_book();
  for (double imb = -7.9; imb <= 7.9; imb += 0.37) {
    const DispatchResult d = dispatch(imb, units);
    REQUIRE(d.feasible);
    double total = 0.0;
    for (std::size_t i = 0; i < units.size(); ++i) {
      total += d.g[i];
      CHECK(std::abs(d.g[i]) <= units[i].capacity + 1e-12);
      if (d.g[i] != 0.0) CHECK(d.g[i] * imb > 0.0);  // moves with the imbalance
    }
    CHECK(total == doctest::Approx(imb).epsilon(1e-12));
  }
}

TEST_CASE("dispatch monotonicity in |imbalance|") {
  const auto units = regulation_book();
  double prev_gamma = 0.0;
  std::vector<double> prev_g(units.size(), 0.0);
  for (double imb = 0.0; imb <= 8.0 + 1e-9; imb += 0.25) {
    const DispatchResult d = dispatch(imb, units);
    CHECK(d.gamma >= prev_gamma - 1e-12);
    for (std::size_t i = 0; i < units.size(); ++i)
      CHECK(std::abs(d.g[i]) >= std::abs(prev_g[i]) - 1e-12);
    prev_gamma = d.gamma;
    prev_g = d.g;
  }
}

TEST_CASE("dispatch_into matches dispatch") {
  const auto units = regulation_book();
  const auto order = adjusted_offers(units);
  std::vector<double> g(units.size());
  for (double imb : {-8.5, -3.2, 0.0, 1.1, 4.9, 7.99, 9.5}) {
    const DispatchResult ref = dispatch(imb, units);
    const DispatchView view = dispatch_into(imb, units, order, g);
    CHECK(view.gamma == ref.gamma);
    CHECK(view.feasible == ref.feasible);
    CHECK(view.residual == ref.residual);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == ref.g[i]);
  }
}

TEST_CASE("dispatch is grid-optimal on random books") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> cap_ticks(5, 40);    // 0.5 .. 4.0 MW
  std::uniform_int_distribution<int> price(1, 50);        // 0.1 .. 5.0 $/MW
  std::uniform_int_distribution<int> score(40, 100);      // 0.40 .. 1.00
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<AgcUnit> units(3);
    double band = 0.0;
    for (int i = 0; i < 3; ++i) {
      units[i] = {i + 1, score(rng) / 100.0, price(rng) / 10.0,
                  cap_ticks(rng) / 10.0};
      band += units[i].capacity;
    }
    std::uniform_int_distribution<int> imb_ticks(
        0, static_cast<int>(std::round(band * 10.0)));
    const double sign = (trial % 2 == 0) ? 1.0 : -1.0;
    const double imb = sign * imb_ticks(rng) * 0.1;
    const DispatchResult d = dispatch(imb, units);
    REQUIRE(d.feasible);
    CHECK(dispatch_cost(d, units) ==
          doctest::Approx(grid_min_cost(imb, units)).epsilon(1e-9));
  }
}

TEST_CASE("step mileage penalty") {
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  CHECK(step_mileage_penalty(3.0, zero) == 0.0);
  const std::vector<double> one = {2.0, 0.0, 0.0};
  CHECK(step_mileage_penalty(1.0, one) == doctest::Approx(4.0).epsilon(1e-12));
  const std::vector<double> book = {1.5, 1.0, 2.5};
  CHECK(step_mileage_penalty(6.5854, book) ==
        doctest::Approx(6.5854 * 6.5854 * (2.25 + 1.0 + 6.25)).epsilon(1e-12));
  // Sign flip of every award leaves the penalty unchanged.
  const std::vector<double> neg = {-1.5, -1.0, -2.5};
  CHECK(step_mileage_penalty(6.5854, neg) ==
        doctest::Approx(step_mileage_penalty(6.5854, book)).epsilon(1e-15));
}

TEST_CASE("settlement mileage") {
  DispatchResult a;
  a.g = {1.0, 0.0, 0.0};
  a.gamma = 2.0;
  // Single step: one ramp from zero.
  std::vector<DispatchResult> series = {a};
  CHECK(settlement_mileage(series) == doctest::Approx(2.0).epsilon(1e-12));

  // Constant awards: only the initial ramp is charged.
  series.assign(5, a);
  CHECK(settlement_mileage(series) == doctest::Approx(2.0).epsilon(1e-12));

  // Alternating on/off with gamma = 1: ten unit movements.
  DispatchResult on;
  on.g = {1.0, 0.0, 0.0};
  on.gamma = 1.0;
  DispatchResult off;
  off.g = {0.0, 0.0, 0.0};
  off.gamma = 1.0;
  series.clear();
  for (int i = 0; i < 5; ++i) {
    series.push_back(on);
    series.push_back(off);
  }
  CHECK(settlement_mileage(series) == doctest::Approx(10.0).epsilon(1e-12));
}
