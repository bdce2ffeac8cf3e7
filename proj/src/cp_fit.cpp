#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "msmooth/turbine.hpp"

namespace msmooth {

namespace {

// Pseudo-observation weights pinning the fitted optimum at beta_min to the
// reference one (weights multiply squared residuals).
constexpr double kValueAnchorWeight = 40.0;
constexpr double kSlopeAnchorWeight = 300.0;

void design_row(double l, double b, Eigen::RowVectorXd& row) {
  row.resize(9);
  row << b * b * l * l, b * l * l, l * l, b * b * l, b * l, l, b * b, b, 1.0;
}

void dlambda_row(double l, double b, Eigen::RowVectorXd& row) {
  row.resize(9);
  row << 2 * b * b * l, 2 * b * l, 2 * l, b * b, b, 1.0, 0.0, 0.0, 0.0;
}

template <class F>
std::pair<double, double> golden_max(F f, double a, double b) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  for (int i = 0; i < 200; ++i) {
    if (f(c) > f(d)) b = d; else a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

int axis_count(double lo, double hi, double step) {
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

}  // namespace

CpFitReport fit_cp(const CpFitGrid& grid) {
  grid.validate();

  const int nl = axis_count(grid.lambda_min, grid.lambda_max, grid.lambda_step);
  const int nb = axis_count(grid.beta_min, grid.beta_max, grid.beta_step);
  const int n = nl * nb;

  Eigen::MatrixXd X(n, 9);
  Eigen::VectorXd y(n);
  Eigen::RowVectorXd row;
  int k = 0;
  for (int j = 0; j < nb; ++j) {
    const double b = grid.beta_min + j * grid.beta_step;
    for (int i = 0; i < nl; ++i, ++k) {
      const double l = grid.lambda_min + i * grid.lambda_step;
      design_row(l, b, row);
      X.row(k) = row;
      y(k) = std::max(cp_reference(l, b), 0.0);
    }
  }

  const auto [lam_star, cp_star] = golden_max(
      [&](double l) { return cp_reference(l, grid.beta_min); },
      grid.lambda_min, grid.lambda_max);

  Eigen::RowVectorXd value_row, slope_row;
  design_row(lam_star, grid.beta_min, value_row);
  dlambda_row(lam_star, grid.beta_min, slope_row);
  value_row *= std::sqrt(kValueAnchorWeight);
  slope_row *= std::sqrt(kSlopeAnchorWeight);
  const double value_target = cp_star * std::sqrt(kValueAnchorWeight);

  // The model clamps at zero, so points where both reference and prediction
  // are below zero carry no residual.  Refit on the complement until the set
  // stabilizes.
  std::vector<char> active(n, 1);
  Eigen::VectorXd coef(9);
  for (int pass = 0; pass < 30; ++pass) {
    int na = 0;
    for (char a : active) na += a;
    Eigen::MatrixXd Xa(na + 2, 9);
    Eigen::VectorXd ya(na + 2);
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      Xa.row(r) = X.row(i);
      ya(r) = y(i);
      ++r;
    }
    Xa.row(r) = value_row;
    ya(r) = value_target;
    Xa.row(r + 1) = slope_row;
    ya(r + 1) = 0.0;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xa);
    if (qr.rank() < 9)
      throw std::runtime_error("fit_cp: rank-deficient design (grid too coarse)");
    coef = qr.solve(ya);

    const Eigen::VectorXd pred = X * coef;
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const char want = (pred(i) > 0.0 || y(i) > 0.0) ? 1 : 0;
      if (want != active[i]) {
        active[i] = want;
        changed = true;
      }
    }
    if (!changed) break;
  }

  CpFitReport report;
  k = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) report.coeffs.c[i][j] = coef(k++);

  double sse = 0.0, ssy = 0.0, ssy_c = 0.0, maxabs = 0.0;
  const double ymean = y.mean();
  for (int i = 0; i < n; ++i) {
    const double pred = std::max(X.row(i).dot(coef), 0.0);
    const double e = pred - y(i);
    sse += e * e;
    ssy += y(i) * y(i);
    ssy_c += (y(i) - ymean) * (y(i) - ymean);
    maxabs = std::max(maxabs, std::abs(e));
  }
  report.rmse = std::sqrt(sse / n);
  report.r_squared = 1.0 - sse / ssy;
  report.r_squared_centered = 1.0 - sse / ssy_c;
  report.max_abs_error = maxabs;
  report.n_points = static_cast<std::size_t>(n);

  const auto [lam_opt, cp_max] = golden_max(
      [&](double l) { return cp_eval(l, grid.beta_min, report.coeffs); },
      grid.lambda_min, grid.lambda_max);
  report.coeffs.lambda_opt = lam_opt;
  report.coeffs.cp_max = cp_max;
  return report;
}

}  // namespace msmooth
