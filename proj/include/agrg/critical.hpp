#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "agrg/common.hpp"
#include "agrg/meanfield.hpp"
#include "agrg/weights.hpp"

namespace agrg {

struct ExponentPrediction {
  double beta = 0.0;
  double delta = 0.0;
  bool log_correction = false;
};

// Exponent table: beta = 1/(k-2), delta = k-1 when E[W^k] < inf;
// beta = 1/(tau-3), delta = tau-2 for a power-law tail tau in (3, k+1);
// at the boundary tau = k+1 the finite-moment exponents acquire
// logarithmic corrections.
inline ExponentPrediction predicted_exponents(int k, const TailRegime& regime) {
  if (k < 4 || k % 2 != 0)
    throw config_error("predicted_exponents: k must be even and >= 4");
  switch (regime.kind) {
    case TailRegime::Kind::FiniteMoment:
      return {1.0 / (k - 2), double(k - 1), false};
    case TailRegime::Kind::PowerLaw:
      return {1.0 / (regime.tau - 3.0), regime.tau - 2.0, false};
    default:
      return {1.0 / (k - 2), double(k - 1), true};
  }
}

struct ExponentFit {
  double estimate = 0.0;
  double std_error = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  int n_points = 0;
  double r_squared = 0.0;
  bool log_corrected = false;
};

struct FitOptions {
  int n_points = 12;
  bool log_corrected = false;
  SolveOptions solve;
};

namespace detail {

struct OlsFit {
  double slope, intercept, slope_se, r_squared;
};

inline OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (int i = 0; i < n; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  f.slope_se = (n > 2) ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
  return f;
}

// Positivity-safe copy of the model at coupling theta: c tracks theta so the
// kernel stays strictly positive across sweep grids; m+ does not depend on c.
inline ModelSpec at_theta(const ModelSpec& model, double theta) {
  ModelSpec m = model;
  const double g2 = model.g.bound * model.g.bound;
  const double c = std::max(model.rank2().c(), std::fabs(theta) * g2 + 1.0);
  m.kernel = Rank2Kernel(c, theta, model.g);
  return m;
}

}  // namespace detail

// Regression of log m+ against log eps on theta = theta_c (1 + eps), eps on a
// geometric grid inside the window; with log_corrected the regressor becomes
// log(eps / log(1/eps)). The slope estimates the temperature exponent.
inline ExponentFit fit_beta(const ModelSpec& model, double eps_lo, double eps_hi,
                            FitOptions opts = {}) {
  if (!(eps_lo > 0.0 && eps_hi > eps_lo))
    throw config_error("fit_beta: need 0 < eps_lo < eps_hi");
  if (opts.n_points < 5) throw config_error("fit_beta: need >= 5 points");
  const double tc = theta_c(model);
  std::vector<double> xs, ys;
  const double ratio = std::pow(eps_hi / eps_lo, 1.0 / (opts.n_points - 1));
  double eps = eps_lo;
  for (int i = 0; i < opts.n_points; ++i, eps *= ratio) {
    ModelSpec mi = detail::at_theta(model, tc * (1.0 + eps));
    mi.h = 0.0;
    FixedPointResult fp = solve_m(mi, opts.solve);
    if (fp.m_plus <= 0.0)
      throw solver_error("fit_beta: m+ = 0 inside the window; window too wide");
    xs.push_back(opts.log_corrected ? std::log(eps / std::log(1.0 / eps))
                                    : std::log(eps));
    ys.push_back(std::log(fp.m_plus));
  }
  detail::OlsFit f = detail::ols(xs, ys);
  return {f.slope, f.slope_se, eps_lo, eps_hi, opts.n_points, f.r_squared,
          opts.log_corrected};
}

// Same on the field axis at theta = theta_c: slope of log m+ vs log h is
// 1/delta, reported as delta = 1/slope.
inline ExponentFit fit_delta(const ModelSpec& model, double h_lo, double h_hi,
                             FitOptions opts = {}) {
  if (!(h_lo > 0.0 && h_hi > h_lo))
    throw config_error("fit_delta: need 0 < h_lo < h_hi");
  if (opts.n_points < 5) throw config_error("fit_delta: need >= 5 points");
  const double tc = theta_c(model);
  std::vector<double> xs, ys;
  const double ratio = std::pow(h_hi / h_lo, 1.0 / (opts.n_points - 1));
  double h = h_lo;
  for (int i = 0; i < opts.n_points; ++i, h *= ratio) {
    ModelSpec mi = detail::at_theta(model, tc);
    mi.h = h;
    FixedPointResult fp = solve_m(mi, opts.solve);
    if (fp.m_plus <= 0.0)
      throw solver_error("fit_delta: m+ = 0 inside the window; window too wide");
    xs.push_back(opts.log_corrected ? std::log(h / std::log(1.0 / h))
                                    : std::log(h));
    ys.push_back(std::log(fp.m_plus));
  }
  detail::OlsFit f = detail::ols(xs, ys);
  ExponentFit fit;
  fit.estimate = 1.0 / f.slope;
  fit.std_error = f.slope_se / (f.slope * f.slope);
  fit.window_lo = h_lo;
  fit.window_hi = h_hi;
  fit.n_points = opts.n_points;
  fit.r_squared = f.r_squared;
  fit.log_corrected = opts.log_corrected;
  return fit;
}

enum class Control { Theta, Field };

struct CurveRow {
  double theta = 0.0, h = 0.0;
  double m_plus = 0.0, pressure = 0.0, residual = 0.0;
  bool ok = true;
  std::string error;
};

// Sweeps solve_m over the grid; solver failures are carried per row and the
// sweep continues.
inline std::vector<CurveRow> magnetization_curve(const ModelSpec& model,
                                                 Control control,
                                                 const std::vector<double>& grid,
                                                 SolveOptions solve = {}) {
  std::vector<CurveRow> rows;
  rows.reserve(grid.size());
  for (double v : grid) {
    CurveRow row;
    ModelSpec mi = model;
    if (control == Control::Theta) {
      mi.kernel = model.rank2().with_theta(v);
      row.theta = v;
      row.h = model.h;
    } else {
      mi.h = v;
      row.theta = model.rank2().theta();
      row.h = v;
    }
    try {
      validate(mi);
      FixedPointResult fp = solve_m(mi, solve);
      row.m_plus = fp.m_plus;
      row.residual = fp.residual;
      row.pressure = pressure_rank2(mi, fp);
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace agrg
