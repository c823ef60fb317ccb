#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "agrg/common.hpp"
#include "agrg/kernel.hpp"
#include "agrg/measure.hpp"
#include "agrg/rng.hpp"
#include "agrg/weights.hpp"

namespace agrg {

// Full model bundle (alpha_0, g, e^Phi, P, h). The measure is always the
// untilted alpha_0; the field enters every tilted integral as a shift of the
// tilt parameter, and negative h is folded through m(-h) = -m(h).
struct ModelSpec {
  SpinMeasure measure;
  Observable g = Observable::identity();
  std::variant<Rank2Kernel, GridKernel> kernel =
      Rank2Kernel(1.0, 0.0, Observable::identity());
  WeightModel weights = WeightModel::deterministic(1.0);
  double h = 0.0;
  bool concavity_certified = false;

  bool is_rank2() const { return std::holds_alternative<Rank2Kernel>(kernel); }
  const Rank2Kernel& rank2() const {
    if (!is_rank2()) throw config_error("operation requires a rank-2 kernel");
    return std::get<Rank2Kernel>(kernel);
  }
  const GridKernel& grid() const {
    if (is_rank2()) throw config_error("operation requires a grid kernel");
    return std::get<GridKernel>(kernel);
  }
};

inline void validate(const ModelSpec& model, bool require_rank2_symmetry = true) {
  const bool pos = model.is_rank2() ? model.rank2().positive()
                                    : model.grid().positive();
  if (!pos) throw config_error("kernel is not strictly positive");
  if (model.is_rank2() && require_rank2_symmetry) {
    if (!model.measure.symmetric)
      throw config_error("rank-2 analysis requires a symmetric a priori measure");
    if (!model.g.odd || !model.g.sign_matched)
      throw config_error("rank-2 analysis requires odd, sign-matched g");
    // The odd flag is a promise; spot-check it on the support.
    model.measure.for_support([&](double x, double) {
      if (std::fabs(model.g(-x) + model.g(x)) > 1e-14)
        throw config_error("observable flagged odd fails g(-s) = -g(s)");
    });
  }
}

inline ModelSpec certify_concavity(ModelSpec model, double t_max = 20.0,
                                   int n_points = 200) {
  model.concavity_certified =
      concavity_scan(model.measure, model.g, t_max, n_points).pass;
  return model;
}

// phi(m) = E^{sb}[ d/dt log alpha_0(e^{t g}) |_{t = W m + h} ].
inline double phi(const ModelSpec& model, double m) {
  const double h = std::fabs(model.h);
  if (m == 0.0 && h == 0.0 && model.measure.symmetric && model.g.odd)
    return 0.0;
  return model.weights.size_biased_expect([&](double w) {
    return tilted_central_moment(model.measure, model.g, w * m + h, 1);
  });
}

// 1/theta_c = E^{sb}(W) alpha_0(g^2).
inline double theta_c(const ModelSpec& model) {
  const double g2 = integrate(model.measure,
                              [&](double s) { return model.g(s) * model.g(s); });
  if (!(g2 > 0.0))
    throw config_error("degenerate model: alpha_0(g^2) = 0");
  return 1.0 / (model.weights.size_biased_mean() * g2);
}

struct SolveOptions {
  double tol = 1e-12;  // bracket width target
  bool polish = true;
  int max_iter = 400;
};

struct FixedPointResult {
  double m_plus = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double phi_at_solution = 0.0;
  bool certified = false;
};

// Unique nonnegative solution of m/theta = phi(m). For h = 0 and
// theta <= theta_c the solution is m = 0 exactly; otherwise bisection on
// r(m) = theta phi(m) - m over [0, theta sup|g|], where r is positive left of
// the root (r'(0) = theta/theta_c - 1 > 0 and r concave), then a short secant
// polish to push the relative accuracy to roundoff — the bracket alone is not
// enough when m+ is many orders below 1 near criticality.
inline FixedPointResult solve_m(const ModelSpec& model, SolveOptions opts = {}) {
  const Rank2Kernel& k = model.rank2();
  const double theta = k.theta();
  const double h = std::fabs(model.h);
  FixedPointResult res;
  res.certified = model.concavity_certified;

  if (!(theta > 0.0)) return res;  // theta <= 0: m = theta phi(m) pins m = 0
  if (h == 0.0 && theta <= theta_c(model)) {
    res.phi_at_solution = 0.0;
    return res;
  }

  auto r = [&](double m) { return theta * phi(model, m) - m; };

  double lo = 0.0;
  double hi = theta * model.g.bound;
  // r(0) >= 0 analytically in both branches; make sure the top is bracketed.
  double rhi = r(hi);
  int iters = 0;
  while (rhi > 0.0 && iters < 60) {
    hi *= 1.5;
    rhi = r(hi);
    ++iters;
  }
  if (rhi > 0.0)
    throw solver_error("solve_m: no sign change in bracket; quadrature failure");

  // Bisection to the requested width, then to relative roundoff width.
  for (; iters < opts.max_iter; ++iters) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (r(mid) > 0.0 ? lo : hi) = mid;
    if (hi - lo <= opts.tol && hi - lo <= 1e-14 * hi) break;
  }

  double m = 0.5 * (lo + hi);
  double fm = r(m);
  if (opts.polish && lo > 0.0) {
    const double span = hi - lo;
    double x0 = lo, x1 = hi, f0 = r(x0), f1 = r(x1);
    for (int i = 0; i < 3 && f1 != f0; ++i) {
      const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
      if (!(x2 > 0.0) || !std::isfinite(x2) ||
          std::fabs(x2 - x1) > 8.0 * span)
        break;
      x0 = x1;
      f0 = f1;
      x1 = x2;
      f1 = r(x1);
      ++iters;
      if (std::fabs(f1) < std::fabs(fm)) {
        m = x1;
        fm = f1;
      }
    }
  }

  res.m_plus = m;
  res.iterations = iters;
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  res.phi_at_solution = phi(model, m);
  res.residual = std::fabs(m / theta - res.phi_at_solution);
  return res;
}

// psi = (c/2) E[W] - (1/2) E[W] m^2/theta + E[log alpha_h(e^{W g m})], with
// log alpha_h(e^{t g}) = log_mgf(alpha_0, g, t + h) - log_mgf(alpha_0, g, h).
inline double pressure_rank2(const ModelSpec& model, const FixedPointResult& fp) {
  const Rank2Kernel& k = model.rank2();
  const double m = fp.m_plus;
  const double h = std::fabs(model.h);
  const double ew = model.weights.mean();
  const double lmh = (h == 0.0) ? 0.0 : log_mgf(model.measure, model.g, h);
  const double tilt_term = model.weights.expect([&](double w) {
    const double t = w * m + h;
    return (t == h ? 0.0 : log_mgf(model.measure, model.g, t) - lmh);
  });
  const double quad_term =
      (m == 0.0) ? 0.0 : 0.5 * ew * m * m / k.theta();
  return 0.5 * k.c() * ew - quad_term + tilt_term;
}

// ---------------------------------------------------------------------------
// General functional machinery on the measure's node system.

struct NodeSystem {
  std::vector<double> x;
  std::vector<double> w;
};

inline NodeSystem node_system(const SpinMeasure& mu) {
  NodeSystem ns;
  mu.for_support([&](double x, double w) {
    ns.x.push_back(x);
    ns.w.push_back(w);
  });
  return ns;
}

// Grid kernel evaluated on the measure's nodes (pass-through when the model
// already carries a grid kernel on matching nodes).
inline GridKernel grid_kernel_for(const ModelSpec& model) {
  NodeSystem ns = node_system(model.measure);
  if (model.is_rank2()) return GridKernel::from_rank2(model.rank2(), ns.x);
  const GridKernel& gk = model.grid();
  if (gk.nodes().size() != ns.x.size())
    throw config_error("grid kernel nodes do not match the measure support");
  return gk;
}

struct PicardOptions {
  double damping = 0.5;
  double tol = 1e-11;   // sup-norm residual target
  int max_iter = 50000;
  int weight_grid = 512;  // fixed P-grid size for continuous weight laws
};

struct PotentialSolution {
  std::vector<double> v;
  double residual = 0.0;
  int iterations = 0;
  double damping = 0.0;
};

namespace detail {

// One application of T: T(V)(x_i) = E^{sb}[ nu^{w,V}(e^{Phi(x_i, .)}) ].
struct TOperator {
  const GridKernel* kernel;
  NodeSystem nodes;                                // tilted by h already
  std::vector<std::pair<double, double>> wgrid;    // (w, P-prob)
  double mean_w = 0.0;

  std::vector<double> apply(const std::vector<double>& v) const {
    const std::size_t n = nodes.x.size();
    std::vector<double> out(n, 0.0), boltz(n);
    double sb_norm = 0.0;
    std::vector<double> kexp(n);
    for (const auto& [w, p] : wgrid) {
      double shift = -1e300;
      for (std::size_t j = 0; j < n; ++j) shift = std::max(shift, w * v[j]);
      double den = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        boltz[j] = nodes.w[j] * std::exp(w * v[j] - shift);
        den += boltz[j];
      }
      const double sbw = p * w / mean_w;
      sb_norm += sbw;
      for (std::size_t i = 0; i < n; ++i) {
        double num = 0.0;
        for (std::size_t j = 0; j < n; ++j) num += kernel->at(i, j) * boltz[j];
        out[i] += sbw * num / den;
      }
    }
    // sb_norm differs from 1 only by the P-grid quadrature error.
    for (auto& o : out) o /= sb_norm;
    return out;
  }

  double nu_expectation(const std::vector<double>& v, double w,
                        const std::vector<double>& f) const {
    const std::size_t n = nodes.x.size();
    double shift = -1e300;
    for (std::size_t j = 0; j < n; ++j) shift = std::max(shift, w * v[j]);
    double den = 0.0, num = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double b = nodes.w[j] * std::exp(w * v[j] - shift);
      den += b;
      num += b * f[j];
    }
    return num / den;
  }

  double log_alpha_exp(const std::vector<double>& v, double w) const {
    const std::size_t n = nodes.x.size();
    double shift = -1e300;
    for (std::size_t j = 0; j < n; ++j) shift = std::max(shift, w * v[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      s += nodes.w[j] * std::exp(w * v[j] - shift);
    return std::log(s) + shift;
  }
};

inline TOperator make_T(const ModelSpec& model, const GridKernel& gk, int wgrid_n) {
  TOperator T;
  T.kernel = &gk;
  const SpinMeasure alpha =
      model.h == 0.0 ? model.measure
                     : tilt_field(model.measure, model.g, model.h);
  T.nodes = node_system(alpha);
  T.wgrid = model.weights.probability_grid(wgrid_n);
  T.mean_w = 0.0;
  for (auto& [w, p] : T.wgrid) T.mean_w += w * p;
  return T;
}

}  // namespace detail

// Damped Picard iteration V <- (1-d) V + d T(V) from a given start.
inline PotentialSolution solve_V_general(const ModelSpec& model,
                                         const std::vector<double>& start,
                                         PicardOptions opts = {}) {
  validate(model, /*require_rank2_symmetry=*/false);
  const GridKernel gk = grid_kernel_for(model);
  detail::TOperator T = detail::make_T(model, gk, opts.weight_grid);
  const std::size_t n = T.nodes.x.size();
  if (start.size() != n)
    throw config_error("start potential size does not match node system");

  std::vector<double> v = start;
  PotentialSolution sol;
  sol.damping = opts.damping;
  std::vector<double> residual_history;
  for (int it = 0; it < opts.max_iter; ++it) {
    std::vector<double> tv = T.apply(v);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::fabs(tv[i] - v[i]));
    residual_history.push_back(res);
    if (res < opts.tol) {
      sol.v = std::move(tv);
      sol.residual = res;
      sol.iterations = it + 1;
      return sol;
    }
    for (std::size_t i = 0; i < n; ++i)
      v[i] = (1.0 - opts.damping) * v[i] + opts.damping * tv[i];
  }
  std::string hist;
  for (std::size_t i = residual_history.size() > 5 ? residual_history.size() - 5 : 0;
       i < residual_history.size(); ++i)
    hist += " " + std::to_string(residual_history[i]);
  throw solver_error("functional solver did not converge; last residuals:" + hist);
}

// Paramagnetic start alpha x alpha (e^Phi), constant over nodes.
inline std::vector<double> paramagnetic_start(const ModelSpec& model) {
  const GridKernel gk = grid_kernel_for(model);
  const SpinMeasure alpha =
      model.h == 0.0 ? model.measure
                     : tilt_field(model.measure, model.g, model.h);
  NodeSystem ns = node_system(alpha);
  double s = 0.0;
  for (std::size_t i = 0; i < ns.x.size(); ++i)
    for (std::size_t j = 0; j < ns.x.size(); ++j)
      s += ns.w[i] * ns.w[j] * gk.at(i, j);
  return std::vector<double>(ns.x.size(), s);
}

// Runs the standard start set (paramagnetic, +-eps g) plus optional random
// starts and returns the distinct limits found. Completeness of the branch
// list is not certified.
inline std::vector<PotentialSolution> solve_V_all(const ModelSpec& model,
                                                  PicardOptions opts = {},
                                                  int random_starts = 0,
                                                  std::uint64_t seed = 0) {
  const NodeSystem ns = node_system(model.measure);
  const std::size_t n = ns.x.size();
  std::vector<std::vector<double>> starts;
  starts.push_back(paramagnetic_start(model));
  const double eps = 0.1;
  std::vector<double> up = starts[0], dn = starts[0];
  for (std::size_t i = 0; i < n; ++i) {
    up[i] += eps * model.g(ns.x[i]);
    dn[i] -= eps * model.g(ns.x[i]);
  }
  starts.push_back(up);
  starts.push_back(dn);
  RngStream rng(seed, /*stream=*/0x5741525453ull);
  for (int s = 0; s < random_starts; ++s) {
    std::vector<double> v(n);
    const double amp = starts[0][0];
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(-amp, amp);
    starts.push_back(std::move(v));
  }

  std::vector<PotentialSolution> out;
  for (const auto& s : starts) {
    PotentialSolution sol = solve_V_general(model, s, opts);
    bool dup = false;
    for (const auto& prev : out) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        d = std::max(d, std::fabs(prev.v[i] - sol.v[i]));
      if (d < 50.0 * opts.tol) dup = true;
    }
    if (!dup) out.push_back(std::move(sol));
  }
  return out;
}

// psi = -(E[W]/2) E^{sb}[nu^{W,V}(V)] + E[log alpha(e^{W V})].
inline double pressure_general(const ModelSpec& model,
                               const PotentialSolution& sol,
                               int weight_grid = 512) {
  const GridKernel gk = grid_kernel_for(model);
  detail::TOperator T = detail::make_T(model, gk, weight_grid);
  double sb_term = 0.0, log_term = 0.0, sb_norm = 0.0;
  for (const auto& [w, p] : T.wgrid) {
    const double sbw = p * w / T.mean_w;
    sb_norm += sbw;
    sb_term += sbw * T.nu_expectation(sol.v, w, sol.v);
    log_term += p * T.log_alpha_exp(sol.v, w);
  }
  sb_term /= sb_norm;
  return -0.5 * model.weights.mean() * sb_term + log_term;
}

// Highest-pressure branch among supplied fixed points.
inline double pressure_general_max(const ModelSpec& model,
                                   const std::vector<PotentialSolution>& sols,
                                   int* argmax = nullptr) {
  if (sols.empty()) throw solver_error("no fixed points supplied");
  double best = -1e300;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const double p = pressure_general(model, sols[i]);
    if (p > best) {
      best = p;
      if (argmax) *argmax = static_cast<int>(i);
    }
  }
  return best;
}

inline double signed_m(const ModelSpec& model, const FixedPointResult& fp) {
  return model.h < 0.0 ? -fp.m_plus : fp.m_plus;
}

}  // namespace agrg
