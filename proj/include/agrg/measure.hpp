#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "agrg/common.hpp"
#include "agrg/quadrature.hpp"

namespace agrg {

// Bounded observable g on [-1,1]. `bound` is a sup-norm bound, `sign_matched`
// means sgn(g(s)) = sgn(s).
struct Observable {
  std::function<double(double)> fn;
  bool odd = false;
  bool sign_matched = false;
  double bound = 1.0;
  std::string name = "custom";

  double operator()(double s) const { return fn(s); }

  static Observable identity() {
    return {[](double s) { return s; }, true, true, 1.0, "identity"};
  }
  static Observable cube() {
    return {[](double s) { return s * s * s; }, true, true, 1.0, "cube"};
  }
  static Observable half_sine() {
    return {[](double s) { return std::sin(1.5707963267948966 * s); }, true,
            true, 1.0, "half_sine"};
  }
};

// A priori single-spin measure on [-1,1]: point atoms plus a continuous part
// represented by a quadrature rule whose weights already absorb the density
// and the normalization, so integrate() is a plain weighted sum.
struct SpinMeasure {
  struct Atom {
    double x;
    double w;
  };
  std::vector<Atom> atoms;
  std::vector<double> qx;  // continuous-part nodes
  std::vector<double> qw;  // continuous-part weights (density folded in)
  std::function<double(double)> density;  // normalized density, null if atomic
  bool symmetric = false;
  std::string name = "custom";

  bool atoms_only() const { return qx.empty(); }

  std::size_t support_size() const { return atoms.size() + qx.size(); }

  template <class F>
  void for_support(F&& f) const {
    for (const Atom& a : atoms) f(a.x, a.w);
    for (std::size_t i = 0; i < qx.size(); ++i) f(qx[i], qw[i]);
  }

  double total_mass() const {
    double m = 0.0;
    for_support([&](double, double w) { m += w; });
    return m;
  }
};

template <class F>
double integrate(const SpinMeasure& mu, F&& f) {
  double s = 0.0;
  mu.for_support([&](double x, double w) {
    const double v = f(x);
    if (!std::isfinite(v))
      throw evaluation_error("non-finite integrand value at node " +
                             std::to_string(x));
    s += w * v;
  });
  return s;
}

namespace detail {

// Shared scratch view of (g(x_i), w_i) over the full support.
inline void support_values(const SpinMeasure& mu, const Observable& g,
                           std::vector<double>& gv, std::vector<double>& wv) {
  gv.clear();
  wv.clear();
  mu.for_support([&](double x, double w) {
    gv.push_back(g(x));
    wv.push_back(w);
  });
}

}  // namespace detail

// log integral of e^{t g} d mu, evaluated with a max-shift.
inline double log_mgf(const SpinMeasure& mu, const Observable& g, double t) {
  double shift = -1e300;
  mu.for_support([&](double x, double) { shift = std::max(shift, t * g(x)); });
  double s = 0.0;
  mu.for_support(
      [&](double x, double w) { s += w * std::exp(t * g(x) - shift); });
  return std::log(s) + shift;
}

// Central moments of g under the tilted measure d nu_t ~ e^{t g} d mu.
// Orders 1..3 equal the 1st..3rd t-derivatives of log_mgf exactly.
// The order-1 small-|t| branch goes through expm1 so that the mean keeps
// full relative accuracy when it is itself O(t).
inline double tilted_central_moment(const SpinMeasure& mu, const Observable& g,
                                    double t, int order) {
  if (order < 1 || order > 3)
    throw config_error("tilted_central_moment: order must be 1, 2 or 3");

  const double tb = std::fabs(t) * g.bound;
  double mean;
  if (tb <= 1.0) {
    double num = 0.0, num0 = 0.0, den = 0.0;
    mu.for_support([&](double x, double w) {
      const double gx = g(x);
      num += w * gx * std::expm1(t * gx);
      num0 += w * gx;
      den += w * std::exp(t * gx);
    });
    mean = (num + num0) / den;
    if (order == 1) return mean;
  } else {
    double shift = -1e300;
    mu.for_support([&](double x, double) { shift = std::max(shift, t * g(x)); });
    double num = 0.0, den = 0.0;
    mu.for_support([&](double x, double w) {
      const double e = w * std::exp(t * g(x) - shift);
      num += e * g(x);
      den += e;
    });
    mean = num / den;
    if (order == 1) return mean;
  }

  const double shift = (tb <= 1.0) ? 0.0 : [&] {
    double s = -1e300;
    mu.for_support([&](double x, double) { s = std::max(s, t * g(x)); });
    return s;
  }();
  double num = 0.0, den = 0.0;
  mu.for_support([&](double x, double w) {
    const double e = w * std::exp(t * g(x) - shift);
    const double d = g(x) - mean;
    num += e * ((order == 2) ? d * d : d * d * d);
    den += e;
  });
  return num / den;
}

// j-th cumulant of g under mu at t = 0, from raw moments via the standard
// moment -> cumulant recursion.
inline double cumulant(const SpinMeasure& mu, const Observable& g, int j) {
  if (j < 1) throw config_error("cumulant order must be >= 1");
  if (j > 10) throw config_error("cumulant order > 10 unsupported");
  std::vector<double> m(j + 1, 0.0), k(j + 1, 0.0);
  m[0] = 1.0;
  for (int i = 1; i <= j; ++i)
    m[i] = integrate(mu, [&](double x) { return std::pow(g(x), i); });
  for (int n = 1; n <= j; ++n) {
    double s = m[n];
    double binom = 1.0;  // C(n-1, i-1)
    for (int i = 1; i < n; ++i) {
      s -= binom * k[i] * m[n - i];
      binom = binom * (n - i) / i;
    }
    k[n] = s;
  }
  return k[j];
}

// Smallest even k >= 4 with kappa_k < -tol. Odd cumulants are verified to
// vanish along the way rather than assumed.
inline int detect_k(const SpinMeasure& mu, const Observable& g, int k_max = 10,
                    double tol = 1e-9) {
  if (!mu.symmetric || !g.odd)
    throw config_error("detect_k requires a symmetric measure and odd g");
  if (k_max > 10) throw config_error("detect_k: k_max > 10 unsupported");
  std::vector<double> ks(k_max + 1, 0.0);
  for (int j = 3; j <= k_max; ++j) {
    ks[j] = cumulant(mu, g, j);
    if (j % 2 == 1 && std::fabs(ks[j]) > 1e-8)
      throw solver_error("odd cumulant kappa_" + std::to_string(j) +
                         " = " + std::to_string(ks[j]) +
                         " does not vanish for a symmetric model");
    if (j % 2 == 0 && j >= 4 && ks[j] < -tol) return j;
  }
  throw detect_k_error("no even k in [4, " + std::to_string(k_max) +
                           "] with cumulant below -tol",
                       std::move(ks));
}

struct ConcavityReport {
  bool pass = false;
  double worst_value = 0.0;
  double worst_t = 0.0;
  double t_min = 0.0, t_max = 0.0;
  int n_points = 0;
};

// Scans the third tilted cumulant on a geometric grid in (0, t_max]; the
// model is concavity-certified iff every value is negative.
inline ConcavityReport concavity_scan(const SpinMeasure& mu,
                                      const Observable& g, double t_max = 20.0,
                                      int n_points = 200, double t_min = 0.0) {
  if (t_max <= 0.0 || n_points < 2)
    throw config_error("concavity_scan: need t_max > 0 and n_points >= 2");
  if (t_min <= 0.0) t_min = 1e-3 * t_max;
  ConcavityReport rep;
  rep.t_min = t_min;
  rep.t_max = t_max;
  rep.n_points = n_points;
  rep.worst_value = -1e300;
  const double ratio = std::pow(t_max / t_min, 1.0 / (n_points - 1));
  double t = t_min;
  for (int i = 0; i < n_points; ++i, t *= ratio) {
    const double v = tilted_central_moment(mu, g, t, 3);
    if (v > rep.worst_value) {
      rep.worst_value = v;
      rep.worst_t = t;
    }
  }
  rep.pass = rep.worst_value < 0.0;
  return rep;
}

// Normalized exponential tilt e^{h g} d mu / Z_h. Atoms are reweighted and
// quadrature weights rescaled in place; the rule itself is reused.
inline SpinMeasure tilt_field(const SpinMeasure& mu, const Observable& g,
                              double h) {
  if (h == 0.0) return mu;
  SpinMeasure out = mu;
  double shift = -1e300;
  mu.for_support([&](double x, double) { shift = std::max(shift, h * g(x)); });
  double z = 0.0;
  for (auto& a : out.atoms) {
    a.w *= std::exp(h * g(a.x) - shift);
    z += a.w;
  }
  for (std::size_t i = 0; i < out.qx.size(); ++i) {
    out.qw[i] *= std::exp(h * g(out.qx[i]) - shift);
    z += out.qw[i];
  }
  for (auto& a : out.atoms) a.w /= z;
  for (auto& w : out.qw) w /= z;
  if (mu.density) {
    const double logz = std::log(z) + shift;
    auto base = mu.density;
    out.density = [base, g, h, logz](double s) {
      return base(s) * std::exp(h * g(s) - logz);
    };
  }
  out.symmetric = false;
  out.name = mu.name + "+field";
  return out;
}

namespace detail {

inline void check_normalized(SpinMeasure& mu) {
  const double m = mu.total_mass();
  if (std::fabs(m - 1.0) > 1e-12) {
    // Exact renormalization; builders construct weights only up to rounding.
    for (auto& a : mu.atoms) a.w /= m;
    for (auto& w : mu.qw) w /= m;
  }
  for (const auto& a : mu.atoms)
    if (a.w <= 0.0 || a.x < -1.0 || a.x > 1.0)
      throw config_error("measure atom outside [-1,1] or non-positive weight");
  for (std::size_t i = 0; i < mu.qx.size(); ++i)
    if (mu.qw[i] <= 0.0 || mu.qx[i] < -1.0 || mu.qx[i] > 1.0)
      throw config_error("quadrature node outside [-1,1] or weight <= 0");
}

}  // namespace detail

inline SpinMeasure make_ising() {
  SpinMeasure mu;
  mu.atoms = {{-1.0, 0.5}, {1.0, 0.5}};
  mu.symmetric = true;
  mu.name = "ising";
  return mu;
}

inline SpinMeasure make_uniform(int n = 200) {
  SpinMeasure mu;
  QuadRule r = gauss_legendre(n);
  mu.qx = r.x;
  mu.qw = r.w;
  for (auto& w : mu.qw) w *= 0.5;
  mu.density = [](double) { return 0.5; };
  mu.symmetric = true;
  mu.name = "uniform";
  detail::check_normalized(mu);
  return mu;
}

// Stretched Beta(b,b) on [-1,1]: density ~ (1-s^2)^{b-1}. The Gauss-Jacobi
// rule matches the endpoint exponents, so b < 1 (integrable singularities)
// is handled without loss.
inline SpinMeasure make_beta(double b, int n = 200) {
  if (!(b > 0.0)) throw config_error("beta measure requires b > 0");
  SpinMeasure mu;
  QuadRule r = gauss_jacobi(n, b - 1.0);
  double z = 0.0;
  for (double w : r.w) z += w;
  mu.qx = r.x;
  mu.qw = r.w;
  for (auto& w : mu.qw) w /= z;
  const double logz = (2.0 * b - 1.0) * std::log(2.0) +
                      2.0 * std::lgamma(b) - std::lgamma(2.0 * b);
  mu.density = [b, logz](double s) {
    return std::exp((b - 1.0) * std::log1p(-s * s) - logz);
  };
  mu.symmetric = true;
  mu.name = "beta(" + std::to_string(b) + ")";
  detail::check_normalized(mu);
  return mu;
}

inline double step_default_b() { return 2.0 * (59.0 - 18.0 * std::sqrt(10.0)); }

// Step density: 1 on 1/3 < |s| <= 1 and b on |s| <= 1/3, normalized. With the
// default b the fourth cumulant of s vanishes and the smallest negative
// cumulant order moves to k = 6. The rule is split into three panels with
// boundaries exactly at +-1/3 so the jumps never sit inside a panel.
inline SpinMeasure make_step(double b, int n_per_panel = 200) {
  if (!(b > 0.0)) throw config_error("step measure requires b > 0");
  const double c = 4.0 / 3.0 + (2.0 / 3.0) * b;
  SpinMeasure mu;
  const double edges[4] = {-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0};
  const double dens[3] = {1.0, b, 1.0};
  for (int p = 0; p < 3; ++p) {
    QuadRule r = gauss_legendre(n_per_panel, edges[p], edges[p + 1]);
    for (int i = 0; i < n_per_panel; ++i) {
      mu.qx.push_back(r.x[i]);
      mu.qw.push_back(r.w[i] * dens[p] / c);
    }
  }
  mu.density = [b, c](double s) {
    return (std::fabs(s) <= 1.0 / 3.0 ? b : 1.0) / c;
  };
  mu.symmetric = true;
  mu.name = "step(" + std::to_string(b) + ")";
  detail::check_normalized(mu);
  return mu;
}

inline SpinMeasure make_step(int n_per_panel = 200) {
  return make_step(step_default_b(), n_per_panel);
}

// Marginal of e1 . sigma for the uniform measure on the sphere S^q:
// density ~ (1-s^2)^{q/2-1}, the stretched Beta with b = q/2.
inline SpinMeasure make_sphere_marginal(int q, int n = 200) {
  if (q < 1) throw config_error("sphere marginal requires q >= 1");
  SpinMeasure mu = make_beta(0.5 * q, n);
  mu.name = "sphere_marginal(" + std::to_string(q) + ")";
  return mu;
}

// Tabulated density given as (sigma, value) pairs, interpolated linearly and
// integrated per segment; values outside the tabulated range count as zero.
inline SpinMeasure make_custom_density(
    std::vector<std::pair<double, double>> pts, int nodes_per_segment = 16) {
  if (pts.size() < 2) throw config_error("custom density needs >= 2 points");
  std::sort(pts.begin(), pts.end());
  for (const auto& [x, v] : pts) {
    if (x < -1.0 || x > 1.0)
      throw config_error("custom density node outside [-1,1]");
    if (v < 0.0 || !std::isfinite(v))
      throw config_error("custom density value negative or non-finite");
  }
  SpinMeasure mu;
  double z = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s)
    z += 0.5 * (pts[s].second + pts[s + 1].second) *
         (pts[s + 1].first - pts[s].first);
  if (!(z > 0.0)) throw config_error("custom density integrates to zero");
  auto interp = [pts](double x) -> double {
    if (x < pts.front().first || x > pts.back().first) return 0.0;
    auto it = std::upper_bound(pts.begin(), pts.end(),
                               std::make_pair(x, 1e308));
    if (it == pts.begin()) return pts.front().second;
    auto lo = std::prev(it);
    if (it == pts.end()) return pts.back().second;
    const double t = (x - lo->first) / (it->first - lo->first);
    return lo->second + t * (it->second - lo->second);
  };
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    if (pts[s + 1].first == pts[s].first) continue;
    QuadRule r =
        gauss_legendre(nodes_per_segment, pts[s].first, pts[s + 1].first);
    for (int i = 0; i < nodes_per_segment; ++i) {
      const double d = interp(r.x[i]) / z;
      if (d <= 0.0) continue;  // zero-density stretches carry no mass
      mu.qx.push_back(r.x[i]);
      mu.qw.push_back(r.w[i] * d);
    }
  }
  mu.density = [interp, z](double s) { return interp(s) / z; };
  // Detect evenness numerically rather than trusting the input.
  bool sym = true;
  for (const auto& [x, v] : pts)
    if (std::fabs(interp(-x) - v) > 1e-12 * (1.0 + std::fabs(v))) sym = false;
  mu.symmetric = sym;
  mu.name = "custom";
  detail::check_normalized(mu);
  return mu;
}

}  // namespace agrg
