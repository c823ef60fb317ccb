#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "agrg/common.hpp"
#include "agrg/measure.hpp"
#include "agrg/weights.hpp"

namespace agrg {

// Rank-2 transition kernel e^Phi(s,s') = c + theta g(s) g(s').
// Construction records the positivity certificate c - |theta| G^2 > 0
// (G = sup|g|); enforcement happens where a model is actually used.
class Rank2Kernel {
 public:
  Rank2Kernel(double c, double theta, Observable g)
      : c_(c), theta_(theta), g_(std::move(g)) {
    if (!(c_ > 0.0)) throw config_error("rank-2 kernel requires c > 0");
    positive_ = c_ - std::fabs(theta_) * g_.bound * g_.bound > 0.0;
  }

  double c() const { return c_; }
  double theta() const { return theta_; }
  const Observable& g() const { return g_; }
  bool positive() const { return positive_; }

  double operator()(double s, double sp) const {
    return c_ + theta_ * g_(s) * g_(sp);
  }

  Rank2Kernel with_theta(double theta) const {
    return Rank2Kernel(c_, theta, g_);
  }

 private:
  double c_, theta_;
  Observable g_;
  bool positive_;
};

// General kernel sampled on a fixed node set; matrix[i*n+j] = e^Phi(x_i,x_j).
class GridKernel {
 public:
  GridKernel(std::vector<double> nodes, std::vector<double> values)
      : x_(std::move(nodes)), m_(std::move(values)) {
    if (m_.size() != x_.size() * x_.size())
      throw config_error("grid kernel matrix size mismatch");
  }

  template <class F>
  static GridKernel from_function(std::vector<double> nodes, F&& exp_phi) {
    const std::size_t n = nodes.size();
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m[i * n + j] = exp_phi(nodes[i], nodes[j]);
    return GridKernel(std::move(nodes), std::move(m));
  }

  static GridKernel from_rank2(const Rank2Kernel& k, std::vector<double> nodes) {
    return from_function(std::move(nodes),
                         [&k](double a, double b) { return k(a, b); });
  }

  std::size_t size() const { return x_.size(); }
  const std::vector<double>& nodes() const { return x_; }
  double at(std::size_t i, std::size_t j) const { return m_[i * x_.size() + j]; }
  const std::vector<double>& values() const { return m_; }

  bool positive() const {
    for (double v : m_)
      if (!(v > 0.0)) return false;
    return true;
  }

 private:
  std::vector<double> x_;
  std::vector<double> m_;
};

// c + theta s s' = c~ e^{beta s s'} on {-1,1} with c~ = sqrt(c^2 - theta^2),
// beta = (1/2) log((c+theta)/(c-theta)). Needs c > |theta|.
struct IsingForm {
  double c_tilde;
  double beta;
};

inline IsingForm rank2_to_ising(double c, double theta) {
  if (!(c > std::fabs(theta)))
    throw config_error("rank2_to_ising requires c > |theta|");
  return {std::sqrt(c * c - theta * theta),
          0.5 * std::log((c + theta) / (c - theta))};
}

// Inverse map normalized to c~ = 1: c = cosh(beta), theta = sinh(beta).
inline Rank2Kernel ising_to_rank2(double beta) {
  return Rank2Kernel(std::cosh(beta), std::sinh(beta), Observable::identity());
}

namespace detail {

inline std::pair<double, double> observable_range(const Observable& g,
                                                  int n = 4097) {
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < n; ++i) {
    const double s = -1.0 + 2.0 * i / (n - 1);
    const double v = g(s);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace detail

// Second-order variation delta^(2)(f) = sup f(s1,s3)-f(s2,s3)-f(s1,s4)+f(s2,s4).
// Rank-2 collapses to |theta| (max g - min g)^2.
inline double second_order_variation(const Rank2Kernel& k) {
  auto [lo, hi] = detail::observable_range(k.g());
  return std::fabs(k.theta()) * (hi - lo) * (hi - lo);
}

inline double second_order_variation(const GridKernel& k) {
  const std::size_t n = k.size();
  double best = 0.0;
  for (std::size_t s3 = 0; s3 < n; ++s3)
    for (std::size_t s4 = 0; s4 < n; ++s4) {
      double dmax = -1e300, dmin = 1e300;
      for (std::size_t s1 = 0; s1 < n; ++s1) {
        const double d = k.at(s1, s3) - k.at(s1, s4);
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
      }
      best = std::max(best, dmax - dmin);
    }
  return best;
}

inline bool validate_positive(const Rank2Kernel& k) { return k.positive(); }
inline bool validate_positive(const GridKernel& k) { return k.positive(); }

// Contraction criterion E^{sb}(W) * (1/2) delta^(2)(e^Phi) < 1: when it holds
// the functional fixed point is unique (no phase transition). The bound is
// reported as-is; no sharpness is claimed.
struct UniquenessReport {
  double lhs = 0.0;
  bool holds = false;
};

template <class Kernel>
UniquenessReport uniqueness_bound(const Kernel& k, const WeightModel& w) {
  UniquenessReport r;
  r.lhs = w.size_biased_mean() * 0.5 * second_order_variation(k);
  r.holds = r.lhs < 1.0;
  return r;
}

}  // namespace agrg
