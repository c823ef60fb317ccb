#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "agrg/common.hpp"
#include "agrg/quadrature.hpp"
#include "agrg/rng.hpp"

namespace agrg {

struct TailRegime {
  enum class Kind { FiniteMoment, PowerLaw, Boundary };
  Kind kind = Kind::FiniteMoment;
  double tau = 0.0;  // set for PowerLaw / Boundary

  std::string to_string() const {
    switch (kind) {
      case Kind::FiniteMoment:
        return "finite_moment";
      case Kind::PowerLaw:
        return "power_law(" + std::to_string(tau) + ")";
      default:
        return "boundary(" + std::to_string(tau) + ")";
    }
  }
};

enum class SequenceMode { Quantile, Random };

// Asymptotic weight law P of the graph sequence. All variants have
// E[W] > 0 and E[W^2] < infinity; the Pareto tail is the pure power law
// P(W > w) = (w / w_min)^{-(tau-1)} with tau > 3.
class WeightModel {
 public:
  struct Deterministic {
    double w;
  };
  struct Discrete {
    std::vector<std::pair<double, double>> atoms;  // (w, prob), sorted by w
  };
  struct Pareto {
    double tau;
    double w_min;
  };
  struct Tabulated {
    std::vector<double> w;    // ascending nodes on (0, w_cap]
    std::vector<double> pdf;  // normalized linear-interpolated density
  };

  static WeightModel deterministic(double w) {
    if (!(w > 0.0)) throw config_error("deterministic weight must be > 0");
    WeightModel m;
    m.v_ = Deterministic{w};
    m.mean_ = w;
    m.m2_ = w * w;
    return m;
  }

  static WeightModel discrete(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) throw config_error("discrete weight law needs atoms");
    std::sort(atoms.begin(), atoms.end());
    double p = 0.0, m1 = 0.0, m2 = 0.0;
    for (auto& [w, pr] : atoms) {
      if (!(w > 0.0) || !(pr > 0.0))
        throw config_error("discrete weight atoms need w > 0 and prob > 0");
      p += pr;
      m1 += pr * w;
      m2 += pr * w * w;
    }
    if (std::fabs(p - 1.0) > 1e-12)
      throw config_error("discrete weight probabilities must sum to 1");
    WeightModel m;
    m.v_ = Discrete{std::move(atoms)};
    m.mean_ = m1;
    m.m2_ = m2;
    return m;
  }

  static WeightModel pareto(double tau, double w_min = 1.0) {
    if (!(tau > 3.0))
      throw config_error("pareto tail requires tau > 3 (E[W^2] < inf)");
    if (!(w_min > 0.0)) throw config_error("pareto requires w_min > 0");
    WeightModel m;
    m.v_ = Pareto{tau, w_min};
    m.mean_ = (tau - 1.0) / (tau - 2.0) * w_min;
    m.m2_ = (tau - 1.0) / (tau - 3.0) * w_min * w_min;
    return m;
  }

  static WeightModel tabulated(std::vector<std::pair<double, double>> pts) {
    if (pts.size() < 2) throw config_error("tabulated density needs >= 2 points");
    std::sort(pts.begin(), pts.end());
    if (!(pts.front().first > 0.0))
      throw config_error("tabulated weights must be positive");
    double z = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      z += 0.5 * (pts[i].second + pts[i + 1].second) *
           (pts[i + 1].first - pts[i].first);
    if (!(z > 0.0)) throw config_error("tabulated density integrates to zero");
    Tabulated t;
    for (auto& [w, d] : pts) {
      if (d < 0.0) throw config_error("tabulated density must be >= 0");
      t.w.push_back(w);
      t.pdf.push_back(d / z);
    }
    WeightModel m;
    m.v_ = std::move(t);
    m.mean_ = m.expect_impl([](double w) { return w; });
    m.m2_ = m.expect_impl([](double w) { return w * w; });
    return m;
  }

  double mean() const { return mean_; }
  double second_moment() const { return m2_; }
  double size_biased_mean() const { return m2_ / mean_; }

  // E[W^k]; empty when the moment diverges (k >= tau-1 for Pareto).
  std::optional<double> moment(int k) const {
    if (k < 1) throw config_error("moment order must be >= 1");
    if (auto* d = std::get_if<Deterministic>(&v_))
      return std::pow(d->w, k);
    if (auto* d = std::get_if<Discrete>(&v_)) {
      double s = 0.0;
      for (auto& [w, p] : d->atoms) s += p * std::pow(w, k);
      return s;
    }
    if (auto* p = std::get_if<Pareto>(&v_)) {
      if (k >= p->tau - 1.0) return std::nullopt;
      return (p->tau - 1.0) / (p->tau - 1.0 - k) * std::pow(p->w_min, k);
    }
    return expect_impl([k](double w) { return std::pow(w, k); });
  }

  // E[W^k 1{W <= R}].
  double truncated_moment(int k, double R) const {
    if (!(R > 0.0)) throw config_error("truncation level must be > 0");
    if (auto* d = std::get_if<Deterministic>(&v_))
      return d->w <= R ? std::pow(d->w, k) : 0.0;
    if (auto* d = std::get_if<Discrete>(&v_)) {
      double s = 0.0;
      for (auto& [w, p] : d->atoms)
        if (w <= R) s += p * std::pow(w, k);
      return s;
    }
    if (auto* p = std::get_if<Pareto>(&v_)) {
      if (R <= p->w_min) return 0.0;
      const double a = p->tau - 1.0;
      const double pref = a * std::pow(p->w_min, a);
      if (std::fabs(k - a) < 1e-14)
        return pref * std::pow(p->w_min, k - a) * std::log(R / p->w_min);
      return pref / (k - a) *
             (std::pow(R, k - a) - std::pow(p->w_min, k - a));
    }
    return expect_impl([k, R](double w) {
      return w <= R ? std::pow(w, k) : 0.0;
    });
  }

  // E[f(W)].
  template <class F>
  double expect(F&& f) const {
    return expect_impl(std::forward<F>(f));
  }

  // E^{sb}[f(W)] = E[W f(W)] / E[W].
  template <class F>
  double size_biased_expect(F&& f) const {
    return expect_impl([&](double w) { return w * f(w); }) / mean_;
  }

  double quantile(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw config_error("quantile needs u in [0,1)");
    if (auto* d = std::get_if<Deterministic>(&v_)) return d->w;
    if (auto* d = std::get_if<Discrete>(&v_)) {
      double c = 0.0;
      for (auto& [w, p] : d->atoms) {
        c += p;
        if (u < c) return w;
      }
      return d->atoms.back().first;
    }
    if (auto* p = std::get_if<Pareto>(&v_))
      return p->w_min * std::pow(1.0 - u, -1.0 / (p->tau - 1.0));
    return tabulated_quantile(u);
  }

  // Finite-N weight vector. Quantile mode places w_i = Q((i-1/2)/N), which is
  // deterministic and converges to P by construction; random mode draws i.i.d.
  // by inverse transform from the given seed.
  std::vector<double> weight_sequence(int n, SequenceMode mode,
                                      std::uint64_t seed = 0) const {
    if (n < 1) throw config_error("weight sequence length must be >= 1");
    if (auto* t = std::get_if<Tabulated>(&v_)) {
      for (double d : t->pdf)
        if (d <= 0.0)
          throw config_error(
              "tabulated density with zeros has no invertible CDF; "
              "weight_sequence unsupported");
    }
    std::vector<double> out(n);
    if (mode == SequenceMode::Quantile) {
      for (int i = 0; i < n; ++i) out[i] = quantile((i + 0.5) / n);
    } else {
      RngStream rng(seed, /*stream=*/0x77656967687473ull);
      for (int i = 0; i < n; ++i) out[i] = quantile(rng.uniform());
    }
    return out;
  }

  // Condition on the weight tail for the exponent table: PowerLaw for
  // tau in (3, k+1), Boundary at tau = k+1 exactly, FiniteMoment otherwise.
  TailRegime classify_tail(int k) const {
    if (auto* p = std::get_if<Pareto>(&v_)) {
      if (p->tau < k + 1.0) return {TailRegime::Kind::PowerLaw, p->tau};
      if (p->tau == k + 1.0) return {TailRegime::Kind::Boundary, p->tau};
      return {TailRegime::Kind::FiniteMoment, p->tau};
    }
    return {TailRegime::Kind::FiniteMoment, 0.0};
  }

  bool is_pareto() const { return std::holds_alternative<Pareto>(v_); }
  bool is_deterministic() const {
    return std::holds_alternative<Deterministic>(v_);
  }

  // Finite (w, prob) grid representing P for fixed-grid solvers: exact atoms
  // for Deterministic/Discrete, a composite Gauss grid in the inverse-CDF
  // variable otherwise.
  std::vector<std::pair<double, double>> probability_grid(int n = 512) const {
    std::vector<std::pair<double, double>> g;
    if (auto* d = std::get_if<Deterministic>(&v_)) {
      g.emplace_back(d->w, 1.0);
      return g;
    }
    if (auto* d = std::get_if<Discrete>(&v_)) return d->atoms;
    // u = v^2 smooths the u = survival substitution; w = Q(1-u).
    const int panels = std::max(8, n / 16);
    double z = 0.0;
    for (int p = 0; p < panels; ++p) {
      QuadRule r = gauss_legendre(16, double(p) / panels, double(p + 1) / panels);
      for (int i = 0; i < 16; ++i) {
        const double v = r.x[i];
        const double w = quantile(1.0 - v * v);
        const double pw = 2.0 * v * r.w[i];
        g.emplace_back(w, pw);
        z += pw;
      }
    }
    for (auto& [w, pw] : g) pw /= z;
    return g;
  }

  std::string describe() const {
    if (auto* d = std::get_if<Deterministic>(&v_))
      return "deterministic(" + std::to_string(d->w) + ")";
    if (auto* d = std::get_if<Discrete>(&v_))
      return "discrete(" + std::to_string(d->atoms.size()) + " atoms)";
    if (auto* p = std::get_if<Pareto>(&v_))
      return "pareto(tau=" + std::to_string(p->tau) +
             ", w_min=" + std::to_string(p->w_min) + ")";
    return "tabulated";
  }

 private:
  template <class F>
  double expect_impl(F&& f) const {
    if (auto* d = std::get_if<Deterministic>(&v_)) return f(d->w);
    if (auto* d = std::get_if<Discrete>(&v_)) {
      double s = 0.0;
      for (auto& [w, p] : d->atoms) s += p * f(w);
      return s;
    }
    if (auto* p = std::get_if<Pareto>(&v_)) {
      // E[f(W)] = int_0^1 f(Q(1-u)) du with u the survival probability;
      // u = v^2 flattens the u^{-1/(tau-1)} endpoint growth enough for the
      // adaptive rule, which never touches v = 0.
      const double tau = p->tau, wm = p->w_min;
      auto integrand = [&, tau, wm](double v) {
        const double w = wm * std::pow(v * v, -1.0 / (tau - 1.0));
        return 2.0 * v * f(w);
      };
      QuadOptions o;
      o.rel_tol = 1e-12;
      o.abs_tol = 0.0;  // positive integrands: the |f|-roundoff floor governs
      return integrate_adaptive_or_throw(integrand, 0.0, 1.0, o);
    }
    const auto& t = std::get<Tabulated>(v_);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < t.w.size(); ++i) {
      if (t.w[i + 1] == t.w[i]) continue;
      QuadRule r = gauss_legendre(16, t.w[i], t.w[i + 1]);
      const double slope =
          (t.pdf[i + 1] - t.pdf[i]) / (t.w[i + 1] - t.w[i]);
      for (int j = 0; j < 16; ++j) {
        const double dens = t.pdf[i] + slope * (r.x[j] - t.w[i]);
        s += r.w[j] * dens * f(r.x[j]);
      }
    }
    return s;
  }

  double tabulated_quantile(double u) const {
    const auto& t = std::get<Tabulated>(v_);
    double c = 0.0;
    for (std::size_t i = 0; i + 1 < t.w.size(); ++i) {
      const double seg = 0.5 * (t.pdf[i] + t.pdf[i + 1]) * (t.w[i + 1] - t.w[i]);
      if (u <= c + seg || i + 2 == t.w.size()) {
        // Solve the piecewise-quadratic CDF on this segment by bisection.
        double lo = t.w[i], hi = t.w[i + 1];
        const double slope = (t.pdf[i + 1] - t.pdf[i]) / (t.w[i + 1] - t.w[i]);
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double dx = mid - t.w[i];
          const double cdf = c + t.pdf[i] * dx + 0.5 * slope * dx * dx;
          (cdf < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
      }
      c += seg;
    }
    return t.w.back();
  }

  std::variant<Deterministic, Discrete, Pareto, Tabulated> v_;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace agrg
