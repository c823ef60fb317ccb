#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "agrg/common.hpp"

namespace agrg {

struct QuadRule {
  std::vector<double> x;  // nodes, ascending
  std::vector<double> w;  // weights, all > 0
};

namespace detail {

// Eigenvalues and first eigenvector components of a symmetric tridiagonal
// matrix (diagonal d, off-diagonal e, e[0] unused). Classic EISPACK tql2,
// reduced to track only the first row of the accumulated rotations, which
// is all Golub-Welsch needs.
inline void tridiag_eigen_first_row(std::vector<double>& d,
                                    std::vector<double>& e,
                                    std::vector<double>& z) {
  const int n = static_cast<int>(d.size());
  z.assign(n, 0.0);
  if (n == 0) return;
  z[0] = 1.0;
  if (n == 1) return;

  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw solver_error("tridiagonal eigenvalue iteration failed");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          f = z[i + 1];
          z[i + 1] = s * z[i] + c * f;
          z[i] = c * z[i] - s * f;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

// Gauss rule for the weight (1-x^2)^a on [-1,1] (Jacobi with alpha=beta=a).
// Requires a > -1. Total weight mu0 = 2^{2a+1} B(a+1, a+1).
inline QuadRule gauss_jacobi(int n, double a) {
  if (n < 1) throw config_error("quadrature order must be >= 1");
  if (!(a > -1.0)) throw config_error("jacobi exponent must exceed -1");

  // Recurrence b_k for the symmetric Jacobi matrix. b_1 written separately:
  // the generic form k(k+2a)/((2(k+a))^2-1) is 0/0 at k=1, a=-1/2.
  std::vector<double> diag(n, 0.0), off(n, 0.0);
  for (int k = 1; k < n; ++k) {
    double bk = (k == 1) ? 1.0 / (3.0 + 2.0 * a)
                         : k * (k + 2.0 * a) /
                               (4.0 * (k + a) * (k + a) - 1.0);
    off[k] = std::sqrt(bk);
  }

  std::vector<double> z;
  detail::tridiag_eigen_first_row(diag, off, z);

  const double mu0 = std::exp((2.0 * a + 1.0) * std::log(2.0) +
                              2.0 * std::lgamma(a + 1.0) -
                              std::lgamma(2.0 * a + 2.0));

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int i, int j) { return diag[i] < diag[j]; });

  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    r.x[i] = diag[idx[i]];
    r.w[i] = mu0 * z[idx[i]] * z[idx[i]];
  }
  // Symmetrize so that odd integrals cancel exactly.
  for (int i = 0, j = n - 1; i < j; ++i, --j) {
    double xm = 0.5 * (r.x[j] - r.x[i]);
    r.x[i] = -xm;
    r.x[j] = xm;
    double wm = 0.5 * (r.w[i] + r.w[j]);
    r.w[i] = r.w[j] = wm;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

inline QuadRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0); }

// Legendre rule mapped to [lo, hi].
inline QuadRule gauss_legendre(int n, double lo, double hi) {
  QuadRule r = gauss_legendre(n);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int i = 0; i < n; ++i) {
    r.x[i] = mid + half * r.x[i];
    r.w[i] *= half;
  }
  return r;
}

struct QuadOptions {
  double rel_tol = 1e-12;
  double abs_tol = 1e-15;
  int max_subdivisions = 1 << 20;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  double abs_integral = 0.0;  // integral of |f|, the roundoff scale
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {

// Gauss-Kronrod 15(7) nodes/weights (QUADPACK dqk15 constants).
inline constexpr double kGK15X[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kGK15WK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGK15WG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gk15(F&& f, double a, double b, double& value, double& error,
                 double& absval) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double fv[15];
  for (int j = 0; j < 7; ++j) {
    fv[j] = f(mid - half * kGK15X[j]);
    fv[14 - j] = f(mid + half * kGK15X[j]);
  }
  fv[7] = f(mid);
  double resk = 0.0, resg = 0.0, resabs = 0.0;
  for (int j = 0; j < 7; ++j) {
    resk += kGK15WK[j] * (fv[j] + fv[14 - j]);
    resabs += kGK15WK[j] * (std::fabs(fv[j]) + std::fabs(fv[14 - j]));
  }
  resk += kGK15WK[7] * fv[7];
  resabs += kGK15WK[7] * std::fabs(fv[7]);
  for (int j = 0; j < 3; ++j) resg += kGK15WG[j] * (fv[2 * j + 1] + fv[13 - 2 * j]);
  resg += kGK15WG[3] * fv[7];

  const double mean = 0.5 * resk;
  double resasc = kGK15WK[7] * std::fabs(fv[7] - mean);
  for (int j = 0; j < 7; ++j)
    resasc += kGK15WK[j] *
              (std::fabs(fv[j] - mean) + std::fabs(fv[14 - j] - mean));

  value = resk * half;
  double err = std::fabs((resk - resg) * half);
  resasc *= std::fabs(half);
  resabs *= std::fabs(half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  error = err;
  absval = resabs;
}

struct Segment {
  double a, b, value, error, absval;
  bool operator<(const Segment& o) const { return error < o.error; }
};

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration on [a, b]. Endpoints are never
// evaluated, so integrable endpoint singularities are allowed. The stop rule
// keeps a roundoff floor at 100 eps times the integral of |f|, which is as
// far as cancellation allows any subdivision scheme to go.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b,
                              const QuadOptions& opts = {}) {
  QuadResult res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  auto threshold = [&](double total, double resabs) {
    return std::max({opts.abs_tol, opts.rel_tol * std::fabs(total),
                     100.0 * 1.11e-16 * resabs});
  };
  std::priority_queue<detail::Segment> heap;
  detail::Segment s0{a, b, 0.0, 0.0, 0.0};
  detail::gk15(f, a, b, s0.value, s0.error, s0.absval);
  double total = s0.value, toterr = s0.error, totabs = s0.absval;
  heap.push(s0);
  int n = 1;
  while (toterr > threshold(total, totabs)) {
    if (n >= opts.max_subdivisions) break;
    detail::Segment worst = heap.top();
    double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) break;  // interval width underflow
    heap.pop();
    detail::Segment l{worst.a, mid, 0.0, 0.0, 0.0},
        r{mid, worst.b, 0.0, 0.0, 0.0};
    detail::gk15(f, l.a, l.b, l.value, l.error, l.absval);
    detail::gk15(f, r.a, r.b, r.value, r.error, r.absval);
    total += l.value + r.value - worst.value;
    toterr += l.error + r.error - worst.error;
    totabs += l.absval + r.absval - worst.absval;
    heap.push(l);
    heap.push(r);
    ++n;
  }
  res.value = total;
  res.error = toterr;
  res.abs_integral = totabs;
  res.subdivisions = n;
  res.converged = toterr <= threshold(total, totabs);
  return res;
}

template <class F>
double integrate_adaptive_or_throw(F&& f, double a, double b,
                                   const QuadOptions& opts = {}) {
  QuadResult r = integrate_adaptive(f, a, b, opts);
  if (!r.converged)
    throw integration_error("adaptive quadrature did not converge (error " +
                            std::to_string(r.error) + " after " +
                            std::to_string(r.subdivisions) + " subdivisions)");
  return r.value;
}

}  // namespace agrg
