#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "agrg/common.hpp"
#include "agrg/meanfield.hpp"
#include "agrg/rng.hpp"

namespace agrg {

// Finite graph instance: vertex weights and the total weight sum l_N.
struct GRGInstance {
  int n = 0;
  std::vector<double> w;
  double l = 0.0;

  static GRGInstance make(std::vector<double> weights) {
    GRGInstance g;
    g.n = static_cast<int>(weights.size());
    g.w = std::move(weights);
    g.l = 0.0;
    for (double x : g.w) {
      if (!(x > 0.0)) throw config_error("vertex weights must be positive");
      g.l += x;
    }
    return g;
  }

  // p_ij = w_i w_j / (l_N + w_i w_j), i != j.
  double edge_prob(int i, int j) const {
    if (i == j) throw config_error("edge_prob: no self loops (i == j)");
    const double ww = w[i] * w[j];
    return ww / (l + ww);
  }
};

namespace detail {

// Kernel on support indices: rank-2 uses cached g values, grid a flat matrix.
struct PairKernel {
  bool rank2 = true;
  double c = 0.0, theta = 0.0;
  std::vector<double> g;     // rank-2: g at support points
  std::vector<double> grid;  // grid: n x n values
  int n = 0;

  double operator()(int a, int b) const {
    return rank2 ? c + theta * g[a] * g[b] : grid[a * n + b];
  }
};

}  // namespace detail

// Precomputed single-run state shared by all chains: the (possibly tilted)
// site law over the measure's support points, the kernel on support indices,
// and the graph instance.
struct SimContext {
  GRGInstance inst;
  std::vector<double> sx;    // support locations
  std::vector<double> sp;    // site probabilities (field tilt folded in)
  std::vector<double> scdf;  // cumulative site law
  std::vector<double> gval;  // observable at support points
  detail::PairKernel kernel;
  bool atoms_only = false;
};

inline SimContext make_sim_context(const ModelSpec& model,
                                   std::vector<double> weights) {
  validate(model, /*require_rank2_symmetry=*/false);
  SimContext ctx;
  ctx.inst = GRGInstance::make(std::move(weights));
  const SpinMeasure alpha =
      model.h == 0.0 ? model.measure
                     : tilt_field(model.measure, model.g, model.h);
  alpha.for_support([&](double x, double w) {
    ctx.sx.push_back(x);
    ctx.sp.push_back(w);
  });
  ctx.atoms_only = alpha.atoms_only();
  double c = 0.0;
  for (double p : ctx.sp) ctx.scdf.push_back(c += p);
  ctx.scdf.back() = 1.0;
  for (double x : ctx.sx) ctx.gval.push_back(model.g(x));
  if (model.is_rank2()) {
    ctx.kernel.rank2 = true;
    ctx.kernel.c = model.rank2().c();
    ctx.kernel.theta = model.rank2().theta();
    ctx.kernel.g = ctx.gval;
  } else {
    if (model.grid().size() != ctx.sx.size())
      throw config_error("grid kernel does not match the measure support");
    ctx.kernel.rank2 = false;
    ctx.kernel.grid = model.grid().values();
    ctx.kernel.n = static_cast<int>(model.grid().size());
  }
  return ctx;
}

struct ChainState {
  std::vector<int> spin;               // indices into the support
  std::vector<std::vector<int>> adj;   // current edge set
  RngStream rng;
  std::int64_t sweeps_done = 0;
  std::int64_t proposals = 0, accepts = 0;

  ChainState(int n, std::uint64_t seed, std::uint64_t stream)
      : spin(n, 0), adj(n), rng(seed, stream) {}
};

namespace detail {

inline int sample_site(const SimContext& ctx, RngStream& rng) {
  const double u = rng.uniform();
  return static_cast<int>(
      std::lower_bound(ctx.scdf.begin(), ctx.scdf.end(), u) -
      ctx.scdf.begin());
}

}  // namespace detail

inline ChainState init_chain(const SimContext& ctx, std::uint64_t seed,
                             std::uint64_t stream = 0) {
  ChainState st(ctx.inst.n, seed, stream);
  for (int i = 0; i < ctx.inst.n; ++i)
    st.spin[i] = detail::sample_site(ctx, st.rng);
  return st;
}

// Conditional edge law given the spins: an edge is present independently with
// probability p_ij e^Phi / (1 + p_ij (e^Phi - 1)); marginalizing the edges
// back out recovers the annealed spin weight exactly.
inline void resample_edges(ChainState& st, const SimContext& ctx) {
  const int n = ctx.inst.n;
  for (auto& a : st.adj) a.clear();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double p = ctx.inst.edge_prob(i, j);
      const double k = ctx.kernel(st.spin[i], st.spin[j]);
      const double q = p * k / (1.0 + p * (k - 1.0));
      if (st.rng.uniform() < q) {
        st.adj[i].push_back(j);
        st.adj[j].push_back(i);
      }
    }
}

// Single-site conditional given the edges: heat-bath over the alphabet for
// atomic measures, proposal-from-alpha Metropolis otherwise.
inline void resample_spins(ChainState& st, const SimContext& ctx) {
  const int n = ctx.inst.n;
  const int m = static_cast<int>(ctx.sx.size());
  if (ctx.atoms_only) {
    std::vector<double> wts(m);
    for (int i = 0; i < n; ++i) {
      double tot = 0.0;
      for (int a = 0; a < m; ++a) {
        double v = ctx.sp[a];
        for (int j : st.adj[i]) v *= ctx.kernel(a, st.spin[j]);
        wts[a] = v;
        tot += v;
      }
      double u = st.rng.uniform() * tot;
      int a = 0;
      for (; a + 1 < m; ++a) {
        u -= wts[a];
        if (u <= 0.0) break;
      }
      st.spin[i] = a;
      ++st.proposals;
      ++st.accepts;
    }
    return;
  }
  for (int i = 0; i < n; ++i) {
    const int cur = st.spin[i];
    const int prop = detail::sample_site(ctx, st.rng);
    double ratio = 1.0;
    for (int j : st.adj[i])
      ratio *= ctx.kernel(prop, st.spin[j]) / ctx.kernel(cur, st.spin[j]);
    ++st.proposals;
    if (ratio >= 1.0 || st.rng.uniform() < ratio) {
      st.spin[i] = prop;
      ++st.accepts;
    }
  }
}

// One sweep of the joint edge-spin chain; each stage is in detailed balance
// with the joint law whose spin marginal is the annealed measure.
inline void joint_gibbs_sweep(ChainState& st, const SimContext& ctx) {
  resample_edges(st, ctx);
  resample_spins(st, ctx);
  ++st.sweeps_done;
}

// Size-biased empirical mean B_N = sum w_i g(sigma_i) / l_N, the estimator of
// phi(m+) = m+/theta.
inline double order_parameter(const ChainState& st, const SimContext& ctx) {
  double b = 0.0;
  for (int i = 0; i < ctx.inst.n; ++i)
    b += ctx.inst.w[i] * ctx.gval[st.spin[i]];
  return b / ctx.inst.l;
}

inline double energy_proxy(const ChainState& st, const SimContext& ctx) {
  double e = 0.0;
  for (int i = 0; i < ctx.inst.n; ++i)
    for (int j : st.adj[i])
      if (j > i) e += std::log(ctx.kernel(st.spin[i], st.spin[j]));
  return e;
}

inline std::int64_t edge_count(const ChainState& st) {
  std::int64_t c = 0;
  for (const auto& a : st.adj) c += static_cast<std::int64_t>(a.size());
  return c / 2;
}

// ---------------------------------------------------------------------------
// Exact enumeration of the annealed measure for atomic alphabets.

struct ExactResult {
  double pressure = 0.0;        // psi_N
  double magnetization = 0.0;   // E[B_N]
  double abs_magnetization = 0.0;  // E[|B_N|]
};

// Sums the annealed weight exp(sum_i log alpha(s_i) + sum_{i<j} log(1 +
// p_ij (e^Phi - 1))) over every configuration of the atom alphabet.
inline ExactResult exact_annealed(const ModelSpec& model,
                                  const std::vector<double>& weights) {
  if (!model.measure.atoms_only())
    throw config_error("exact enumeration requires an atoms-only measure");
  SimContext ctx = make_sim_context(model, weights);
  const int n = ctx.inst.n;
  const int m = static_cast<int>(ctx.sx.size());
  double log_configs = n * std::log(double(m));
  if (log_configs > std::log(double(1 << 20)) + 1e-9)
    throw capacity_error("state space exceeds 2^20 configurations");
  const std::int64_t total = [&] {
    std::int64_t t = 1;
    for (int i = 0; i < n; ++i) t *= m;
    return t;
  }();

  std::vector<double> site_logp(m);
  for (int a = 0; a < m; ++a) site_logp[a] = std::log(ctx.sp[a]);
  // log(1 + p_ij (K(a,b)-1)) tabulated per pair.
  const int pairs = n * (n - 1) / 2;
  std::vector<double> table(static_cast<std::size_t>(pairs) * m * m);
  {
    int pi = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++pi) {
        const double p = ctx.inst.edge_prob(i, j);
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b)
            table[(static_cast<std::size_t>(pi) * m + a) * m + b] =
                std::log1p(p * (ctx.kernel(a, b) - 1.0));
      }
  }

  std::vector<double> expo(total), bmag(total);
  std::vector<int> conf(n, 0);
  for (std::int64_t cidx = 0; cidx < total; ++cidx) {
    double e = 0.0, b = 0.0;
    for (int i = 0; i < n; ++i) {
      e += site_logp[conf[i]];
      b += ctx.inst.w[i] * ctx.gval[conf[i]];
    }
    int pi = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++pi)
        e += table[(static_cast<std::size_t>(pi) * m + conf[i]) * m + conf[j]];
    expo[cidx] = e;
    bmag[cidx] = b / ctx.inst.l;
    for (int i = n - 1; i >= 0; --i) {
      if (++conf[i] < m) break;
      conf[i] = 0;
    }
  }

  const double shift = *std::max_element(expo.begin(), expo.end());
  double z = 0.0, zb = 0.0, zab = 0.0;
  for (std::int64_t c = 0; c < total; ++c) {
    const double e = std::exp(expo[c] - shift);
    z += e;
    zb += e * bmag[c];
    zab += e * std::fabs(bmag[c]);
  }
  ExactResult r;
  r.pressure = (std::log(z) + shift) / n;
  r.magnetization = zb / z;
  r.abs_magnetization = zab / z;
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo driver.

struct McOptions {
  int n = 100;
  std::int64_t sweeps = 10000;
  std::int64_t burnin = 1000;
  std::uint64_t seed = 1;
  int chains = 1;
  SequenceMode mode = SequenceMode::Quantile;
};

struct TraceRow {
  std::int64_t sweep;
  double b;
  double energy;
  std::int64_t edges;
};

struct McResult {
  double order_param = 0.0;   // time average of |B_N| (signed when h != 0)
  double std_error = 0.0;
  double acceptance_rate = 0.0;
  double mean_edges = 0.0;
  double raw_magnetization = 0.0;  // unweighted mean of g(sigma_i), signed
  std::vector<double> chain_means;
  std::vector<TraceRow> trace;  // chain 0 only
};

namespace detail {

struct ChainAccum {
  std::vector<double> samples;
  double acc = 0.0;
  double edges = 0.0;
  double raw = 0.0;
};

inline void run_chain(const SimContext& ctx, const ModelSpec& model,
                      const McOptions& o, int chain_id, ChainAccum* out,
                      std::vector<TraceRow>* trace) {
  ChainState st = init_chain(ctx, o.seed, static_cast<std::uint64_t>(chain_id));
  const bool signed_b = model.h != 0.0;
  out->samples.reserve(static_cast<std::size_t>(o.sweeps));
  for (std::int64_t s = 0; s < o.burnin + o.sweeps; ++s) {
    joint_gibbs_sweep(st, ctx);
    if (s < o.burnin) continue;
    const double b = order_parameter(st, ctx);
    out->samples.push_back(signed_b ? b : std::fabs(b));
    out->edges += static_cast<double>(edge_count(st));
    double raw = 0.0;
    for (int i = 0; i < ctx.inst.n; ++i) raw += ctx.gval[st.spin[i]];
    out->raw += raw / ctx.inst.n;
    if (trace)
      trace->push_back(
          {s - o.burnin, b, energy_proxy(st, ctx), edge_count(st)});
  }
  out->acc = st.proposals ? double(st.accepts) / double(st.proposals) : 1.0;
}

inline double batch_means_stderr(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  const std::size_t nb = std::min<std::size_t>(32, std::max<std::size_t>(2, n / 64));
  const std::size_t len = n / nb;
  if (len < 1) return 0.0;
  std::vector<double> bm;
  for (std::size_t b = 0; b < nb; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    bm.push_back(s / len);
  }
  double mean = 0.0;
  for (double v : bm) mean += v;
  mean /= bm.size();
  double var = 0.0;
  for (double v : bm) var += (v - mean) * (v - mean);
  var /= (bm.size() - 1);
  return std::sqrt(var / bm.size());
}

}  // namespace detail

// Joint-chain estimate of phi(m+) = m+/theta via the size-biased empirical
// mean. Weights come from the deterministic quantile sequence so equal seeds
// give identical output; chains use disjoint Philox streams and may run in
// parallel.
inline McResult run_mc(const ModelSpec& model, const McOptions& o,
                       bool keep_trace = false) {
  if (o.n < 1 || o.sweeps < 1 || o.burnin < 0)
    throw config_error("run_mc: N and sweeps must be positive");
  if (o.n > 10000)
    throw capacity_error("run_mc: N > 1e4 unsupported (O(N^2) edge stage)");
  std::vector<double> w = model.weights.weight_sequence(o.n, o.mode, o.seed);
  SimContext ctx = make_sim_context(model, std::move(w));

  std::vector<detail::ChainAccum> acc(o.chains);
  std::vector<TraceRow> trace;
  if (o.chains == 1) {
    detail::run_chain(ctx, model, o, 0, &acc[0], keep_trace ? &trace : nullptr);
  } else {
    std::vector<std::thread> threads;
    for (int c = 0; c < o.chains; ++c)
      threads.emplace_back(detail::run_chain, std::cref(ctx), std::cref(model),
                           std::cref(o), c, &acc[c],
                           (keep_trace && c == 0) ? &trace : nullptr);
    for (auto& t : threads) t.join();
  }

  McResult r;
  r.trace = std::move(trace);
  double se2 = 0.0;
  for (const auto& a : acc) {
    double mean = 0.0;
    for (double v : a.samples) mean += v;
    mean /= a.samples.size();
    r.chain_means.push_back(mean);
    r.order_param += mean;
    const double se = detail::batch_means_stderr(a.samples);
    se2 += se * se;
    r.acceptance_rate += a.acc;
    r.mean_edges += a.edges / a.samples.size();
    r.raw_magnetization += a.raw / a.samples.size();
  }
  const double c = static_cast<double>(o.chains);
  r.order_param /= c;
  r.std_error = std::sqrt(se2) / c;
  r.acceptance_rate /= c;
  r.mean_edges /= c;
  r.raw_magnetization /= c;
  return r;
}

}  // namespace agrg
