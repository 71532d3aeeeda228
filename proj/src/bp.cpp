#include "sbmlab/bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sbmlab/errors.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab {

namespace {

constexpr int kMaxQ = 8;

// m(s) = sum_{s'} psi_in(s') * C(s', s)
inline void incoming_factor(const double* psi_in, const SquareMatrix& c, int q, double* out) {
  for (int s = 0; s < q; ++s) out[s] = 0.0;
  for (int sp = 0; sp < q; ++sp) {
    const double w = psi_in[sp];
    if (w == 0.0) continue;
    const double* row = &c.data()[static_cast<size_t>(sp) * q];
    for (int s = 0; s < q; ++s) out[s] += w * row[s];
  }
}

}  // namespace

MessageSet init_messages(const LabeledGraph& g, int q, uint64_t seed,
                         const std::optional<MessageBias>& bias) {
  if (q < 2 || q > kMaxQ) throw ConfigError("init_messages: q must be in [2,8]");
  double w = 0.0;
  if (bias) {
    w = bias->weight;
    if (w < 0.0 || w > 1.0) throw ConfigError("init_messages: bias weight must be in [0,1]");
    if (static_cast<int>(bias->target.size()) != g.n)
      throw ConfigError("init_messages: bias target length != N");
  }

  MessageSet ms;
  ms.q = q;
  ms.msg.assign(static_cast<size_t>(g.arc_count()) * q, 0.0);
  ms.marginal.assign(static_cast<size_t>(g.n) * q, 0.0);
  ms.field.assign(static_cast<size_t>(g.p) * q, 0.0);

  std::mt19937_64 rng = make_rng(derive_seed(seed, {0x6d7367ULL}));  // "msg"
  std::exponential_distribution<double> expo(1.0);

  for (long a = 0; a < g.arc_count(); ++a) {
    double* psi = ms.message(a);
    double sum = 0.0;
    for (int s = 0; s < q; ++s) {
      psi[s] = expo(rng);  // Dirichlet(1,...,1)
      sum += psi[s];
    }
    for (int s = 0; s < q; ++s) psi[s] /= sum;
    if (w > 0.0) {
      const int t = bias->target[g.arc_source[a]];
      if (t < 0 || t >= q) throw ConfigError("init_messages: bias target label out of range");
      for (int s = 0; s < q; ++s) psi[s] = (1.0 - w) * psi[s] + (s == t ? w : 0.0);
    }
  }

  // Provisional marginals: mean of incoming messages (refined on first sweep).
  for (int v = 0; v < g.n; ++v) {
    double* node = ms.node(v);
    const int deg = g.degree(v);
    if (deg == 0) {
      for (int s = 0; s < q; ++s) node[s] = 1.0 / q;
      continue;
    }
    for (int b = g.arc_offset[v]; b < g.arc_offset[v + 1]; ++b) {
      const double* in = ms.message(g.arc_pair[b]);
      for (int s = 0; s < q; ++s) node[s] += in[s];
    }
    for (int s = 0; s < q; ++s) node[s] /= deg;
  }
  return ms;
}

BpEstimates make_estimates(const ModularPattern& pattern, const ModelParams& params) {
  return BpEstimates{params.gamma, build_affinity(pattern, params)};
}

double bp_sweep(const LabeledGraph& g, const BpEstimates& est, MessageSet& ms,
                uint64_t order_seed, double damping) {
  const int q = ms.q;
  const int p = g.p;
  if (static_cast<int>(est.gamma.size()) != q) throw ConfigError("bp_sweep: gamma size != q");
  if (static_cast<int>(est.affinity.size()) != p) throw ConfigError("bp_sweep: affinity count != p");

  // External field h_alpha(s) = sum_{s'} psibar(s') chat^alpha(s', s) with
  // psibar the mean marginal. The field is kept current while the sweep runs:
  // once a vertex marginal is refreshed, its delta is folded in immediately.
  // A field frozen over a whole sweep turns the gamma_hat-balancing feedback
  // into an undamped discrete map that oscillates (period 2) whenever
  // |Delta_chat| <psi(1-psi)> exceeds 1, wiping out real structure.
  double psibar[kMaxQ] = {0};
  for (int v = 0; v < g.n; ++v) {
    const double* node = ms.node(v);
    for (int s = 0; s < q; ++s) psibar[s] += node[s];
  }
  for (int s = 0; s < q; ++s) psibar[s] /= g.n;
  for (int a = 0; a < p; ++a)
    incoming_factor(psibar, est.affinity[static_cast<size_t>(a)], q,
                    ms.field.data() + static_cast<size_t>(a) * q);

  double log_gamma[kMaxQ];
  for (int s = 0; s < q; ++s)
    log_gamma[s] =
        est.gamma[s] > 0.0 ? std::log(est.gamma[s]) : -std::numeric_limits<double>::infinity();
  double prior[kMaxQ];
  auto refresh_prior = [&] {
    for (int s = 0; s < q; ++s) {
      double h = 0.0;
      for (int a = 0; a < p; ++a) h += ms.field[static_cast<size_t>(a) * q + s];
      prior[s] = std::exp(log_gamma[s] - h);
    }
  };

  std::vector<long> order(static_cast<size_t>(g.arc_count()));
  std::iota(order.begin(), order.end(), 0L);
  std::mt19937_64 rng = make_rng(order_seed);
  std::shuffle(order.begin(), order.end(), rng);

  double max_change = 0.0;
  double cav[kMaxQ], fac[kMaxQ], logv[kMaxQ], node_new[kMaxQ];

  for (long a : order) {
    const int i = g.arc_source[a];
    const int j = g.arcs[a].to;
    refresh_prior();

    // Cavity product over incoming messages, excluding the target edge.
    for (int s = 0; s < q; ++s) cav[s] = prior[s];
    int since_rescale = 0;
    int target_arc = -1;
    for (int b = g.arc_offset[i]; b < g.arc_offset[i + 1]; ++b) {
      if (g.arcs[b].to == j) {
        target_arc = b;
        continue;
      }
      incoming_factor(ms.message(g.arc_pair[b]), est.affinity[static_cast<size_t>(g.arcs[b].label)],
                      q, fac);
      for (int s = 0; s < q; ++s) cav[s] *= fac[s];
      if (++since_rescale == 16) {  // keep the running product in range
        double m = 0.0;
        for (int s = 0; s < q; ++s) m = std::max(m, cav[s]);
        if (m > 0.0)
          for (int s = 0; s < q; ++s) cav[s] /= m;
        since_rescale = 0;
      }
    }

    double z = 0.0;
    for (int s = 0; s < q; ++s) z += cav[s];
    if (z <= 0.0 || !std::isfinite(z)) {
      // Log-domain recomputation with max-shift.
      for (int s = 0; s < q; ++s)
        logv[s] = prior[s] > 0.0 ? std::log(prior[s]) : -std::numeric_limits<double>::infinity();
      for (int b = g.arc_offset[i]; b < g.arc_offset[i + 1]; ++b) {
        if (g.arcs[b].to == j) continue;
        incoming_factor(ms.message(g.arc_pair[b]),
                        est.affinity[static_cast<size_t>(g.arcs[b].label)], q, fac);
        for (int s = 0; s < q; ++s)
          logv[s] += fac[s] > 0.0 ? std::log(fac[s]) : -std::numeric_limits<double>::infinity();
      }
      double lmax = -std::numeric_limits<double>::infinity();
      for (int s = 0; s < q; ++s) lmax = std::max(lmax, logv[s]);
      if (!std::isfinite(lmax))
        throw NumericError("bp_sweep: message normalizer degenerate on edge (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
      z = 0.0;
      for (int s = 0; s < q; ++s) {
        cav[s] = std::exp(logv[s] - lmax);
        z += cav[s];
      }
    }

    double* psi = ms.message(a);
    double change = 0.0;
    for (int s = 0; s < q; ++s) {
      double next = cav[s] / z;
      if (damping > 0.0) next = (1.0 - damping) * next + damping * psi[s];
      change += std::abs(next - psi[s]);
      psi[s] = next;
    }
    max_change = std::max(max_change, change);

    // Refresh vertex i's marginal (cavity product times the target factor)
    // and fold the delta into the running field.
    incoming_factor(ms.message(g.arc_pair[target_arc]),
                    est.affinity[static_cast<size_t>(g.arcs[target_arc].label)], q, fac);
    double zn = 0.0;
    for (int s = 0; s < q; ++s) {
      node_new[s] = cav[s] * fac[s];
      zn += node_new[s];
    }
    double* node = ms.node(i);
    if (zn > 0.0 && std::isfinite(zn)) {
      for (int s = 0; s < q; ++s) node_new[s] /= zn;
      for (int a2 = 0; a2 < p; ++a2) {
        const SquareMatrix& c = est.affinity[static_cast<size_t>(a2)];
        double* h = ms.field.data() + static_cast<size_t>(a2) * q;
        for (int sp = 0; sp < q; ++sp) {
          const double d = (node_new[sp] - node[sp]) / g.n;
          if (d == 0.0) continue;
          const double* row = &c.data()[static_cast<size_t>(sp) * q];
          for (int s = 0; s < q; ++s) h[s] += d * row[s];
        }
      }
      for (int s = 0; s < q; ++s) node[s] = node_new[s];
    }
  }

  // Degree-0 vertices never get refreshed above; pin them to the prior.
  refresh_prior();
  for (int v = 0; v < g.n; ++v) {
    if (g.degree(v) > 0) continue;
    double z = 0.0;
    for (int s = 0; s < q; ++s) z += prior[s];
    for (int s = 0; s < q; ++s) ms.node(v)[s] = prior[s] / z;
  }

  return max_change;
}

BpRunResult run_bp(const LabeledGraph& g, const BpEstimates& est, MessageSet& ms, double tol,
                   int max_sweeps, uint64_t seed, double damping) {
  BpRunResult r;
  for (int t = 1; t <= max_sweeps; ++t) {
    r.last_change = bp_sweep(g, est, ms, derive_seed(seed, {0x73777065ULL, static_cast<uint64_t>(t)}),
                             damping);
    r.sweeps = t;
    if (r.last_change < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

std::vector<int> marginals_decode(const MessageSet& ms) {
  const int q = ms.q;
  const long n = static_cast<long>(ms.marginal.size()) / q;
  std::vector<int> out(n, 0);
  for (long v = 0; v < n; ++v) {
    const double* node = ms.marginal.data() + v * q;
    int best = 0;
    for (int s = 1; s < q; ++s)
      if (node[s] > node[best]) best = s;  // ties keep the smaller label
    out[v] = best;
  }
  return out;
}

}  // namespace sbmlab
