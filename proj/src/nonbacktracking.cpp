#include "sbmlab/nonbacktracking.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sbmlab/errors.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab {

std::vector<double> nonbacktracking_weights(const ModularPattern& pattern,
                                            const ModelParams& estimates) {
  std::vector<double> w(estimates.p());
  for (int a = 0; a < estimates.p(); ++a) {
    const double dc = delta_c_of(pattern, estimates, a);
    w[static_cast<size_t>(a)] = dc / (pattern.q * estimates.labels[static_cast<size_t>(a)].degree);
  }
  return w;
}

NonbacktrackingOp::NonbacktrackingOp(const LabeledGraph& g, std::vector<double> label_weights)
    : graph_(&g), weights_(std::move(label_weights)) {
  if (static_cast<int>(weights_.size()) != g.p)
    throw ConfigError("NonbacktrackingOp: weight count != p");
}

NonbacktrackingOp::NonbacktrackingOp(const LabeledGraph& g, const ModularPattern& pattern,
                                     const ModelParams& estimates)
    : NonbacktrackingOp(g, nonbacktracking_weights(pattern, estimates)) {}

void NonbacktrackingOp::apply(std::span<const double> in, std::span<double> out) const {
  const LabeledGraph& g = *graph_;
  // S_i = sum over incoming arcs, then subtract the backtracking contribution.
  std::vector<double> s(g.n, 0.0);
  for (int v = 0; v < g.n; ++v) {
    double acc = 0.0;
    for (int b = g.arc_offset[v]; b < g.arc_offset[v + 1]; ++b)
      acc += weights_[static_cast<size_t>(g.arcs[b].label)] * in[g.arc_pair[b]];
    s[v] = acc;
  }
  for (long a = 0; a < g.arc_count(); ++a) {
    const int i = g.arc_source[a];
    out[a] = s[i] - weights_[static_cast<size_t>(g.arcs[a].label)] * in[g.arc_pair[a]];
  }
}

std::vector<double> NonbacktrackingOp::dense_column_major() const {
  const LabeledGraph& g = *graph_;
  const long n = dim();
  std::vector<double> a(static_cast<size_t>(n) * n, 0.0);
  // Column b = (j -> j') feeds rows (j' -> i') with i' != j, weight w(label(b)).
  for (long b = 0; b < n; ++b) {
    const int j = g.arc_source[b];
    const int jp = g.arcs[b].to;
    const double w = weights_[static_cast<size_t>(g.arcs[b].label)];
    for (int r = g.arc_offset[jp]; r < g.arc_offset[jp + 1]; ++r) {
      if (g.arcs[r].to == j) continue;
      a[static_cast<size_t>(b) * n + r] = w;
    }
  }
  return a;
}

TraceBound band_radius_trace_bound(const LabeledGraph& g, const ModularPattern& pattern,
                                   const ModelParams& estimates, int path_length, int probes,
                                   uint64_t seed) {
  if (path_length < 2) throw ConfigError("band_radius_trace_bound: need d >= 2");
  if (probes < 2) throw ConfigError("band_radius_trace_bound: need >= 2 probes");
  const NonbacktrackingOp op(g, pattern, estimates);
  const long n = op.dim();
  if (n == 0) throw ConfigError("band_radius_trace_bound: empty graph");

  std::mt19937_64 rng = make_rng(derive_seed(seed, {0x7472616345ULL}));
  std::bernoulli_distribution coin(0.5);

  std::vector<double> v(n), w(n);
  std::vector<double> t_values(probes, 0.0);  // T_k = |B'^d z_k|^2 / 2L, via logs
  bool any_positive = false;

  for (int k = 0; k < probes; ++k) {
    for (long i = 0; i < n; ++i) v[i] = coin(rng) ? 1.0 : -1.0;
    double log_scale = 0.0;
    bool dead = false;
    for (int step = 0; step < path_length; ++step) {
      op.apply(v, w);
      double m = 0.0;
      for (long i = 0; i < n; ++i) m = std::max(m, std::abs(w[i]));
      if (m == 0.0) {
        dead = true;
        break;
      }
      for (long i = 0; i < n; ++i) v[i] = w[i] / m;
      log_scale += std::log(m);
    }
    if (dead) {
      t_values[k] = -std::numeric_limits<double>::infinity();  // log T = -inf
      continue;
    }
    double norm_sq = 0.0;
    for (long i = 0; i < n; ++i) norm_sq += v[i] * v[i];
    t_values[k] = 2.0 * log_scale + std::log(norm_sq) - std::log(static_cast<double>(n));
    any_positive = true;
  }

  TraceBound out;
  out.probes = probes;
  out.path_length = path_length;
  if (!any_positive) return out;  // operator identically zero: bound 0

  // Average T in linear space via a shifted exponential sum.
  double shift = -std::numeric_limits<double>::infinity();
  for (double lt : t_values) shift = std::max(shift, lt);
  double mean = 0.0;
  for (double lt : t_values) mean += std::isfinite(lt) ? std::exp(lt - shift) : 0.0;
  mean /= probes;
  double var = 0.0;
  for (double lt : t_values) {
    const double x = (std::isfinite(lt) ? std::exp(lt - shift) : 0.0) - mean;
    var += x * x;
  }
  var /= (probes - 1);
  const double se_rel = std::sqrt(var / probes) / mean;

  const double log_t_mean = shift + std::log(mean);
  out.value = std::exp(log_t_mean / (2.0 * path_length));
  out.std_error = out.value * se_rel / (2.0 * path_length);
  return out;
}

}  // namespace sbmlab
