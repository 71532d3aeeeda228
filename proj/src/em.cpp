#include "sbmlab/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sbmlab/errors.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab {

namespace {

constexpr double kStrengthClamp = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// X^ij_alpha = psi^{i->j} W^alpha psi^{j->i}^T for edge e.
inline double edge_pattern_mass(const LabeledGraph& g, const MessageSet& ms, const SquareMatrix& w,
                                size_t e) {
  const double* pa = ms.message(g.edge_arcs[e][0]);
  const double* pb = ms.message(g.edge_arcs[e][1]);
  const int q = ms.q;
  double x = 0.0;
  for (int r = 0; r < q; ++r) {
    if (pa[r] == 0.0) continue;
    double row = 0.0;
    for (int c = 0; c < q; ++c) row += w(r, c) * pb[c];
    x += pa[r] * row;
  }
  return x;
}

}  // namespace

void EmConfig::validate() const {
  if (max_steps < 1) throw ConfigError("em: max_steps must be >= 1");
  if (sweeps_per_mstep < 1) throw ConfigError("em: sweeps_per_mstep must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ConfigError("em: learning rate must lie in (0,1]");
  if (damping < 0.0 || damping >= 1.0) throw ConfigError("em: damping must lie in [0,1)");
  if (bias_weight < 0.0 || bias_weight > 1.0) throw ConfigError("em: bias weight must lie in [0,1]");
}

XiStats xi_statistics(const LabeledGraph& g, const ModularPattern& pattern, const MessageSet& ms,
                      std::span<const double> gamma_hat) {
  const int p = g.p;
  XiStats st;
  st.mean.assign(p, kNaN);
  st.second.assign(p, kNaN);
  st.count.assign(p, 0);

  std::vector<double> omega(p);
  for (int a = 0; a < p; ++a) {
    omega[a] = pattern.label_pattern(a).quad(gamma_hat, gamma_hat);
    if (!(omega[a] > 0.0 && omega[a] < 1.0))
      throw NumericError("xi_statistics: Omega_hat_" + std::to_string(a + 1) +
                         " outside (0,1); degenerate gamma_hat");
  }

  std::vector<double> sum(p, 0.0), sumsq(p, 0.0);
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const int a = g.edges[e].label;
    const double x = edge_pattern_mass(g, ms, pattern.label_pattern(a), e);
    const double xi = (x - omega[a]) / omega[a];
    sum[a] += xi;
    sumsq[a] += xi * xi;
    ++st.count[a];
  }
  for (int a = 0; a < p; ++a) {
    if (st.count[a] == 0) continue;  // absent label: stats stay NaN, not zero
    st.mean[a] = sum[a] / st.count[a];
    st.second[a] = sumsq[a] / st.count[a];
  }
  return st;
}

XUpdateResult m_step_x(const LabeledGraph& g, const ModularPattern& pattern, const MessageSet& ms,
                       const std::vector<double>& x_hat, std::span<const double> gamma_hat,
                       double learning_rate) {
  const int p = g.p;
  if (static_cast<int>(x_hat.size()) != p) throw ConfigError("m_step_x: x_hat size != p");

  XUpdateResult res;
  res.x_next = x_hat;
  res.stats.mean.assign(p, kNaN);
  res.stats.second.assign(p, kNaN);
  res.stats.count.assign(p, 0);

  std::vector<double> omega(p), slope(p);
  for (int a = 0; a < p; ++a) {
    omega[a] = pattern.label_pattern(a).quad(gamma_hat, gamma_hat);
    slope[a] = (x_hat[static_cast<size_t>(a)] - omega[a]) / (1.0 - omega[a]);
  }

  std::vector<double> term_sum(p, 0.0), xi_sum(p, 0.0), xi_sq(p, 0.0);
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const int a = g.edges[e].label;
    const double x = edge_pattern_mass(g, ms, pattern.label_pattern(a), e);
    const double xi = (x - omega[a]) / omega[a];
    double denom = 1.0 + slope[a] * xi;
    if (denom <= 1e-12) {  // only reachable through degenerate messages
      denom = 1e-12;
      ++res.clamped_terms;
    }
    term_sum[a] += (1.0 + xi) / denom;
    xi_sum[a] += xi;
    xi_sq[a] += xi * xi;
    ++res.stats.count[a];
  }

  for (int a = 0; a < p; ++a) {
    const long l = res.stats.count[a];
    if (l == 0) continue;  // no alpha-edges: x_hat unchanged
    res.stats.mean[a] = xi_sum[a] / l;
    res.stats.second[a] = xi_sq[a] / l;
    const double mean_term = term_sum[a] / l;
    const double next = x_hat[static_cast<size_t>(a)] * (1.0 + learning_rate * (mean_term - 1.0));
    res.x_next[static_cast<size_t>(a)] = std::clamp(next, kStrengthClamp, 1.0 - kStrengthClamp);
  }
  return res;
}

std::vector<double> m_step_gamma(const MessageSet& ms) {
  const int q = ms.q;
  const long n = static_cast<long>(ms.marginal.size()) / q;
  std::vector<double> gamma(q, 0.0);
  for (long v = 0; v < n; ++v)
    for (int s = 0; s < q; ++s) gamma[s] += ms.marginal[v * q + s];
  for (int s = 0; s < q; ++s) gamma[s] /= n;
  return gamma;
}

std::vector<SquareMatrix> m_step_full_affinity(const LabeledGraph& g, const MessageSet& ms,
                                               std::span<const double> gamma_hat,
                                               const std::vector<SquareMatrix>& current_affinity) {
  const int q = ms.q, p = g.p;
  for (int s = 0; s < q; ++s)
    if (gamma_hat[s] <= 0.0)
      throw NumericError("m_step_full_affinity: gamma_hat_" + std::to_string(s + 1) +
                         " = 0 (degenerate module)");

  std::vector<SquareMatrix> next(p, SquareMatrix(q));
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const int a = g.edges[e].label;
    const SquareMatrix& c = current_affinity[static_cast<size_t>(a)];
    const double* pa = ms.message(g.edge_arcs[e][0]);
    const double* pb = ms.message(g.edge_arcs[e][1]);
    double z = 0.0;
    for (int r = 0; r < q; ++r)
      for (int s = 0; s < q; ++s) z += pa[r] * c(r, s) * pb[s];
    if (z <= 0.0)
      throw NumericError("m_step_full_affinity: degenerate two-point marginal on edge " +
                         std::to_string(g.edges[e].u) + "," + std::to_string(g.edges[e].v));
    for (int r = 0; r < q; ++r)
      for (int s = 0; s < q; ++s) {
        const double t = pa[r] * c(r, s) * pb[s] / z;
        next[static_cast<size_t>(a)](r, s) += t;
        next[static_cast<size_t>(a)](s, r) += t;
      }
  }
  for (int a = 0; a < p; ++a)
    for (int r = 0; r < q; ++r)
      for (int s = 0; s < q; ++s)
        next[static_cast<size_t>(a)](r, s) /= g.n * gamma_hat[r] * gamma_hat[s];
  return next;
}

double project_strength(const SquareMatrix& affinity, const SquareMatrix& w,
                        std::span<const double> gamma_hat) {
  const int q = w.n();
  const double omega_u = [&] {
    double t = 0;
    for (int r = 0; r < q; ++r) t += w.row_sum(r);
    return t / (q * q);
  }();
  double dot_w = 0.0, dot_1 = 0.0;
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) {
      dot_w += affinity(r, c) * w(r, c);
      dot_1 += affinity(r, c);
    }
  const double dc = (dot_w - omega_u * dot_1) / (q * q * omega_u * (1.0 - omega_u));
  const double c_mean = affinity.quad(gamma_hat, gamma_hat);
  const double om = w.quad(gamma_hat, gamma_hat);
  if (c_mean <= 0.0) return 0.5;
  return std::clamp(delta_c_to_x(dc, c_mean, om), 0.0, 1.0);
}

EmResult run_em(const LabeledGraph& g, const ModularPattern& pattern, const ModelParams& init,
                const EmConfig& config, uint64_t seed, const EmObserver& observer) {
  config.validate();
  if (pattern.q != g.q || init.q() != g.q || init.p() != g.p)
    throw ConfigError("run_em: dimension mismatch between graph, pattern and init params");

  const int p = g.p;
  std::vector<double> gamma_hat = init.gamma;
  std::vector<double> x_hat(p);
  std::vector<double> c_labels(p);
  for (int a = 0; a < p; ++a) {
    x_hat[a] = std::clamp(init.labels[static_cast<size_t>(a)].strength, kStrengthClamp,
                          1.0 - kStrengthClamp);
    c_labels[a] = init.labels[static_cast<size_t>(a)].degree;
  }

  auto restricted_params = [&]() {
    std::vector<LabelParams> ls(p);
    for (int a = 0; a < p; ++a) ls[static_cast<size_t>(a)] = {c_labels[a], x_hat[a]};
    ModelParams mp;
    mp.gamma = gamma_hat;
    mp.labels = std::move(ls);
    return mp;
  };

  std::vector<SquareMatrix> affinity = build_affinity(pattern, restricted_params());

  std::optional<MessageBias> bias;
  if (config.bias_weight > 0.0) {
    MessageBias b;
    b.weight = config.bias_weight;
    if (!config.bias_target.empty()) {
      b.target = config.bias_target;
    } else if (config.bias_toward_planted) {
      b.target = g.planted;
    } else if (config.bias_random) {
      b.target.resize(g.n);
      std::mt19937_64 rng = make_rng(derive_seed(seed, {0x72746774ULL}));
      for (int v = 0; v < g.n; ++v)
        b.target[v] = static_cast<int>(rng() % static_cast<uint64_t>(g.q));
    } else {
      throw ConfigError("run_em: bias_weight > 0 needs a target (planted, random, or explicit)");
    }
    bias = std::move(b);
  }
  MessageSet msgs = init_messages(g, g.q, derive_seed(seed, {0x696e6974ULL}), bias);

  auto tv_sum = [](const std::vector<SquareMatrix>& aff) {
    double t = 0;
    for (const auto& m : aff) t += m.total_variation_from_mean();
    return t;
  };

  EmResult res;
  {
    EmStep s0;
    s0.x_hat = x_hat;
    s0.gamma_hat = gamma_hat;
    s0.delta_tv = tv_sum(affinity);
    const XiStats st = xi_statistics(g, pattern, msgs, gamma_hat);
    s0.xi_mean = st.mean;
    s0.xi_second = st.second;
    s0.max_change = kNaN;
    res.steps.push_back(std::move(s0));
  }
  if (observer) observer(0, msgs, x_hat, gamma_hat);

  for (int t = 1; t <= config.max_steps; ++t) {
    double change = 0.0;
    for (int s = 1; s <= config.sweeps_per_mstep; ++s)
      change = bp_sweep(g, BpEstimates{gamma_hat, affinity}, msgs,
                        derive_seed(seed, {0x7377ULL, static_cast<uint64_t>(t),
                                           static_cast<uint64_t>(s)}),
                        config.damping);

    EmStep step;
    if (config.restrict_affinity) {
      XUpdateResult up = m_step_x(g, pattern, msgs, x_hat, gamma_hat, config.learning_rate);
      x_hat = up.x_next;
      res.clamped_terms += up.clamped_terms;
      step.xi_mean = up.stats.mean;
      step.xi_second = up.stats.second;
      gamma_hat = m_step_gamma(msgs);
      affinity = build_affinity(pattern, restricted_params());
    } else {
      const XiStats st = xi_statistics(g, pattern, msgs, gamma_hat);
      step.xi_mean = st.mean;
      step.xi_second = st.second;
      affinity = m_step_full_affinity(g, msgs, gamma_hat, affinity);
      gamma_hat = m_step_gamma(msgs);
      for (int a = 0; a < p; ++a)
        x_hat[a] = project_strength(affinity[static_cast<size_t>(a)], pattern.label_pattern(a),
                                    gamma_hat);
    }
    step.x_hat = x_hat;
    step.gamma_hat = gamma_hat;
    step.delta_tv = tv_sum(affinity);
    step.max_change = change;
    res.steps.push_back(std::move(step));
    if (observer) observer(t, msgs, x_hat, gamma_hat);

    if (change < config.tol) {
      res.converged = true;
      break;
    }
  }

  res.assignment = marginals_decode(msgs);
  res.overlap_value = overlap(res.assignment, g.planted, g.q);
  res.msgs = std::move(msgs);
  return res;
}

}  // namespace sbmlab
