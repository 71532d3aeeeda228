#pragma once

// M-step parameter updates and the EM driver. The restricted mode learns
// (x_hat_alpha, gamma_hat) with the per-label mean degrees held at their input
// values; the full mode learns the whole q x q affinity of every label.

#include <cstdint>
#include <functional>
#include <vector>

#include "sbmlab/bp.hpp"
#include "sbmlab/graph.hpp"
#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

struct EmConfig {
  int max_steps = 2000;
  double tol = 1e-6;              // convergence on E-step max message change
  int sweeps_per_mstep = 1;       // BP sweeps per parameter update
  double learning_rate = 1.0;     // eta in (0,1]; eta < 1 blends toward the old estimate
  bool restrict_affinity = true;  // restricted (c, x) updates vs full q x q updates
  double damping = 0.0;           // message damping, off by default

  // Initial-message tilt (reproduces the randomization experiments). With
  // bias_random the targets are drawn i.i.d. from the run seed: maximal
  // initial spread (<xi^2> ~ 1) carrying no information about the planted
  // assignment.
  double bias_weight = 0.0;
  bool bias_toward_planted = false;
  bool bias_random = false;
  std::vector<int> bias_target;  // explicit target; overrides the flags if set

  void validate() const;
};

// Per-label edge statistics of the normalized deviation
// xi^alpha_ij = (X^ij_alpha - Omega_hat_alpha) / Omega_hat_alpha,
// X^ij_alpha = psi^{i->j} W^alpha psi^{j->i}^T, averaged over E_alpha.
struct XiStats {
  std::vector<double> mean;    // <xi_alpha>; NaN when no alpha-edges
  std::vector<double> second;  // <xi_alpha^2>; NaN when no alpha-edges
  std::vector<long> count;     // L_alpha
};

XiStats xi_statistics(const LabeledGraph& g, const ModularPattern& pattern, const MessageSet& ms,
                      std::span<const double> gamma_hat);

struct XUpdateResult {
  std::vector<double> x_next;
  XiStats stats;
  long clamped_terms = 0;  // edge terms whose denominator had to be clamped
};

// Per-label multiplicative update
//   x' = x * < (1+xi) / (1 + (x-Omega)/(1-Omega) * xi) >_{E_alpha},
// blended by the learning rate; result clamped to [eps, 1-eps], eps = 1e-9.
XUpdateResult m_step_x(const LabeledGraph& g, const ModularPattern& pattern, const MessageSet& ms,
                       const std::vector<double>& x_hat, std::span<const double> gamma_hat,
                       double learning_rate = 1.0);

// gamma_hat_s = (1/N) sum_i psi^i_s.
std::vector<double> m_step_gamma(const MessageSet& ms);

// Standard point estimates from the two-point edge marginals:
// chat^alpha_{ss'} = sum_{(i,j) in E_alpha} (t_{ss'} + t_{s's}) / (N g_s g_s'),
// t from psi^{i->j}_s chat^alpha_{ss'} psi^{j->i}_{s'} normalized per edge.
std::vector<SquareMatrix> m_step_full_affinity(const LabeledGraph& g, const MessageSet& ms,
                                               std::span<const double> gamma_hat,
                                               const std::vector<SquareMatrix>& current_affinity);

struct EmStep {
  std::vector<double> x_hat;      // in full mode: least-squares projection (diagnostic)
  std::vector<double> gamma_hat;
  double delta_tv = 0.0;          // total variation of the affinity entries, summed over labels
  std::vector<double> xi_mean;
  std::vector<double> xi_second;
  double max_change = 0.0;        // E-step change of the last sweep before this update
};

struct EmResult {
  std::vector<EmStep> steps;  // steps[0] is the initial state (no sweep yet)
  bool converged = false;
  std::vector<int> assignment;
  double overlap_value = 0.0;
  long clamped_terms = 0;
  MessageSet msgs;
};

// Called after the initial setup (step 0) and after every M-step; used by the
// harness for marginal dumps and spectrum snapshots along a trajectory.
using EmObserver = std::function<void(int step, const MessageSet& msgs,
                                      const std::vector<double>& x_hat,
                                      const std::vector<double>& gamma_hat)>;

EmResult run_em(const LabeledGraph& g, const ModularPattern& pattern, const ModelParams& init,
                const EmConfig& config, uint64_t seed, const EmObserver& observer = {});

// Least-squares projection of a full affinity matrix onto the restricted
// family Delta_c * W + c_out * 11^T; returns the implied x (clamped to [0,1]).
double project_strength(const SquareMatrix& affinity, const SquareMatrix& w,
                        std::span<const double> gamma_hat);

}  // namespace sbmlab
