#pragma once

// Belief propagation E-step for the labeled SBM. One message per directed arc,
// plus per-vertex marginals and the mean-field external field that stands in
// for the nonedge factors in the sparse approximation.

#include <cstdint>
#include <optional>
#include <vector>

#include "sbmlab/graph.hpp"
#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

struct MessageSet {
  int q = 0;
  std::vector<double> msg;       // arcs * q; msg[a*q + s] = psi^{src(a) -> dst(a)}_s
  std::vector<double> marginal;  // n * q
  std::vector<double> field;     // p * q; h_alpha(s), refreshed once per sweep

  double* message(long arc) { return msg.data() + arc * q; }
  const double* message(long arc) const { return msg.data() + arc * q; }
  double* node(int v) { return marginal.data() + static_cast<long>(v) * q; }
  const double* node(int v) const { return marginal.data() + static_cast<long>(v) * q; }
};

// Optional tilt of the initial messages toward a target assignment:
// psi = (1-weight) * Dirichlet(1,...,1) + weight * delta(target).
struct MessageBias {
  std::vector<int> target;  // length n
  double weight = 0.0;      // in [0,1]
};

MessageSet init_messages(const LabeledGraph& g, int q, uint64_t seed,
                         const std::optional<MessageBias>& bias = std::nullopt);

// What a sweep needs from the M-step side: current gamma_hat and the per-label
// affinity estimates (full q x q freedom; the restricted mode builds them from
// (c_alpha, x_hat) each step).
struct BpEstimates {
  std::vector<double> gamma;
  std::vector<SquareMatrix> affinity;
};

BpEstimates make_estimates(const ModularPattern& pattern, const ModelParams& params);

// One full asynchronous sweep: every directed message updated once, in a fresh
// random order drawn from order_seed; marginals and the external field are
// refreshed. Returns the max L1 message change.
double bp_sweep(const LabeledGraph& g, const BpEstimates& est, MessageSet& ms,
                uint64_t order_seed, double damping = 0.0);

struct BpRunResult {
  int sweeps = 0;
  bool converged = false;
  double last_change = 0.0;
};

// Sweeps until max change < tol or max_sweeps.
BpRunResult run_bp(const LabeledGraph& g, const BpEstimates& est, MessageSet& ms, double tol,
                   int max_sweeps, uint64_t seed, double damping = 0.0);

// Per-vertex argmax of the marginals; ties break to the smallest label.
std::vector<int> marginals_decode(const MessageSet& ms);

}  // namespace sbmlab
