#pragma once

// Label-weighted nonbacktracking operator B' on the 2L directed arcs:
//   (B' v)_{i->j} = sum_{k in d(i) \ j} w(A_ik) v_{k->i},
//   w(alpha) = Delta_chat_alpha / (q c_alpha).
// Entry (i->i', j->j') is nonzero only when i = j' and i' != j.

#include <cstdint>
#include <span>
#include <vector>

#include "sbmlab/graph.hpp"
#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

class NonbacktrackingOp {
 public:
  NonbacktrackingOp(const LabeledGraph& g, std::vector<double> label_weights);
  NonbacktrackingOp(const LabeledGraph& g, const ModularPattern& pattern,
                    const ModelParams& estimates);

  long dim() const { return graph_->arc_count(); }
  const std::vector<double>& weights() const { return weights_; }

  // out = B' in. O(2L).
  void apply(std::span<const double> in, std::span<double> out) const;

  // Dense column-major copy (for the direct eigensolver). Guarded by caller.
  std::vector<double> dense_column_major() const;

 private:
  const LabeledGraph* graph_;
  std::vector<double> weights_;  // per label
};

std::vector<double> nonbacktracking_weights(const ModularPattern& pattern,
                                            const ModelParams& estimates);

struct TraceBound {
  double value = 0.0;      // [(1/2L) tr(B'^d B'^d^T)]^(1/2d), Hutchinson estimate
  double std_error = 0.0;  // delta-method propagation of the probe spread
  int probes = 0;
  int path_length = 0;
};

// Stochastic trace estimate through 2d sparse applications per probe,
// accumulated in log magnitude.
TraceBound band_radius_trace_bound(const LabeledGraph& g, const ModularPattern& pattern,
                                   const ModelParams& estimates, int path_length, int probes = 32,
                                   uint64_t seed = 1);

}  // namespace sbmlab
