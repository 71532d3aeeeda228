#pragma once

// Exhaustive-enumeration posterior marginals for small instances; the test
// oracle that converged BP is checked against on trees.

#include <vector>

#include "sbmlab/graph.hpp"
#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

// How pairs without an edge enter the likelihood:
//   pairwise    - exact factor (1 - sum_alpha c^alpha_{ss'}/N) per absent pair
//   mean_field  - per-vertex factor exp(-sum_alpha h_alpha(s)) with h computed
//                 self-consistently from the oracle's own marginals; this is
//                 the same sparse-approximation treatment BP applies, so it is
//                 the mode to use when comparing against BP on trees
//   none        - edge factors and prior only
enum class NonedgeMode { pairwise, mean_field, none };

// Sums the labeled-SBM likelihood over all q^N assignments (guard: N <= 14).
// Returns n*q row-normalized marginals.
std::vector<double> exact_marginals_bruteforce(const LabeledGraph& g, const ModularPattern& pattern,
                                               const ModelParams& params,
                                               NonedgeMode mode = NonedgeMode::pairwise);

}  // namespace sbmlab
