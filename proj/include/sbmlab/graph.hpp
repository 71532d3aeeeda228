#pragma once

// Sparse undirected labeled graph with planted module assignments.
// Simple across all labels: no self-loops, no duplicate vertex pairs.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

struct LabeledGraph {
  int n = 0;
  int q = 0;
  int p = 0;

  struct Edge {
    int u, v;   // u < v
    int label;  // 0-based alpha
  };
  std::vector<Edge> edges;
  std::vector<int> planted;  // length n, 0-based module ids

  // Directed-arc view (2L arcs). Arc 2e is u->v of edge e, arc 2e+1 is v->u.
  // Arcs are also the message / nonbacktracking index space.
  struct Arc {
    int to;
    int label;
    int edge;
  };
  std::vector<Arc> arcs;        // grouped by source vertex
  std::vector<int> arc_offset;  // n+1 offsets into arcs
  std::vector<int> arc_source;  // source vertex per arc
  std::vector<int> arc_pair;    // index of the reversed arc
  std::vector<std::array<int, 2>> edge_arcs;  // per edge: {u->v, v->u} arc ids

  long arc_count() const { return static_cast<long>(arcs.size()); }
  long edge_count() const { return static_cast<long>(edges.size()); }
  std::vector<long> edge_counts_per_label() const;
  int degree(int v) const { return arc_offset[v + 1] - arc_offset[v]; }

  // Rebuilds arcs/offsets from the edge list (called by the constructors).
  void build_adjacency();
};

// Draws planted assignments i.i.d. from gamma, then per (block pair, label)
// a Poisson number of edges placed uniformly within the blocks; self-loops and
// duplicates are resampled. O(L) for sparse affinities.
LabeledGraph generate(const ModularPattern& pattern, const ModelParams& params, int n,
                      uint64_t seed);

LabeledGraph make_graph(int n, int q, int p, std::vector<LabeledGraph::Edge> edges,
                        std::vector<int> planted);

// Permutation-maximized fraction of correctly classified vertices. Enumerates
// all q! label permutations (rejects q > 8).
double overlap(const std::vector<int>& inferred, const std::vector<int>& planted, int q);

// Text format: header "N q p", then "i j alpha" per edge (0-based), then
// "sigma i s" per vertex. Lossless round trip.
void write_graph(std::ostream& os, const LabeledGraph& g);
LabeledGraph read_graph(std::istream& is);
void write_graph_file(const std::string& path, const LabeledGraph& g);
LabeledGraph read_graph_file(const std::string& path);

}  // namespace sbmlab
