#include "sbmlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "sbmlab/errors.hpp"
#include "sbmlab/rng.hpp"

namespace sbmlab {

namespace {
inline uint64_t pair_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (static_cast<uint64_t>(u) << 32) | static_cast<uint64_t>(v);
}
}  // namespace

void LabeledGraph::build_adjacency() {
  arc_offset.assign(n + 1, 0);
  for (const Edge& e : edges) {
    ++arc_offset[e.u + 1];
    ++arc_offset[e.v + 1];
  }
  for (int v = 0; v < n; ++v) arc_offset[v + 1] += arc_offset[v];

  const long m = 2 * edge_count();
  arcs.assign(m, Arc{});
  arc_source.assign(m, 0);
  arc_pair.assign(m, 0);
  edge_arcs.assign(edges.size(), {0, 0});

  std::vector<int> cursor(arc_offset.begin(), arc_offset.end() - 1);
  for (size_t e = 0; e < edges.size(); ++e) {
    const Edge& ed = edges[e];
    const int a_uv = cursor[ed.u]++;
    const int a_vu = cursor[ed.v]++;
    arcs[a_uv] = Arc{ed.v, ed.label, static_cast<int>(e)};
    arcs[a_vu] = Arc{ed.u, ed.label, static_cast<int>(e)};
    arc_source[a_uv] = ed.u;
    arc_source[a_vu] = ed.v;
    arc_pair[a_uv] = a_vu;
    arc_pair[a_vu] = a_uv;
    edge_arcs[e] = {a_uv, a_vu};
  }
}

std::vector<long> LabeledGraph::edge_counts_per_label() const {
  std::vector<long> counts(p, 0);
  for (const Edge& e : edges) ++counts[e.label];
  return counts;
}

LabeledGraph make_graph(int n, int q, int p, std::vector<LabeledGraph::Edge> edges,
                        std::vector<int> planted) {
  LabeledGraph g;
  g.n = n;
  g.q = q;
  g.p = p;
  g.planted = std::move(planted);
  if (static_cast<int>(g.planted.size()) != n) throw ConfigError("make_graph: planted size != n");
  std::unordered_set<uint64_t> seen;
  seen.reserve(edges.size() * 2);
  for (auto& e : edges) {
    if (e.u == e.v) throw ConfigError("make_graph: self-loop");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 0 || e.v >= n) throw ConfigError("make_graph: vertex out of range");
    if (e.label < 0 || e.label >= p) throw ConfigError("make_graph: label out of range");
    if (!seen.insert(pair_key(e.u, e.v)).second) throw ConfigError("make_graph: duplicate edge");
  }
  g.edges = std::move(edges);
  g.build_adjacency();
  return g;
}

LabeledGraph generate(const ModularPattern& pattern, const ModelParams& params, int n,
                      uint64_t seed) {
  if (n < pattern.q) throw ConfigError("generate: need N >= q");
  const std::vector<SquareMatrix> affinity = build_affinity(pattern, params);
  const int q = pattern.q;

  // Implied nonedge weight must stay positive at this N.
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) {
      double s = 0;
      for (const auto& m : affinity) s += m(r, c);
      if (s >= n)
        throw ConfigError("generate: affinity entries sum to " + std::to_string(s) +
                          " >= N at block (" + std::to_string(r + 1) + "," +
                          std::to_string(c + 1) + "); N too small for this parametrization");
    }

  std::mt19937_64 rng = make_rng(derive_seed(seed, {0x67656eULL}));  // "gen"

  LabeledGraph g;
  g.n = n;
  g.q = q;
  g.p = params.p();
  g.planted.resize(n);
  std::discrete_distribution<int> block_dist(params.gamma.begin(), params.gamma.end());
  std::vector<std::vector<int>> members(q);
  for (int v = 0; v < n; ++v) {
    const int b = block_dist(rng);
    g.planted[v] = b;
    members[b].push_back(v);
  }

  std::unordered_set<uint64_t> seen;
  for (int a = 0; a < params.p(); ++a) {
    const SquareMatrix& c_a = affinity[static_cast<size_t>(a)];
    for (int r = 0; r < q; ++r) {
      for (int s = r; s < q; ++s) {
        const double nr = static_cast<double>(members[r].size());
        const double ns = static_cast<double>(members[s].size());
        const double mean = (r == s) ? nr * nr * c_a(r, r) / (2.0 * n) : nr * ns * c_a(r, s) / n;
        if (mean <= 0.0) continue;
        if (r == s && members[r].size() < 2) continue;
        std::poisson_distribution<long> count_dist(mean);
        const long want = count_dist(rng);
        std::uniform_int_distribution<size_t> pick_r(0, members[r].size() - 1);
        std::uniform_int_distribution<size_t> pick_s(0, members[s].size() - 1);
        long placed = 0, attempts = 0;
        const long max_attempts = 100 * want + 1000;
        while (placed < want && attempts < max_attempts) {
          ++attempts;
          const int u = members[r][pick_r(rng)];
          const int v = members[s][pick_s(rng)];
          if (u == v) continue;
          if (!seen.insert(pair_key(u, v)).second) continue;
          g.edges.push_back({std::min(u, v), std::max(u, v), a});
          ++placed;
        }
        if (placed < want)
          throw NumericError("generate: could not place " + std::to_string(want) +
                             " simple edges in block pair (" + std::to_string(r + 1) + "," +
                             std::to_string(s + 1) + "); graph too dense for collision resampling");
      }
    }
  }
  g.build_adjacency();
  return g;
}

double overlap(const std::vector<int>& inferred, const std::vector<int>& planted, int q) {
  if (inferred.size() != planted.size())
    throw ConfigError("overlap: assignment vectors differ in length");
  if (q > 8)
    throw ConfigError("overlap: q! permutation search not supported for q > 8; "
                      "use a matching-based overlap for larger q");
  const size_t n = planted.size();
  if (n == 0) throw ConfigError("overlap: empty assignments");

  // q x q confusion counts, then maximize the trace over permutations.
  std::vector<long> conf(static_cast<size_t>(q) * q, 0);
  for (size_t i = 0; i < n; ++i) {
    if (inferred[i] < 0 || inferred[i] >= q || planted[i] < 0 || planted[i] >= q)
      throw ConfigError("overlap: label out of range");
    ++conf[static_cast<size_t>(planted[i]) * q + inferred[i]];
  }
  std::vector<int> perm(q);
  std::iota(perm.begin(), perm.end(), 0);
  long best = 0;
  do {
    long hits = 0;
    for (int s = 0; s < q; ++s) hits += conf[static_cast<size_t>(s) * q + perm[s]];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(n);
}

void write_graph(std::ostream& os, const LabeledGraph& g) {
  os << g.n << ' ' << g.q << ' ' << g.p << '\n';
  for (const auto& e : g.edges) os << e.u << ' ' << e.v << ' ' << e.label << '\n';
  for (int v = 0; v < g.n; ++v) os << "sigma " << v << ' ' << g.planted[v] << '\n';
}

LabeledGraph read_graph(std::istream& is) {
  int n = 0, q = 0, p = 0;
  if (!(is >> n >> q >> p)) throw ConfigError("read_graph: bad header, expected \"N q p\"");
  std::vector<LabeledGraph::Edge> edges;
  std::vector<int> planted(n, -1);
  std::string tok;
  while (is >> tok) {
    if (tok == "sigma") {
      int v = 0, s = 0;
      if (!(is >> v >> s)) throw ConfigError("read_graph: bad sigma line");
      if (v < 0 || v >= n || s < 0 || s >= q) throw ConfigError("read_graph: sigma out of range");
      planted[v] = s;
    } else {
      int u = std::stoi(tok), v = 0, a = 0;
      if (!(is >> v >> a)) throw ConfigError("read_graph: bad edge line");
      edges.push_back({u, v, a});
    }
  }
  for (int v = 0; v < n; ++v)
    if (planted[v] < 0) throw ConfigError("read_graph: missing sigma line for vertex " + std::to_string(v));
  return make_graph(n, q, p, std::move(edges), std::move(planted));
}

void write_graph_file(const std::string& path, const LabeledGraph& g) {
  std::ofstream f(path);
  if (!f) throw ConfigError("write_graph_file: cannot open " + path);
  write_graph(f, g);
}

LabeledGraph read_graph_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("read_graph_file: cannot open " + path);
  return read_graph(f);
}

}  // namespace sbmlab
