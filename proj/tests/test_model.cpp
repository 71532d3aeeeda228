#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sbmlab/errors.hpp"
#include "sbmlab/graph.hpp"
#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"
#include "sbmlab/rng.hpp"

using namespace sbmlab;

namespace {

SquareMatrix identity(int q) {
  SquareMatrix m(q);
  for (int i = 0; i < q; ++i) m(i, i) = 1.0;
  return m;
}

// q=4 noncommunity pattern with a=2: spectrum {2, sqrt2, 0, -sqrt2} (the
// symmetric/antisymmetric sectors under the (14)(23) swap solve by hand).
SquareMatrix w4() {
  return SquareMatrix(4, {1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 1});
}

}  // namespace

TEST_CASE("pattern: identity q=2") {
  const ModularPattern p = make_pattern(identity(2));
  CHECK(p.omega_uniform == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.equal_row_sums);
  CHECK(p.row_sum == 1.0);
}

TEST_CASE("pattern: identity q=3") {
  const ModularPattern p = make_pattern(identity(3));
  CHECK(p.omega_uniform == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(p.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.row_sum == 1.0);
}

TEST_CASE("pattern: q=4 noncommunity, lambda2 = sqrt(2)") {
  const ModularPattern p = make_pattern(w4());
  CHECK(p.omega_uniform == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(p.lambda2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.equal_row_sums);
  CHECK(p.row_sum == 2.0);
}

TEST_CASE("pattern: rejections") {
  CHECK_THROWS_AS(make_pattern(SquareMatrix(2, {1, 1, 0, 1})), ConfigError);     // not symmetric
  CHECK_THROWS_AS(make_pattern(SquareMatrix(2, {1, 0.5, 0.5, 1})), ConfigError);  // not binary
  CHECK_THROWS_AS(make_pattern(SquareMatrix(2, {0, 0, 0, 0})), ConfigError);      // Omega = 0
}

TEST_CASE("x <-> delta_c map") {
  CHECK(x_to_delta_c(0.5, 3.0, 0.5) == doctest::Approx(0.0).epsilon(1e-15));

  // x=1 with Omega=1/2 is the disconnected-modules corner: c_out = 0.
  const double dc1 = x_to_delta_c(1.0, 3.0, 0.5);
  CHECK(3.0 - dc1 * 0.5 == doctest::Approx(0.0).epsilon(1e-12));  // c_out
  // x=0 is the bipartite corner: c_in = 0.
  const double dc0 = x_to_delta_c(0.0, 3.0, 0.5);
  CHECK(dc0 + (3.0 - dc0 * 0.5) == doctest::Approx(0.0).epsilon(1e-12));  // c_in

  CHECK_THROWS_AS(x_to_delta_c(0.5, 3.0, 0.0), ConfigError);
  CHECK_THROWS_AS(x_to_delta_c(0.5, 3.0, 1.0), ConfigError);

  // Round trip to 1e-12 over 10^3 random draws.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, 1.0), uo(0.05, 0.95), uc(0.1, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng), om = uo(rng), c = uc(rng);
    CHECK(std::abs(delta_c_to_x(x_to_delta_c(x, c, om), c, om) - x) < 1e-12);
  }
}

TEST_CASE("build_affinity: frozen entries") {
  const ModularPattern p = make_pattern(identity(2));

  {
    const ModelParams mp = make_params_uniform(2, {{3.0, 0.5}});
    const auto aff = build_affinity(p, mp);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) CHECK(aff[0](r, c) == doctest::Approx(3.0).epsilon(1e-14));
  }
  {
    // c1=3, x1=0.85: Delta c = 4.2, c_in = 5.1, c_out = 0.9.
    const ModelParams mp = make_params_uniform(2, {{3.0, 0.85}});
    const auto aff = build_affinity(p, mp);
    CHECK(aff[0](0, 0) == doctest::Approx(5.1).epsilon(1e-12));
    CHECK(aff[0](0, 1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(x_to_delta_c(0.85, 3.0, 0.5) == doctest::Approx(4.2).epsilon(1e-12));
  }
  CHECK(x_to_delta_c(0.45, 5.0, 0.5) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("build_affinity: gamma^T c gamma = c_alpha for random parametrizations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int q = 2 + static_cast<int>(u(rng) * 3);  // 2..4
    SquareMatrix w(q);
    for (int i = 0; i < q; ++i) w(i, i) = 1.0;
    if (q >= 3) {  // vary the pattern a bit while keeping Omega in (0,1)
      w(0, 1) = w(1, 0) = (u(rng) < 0.5) ? 1.0 : 0.0;
    }
    const ModularPattern p = make_pattern(w);

    std::vector<double> gamma(q);
    double s = 0;
    for (int i = 0; i < q; ++i) {
      gamma[i] = 0.2 + u(rng);
      s += gamma[i];
    }
    for (int i = 0; i < q; ++i) gamma[i] /= s;

    std::vector<LabelParams> ls;
    const int pl = 1 + static_cast<int>(u(rng) * 2);
    for (int a = 0; a < pl; ++a) ls.push_back({0.5 + 8 * u(rng), u(rng)});
    const ModelParams mp = make_params(gamma, ls);

    const auto aff = build_affinity(p, mp);
    for (int a = 0; a < pl; ++a) {
      const double mean = aff[static_cast<size_t>(a)].quad(mp.gamma, mp.gamma);
      CHECK(std::abs(mean - ls[static_cast<size_t>(a)].degree) < 1e-12 * std::max(1.0, mean));
      for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c) CHECK(aff[static_cast<size_t>(a)](r, c) >= 0.0);
    }
  }
}

TEST_CASE("generate: edge count and per-label mean degree, N=10^4") {
  const ModularPattern p = make_pattern(identity(2));
  const ModelParams mp = make_params_uniform(2, {{3.0, 0.1}, {5.0, 0.6}});
  const LabeledGraph g = generate(p, mp, 10000, 42);

  // L ~ N c / 2 = 40000, Poisson sigma = 200.
  CHECK(std::abs(static_cast<double>(g.edge_count()) - 40000.0) < 3 * 200.0);

  const auto counts = g.edge_counts_per_label();
  CHECK(std::abs(2.0 * counts[0] / g.n - 3.0) / 3.0 < 0.05);
  CHECK(std::abs(2.0 * counts[1] / g.n - 5.0) / 5.0 < 0.05);
}

TEST_CASE("generate: x = Omega makes labels independent of planted blocks") {
  const ModularPattern p = make_pattern(identity(2));
  const ModelParams mp = make_params_uniform(2, {{3.0, 0.5}, {5.0, 0.5}});
  const LabeledGraph g = generate(p, mp, 20000, 7);

  // 2x2 contingency (label x same/cross module), chi-square with 1 dof.
  double n11 = 0, n12 = 0, n21 = 0, n22 = 0;
  for (const auto& e : g.edges) {
    const bool same = g.planted[e.u] == g.planted[e.v];
    if (e.label == 0)
      (same ? n11 : n12) += 1;
    else
      (same ? n21 : n22) += 1;
  }
  const double n = n11 + n12 + n21 + n22;
  const double r1 = n11 + n12, r2 = n21 + n22, c1 = n11 + n21, c2 = n12 + n22;
  double chi2 = 0;
  chi2 += std::pow(n11 - r1 * c1 / n, 2) / (r1 * c1 / n);
  chi2 += std::pow(n12 - r1 * c2 / n, 2) / (r1 * c2 / n);
  chi2 += std::pow(n21 - r2 * c1 / n, 2) / (r2 * c1 / n);
  chi2 += std::pow(n22 - r2 * c2 / n, 2) / (r2 * c2 / n);
  CHECK(chi2 < 6.63);  // 1% critical value, 1 dof
}

TEST_CASE("generate: x1 = 1 leaves no cross-module alpha=1 edges") {
  const ModularPattern p = make_pattern(identity(2));
  const ModelParams mp = make_params_uniform(2, {{3.0, 1.0}, {5.0, 0.5}});
  const LabeledGraph g = generate(p, mp, 5000, 3);
  for (const auto& e : g.edges)
    if (e.label == 0) CHECK(g.planted[e.u] == g.planted[e.v]);
}

TEST_CASE("generate: block density estimator at 3 sigma") {
  const ModularPattern p = make_pattern(identity(2));
  const ModelParams mp = make_params_uniform(2, {{4.0, 0.8}});
  const int n = 40000;
  const LabeledGraph g = generate(p, mp, n, 19);
  const auto aff = build_affinity(p, mp);

  std::vector<long> block_count(2, 0);
  for (int v : g.planted) ++block_count[static_cast<size_t>(v)];
  double pairs[2][2] = {{0, 0}, {0, 0}};
  for (const auto& e : g.edges) ++pairs[g.planted[e.u]][g.planted[e.v]];
  for (int r = 0; r < 2; ++r)
    for (int c = r; c < 2; ++c) {
      const double cnt = r == c ? pairs[r][r] : pairs[r][c] + pairs[c][r];
      const double mean = r == c
                              ? block_count[r] * static_cast<double>(block_count[r]) * aff[0](r, r) / (2.0 * n)
                              : block_count[r] * static_cast<double>(block_count[c]) * aff[0](r, c) / n;
      if (mean == 0) {
        CHECK(cnt == 0);
        continue;
      }
      CHECK(std::abs(cnt - mean) < 3.0 * std::sqrt(mean) + 1.0);
    }
}

TEST_CASE("generate: rejects N too small for the affinity scale") {
  const ModularPattern p = make_pattern(identity(2));
  const ModelParams mp = make_params_uniform(2, {{3.0, 1.0}});  // c_in = 6
  CHECK_THROWS_AS(generate(p, mp, 5, 1), ConfigError);
}

TEST_CASE("overlap: identities and permutation invariance") {
  std::vector<int> planted{0, 1, 0, 1, 2, 2, 1, 0};
  CHECK(overlap(planted, planted, 3) == doctest::Approx(1.0));

  std::vector<int> swapped(planted);
  for (int& s : swapped) s = s == 0 ? 1 : (s == 1 ? 0 : s);
  CHECK(overlap(swapped, planted, 3) == doctest::Approx(1.0));

  // Invariance under permuting either argument.
  std::mt19937_64 rng(5);
  std::vector<int> inf(planted.size());
  for (auto& s : inf) s = static_cast<int>(rng() % 3);
  const double base = overlap(inf, planted, 3);
  std::vector<int> perm{2, 0, 1};
  std::vector<int> inf_p(inf), planted_p(planted);
  for (auto& s : inf_p) s = perm[static_cast<size_t>(s)];
  for (auto& s : planted_p) s = perm[static_cast<size_t>(s)];
  CHECK(overlap(inf_p, planted, 3) == doctest::Approx(base));
  CHECK(overlap(inf, planted_p, 3) == doctest::Approx(base));

  CHECK_THROWS_AS(overlap({0}, {0, 1}, 2), ConfigError);
  CHECK_THROWS_AS(overlap(std::vector<int>(10, 0), std::vector<int>(10, 0), 9), ConfigError);
}

TEST_CASE("overlap: q=2 random inferred sits at 0.5 + O(N^-1/2)") {
  const int n = 10000;
  std::mt19937_64 rng(23);
  std::vector<int> planted(n), inferred(n);
  for (int i = 0; i < n; ++i) {
    planted[i] = static_cast<int>(rng() % 2);
    inferred[i] = static_cast<int>(rng() % 2);
  }
  const double ov = overlap(inferred, planted, 2);
  CHECK(ov >= 0.5);  // permutation-maximized
  CHECK(ov < 0.5 + 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("graph serialization round trip") {
  const ModularPattern p = make_pattern(identity(3));
  const ModelParams mp = make_params_uniform(3, {{2.0, 0.7}, {1.0, 0.2}});
  const LabeledGraph g = generate(p, mp, 200, 99);

  std::stringstream ss;
  write_graph(ss, g);
  const LabeledGraph h = read_graph(ss);
  REQUIRE(h.n == g.n);
  REQUIRE(h.q == g.q);
  REQUIRE(h.p == g.p);
  REQUIRE(h.edges.size() == g.edges.size());
  for (size_t e = 0; e < g.edges.size(); ++e) {
    CHECK(h.edges[e].u == g.edges[e].u);
    CHECK(h.edges[e].v == g.edges[e].v);
    CHECK(h.edges[e].label == g.edges[e].label);
  }
  CHECK(h.planted == g.planted);

  std::stringstream ss2;
  write_graph(ss2, h);
  std::stringstream ss3;
  write_graph(ss3, g);
  CHECK(ss2.str() == ss3.str());
}

TEST_CASE("make_graph: simple-graph violations rejected") {
  CHECK_THROWS_AS(make_graph(3, 2, 1, {{0, 0, 0}}, {0, 1, 0}), ConfigError);
  CHECK_THROWS_AS(make_graph(3, 2, 1, {{0, 1, 0}, {1, 0, 0}}, {0, 1, 0}), ConfigError);
  CHECK_THROWS_AS(make_graph(3, 2, 1, {{0, 1, 5}}, {0, 1, 0}), ConfigError);
}
