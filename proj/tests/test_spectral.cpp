#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "sbmlab/errors.hpp"
#include "sbmlab/graph.hpp"
#include "sbmlab/nonbacktracking.hpp"
#include "sbmlab/rng.hpp"
#include "sbmlab/spectrum.hpp"

using namespace sbmlab;

namespace {

SquareMatrix identity(int q) {
  SquareMatrix m(q);
  for (int i = 0; i < q; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix w4() {
  return SquareMatrix(4, {1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 1});
}

ModelParams params2(double c1, double x1, double c2, double x2) {
  return make_params_uniform(2, {{c1, x1}, {c2, x2}});
}

}  // namespace

TEST_CASE("band_radius_formula: frozen values and the p=1 reduction") {
  const ModularPattern pat = make_pattern(identity(2));

  CHECK(band_radius_formula(pat, params2(3.0, 0.5, 5.0, 0.5)) == doctest::Approx(0.0));

  // c=(3,5), xhat=(0.85,0.45): Delta_chat=(4.2,-1), P=(0.375,0.625).
  const double expect = std::sqrt(4.2 * 4.2 / 0.375 + 1.0 / 0.625) / (2.0 * std::sqrt(8.0));
  CHECK(band_radius_formula(pat, params2(3.0, 0.85, 5.0, 0.45)) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(1.233).epsilon(1e-3));

  // p=1: |lambda_b| = |Delta c| / (q sqrt(c)); unity at |Delta c| = 2 sqrt(c).
  const double c = 3.0;
  const double dc = 2.0 * std::sqrt(c);
  const double x_at_threshold = delta_c_to_x(dc, c, 0.5);
  const ModelParams mp = make_params_uniform(2, {{c, x_at_threshold}});
  CHECK(band_radius_formula(pat, mp) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("band_radius_formula: the two algebraic forms agree on random draws") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ModularPattern pat2 = make_pattern(identity(2));
  const ModularPattern pat4 = make_pattern(w4());
  for (int t = 0; t < 300; ++t) {
    const ModularPattern& pat = t % 2 ? pat4 : pat2;
    std::vector<LabelParams> ls;
    const int p = 1 + static_cast<int>(u(rng) * 3);
    for (int a = 0; a < p; ++a) ls.push_back({0.2 + 10.0 * u(rng), u(rng)});
    // Equality of the forms is asserted inside; a throw would fail the test.
    CHECK(band_radius_formula(pat, make_params_uniform(pat.q, ls)) >= 0.0);
  }
}

TEST_CASE("isolated_eigenvalue_formula: frozen values, Nishimori identity, lambda_plus") {
  const ModularPattern pat = make_pattern(identity(2));

  // xhat = Omega: no isolated eigenvalue.
  CHECK(isolated_eigenvalue_formula(pat, params2(3.0, 0.1, 5.0, 0.6),
                                    params2(3.0, 0.5, 5.0, 0.5))
            .iso == doctest::Approx(0.0));

  // Stall-point estimates of the c=8 model: lambda_iso just above 1.
  const double d = 1.0 / (2.0 * std::sqrt(8.0));
  const IsolatedEigenvalues at_stall = isolated_eigenvalue_formula(
      pat, params2(3.0, 0.1, 5.0, 0.6), params2(3.0, 0.5 - d, 5.0, 0.5 + d));
  CHECK(at_stall.iso == doctest::Approx(4.0 * d * (3.0 * 0.4 + 5.0 * 0.1)).epsilon(1e-12));
  CHECK(at_stall.iso == doctest::Approx(1.2021).epsilon(1e-4));
  CHECK(at_stall.iso > 1.0);

  // Nishimori identity |lambda2 lambda_iso| = (|lambda2| lambda_b)^2, exact.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (const ModularPattern& p4 : {make_pattern(identity(2)), make_pattern(w4())}) {
    for (int t = 0; t < 200; ++t) {
      std::vector<LabelParams> ls{{1.0 + 4.0 * u(rng), u(rng)}, {0.5 + 6.0 * u(rng), u(rng)}};
      const ModelParams mp = make_params_uniform(p4.q, ls);
      const double iso = isolated_eigenvalue_formula(p4, mp, mp).iso;
      const double band = band_radius_formula(p4, mp);
      CHECK(std::abs(p4.lambda2 * iso) ==
            doctest::Approx(std::pow(p4.lambda2 * band, 2)).epsilon(1e-12));
    }
  }

  // p=1, q=2 identity: lambda_plus = Delta_chat / q.
  const double c = 3.0;
  const ModelParams planted1 = make_params_uniform(2, {{c, 0.7}});
  const ModelParams est1 = make_params_uniform(2, {{c, 0.85}});
  const double dchat = x_to_delta_c(0.85, c, 0.5);
  CHECK(isolated_eigenvalue_formula(pat, planted1, est1).plus ==
        doctest::Approx(dchat / 2.0).epsilon(1e-12));
}

TEST_CASE("isolated_eigenvalue_formula: derivation assumptions are enforced") {
  const ModularPattern pat = make_pattern(identity(2));
  ModelParams skewed = make_params({0.7, 0.3}, {{3.0, 0.6}});
  ModelParams uni = make_params_uniform(2, {{3.0, 0.6}});
  CHECK_THROWS_AS(isolated_eigenvalue_formula(pat, skewed, uni), ConfigError);

  // Unequal row sums.
  const ModularPattern uneven = make_pattern(SquareMatrix(3, {1, 1, 0, 1, 1, 1, 0, 1, 1}));
  CHECK_FALSE(uneven.equal_row_sums);
  ModelParams mp3 = make_params_uniform(3, {{3.0, 0.6}});
  CHECK_THROWS_AS(isolated_eigenvalue_formula(uneven, mp3, mp3), ConfigError);

  // Mismatched per-label degrees.
  CHECK_THROWS_AS(isolated_eigenvalue_formula(pat, make_params_uniform(2, {{3.0, 0.6}}),
                                              make_params_uniform(2, {{4.0, 0.6}})),
                  ConfigError);
}

TEST_CASE("nonbacktracking operator: oriented structure on a hand-built path") {
  // Path 0-1-2: arcs cannot reverse onto themselves.
  LabeledGraph g = make_graph(3, 2, 1, {{0, 1, 0}, {1, 2, 0}}, {0, 1, 0});
  const NonbacktrackingOp op(g, std::vector<double>{1.0});

  std::vector<double> v(g.arc_count(), 0.0), out(g.arc_count(), 0.0);
  // Find the arc 0->1 and feed it.
  long a01 = -1, a12 = -1, a10 = -1;
  for (long a = 0; a < g.arc_count(); ++a) {
    if (g.arc_source[a] == 0 && g.arcs[a].to == 1) a01 = a;
    if (g.arc_source[a] == 1 && g.arcs[a].to == 2) a12 = a;
    if (g.arc_source[a] == 1 && g.arcs[a].to == 0) a10 = a;
  }
  v[a01] = 1.0;
  op.apply(v, out);
  CHECK(out[a12] == doctest::Approx(1.0));  // forward continuation
  CHECK(out[a10] == doctest::Approx(0.0));  // no backtracking
  for (long a = 0; a < g.arc_count(); ++a)
    if (a != a12) CHECK(out[a] == doctest::Approx(0.0));
}

TEST_CASE("nonbacktracking operator: sparse apply matches the dense matrix") {
  const ModularPattern pat = make_pattern(identity(2));
  const ModelParams mp = params2(3.0, 0.8, 2.0, 0.3);
  const LabeledGraph g = generate(pat, mp, 60, 3);
  const NonbacktrackingOp op(g, pat, mp);
  const auto dense = op.dense_column_major();
  const long n = op.dim();

  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  std::vector<double> v(n), got(n), want(n, 0.0);
  for (long i = 0; i < n; ++i) v[i] = gauss(rng);
  op.apply(v, got);
  for (long col = 0; col < n; ++col)
    for (long row = 0; row < n; ++row)
      want[row] += dense[static_cast<size_t>(col) * n + row] * v[col];
  for (long i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("dense spectrum of a triangle: two directed 3-cycles") {
  LabeledGraph g = make_graph(3, 2, 1, {{0, 1, 0}, {1, 2, 0}, {0, 2, 0}}, {0, 1, 0});
  const NonbacktrackingOp op(g, std::vector<double>{1.0});
  auto ev = dense_eigenvalues(op.dense_column_major(), static_cast<int>(op.dim()));
  REQUIRE(ev.size() == 6);
  int ones = 0;
  for (const auto& l : ev) {
    CHECK(std::abs(l) == doctest::Approx(1.0).epsilon(1e-10));  // cube roots of unity
    if (std::abs(l - std::complex<double>(1.0, 0.0)) < 1e-10) ++ones;
  }
  CHECK(ones == 2);
}

TEST_CASE("empirical_spectrum: zero weights, guard, and dense/iterative agreement") {
  const ModularPattern pat = make_pattern(identity(2));

  {  // Delta_chat = 0: operator identically zero.
    const ModelParams mp = params2(3.0, 0.5, 5.0, 0.5);
    const LabeledGraph g = generate(pat, mp, 80, 9);
    SpectrumOptions opts;
    const SpectrumSummary s = empirical_spectrum(g, pat, mp, opts);
    CHECK(s.band_radius_empirical == doctest::Approx(0.0).epsilon(1e-12));
    for (const auto& ev : s.eigenvalues) CHECK(std::abs(ev) < 1e-12);
  }
  {  // Dense guard at 2L > 10^4.
    const ModelParams mp = params2(3.0, 0.8, 5.0, 0.4);
    const LabeledGraph g = generate(pat, mp, 2000, 10);
    REQUIRE(g.arc_count() > 10000);
    SpectrumOptions opts;
    CHECK_THROWS_AS(empirical_spectrum(g, pat, mp, opts), ConfigError);
  }
  {  // Iterative leading eigenvalue matches dense on a small instance.
    const ModelParams mp = params2(4.0, 0.9, 2.0, 0.2);
    const LabeledGraph g = generate(pat, mp, 120, 11);
    SpectrumOptions dense_opts;
    const SpectrumSummary sd = empirical_spectrum(g, pat, mp, dense_opts);
    SpectrumOptions it_opts;
    it_opts.mode = SpectrumMode::iterative;
    it_opts.krylov_dim = 80;
    const SpectrumSummary si = empirical_spectrum(g, pat, mp, it_opts);
    REQUIRE(!sd.eigenvalues.empty());
    REQUIRE(!si.eigenvalues.empty());
    double dense_top = 0.0;
    for (const auto& ev : sd.eigenvalues) dense_top = std::max(dense_top, std::abs(ev));
    CHECK(std::abs(si.eigenvalues[0]) == doctest::Approx(dense_top).epsilon(1e-6));
  }
}

TEST_CASE("empirical_spectrum: band edge and isolated eigenvalue near the formulas (small N)") {
  const ModularPattern pat = make_pattern(identity(2));
  const ModelParams planted = params2(3.0, 0.1, 5.0, 0.6);
  const ModelParams estimates = params2(3.0, 0.1, 5.0, 0.9);
  const LabeledGraph g = generate(pat, planted, 250, 12);

  const IsolatedEigenvalues iso = isolated_eigenvalue_formula(pat, planted, estimates);
  SpectrumOptions opts;
  opts.predictions = {iso.iso, iso.plus};
  const SpectrumSummary s = empirical_spectrum(g, pat, estimates, opts);

  CHECK(std::abs(s.band_radius_empirical - s.band_radius_formula) / s.band_radius_formula < 0.2);
  REQUIRE(!s.isolated.empty());
  CHECK(!std::isnan(s.isolated[0].real()));
  CHECK(std::abs(s.isolated[0].imag()) < 1e-6 * std::abs(s.isolated[0]));
  CHECK(std::abs(s.isolated[0].real() - iso.iso) / iso.iso < 0.15);
}

TEST_CASE("band_radius_trace_bound: zero case and approach to the formula") {
  const ModularPattern pat = make_pattern(identity(2));

  {  // Delta_chat = 0 -> bound 0.
    const ModelParams mp = params2(3.0, 0.5, 5.0, 0.5);
    const LabeledGraph g = generate(pat, mp, 300, 13);
    const TraceBound tb = band_radius_trace_bound(g, pat, mp, 6, 8, 1);
    CHECK(tb.value == doctest::Approx(0.0));
  }
  {  // p=1: the formula reduces to |Delta_chat| / (q sqrt c).
    const ModelParams est1 = make_params_uniform(2, {{4.0, 0.8}});
    const double dchat = x_to_delta_c(0.8, 4.0, 0.5);
    CHECK(band_radius_formula(pat, est1) ==
          doctest::Approx(std::abs(dchat) / (2.0 * std::sqrt(4.0))).epsilon(1e-12));
  }
  {  // Estimator approaches the formula when the uniform-sign mode stays
    // inside the band (here lambda_plus = 1.6 < lambda_b = 2.26).
    const ModelParams planted = make_params_uniform(2, {{3.0, 0.1}, {5.0, 0.6}});
    const LabeledGraph g = generate(pat, planted, 4000, 14);
    const ModelParams est = make_params_uniform(2, {{3.0, 0.1}, {5.0, 0.9}});
    const TraceBound tb = band_radius_trace_bound(g, pat, est, 10, 16, 2);
    const double formula = band_radius_formula(pat, est);
    CHECK(std::abs(tb.value - formula) / formula < 0.12);
    CHECK(tb.std_error > 0.0);
  }

  const ModelParams mp = params2(3.0, 0.7, 5.0, 0.4);
  const LabeledGraph g = generate(pat, mp, 200, 15);
  CHECK_THROWS_AS(band_radius_trace_bound(g, pat, mp, 1), ConfigError);
}
