#include "sbmlab/bruteforce.hpp"

#include <cmath>
#include <string>

#include "sbmlab/errors.hpp"

namespace sbmlab {

namespace {

// Odometer over assignments sigma in {0..q-1}^n.
inline bool advance(std::vector<int>& sigma, int q) {
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (++sigma[i] < q) return true;
    sigma[i] = 0;
  }
  return false;
}

// Solve the small linear system a x = b in place (partial pivoting).
void solve_small(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[static_cast<size_t>(r) * n + col]) >
          std::abs(a[static_cast<size_t>(piv) * n + col]))
        piv = r;
    if (std::abs(a[static_cast<size_t>(piv) * n + col]) < 1e-300)
      throw NumericError("exact_marginals_bruteforce: singular field Jacobian");
    if (piv != col) {
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<size_t>(piv) * n + c], a[static_cast<size_t>(col) * n + c]);
      std::swap(b[static_cast<size_t>(piv)], b[static_cast<size_t>(col)]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a[static_cast<size_t>(r) * n + col] / a[static_cast<size_t>(col) * n + col];
      for (int c = col; c < n; ++c)
        a[static_cast<size_t>(r) * n + c] -= f * a[static_cast<size_t>(col) * n + c];
      b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(col)];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = b[static_cast<size_t>(r)];
    for (int c = r + 1; c < n; ++c) s -= a[static_cast<size_t>(r) * n + c] * b[static_cast<size_t>(c)];
    b[static_cast<size_t>(r)] = s / a[static_cast<size_t>(r) * n + r];
  }
}

}  // namespace

std::vector<double> exact_marginals_bruteforce(const LabeledGraph& g, const ModularPattern& pattern,
                                               const ModelParams& params, NonedgeMode mode) {
  if (g.n > 14)
    throw ConfigError("exact_marginals_bruteforce: q^N enumeration guarded at N <= 14, got N=" +
                      std::to_string(g.n));
  if (pattern.q != g.q || params.q() != g.q)
    throw ConfigError("exact_marginals_bruteforce: q mismatch");
  const int n = g.n, q = g.q, p = g.p;
  const std::vector<SquareMatrix> affinity = build_affinity(pattern, params);

  // The edge-and-nonedge part of each assignment's weight does not depend on
  // the field; cache it so the self-consistent solve only rescans priors.
  size_t count = 1;
  for (int i = 0; i < n; ++i) count *= static_cast<size_t>(q);

  SquareMatrix nonedge(q, 1.0);
  std::vector<std::pair<int, int>> absent;
  if (mode == NonedgeMode::pairwise) {
    for (int r = 0; r < q; ++r)
      for (int c = 0; c < q; ++c) {
        double s = 0;
        for (int a = 0; a < p; ++a) s += affinity[static_cast<size_t>(a)](r, c);
        nonedge(r, c) = 1.0 - s / n;
        if (nonedge(r, c) <= 0.0)
          throw ConfigError("exact_marginals_bruteforce: nonedge factor nonpositive; N too small");
      }
    std::vector<bool> has(static_cast<size_t>(n) * n, false);
    for (const auto& e : g.edges) has[static_cast<size_t>(e.u) * n + e.v] = true;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (!has[static_cast<size_t>(u) * n + v]) absent.emplace_back(u, v);
  }

  std::vector<double> structural(count);
  {
    std::vector<int> sigma(n, 0);
    size_t idx = 0;
    do {
      double w = 1.0;
      for (const auto& e : g.edges)
        w *= affinity[static_cast<size_t>(e.label)](sigma[e.u], sigma[e.v]) / n;
      for (const auto& pr : absent) w *= nonedge(sigma[pr.first], sigma[pr.second]);
      structural[idx++] = w;
    } while (advance(sigma, q));
  }

  std::vector<double> marg(static_cast<size_t>(n) * q, 0.0);

  // One enumeration pass with the given per-vertex prior; returns the mean
  // marginal (the field argument of the next round).
  auto enumerate = [&](const std::vector<double>& prior) {
    std::fill(marg.begin(), marg.end(), 0.0);
    std::vector<int> sigma(n, 0);
    size_t idx = 0;
    double total = 0.0;
    do {
      double w = structural[idx++];
      if (w != 0.0) {
        for (int i = 0; i < n; ++i) w *= prior[static_cast<size_t>(sigma[i])];
        total += w;
        for (int i = 0; i < n; ++i) marg[static_cast<size_t>(i) * q + sigma[i]] += w;
      }
    } while (advance(sigma, q));
    if (total <= 0.0) throw NumericError("exact_marginals_bruteforce: zero total likelihood");
    for (double& m : marg) m /= total;
    std::vector<double> psibar(q, 0.0);
    for (int i = 0; i < n; ++i)
      for (int s = 0; s < q; ++s) psibar[static_cast<size_t>(s)] += marg[static_cast<size_t>(i) * q + s];
    for (double& x : psibar) x /= n;
    return psibar;
  };

  if (mode != NonedgeMode::mean_field) {
    enumerate(params.gamma);
    return marg;
  }

  // Mean-field mode: solve psibar = F(psibar), where F enumerates with prior
  // gamma_s exp(-sum_a h_a(s)), h_a(s) = sum_s' psibar_s' c^a(s', s) -- the
  // same treatment of nonedges that BP's sparse approximation uses. Picard
  // warmup, then Newton with a finite-difference Jacobian (the plain
  // iteration contracts too slowly when the field feedback is strong).
  auto prior_of = [&](const std::vector<double>& psibar) {
    std::vector<double> prior(q);
    for (int s = 0; s < q; ++s) {
      double h = 0.0;
      for (int a = 0; a < p; ++a)
        for (int sp = 0; sp < q; ++sp)
          h += psibar[static_cast<size_t>(sp)] * affinity[static_cast<size_t>(a)](sp, s);
      prior[static_cast<size_t>(s)] = params.gamma[static_cast<size_t>(s)] * std::exp(-h);
    }
    return prior;
  };
  auto f_of = [&](const std::vector<double>& psibar) { return enumerate(prior_of(psibar)); };

  // The self-consistency can have several solutions (condensed states exist
  // for strongly assortative parameters); BP relaxes to the stable one
  // reachable from the prior, so the oracle must do the same. Picard from
  // gamma stays in that basin; Newton is only allowed to polish: steps are
  // trust-region bounded and accepted only when the residual shrinks.
  std::vector<double> pb(params.gamma);
  auto residual_norm = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double r = 0;
    for (int s = 0; s < q; ++s)
      r = std::max(r, std::abs(a[static_cast<size_t>(s)] - b[static_cast<size_t>(s)]));
    return r;
  };

  std::vector<double> f0 = f_of(pb);
  double res = residual_norm(f0, pb);
  for (int it = 0; it < 40 && res > 1e-15; ++it) {
    pb = f0;
    f0 = f_of(pb);
    res = residual_norm(f0, pb);
  }

  const double fd_step = 1e-7;
  const double trust = 0.05;
  for (int it = 0; it < 80 && res > 1e-15; ++it) {
    std::vector<double> jac(static_cast<size_t>(q) * q);  // d(F - I)/d(psibar)
    for (int j = 0; j < q; ++j) {
      std::vector<double> pbj = pb;
      pbj[static_cast<size_t>(j)] += fd_step;
      const std::vector<double> fj = f_of(pbj);
      for (int s = 0; s < q; ++s)
        jac[static_cast<size_t>(s) * q + j] =
            (fj[static_cast<size_t>(s)] - f0[static_cast<size_t>(s)]) / fd_step -
            (s == j ? 1.0 : 0.0);
    }
    std::vector<double> delta(q);
    for (int s = 0; s < q; ++s) delta[static_cast<size_t>(s)] = pb[static_cast<size_t>(s)] - f0[static_cast<size_t>(s)];
    solve_small(jac, delta, q);  // delta now holds the Newton step
    double dmax = 0;
    for (double d : delta) dmax = std::max(dmax, std::abs(d));
    if (dmax > trust)
      for (double& d : delta) d *= trust / dmax;

    std::vector<double> pb_try(q);
    for (int s = 0; s < q; ++s) pb_try[static_cast<size_t>(s)] = pb[static_cast<size_t>(s)] + delta[static_cast<size_t>(s)];
    const std::vector<double> f_try = f_of(pb_try);
    const double res_try = residual_norm(f_try, pb_try);
    if (res_try < res) {
      pb = std::move(pb_try);
      f0 = f_try;
      res = res_try;
    } else {  // fall back to a plain Picard step
      pb = f0;
      f0 = f_of(pb);
      res = residual_norm(f0, pb);
    }
  }
  enumerate(prior_of(pb));  // marginals at the solved field
  return marg;
}

}  // namespace sbmlab
