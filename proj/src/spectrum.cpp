#include "sbmlab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sbmlab/errors.hpp"
#include "sbmlab/nonbacktracking.hpp"
#include "sbmlab/rng.hpp"

extern "C" {
void dgeev_(const char* jobvl, const char* jobvr, const int* n, double* a, const int* lda,
            double* wr, double* wi, double* vl, const int* ldvl, double* vr, const int* ldvr,
            double* work, const int* lwork, int* info);
}

namespace sbmlab {

namespace {

void check_two_forms(double f1, double f2, const char* what) {
  const double scale = std::max({1.0, std::abs(f1), std::abs(f2)});
  if (std::abs(f1 - f2) > 1e-12 * scale)
    throw NumericError(std::string(what) + ": the two algebraic forms disagree (" +
                       std::to_string(f1) + " vs " + std::to_string(f2) + ")");
}

void require_threshold_assumptions(const ModularPattern& pattern, const ModelParams& params,
                                   const char* what) {
  if (!params.gamma_uniform(1e-12))
    throw ConfigError(std::string(what) + ": derivation requires uniform module sizes");
  if (!pattern.equal_row_sums)
    throw ConfigError(std::string(what) + ": derivation requires equal W row sums");
  if (pattern.has_per_label()) {
    for (const auto& m : pattern.per_label)
      if (m.data() != pattern.w.data())
        throw ConfigError(std::string(what) + ": derivation requires a label-common W");
  }
}

}  // namespace

double band_radius_formula(const ModularPattern& pattern, const ModelParams& estimates) {
  const int q = pattern.q;
  const double c = estimates.total_degree();
  double sum_dc = 0.0;  // sum |Delta_chat|^2 / P_alpha
  double sum_x = 0.0;   // sum P_alpha (x - Omega)^2 / (Omega(1-Omega))^2
  for (int a = 0; a < estimates.p(); ++a) {
    const double p_a = estimates.edge_fraction(a);
    if (!(p_a > 0.0)) throw ConfigError("band_radius_formula: P_alpha must be positive");
    const double dc = delta_c_of(pattern, estimates, a);
    sum_dc += dc * dc / p_a;
    const double om = pattern.omega(estimates.gamma, a);
    const double dx = estimates.labels[static_cast<size_t>(a)].strength - om;
    sum_x += p_a * dx * dx / (om * om * (1.0 - om) * (1.0 - om));
  }
  const double f1 = std::sqrt(sum_dc) / (q * std::sqrt(c));
  const double f2 = std::sqrt(c) * std::sqrt(sum_x) / q;
  check_two_forms(f1, f2, "band_radius_formula");
  return f1;
}

IsolatedEigenvalues isolated_eigenvalue_formula(const ModularPattern& pattern,
                                                const ModelParams& planted,
                                                const ModelParams& estimates) {
  require_threshold_assumptions(pattern, planted, "isolated_eigenvalue_formula");
  require_threshold_assumptions(pattern, estimates, "isolated_eigenvalue_formula");
  if (planted.p() != estimates.p())
    throw ConfigError("isolated_eigenvalue_formula: planted and estimated label counts differ");
  for (int a = 0; a < planted.p(); ++a)
    if (std::abs(planted.labels[static_cast<size_t>(a)].degree -
                 estimates.labels[static_cast<size_t>(a)].degree) > 1e-9)
      throw ConfigError("isolated_eigenvalue_formula: per-label degrees must match "
                        "(degrees are inputs, not learned)");

  const int q = pattern.q;
  const double omega = pattern.omega_uniform;
  double delta_j = 0.0;  // sum Dc Dchat / (q^2 c_alpha)
  double sum_x = 0.0;    // sum c_alpha (x - Omega)(xhat - Omega)
  double j_out = 0.0;
  for (int a = 0; a < planted.p(); ++a) {
    const double c_a = planted.labels[static_cast<size_t>(a)].degree;
    const double dc = delta_c_of(pattern, planted, a);
    const double dch = delta_c_of(pattern, estimates, a);
    delta_j += dc * dch / (q * q * c_a);
    sum_x += c_a * (planted.labels[static_cast<size_t>(a)].strength - omega) *
             (estimates.labels[static_cast<size_t>(a)].strength - omega);
    const double c_out = c_a - dc * omega;
    j_out += c_out * dch / (q * c_a);
  }
  j_out /= q;

  IsolatedEigenvalues out;
  out.iso = pattern.lambda2 * delta_j;
  const double denom = q * omega * (1.0 - omega);
  const double iso_x = pattern.lambda2 * sum_x / (denom * denom);
  check_two_forms(out.iso, iso_x, "isolated_eigenvalue_formula");
  out.plus = pattern.row_sum * delta_j + q * j_out;
  return out;
}

std::vector<std::complex<double>> dense_eigenvalues(std::vector<double> colmajor, int n) {
  if (n <= 0 || colmajor.size() != static_cast<size_t>(n) * n)
    throw ConfigError("dense_eigenvalues: bad dimensions");
  std::vector<double> wr(n), wi(n);
  int lwork = -1, info = 0;
  double wkopt = 0;
  dgeev_("N", "N", &n, colmajor.data(), &n, wr.data(), wi.data(), nullptr, &n, nullptr, &n, &wkopt,
         &lwork, &info);
  lwork = static_cast<int>(wkopt);
  std::vector<double> work(static_cast<size_t>(std::max(lwork, 4 * n)));
  lwork = static_cast<int>(work.size());
  dgeev_("N", "N", &n, colmajor.data(), &n, wr.data(), wi.data(), nullptr, &n, nullptr, &n,
         work.data(), &lwork, &info);
  if (info != 0)
    throw NumericError("dense_eigenvalues: dgeev failed with info=" + std::to_string(info));
  std::vector<std::complex<double>> out(n);
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = {wr[i], wi[i]};
  return out;
}

namespace {

// Arnoldi with full modified Gram-Schmidt (twice) and simple leading-vector
// restarts; good enough to read off the few largest-magnitude eigenvalues.
struct ArnoldiResult {
  std::vector<std::complex<double>> ritz;  // sorted by magnitude, descending
  double residual = 0.0;                   // leading Ritz pair
  bool converged = false;
};

ArnoldiResult arnoldi_leading(const NonbacktrackingOp& op, int want, int m, int max_restarts,
                              double tol, uint64_t seed) {
  const long n = op.dim();
  m = static_cast<int>(std::min<long>(m, n));
  want = std::min(want, m);

  std::mt19937_64 rng = make_rng(derive_seed(seed, {0x61726eULL}));
  std::normal_distribution<double> gauss;
  std::vector<double> start(n);
  for (long i = 0; i < n; ++i) start[i] = gauss(rng);

  ArnoldiResult result;
  for (int restart = 0; restart <= max_restarts; ++restart) {
    std::vector<std::vector<double>> v;
    v.reserve(m + 1);
    double norm = 0.0;
    for (long i = 0; i < n; ++i) norm += start[i] * start[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) return result;  // zero operator
    std::vector<double> v0(n);
    for (long i = 0; i < n; ++i) v0[i] = start[i] / norm;
    v.push_back(std::move(v0));

    std::vector<double> h(static_cast<size_t>(m + 1) * m, 0.0);  // h[r*m + c]
    std::vector<double> w(n);
    int built = 0;
    for (int k = 0; k < m; ++k) {
      op.apply(v[static_cast<size_t>(k)], w);
      for (int pass = 0; pass < 2; ++pass) {
        for (int r = 0; r <= k; ++r) {
          double dot = 0.0;
          const auto& vr = v[static_cast<size_t>(r)];
          for (long i = 0; i < n; ++i) dot += vr[i] * w[i];
          h[static_cast<size_t>(r) * m + k] += dot;
          for (long i = 0; i < n; ++i) w[i] -= dot * vr[i];
        }
      }
      double wn = 0.0;
      for (long i = 0; i < n; ++i) wn += w[i] * w[i];
      wn = std::sqrt(wn);
      h[static_cast<size_t>(k + 1) * m + k] = wn;
      built = k + 1;
      if (wn < 1e-14) break;  // invariant subspace
      std::vector<double> vk(n);
      for (long i = 0; i < n; ++i) vk[i] = w[i] / wn;
      v.push_back(std::move(vk));
    }

    // Ritz values of the built Hessenberg block.
    const int mm = built;
    std::vector<double> hm(static_cast<size_t>(mm) * mm);
    for (int c = 0; c < mm; ++c)
      for (int r = 0; r < mm; ++r) hm[static_cast<size_t>(c) * mm + r] = h[static_cast<size_t>(r) * m + c];

    std::vector<double> wr(mm), wi(mm), vr(static_cast<size_t>(mm) * mm);
    int lwork = -1, info = 0, nn = mm;
    double wkopt = 0;
    dgeev_("N", "V", &nn, hm.data(), &nn, wr.data(), wi.data(), nullptr, &nn, vr.data(), &nn,
           &wkopt, &lwork, &info);
    lwork = static_cast<int>(wkopt);
    std::vector<double> work(static_cast<size_t>(std::max(lwork, 4 * mm)));
    lwork = static_cast<int>(work.size());
    dgeev_("N", "V", &nn, hm.data(), &nn, wr.data(), wi.data(), nullptr, &nn, vr.data(), &nn,
           work.data(), &lwork, &info);
    if (info != 0) throw NumericError("arnoldi: dgeev on Hessenberg failed");

    std::vector<int> idx(mm);
    for (int i = 0; i < mm; ++i) idx[static_cast<size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::hypot(wr[a], wi[a]) > std::hypot(wr[b], wi[b]);
    });

    result.ritz.clear();
    for (int i = 0; i < std::min(want, mm); ++i)
      result.ritz.emplace_back(wr[idx[static_cast<size_t>(i)]], wi[idx[static_cast<size_t>(i)]]);

    const double h_last = h[static_cast<size_t>(mm) * m + (mm - 1)];
    const int lead = idx[0];
    // dgeev packs complex pairs into consecutive real columns; for the
    // residual bound only the bottom entry magnitude matters.
    double bottom = std::abs(vr[static_cast<size_t>(lead) * mm + (mm - 1)]);
    if (wi[lead] != 0.0) {
      const int mate = (lead + 1 < mm && wi[lead + 1] == -wi[lead]) ? lead + 1 : lead - 1;
      if (mate >= 0 && mate < mm)
        bottom = std::hypot(vr[static_cast<size_t>(lead) * mm + (mm - 1)],
                            vr[static_cast<size_t>(mate) * mm + (mm - 1)]);
    }
    result.residual = h_last * bottom;
    result.converged = result.residual < tol * std::max(1.0, std::abs(result.ritz[0]));
    if (result.converged || mm < m) return result;

    // Restart from the leading Ritz direction.
    std::fill(start.begin(), start.end(), 0.0);
    for (int r = 0; r < mm; ++r) {
      const double coeff = vr[static_cast<size_t>(lead) * mm + r];
      const auto& vrow = v[static_cast<size_t>(r)];
      for (long i = 0; i < n; ++i) start[i] += coeff * vrow[i];
    }
    for (long i = 0; i < n; ++i) start[i] += 1e-8 * gauss(rng);
  }
  return result;
}

}  // namespace

SpectrumSummary empirical_spectrum(const LabeledGraph& g, const ModularPattern& pattern,
                                   const ModelParams& estimates, const SpectrumOptions& opts) {
  SpectrumSummary out;
  out.band_radius_formula = band_radius_formula(pattern, estimates);

  const NonbacktrackingOp op(g, pattern, estimates);
  const long dim = op.dim();
  if (dim == 0) throw ConfigError("empirical_spectrum: graph has no edges");

  bool all_zero = true;
  for (double w : op.weights())
    if (w != 0.0) all_zero = false;

  if (opts.mode == SpectrumMode::dense) {
    if (dim > 10000)
      throw ConfigError("empirical_spectrum: dense mode guarded at 2L <= 10^4, got 2L=" +
                        std::to_string(dim) + "; use iterative mode");
    out.eigenvalues = dense_eigenvalues(op.dense_column_major(), static_cast<int>(dim));
  } else {
    if (all_zero) {
      out.eigenvalues.assign(static_cast<size_t>(std::min<long>(dim, opts.iterative_count)),
                             {0.0, 0.0});
    } else {
      ArnoldiResult ar = arnoldi_leading(op, opts.iterative_count, opts.krylov_dim,
                                         opts.max_restarts, opts.iterative_tol, opts.seed);
      out.eigenvalues = ar.ritz;
      out.converged = ar.converged;
      out.residual = ar.residual;
    }
  }

  // Split isolated candidates (matched to predictions) from the band sample.
  std::vector<bool> taken(out.eigenvalues.size(), false);
  for (double pred : opts.predictions) {
    int best = -1;
    double best_rel = opts.match_tol;
    for (size_t i = 0; i < out.eigenvalues.size(); ++i) {
      if (taken[i]) continue;
      const double rel = std::abs(out.eigenvalues[i] - pred) / std::max(1e-300, std::abs(pred));
      if (rel < best_rel) {
        best_rel = rel;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      taken[static_cast<size_t>(best)] = true;
      out.isolated.push_back(out.eigenvalues[static_cast<size_t>(best)]);
    } else {
      out.isolated.push_back({std::numeric_limits<double>::quiet_NaN(), 0.0});
    }
  }
  double band = 0.0, lead_real = 0.0;
  for (size_t i = 0; i < out.eigenvalues.size(); ++i) {
    const auto& ev = out.eigenvalues[i];
    if (!taken[i]) band = std::max(band, std::abs(ev));
    if (std::abs(ev.imag()) <= 1e-6 * std::max(1.0, std::abs(ev)) &&
        std::abs(ev.real()) > std::abs(lead_real))
      lead_real = ev.real();
  }
  out.band_radius_empirical = band;
  out.leading_real = lead_real;
  return out;
}

}  // namespace sbmlab
