#pragma once

// Analytic spectral-band / isolated-eigenvalue formulas for B' and empirical
// spectra to validate them (dense for small graphs, Arnoldi otherwise).

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "sbmlab/graph.hpp"
#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

// |lambda_b| = (1/(q sqrt(c))) sqrt(sum_a |Delta_chat_a|^2 / P_a). The x-form
// is computed as well and the two are asserted equal to 1e-12.
double band_radius_formula(const ModularPattern& pattern, const ModelParams& estimates);

struct IsolatedEigenvalues {
  double iso = 0.0;   // lambda_iso = lambda2(W) sum_a Dc_a Dchat_a / (q^2 c_a)
  double plus = 0.0;  // lambda_+ = a*DJ + q*J_out (uniform-sign eigenvector)
};

// Requires uniform gamma, equal W row sums, a label-common W, and matching
// per-label degrees between planted and estimates (derivation assumptions).
IsolatedEigenvalues isolated_eigenvalue_formula(const ModularPattern& pattern,
                                                const ModelParams& planted,
                                                const ModelParams& estimates);

enum class SpectrumMode { dense, iterative };

struct SpectrumOptions {
  SpectrumMode mode = SpectrumMode::dense;
  int iterative_count = 6;    // leading eigenvalues wanted in iterative mode
  int krylov_dim = 120;
  int max_restarts = 5;
  double iterative_tol = 1e-8;
  // Predicted isolated eigenvalues (lambda_iso, lambda_plus). Eigenvalues
  // matched to a prediction within match_tol (relative) are set aside before
  // the band edge is read off; one match per prediction, nearest first.
  std::vector<double> predictions;
  double match_tol = 0.10;
  uint64_t seed = 1;
};

struct SpectrumSummary {
  double band_radius_formula = 0.0;
  double band_radius_empirical = 0.0;  // max magnitude after removing matched isolated ones
  std::vector<std::complex<double>> isolated;  // matched to predictions, in prediction order
  double leading_real = 0.0;                   // largest-magnitude (near-)real eigenvalue
  std::vector<std::complex<double>> eigenvalues;  // all (dense) or leading (iterative)
  bool converged = true;   // iterative mode only
  double residual = 0.0;   // iterative mode: residual of the leading Ritz pair
};

// Dense mode is guarded at 2L <= 10^4 (memory: the dense copy is (2L)^2 doubles).
SpectrumSummary empirical_spectrum(const LabeledGraph& g, const ModularPattern& pattern,
                                   const ModelParams& estimates, const SpectrumOptions& opts = {});

// Eigenvalues of a real dense column-major n x n matrix (LAPACK dgeev).
std::vector<std::complex<double>> dense_eigenvalues(std::vector<double> colmajor, int n);

}  // namespace sbmlab
