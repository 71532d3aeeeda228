#include "sbmlab/pattern.hpp"

#include <cmath>
#include <string>

#include "sbmlab/errors.hpp"

namespace sbmlab {

namespace {

void validate_entries(const SquareMatrix& m) {
  if (m.n() < 2) throw ConfigError("pattern: need q >= 2, got q=" + std::to_string(m.n()));
  for (int r = 0; r < m.n(); ++r)
    for (int c = 0; c < m.n(); ++c) {
      const double v = m(r, c);
      if (v != 0.0 && v != 1.0)
        throw ConfigError("pattern: entries must be 0 or 1 (found " + std::to_string(v) + " at " +
                          std::to_string(r) + "," + std::to_string(c) + ")");
    }
  if (!m.symmetric()) throw ConfigError("pattern: matrix must be symmetric");
}

// Second-leading eigenvalue by magnitude. With equal row sums the uniform
// vector is an exact eigenvector (eigenvalue a); exclude that one and take the
// largest magnitude among the rest. Otherwise just drop the single largest.
double second_leading(const SquareMatrix& w, bool equal_rows) {
  const int n = w.n();
  SymmetricEigen eig = symmetric_eigen(w);
  int drop = 0;
  if (equal_rows) {
    double best = -1;
    for (int k = 0; k < n; ++k) {
      double dot = 0;
      for (int r = 0; r < n; ++r) dot += eig.vectors[k][r];
      dot = std::abs(dot) / std::sqrt(static_cast<double>(n));
      if (dot > best) {
        best = dot;
        drop = k;
      }
    }
  } else {
    double best = -1;
    for (int k = 0; k < n; ++k)
      if (std::abs(eig.values[k]) > best) {
        best = std::abs(eig.values[k]);
        drop = k;
      }
  }
  double l2 = 0;
  for (int k = 0; k < n; ++k)
    if (k != drop) l2 = std::max(l2, std::abs(eig.values[k]));
  return l2;
}

}  // namespace

ModularPattern make_pattern(const SquareMatrix& entries) {
  validate_entries(entries);
  ModularPattern p;
  p.q = entries.n();
  p.w = entries;

  p.equal_row_sums = true;
  p.row_sum = entries.row_sum(0);
  for (int r = 1; r < p.q; ++r)
    if (entries.row_sum(r) != p.row_sum) p.equal_row_sums = false;
  if (!p.equal_row_sums) p.row_sum = 0.0;

  p.lambda2 = second_leading(entries, p.equal_row_sums);

  double total = 0;
  for (int r = 0; r < p.q; ++r) total += entries.row_sum(r);
  p.omega_uniform = total / (static_cast<double>(p.q) * p.q);
  if (p.omega_uniform <= 0.0 || p.omega_uniform >= 1.0)
    throw ConfigError("pattern: uniform Omega must lie in (0,1); all-zero or all-one W is not a modular pattern");
  return p;
}

ModularPattern make_pattern(const std::vector<SquareMatrix>& label_entries) {
  if (label_entries.empty()) throw ConfigError("pattern: empty per-label list");
  ModularPattern p = make_pattern(label_entries[0]);
  for (const auto& m : label_entries) {
    validate_entries(m);
    if (m.n() != p.q) throw ConfigError("pattern: per-label matrices must share q");
    double total = 0;
    for (int r = 0; r < m.n(); ++r) total += m.row_sum(r);
    const double om = total / (static_cast<double>(m.n()) * m.n());
    if (om <= 0.0 || om >= 1.0) throw ConfigError("pattern: per-label Omega must lie in (0,1)");
  }
  p.per_label = label_entries;
  return p;
}

}  // namespace sbmlab
