#pragma once

// Modular pattern W: a binary symmetric q x q indicator matrix marking the
// densely connected module pairs. Identity W is the plain community structure.
// Optionally one pattern per edge label (W^alpha).

#include <span>
#include <vector>

#include "sbmlab/smallmat.hpp"

namespace sbmlab {

struct ModularPattern {
  int q = 0;
  SquareMatrix w;                        // base pattern
  std::vector<SquareMatrix> per_label;   // empty unless labels use distinct patterns

  bool equal_row_sums = false;
  double row_sum = 0.0;      // a, meaningful when equal_row_sums
  double lambda2 = 0.0;      // second-leading eigenvalue of w by magnitude
  double omega_uniform = 0.0;  // 1^T W 1 / q^2

  const SquareMatrix& label_pattern(int alpha) const {
    return per_label.empty() ? w : per_label[static_cast<size_t>(alpha)];
  }
  bool has_per_label() const { return !per_label.empty(); }

  // gamma^T W^alpha gamma
  double omega(std::span<const double> gamma, int alpha = 0) const {
    return label_pattern(alpha).quad(gamma, gamma);
  }
};

// Validates (square, binary, symmetric) and computes the derived quantities.
ModularPattern make_pattern(const SquareMatrix& entries);

// Per-label variant: all matrices must share q and pass the same validation.
// The first matrix doubles as the base pattern.
ModularPattern make_pattern(const std::vector<SquareMatrix>& label_entries);

}  // namespace sbmlab
