#pragma once

// Small dense square matrices (q x q, q <= 8 in practice) and a Jacobi
// eigensolver for the symmetric ones. Row-major, value semantics.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sbmlab {

class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(int n, double fill = 0.0) : n_(n), a_(static_cast<size_t>(n) * n, fill) {}
  SquareMatrix(int n, std::vector<double> vals) : n_(n), a_(std::move(vals)) {
    assert(a_.size() == static_cast<size_t>(n_) * n_);
  }

  int n() const { return n_; }
  double& operator()(int r, int c) { return a_[static_cast<size_t>(r) * n_ + c]; }
  double operator()(int r, int c) const { return a_[static_cast<size_t>(r) * n_ + c]; }
  const std::vector<double>& data() const { return a_; }

  bool symmetric(double tol = 0.0) const {
    for (int r = 0; r < n_; ++r)
      for (int c = r + 1; c < n_; ++c)
        if (std::abs((*this)(r, c) - (*this)(c, r)) > tol) return false;
    return true;
  }

  double row_sum(int r) const {
    double s = 0;
    for (int c = 0; c < n_; ++c) s += (*this)(r, c);
    return s;
  }

  double mean() const {
    double s = 0;
    for (double v : a_) s += v;
    return s / static_cast<double>(a_.size());
  }

  // sum_{r,c} |a_{rc} - mean|
  double total_variation_from_mean() const {
    double m = mean(), s = 0;
    for (double v : a_) s += std::abs(v - m);
    return s;
  }

  // x^T A y
  double quad(std::span<const double> x, std::span<const double> y) const {
    double s = 0;
    for (int r = 0; r < n_; ++r) {
      double row = 0;
      for (int c = 0; c < n_; ++c) row += (*this)(r, c) * y[c];
      s += x[r] * row;
    }
    return s;
  }

 private:
  int n_ = 0;
  std::vector<double> a_;
};

struct SymmetricEigen {
  std::vector<double> values;        // unordered (Jacobi output order)
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

// Cyclic Jacobi; fine for the q x q matrices used here.
SymmetricEigen symmetric_eigen(const SquareMatrix& m);

}  // namespace sbmlab
