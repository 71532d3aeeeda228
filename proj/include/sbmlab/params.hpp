#pragma once

// Model parameters of the labeled SBM: module sizes gamma and, per edge label,
// the mean degree c_alpha plus the normalized structure strength x_alpha in
// [0,1]. x = Omega is the uniform random graph; x > Omega assortative,
// x < Omega disassortative. Delta c_alpha is the derived affinity contrast.

#include <vector>

#include "sbmlab/pattern.hpp"
#include "sbmlab/smallmat.hpp"

namespace sbmlab {

struct LabelParams {
  double degree = 0.0;    // c_alpha
  double strength = 0.0;  // x_alpha
};

struct ModelParams {
  std::vector<double> gamma;       // length q, sums to 1
  std::vector<LabelParams> labels;  // length p

  int q() const { return static_cast<int>(gamma.size()); }
  int p() const { return static_cast<int>(labels.size()); }

  double total_degree() const {  // c
    double s = 0;
    for (const auto& l : labels) s += l.degree;
    return s;
  }
  double edge_fraction(int alpha) const {  // P_alpha
    return labels[static_cast<size_t>(alpha)].degree / total_degree();
  }
  bool gamma_uniform(double tol = 1e-12) const;
};

ModelParams make_params(std::vector<double> gamma, std::vector<LabelParams> labels);

// Uniform gamma convenience constructor.
ModelParams make_params_uniform(int q, std::vector<LabelParams> labels);

// Linear map between the strength x and the affinity contrast Delta c:
//   Delta c = c_label (x/Omega - 1) / (1 - Omega),  x in [0,1], Omega in (0,1).
double x_to_delta_c(double x, double c_label, double omega);
double delta_c_to_x(double delta_c, double c_label, double omega);

// Per-label affinity matrices c^alpha = Delta c_alpha W^alpha + c^alpha_out 11^T
// with gamma^T c^alpha gamma = c_alpha and all entries >= 0.
std::vector<SquareMatrix> build_affinity(const ModularPattern& pattern, const ModelParams& params);

// Delta c_alpha under the params' own gamma (through Omega_alpha).
double delta_c_of(const ModularPattern& pattern, const ModelParams& params, int alpha);

}  // namespace sbmlab
