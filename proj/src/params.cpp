#include "sbmlab/params.hpp"

#include <cmath>
#include <string>

#include "sbmlab/errors.hpp"

namespace sbmlab {

bool ModelParams::gamma_uniform(double tol) const {
  const double u = 1.0 / q();
  for (double g : gamma)
    if (std::abs(g - u) > tol) return false;
  return true;
}

ModelParams make_params(std::vector<double> gamma, std::vector<LabelParams> labels) {
  if (gamma.size() < 2) throw ConfigError("params: need q >= 2 module sizes");
  double sum = 0;
  for (double g : gamma) {
    if (g < 0) throw ConfigError("params: gamma entries must be nonnegative");
    sum += g;
  }
  if (std::abs(sum - 1.0) > 1e-10) throw ConfigError("params: gamma must sum to 1");
  if (labels.empty()) throw ConfigError("params: need at least one edge label");
  for (size_t a = 0; a < labels.size(); ++a) {
    if (labels[a].degree <= 0)
      throw ConfigError("params: c_" + std::to_string(a + 1) + " must be positive");
    if (labels[a].strength < 0 || labels[a].strength > 1)
      throw ConfigError("params: x_" + std::to_string(a + 1) + " must lie in [0,1]");
  }
  ModelParams p;
  p.gamma = std::move(gamma);
  p.labels = std::move(labels);
  return p;
}

ModelParams make_params_uniform(int q, std::vector<LabelParams> labels) {
  return make_params(std::vector<double>(q, 1.0 / q), std::move(labels));
}

double x_to_delta_c(double x, double c_label, double omega) {
  if (!(omega > 0.0 && omega < 1.0))
    throw ConfigError("x_to_delta_c: Omega must lie in (0,1), got " + std::to_string(omega));
  return c_label * (x / omega - 1.0) / (1.0 - omega);
}

double delta_c_to_x(double delta_c, double c_label, double omega) {
  if (!(omega > 0.0 && omega < 1.0))
    throw ConfigError("delta_c_to_x: Omega must lie in (0,1), got " + std::to_string(omega));
  return omega * (1.0 + (1.0 - omega) * delta_c / c_label);
}

double delta_c_of(const ModularPattern& pattern, const ModelParams& params, int alpha) {
  const double om = pattern.omega(params.gamma, alpha);
  return x_to_delta_c(params.labels[static_cast<size_t>(alpha)].strength,
                      params.labels[static_cast<size_t>(alpha)].degree, om);
}

std::vector<SquareMatrix> build_affinity(const ModularPattern& pattern, const ModelParams& params) {
  if (pattern.q != params.q()) throw ConfigError("build_affinity: pattern q != params q");
  if (pattern.has_per_label() &&
      pattern.per_label.size() != static_cast<size_t>(params.p()))
    throw ConfigError("build_affinity: per-label pattern count != p");

  std::vector<SquareMatrix> out;
  out.reserve(params.labels.size());
  for (int a = 0; a < params.p(); ++a) {
    const SquareMatrix& w = pattern.label_pattern(a);
    const double c_alpha = params.labels[static_cast<size_t>(a)].degree;
    const double om = pattern.omega(params.gamma, a);
    const double dc = x_to_delta_c(params.labels[static_cast<size_t>(a)].strength, c_alpha, om);
    const double c_out = c_alpha - dc * om;  // gamma^T c^a gamma = c_alpha

    SquareMatrix m(pattern.q);
    for (int r = 0; r < pattern.q; ++r)
      for (int c = 0; c < pattern.q; ++c) {
        const double v = dc * w(r, c) + c_out;
        if (v < -1e-12)
          throw ConfigError("build_affinity: negative affinity entry c^" + std::to_string(a + 1) +
                            "[" + std::to_string(r + 1) + "," + std::to_string(c + 1) +
                            "] = " + std::to_string(v));
        m(r, c) = std::max(v, 0.0);
      }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace sbmlab
