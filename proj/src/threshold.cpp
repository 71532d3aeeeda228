#include "sbmlab/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sbmlab/errors.hpp"
#include "sbmlab/spectrum.hpp"

namespace sbmlab {

namespace {

ModelParams params_at(const ModularPattern& pattern, const std::vector<double>& c_labels,
                      const std::vector<double>& x) {
  std::vector<LabelParams> ls(c_labels.size());
  for (size_t a = 0; a < c_labels.size(); ++a) ls[a] = {c_labels[a], x[a]};
  return make_params_uniform(pattern.q, std::move(ls));
}

void require_assumptions(const ModularPattern& pattern, const char* what) {
  if (!pattern.equal_row_sums)
    throw ConfigError(std::string(what) + ": requires equal W row sums");
  if (pattern.has_per_label()) {
    for (const auto& m : pattern.per_label)
      if (m.data() != pattern.w.data())
        throw ConfigError(std::string(what) + ": requires a label-common W");
  }
}

}  // namespace

std::vector<double> transient_map(const std::vector<double>& x_hat, double omega,
                                  double xi_second) {
  if (!(omega > 0.0 && omega < 1.0)) throw ConfigError("transient_map: Omega must lie in (0,1)");
  std::vector<double> next(x_hat.size());
  for (size_t a = 0; a < x_hat.size(); ++a) {
    const double k = (x_hat[a] - omega) / (1.0 - omega);
    next[a] = x_hat[a] * (1.0 + k * (k - 1.0) * xi_second);
  }
  return next;
}

double band_condition(const ModularPattern& pattern, const std::vector<double>& c_labels,
                      const std::vector<double>& x_hat) {
  return pattern.lambda2 * band_radius_formula(pattern, params_at(pattern, c_labels, x_hat));
}

StallResult stall_point(const std::vector<double>& x_init, const ModularPattern& pattern,
                        const std::vector<double>& c_labels) {
  require_assumptions(pattern, "stall_point");
  if (x_init.size() != c_labels.size()) throw ConfigError("stall_point: size mismatch");

  StallResult out;
  out.x_star = x_init;
  if (band_condition(pattern, c_labels, x_init) <= 1.0) {
    out.started_inside = true;
    return out;
  }

  const double omega = pattern.omega_uniform;
  const double step = 1e-3;  // shared <xi^2> per step; only the path shape matters
  std::vector<double> x = x_init;
  for (long iter = 0; iter < 10'000'000; ++iter) {
    std::vector<double> nx = transient_map(x, omega, step);
    if (band_condition(pattern, c_labels, nx) <= 1.0) {
      // Bisect the substep size: x(s) = transient_map(x, s) is continuous in s.
      double lo = 0.0, hi = step;
      for (int b = 0; b < 200; ++b) {
        const double mid = 0.5 * (lo + hi);
        const double cond = band_condition(pattern, c_labels, transient_map(x, omega, mid));
        if (std::abs(cond - 1.0) < 1e-10) {
          lo = hi = mid;
          break;
        }
        (cond > 1.0 ? lo : hi) = mid;
      }
      out.x_star = transient_map(x, omega, 0.5 * (lo + hi));
      return out;
    }
    x = std::move(nx);
  }
  throw NumericError("stall_point: transient integration did not reach the band locus "
                     "(is some x_init pinned at a boundary fixed point?)");
}

std::vector<BoundaryPoint> nishimori_boundary(const ModularPattern& pattern,
                                              const std::vector<double>& c_labels,
                                              int resolution) {
  require_assumptions(pattern, "nishimori_boundary");
  const size_t p = c_labels.size();
  if (p > 2) throw ConfigError("nishimori_boundary: polylines emitted for p <= 2 only");
  if (resolution < 2) throw ConfigError("nishimori_boundary: resolution must be >= 2");

  const double omega = pattern.omega_uniform;
  double c = 0.0;
  for (double ca : c_labels) c += ca;
  const double radius = pattern.q * omega * (1.0 - omega) / (std::sqrt(c) * pattern.lambda2);

  std::vector<BoundaryPoint> pts;
  if (p == 1) {
    const double r = radius / std::sqrt(c_labels[0] / c);
    pts.push_back({omega - r, 0.0});
    pts.push_back({omega + r, 0.0});
    return pts;
  }
  const double p1 = c_labels[0] / c, p2 = c_labels[1] / c;
  pts.reserve(static_cast<size_t>(resolution) + 1);
  for (int i = 0; i <= resolution; ++i) {
    const double th = 2.0 * M_PI * i / resolution;
    pts.push_back({omega + radius * std::cos(th) / std::sqrt(p1),
                   omega + radius * std::sin(th) / std::sqrt(p2)});
  }
  return pts;
}

AdtBoundary adt_boundary(const ModularPattern& pattern, const std::vector<double>& c_labels,
                         const std::vector<double>& x_init, int resolution) {
  require_assumptions(pattern, "adt_boundary");
  const size_t p = c_labels.size();
  if (p > 2) throw ConfigError("adt_boundary: polylines emitted for p <= 2 only");
  if (resolution < 2) throw ConfigError("adt_boundary: resolution must be >= 2");

  AdtBoundary out;
  StallResult st = stall_point(x_init, pattern, c_labels);
  out.stall = st.x_star;
  if (st.started_inside) {
    out.dead_init = true;
    return out;
  }

  const double omega = pattern.omega_uniform;
  const int q = pattern.q;
  const double d = std::pow(q * omega * (1.0 - omega), 2) / pattern.lambda2;

  // sum_a c_a (x_a - Om) (x*_a - Om) = +-d
  std::vector<double> coeff(p);
  for (size_t a = 0; a < p; ++a) coeff[a] = c_labels[a] * (st.x_star[a] - omega);

  if (p == 1) {
    if (coeff[0] != 0.0) {
      out.plus.push_back({omega + d / coeff[0], 0.0});
      out.minus.push_back({omega - d / coeff[0], 0.0});
    }
    return out;
  }

  // Parametrize by the axis with the smaller coefficient magnitude so the
  // solved-for coordinate stays well conditioned.
  const bool solve_x2 = std::abs(coeff[1]) >= std::abs(coeff[0]);
  const double a_par = solve_x2 ? coeff[0] : coeff[1];
  const double a_sol = solve_x2 ? coeff[1] : coeff[0];
  if (a_sol == 0.0) throw NumericError("adt_boundary: degenerate stall point");
  for (int sign = 0; sign < 2; ++sign) {
    const double rhs = sign == 0 ? d : -d;
    auto& poly = sign == 0 ? out.plus : out.minus;
    for (int i = 0; i <= resolution; ++i) {
      const double t = static_cast<double>(i) / resolution;  // parametrized coordinate in [0,1]
      const double other = omega + (rhs - a_par * (t - omega)) / a_sol;
      BoundaryPoint bp;
      if (solve_x2) {
        bp.x1 = t;
        bp.x2 = other;
      } else {
        bp.x1 = other;
        bp.x2 = t;
      }
      poly.push_back(bp);
    }
  }
  return out;
}

PhaseRegion classify(const std::vector<double>& planted_x, const std::vector<double>& x_init,
                     const ModularPattern& pattern, const std::vector<double>& c_labels) {
  require_assumptions(pattern, "classify");
  if (planted_x.size() != c_labels.size() || x_init.size() != c_labels.size())
    throw ConfigError("classify: size mismatch");

  PhaseRegion out;
  out.band_margin_init = band_condition(pattern, c_labels, x_init) - 1.0;
  out.nishimori_margin = band_condition(pattern, c_labels, planted_x) - 1.0;

  StallResult st = stall_point(x_init, pattern, c_labels);
  out.stall = st.x_star;

  const ModelParams planted = params_at(pattern, c_labels, planted_x);
  const ModelParams at_stall = params_at(pattern, c_labels, st.x_star);
  const IsolatedEigenvalues iso = isolated_eigenvalue_formula(pattern, planted, at_stall);
  out.adt_margin = pattern.lambda2 * std::abs(iso.iso) - 1.0;

  if (st.started_inside)
    out.classification = out.adt_margin > 0.0 ? Phase::escape_to_detectable : Phase::dead_init;
  else
    out.classification = out.adt_margin > 0.0 ? Phase::detectable : Phase::undetectable_stall;
  return out;
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::detectable: return "detectable";
    case Phase::undetectable_stall: return "undetectable_stall";
    case Phase::dead_init: return "dead_init";
    case Phase::escape_to_detectable: return "escape_to_detectable";
  }
  return "?";
}

InfeasibilityWindow infeasibility_window(const ModularPattern& pattern, double c1,
                                         const std::vector<double>& planted_x) {
  if (pattern.q != 2) throw ConfigError("infeasibility_window: q=2 identity pattern required");
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      if (pattern.w(r, c) != (r == c ? 1.0 : 0.0))
        throw ConfigError("infeasibility_window: q=2 identity pattern required");
  if (planted_x.size() != 2) throw ConfigError("infeasibility_window: need planted (x1, x2)");
  if (c1 <= 0.0) throw ConfigError("infeasibility_window: c1 must be positive");

  InfeasibilityWindow out;
  out.alpha1_threshold = 1.0 / (2.0 * std::sqrt(c1));
  out.alpha1_detectable = std::abs(planted_x[0] - 0.5) > out.alpha1_threshold;

  // Undetectable where f(c2) = A + b c2 - sqrt(c1 + c2)/2 < 0,
  // A = c1|x1 - 1/2|, b = |x2 - 1/2|. f is convex, so the set is one interval.
  const double a = c1 * std::abs(planted_x[0] - 0.5);
  const double b = std::abs(planted_x[1] - 0.5);
  auto f = [&](double c2) { return a + b * c2 - 0.5 * std::sqrt(c1 + c2); };
  auto is_root = [&](double c2) {
    return c2 >= 0.0 && std::abs(f(c2)) < 1e-7 * std::max(1.0, a + b * c2);
  };

  std::vector<double> roots;
  if (b == 0.0) {
    const double c2 = 4.0 * a * a - c1;
    if (is_root(c2)) roots.push_back(c2);
  } else {
    // b^2 c2^2 + (2ab - 1/4) c2 + (a^2 - c1/4) = 0 (squared form; roots
    // re-checked against f to drop the spurious branch)
    const double qa = b * b;
    const double qb = 2.0 * a * b - 0.25;
    const double qc = a * a - c1 / 4.0;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double c2 : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)})
        if (is_root(c2)) roots.push_back(c2);
    }
  }
  std::sort(roots.begin(), roots.end());
  out.roots = roots;

  const double inf = std::numeric_limits<double>::infinity();
  const bool neg_at_zero = f(0.0) < 0.0;
  const bool neg_at_infinity = (b == 0.0);  // sqrt always wins eventually when b = 0
  if (roots.size() == 2)
    out.c2_window = std::make_pair(roots[0], roots[1]);
  else if (roots.size() == 1)
    out.c2_window = neg_at_zero ? std::make_pair(0.0, roots[0])
                                : std::make_pair(roots[0], neg_at_infinity ? inf : roots[0]);
  else if (neg_at_zero)
    out.c2_window = std::make_pair(0.0, inf);
  return out;
}

}  // namespace sbmlab
