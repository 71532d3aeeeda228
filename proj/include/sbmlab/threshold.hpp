#pragma once

// Analytic machinery around the algorithmic detectability threshold: the
// universal transient map of the x-updates, the stall point on the
// |lambda2(W) lambda_b| = 1 locus, the Nishimori and ADT boundaries, region
// classification, and the infeasibility window in c_2.

#include <optional>
#include <vector>

#include "sbmlab/params.hpp"
#include "sbmlab/pattern.hpp"

namespace sbmlab {

// Second-order expansion of the edge-averaged x-update at <xi> = 0:
//   x' = x * [1 + k(k-1) <xi^2>],  k = (x - Omega)/(1 - Omega).
std::vector<double> transient_map(const std::vector<double>& x_hat, double omega, double xi_second);

// Helper: |lambda2(W) * lambda_b| at the given strengths (uniform gamma).
double band_condition(const ModularPattern& pattern, const std::vector<double>& c_labels,
                      const std::vector<double>& x_hat);

struct StallResult {
  std::vector<double> x_star;
  bool started_inside = false;  // init already had |lambda2 lambda_b| <= 1
};

// Integrates the transient map (shared <xi^2> acts as the clock, so only the
// path shape matters) until |lambda2(W) lambda_b| = 1, refined by bisection
// along the path to 1e-10 in the condition.
StallResult stall_point(const std::vector<double>& x_init, const ModularPattern& pattern,
                        const std::vector<double>& c_labels);

struct BoundaryPoint {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Locus of |lambda2(W) lambda_b(x)| = 1 with estimates equal to planted values
// (an ellipse for p=2; a pair of points for p=1).
std::vector<BoundaryPoint> nishimori_boundary(const ModularPattern& pattern,
                                              const std::vector<double>& c_labels, int resolution);

struct AdtBoundary {
  bool dead_init = false;           // init inside the band locus: no boundary
  std::vector<double> stall;        // x* used for the planes
  std::vector<BoundaryPoint> plus;  // sum_a c_a (x_a - Om)(x*_a - Om) = +D
  std::vector<BoundaryPoint> minus;  // ... = -D
};

// Hyperplane pair |lambda2(W) lambda_iso(x, x*)| = 1 with x* the stall point
// of x_init; tangent to the Nishimori boundary. Polylines emitted for p <= 2.
AdtBoundary adt_boundary(const ModularPattern& pattern, const std::vector<double>& c_labels,
                         const std::vector<double>& x_init, int resolution);

enum class Phase { detectable, undetectable_stall, dead_init, escape_to_detectable };

struct PhaseRegion {
  Phase classification = Phase::dead_init;
  std::vector<double> stall;       // x* (equals init when the init starts inside the locus)
  double band_margin_init = 0.0;   // |lambda2 lambda_b(x_init)| - 1
  double nishimori_margin = 0.0;   // |lambda2 lambda_b(x_planted)| - 1
  double adt_margin = 0.0;         // |lambda2 lambda_iso(x_planted, x*)| - 1
};

PhaseRegion classify(const std::vector<double>& planted_x, const std::vector<double>& x_init,
                     const ModularPattern& pattern, const std::vector<double>& c_labels);

const char* phase_name(Phase p);

struct InfeasibilityWindow {
  std::optional<std::pair<double, double>> c2_window;  // undetectable for c2 in (lo, hi)
  std::vector<double> roots;       // solutions of sum_a c_a|x_a-1/2| = sqrt(c)/2 in c2
  bool alpha1_detectable = false;  // is the alpha=1 graph alone detectable?
  double alpha1_threshold = 0.0;   // 1 / (2 sqrt(c1))
};

// q=2 identity-W, symmetric corner-init convention. Solves
// sum_a c_a |x_a - 1/2| = sqrt(c)/2 for c2 (quadratic after squaring).
InfeasibilityWindow infeasibility_window(const ModularPattern& pattern, double c1,
                                         const std::vector<double>& planted_x);

}  // namespace sbmlab
