#ifndef SQVI_PROJECTION_H_
#define SQVI_PROJECTION_H_

#include <sqvi/constraint_map.h>
#include <sqvi/simple_set.h>
#include <sqvi/types.h>

#include <functional>
#include <string>
#include <vector>

namespace sqvi {

enum class InnerMethod { kAuto, kClosedForm, kFista, kPrimalDual };

std::string InnerMethodName(InnerMethod m);
InnerMethod ParseInnerMethod(const std::string& name);

// Approximate P_{K(x)}[u] with a distance certificate:
//   ||point - P_{K(x)}[u]|| <= error_bound <= sqrt(inner_constant) / t.
// Closed-form paths report error_bound = 0 and one inner iteration.
struct ProjectionResult {
  Vec point;
  double error_bound = 0.0;
  std::int64_t inner_iterations = 0;
  double feasibility_violation = 0.0;
  double inner_constant = 0.0;  // C of ||u - u~||^2 <= C / t^2
  bool exact = false;
};

ProjectionResult InexactProject(const SetValuedMap& map, const Vec& x,
                                const Vec& u, std::int64_t t,
                                InnerMethod method = InnerMethod::kAuto);

// High-accuracy projection used by metrics and audits: closed form where
// available, the map's exact projector when `allow_exact_solver`, otherwise
// the inner method run for `budget` iterations.
Vec ReferenceProject(const SetValuedMap& map, const Vec& x, const Vec& u,
                     std::int64_t budget = 100000,
                     bool allow_exact_solver = true);

// ---------------------------------------------------------------------------
// FISTA

struct SmoothObjective {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double lipschitz = 1.0;         // L_f
  double strong_convexity = 0.0;  // mu >= 0
};

struct FistaResult {
  Vec point;
  double gap_bound = 0.0;       // 2 L_f ||y0 - y*||^2 / (t + 1)^2
  double distance_bound = 0.0;  // sqrt(2 gap / mu), inf when mu = 0
  std::int64_t iterations = 0;
};

// Beck-Teboulle accelerated projected gradient on `objective` over
// `feasible` (closed-form projection required). `initial_distance` bounds
// ||y0 - y*|| and feeds the certificates.
FistaResult FistaSolve(const SmoothObjective& objective,
                       const SimpleSet& feasible, const Vec& y0,
                       std::int64_t t, double initial_distance);

// ---------------------------------------------------------------------------
// Accelerated primal-dual for  min_{y in X} 1/2||y - u||^2  s.t. g(y) <= 0.

struct ConvexConstraints {
  int count = 0;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  double jacobian_bound = 0.0;
  double curvature_bound = 0.0;
};

struct PrimalDualResult {
  Vec point;
  Vec multipliers;
  double constant = 0.0;             // C_pd
  double suboptimality_bound = 0.0;  // C_pd / t^2
  double infeasibility_bound = 0.0;  // C_pd / t^2
  double distance_bound = 0.0;       // sqrt(C_pd) / t
  double violation = 0.0;            // measured max(0, g(point))
  std::int64_t iterations = 0;
};

// `witness` must be strictly feasible (g(witness) < 0, witness in X); it
// bounds both the primal distance and, via Slater, the multipliers.
PrimalDualResult ApdSolve(const Vec& u, const ConvexConstraints& constraints,
                          const SimpleSet& ambient, const Vec& witness,
                          std::int64_t t);

// Phase-one search for a strictly feasible point: projected subgradient on
// max_i g_i over X. Throws InfeasibleSubproblem when none is found.
Vec FindStrictlyFeasible(const ConvexConstraints& constraints,
                         const SimpleSet& ambient, const Vec& start);

// ---------------------------------------------------------------------------

struct RateAudit {
  std::vector<std::int64_t> grid;
  std::vector<double> errors;
  double slope = 0.0;
  bool exact = false;
  bool pass = false;
};

// Fits log ||P_t - P_ref|| against log t; passes when slope <= -0.95.
// The reference is the same inner method run for `reference_budget` steps
// (or the closed form).
RateAudit ProjectionRateAudit(const SetValuedMap& map, const Vec& x,
                              const Vec& u,
                              const std::vector<std::int64_t>& grid,
                              std::int64_t reference_budget = 100000);

}  // namespace sqvi

#endif  // SQVI_PROJECTION_H_
