#include <sqvi/projection.h>

#include "internal.h"

#include <cmath>

namespace sqvi {

FistaResult FistaSolve(const SmoothObjective& objective,
                       const SimpleSet& feasible, const Vec& y0,
                       std::int64_t t, double initial_distance) {
  if (t < 1) throw Error(ErrorCode::kInvalidParameters, "t must be >= 1");
  if (!(objective.lipschitz > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "L_f must be > 0");
  }
  RequireDim(y0, feasible.dim(), "y0");
  const double step = 1.0 / objective.lipschitz;

  Vec y = ProjectSimple(feasible, y0);
  Vec z = y;
  double theta = 1.0;
  for (std::int64_t k = 0; k < t; ++k) {
    const Vec y_next = ProjectSimple(feasible, z - step * objective.gradient(z));
    if (!y_next.allFinite()) {
      throw Error(ErrorCode::kNonfiniteValue,
                  "FISTA iterate overflowed at step " + std::to_string(k));
    }
    const double theta_next =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    z = y_next + ((theta - 1.0) / theta_next) * (y_next - y);
    y = y_next;
    theta = theta_next;
  }

  FistaResult r;
  r.point = std::move(y);
  r.iterations = t;
  const double tp1 = static_cast<double>(t) + 1.0;
  r.gap_bound = 2.0 * objective.lipschitz * initial_distance *
                initial_distance / (tp1 * tp1);
  r.distance_bound = objective.strong_convexity > 0.0
                         ? std::sqrt(2.0 * r.gap_bound /
                                     objective.strong_convexity)
                         : internal::kInf;
  return r;
}

}  // namespace sqvi
