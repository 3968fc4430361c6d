#include <sqvi/projection.h>

#include "internal.h"

#include <algorithm>
#include <cmath>

namespace sqvi {

namespace internal {

ConvexConstraints AsConstraints(const SimpleSet& halfspaces) {
  const auto* h = std::get_if<set_kind::Halfspaces>(&halfspaces.kind());
  if (h == nullptr) {
    throw Error(ErrorCode::kUnsupportedSet,
                "only halfspace sets convert to constraints");
  }
  ConvexConstraints c;
  c.count = static_cast<int>(h->a.rows());
  const Mat a = h->a;
  const Vec b = h->b;
  c.value = [a, b](const Vec& y) -> Vec { return a * y - b; };
  c.jacobian = [a](const Vec&) -> Mat { return a; };
  c.jacobian_bound =
      a.rows() == 0 ? 0.0 : Eigen::JacobiSVD<Mat>(a).singularValues()(0);
  c.curvature_bound = 0.0;
  return c;
}

ConvexConstraints AsConstraints(const map_kind::NonlinearConvex& nc,
                                const Vec& x) {
  ConvexConstraints c;
  c.count = nc.num_constraints;
  auto g = nc.g;
  auto jac = nc.jacobian;
  c.value = [g, x](const Vec& y) -> Vec { return g(x, y); };
  c.jacobian = [jac, x](const Vec& y) -> Mat { return jac(x, y); };
  c.jacobian_bound = nc.jacobian_bound;
  c.curvature_bound = nc.curvature_bound;
  return c;
}

}  // namespace internal

Vec FindStrictlyFeasible(const ConvexConstraints& constraints,
                         const SimpleSet& ambient, const Vec& start) {
  Vec y = ProjectSimple(ambient, start);
  if (constraints.count == 0) return y;
  auto worst = [&](const Vec& p, Eigen::Index* arg) {
    const Vec g = constraints.value(p);
    return g.maxCoeff(arg);
  };
  Eigen::Index arg = 0;
  double best_val = worst(y, &arg);
  Vec best = y;
  const double radius = ambient.EnclosingRadius();
  const double h0 =
      0.5 * (std::isfinite(radius) ? radius : 1.0 + start.norm());
  // Stop at a usable margin; deeper slack only moves the witness away.
  const double margin = 1e-3 * std::max(1.0, std::abs(best_val));
  for (int k = 0; k < 4000; ++k) {
    const double val = worst(y, &arg);
    if (val < best_val) {
      best_val = val;
      best = y;
    }
    if (best_val <= -margin) break;
    const Vec s = constraints.jacobian(y).row(arg).transpose();
    const double sn = s.norm();
    if (sn == 0.0) break;
    y = ProjectSimple(ambient, y - (h0 / std::sqrt(k + 1.0) / sn) * s);
  }
  if (!(best_val < 0.0)) {
    throw Error(ErrorCode::kInfeasibleSubproblem,
                "no strictly feasible point found (best max g = " +
                    std::to_string(best_val) + ")");
  }
  return best;
}

PrimalDualResult ApdSolve(const Vec& u, const ConvexConstraints& constraints,
                          const SimpleSet& ambient, const Vec& witness,
                          std::int64_t t) {
  if (t < 1) throw Error(ErrorCode::kInvalidParameters, "t must be >= 1");
  RequireDim(u, ambient.dim(), "u");
  RequireDim(witness, ambient.dim(), "witness");
  const int m = constraints.count;

  PrimalDualResult r;
  r.iterations = t;
  Vec y = ProjectSimple(ambient, u);
  if (m == 0) {
    r.point = y;
    r.multipliers = Vec(0);
    return r;
  }

  const Vec gw = constraints.value(witness);
  const double slack = -gw.maxCoeff();
  if (!(slack > 0.0)) {
    throw Error(ErrorCode::kInfeasibleSubproblem,
                "witness is not strictly feasible");
  }
  // Slater bound on the optimal multipliers: sum(lambda*) <= f(w) / slack.
  const double dist = (u - witness).norm();
  const double lambda_bound = 0.5 * dist * dist / slack;
  const double lyx = std::max(constraints.jacobian_bound, 1e-12);
  const double lxx = lambda_bound * constraints.curvature_bound;
  double tau = 1.0 / (lxx + lyx);
  double sigma = 1.0 / lyx;
  const double tau0 = tau;

  Vec lambda = Vec::Zero(m);
  Vec g_prev = constraints.value(y);
  Vec g_cur = g_prev;
  double theta = 1.0;
  for (std::int64_t k = 0; k < t; ++k) {
    const Vec s = (1.0 + theta) * g_cur - theta * g_prev;
    lambda = (lambda + sigma * s).cwiseMax(0.0);
    const Mat jac = constraints.jacobian(y);
    const Vec target =
        (u + y / tau - jac.transpose() * lambda) / (1.0 + 1.0 / tau);
    y = ProjectSimple(ambient, target);
    if (!y.allFinite() || !lambda.allFinite()) {
      throw Error(ErrorCode::kNonfiniteValue,
                  "primal-dual iterate overflowed at step " +
                      std::to_string(k));
    }
    g_prev = g_cur;
    g_cur = constraints.value(y);
    theta = 1.0 / std::sqrt(1.0 + tau);
    tau *= theta;
    sigma /= theta;
  }

  r.point = std::move(y);
  r.multipliers = std::move(lambda);
  r.constant =
      8.0 * (dist * dist / (tau0 * tau0) + lyx * lyx * lambda_bound *
                                                lambda_bound);
  const double td = static_cast<double>(t);
  r.suboptimality_bound = r.constant / (td * td);
  r.infeasibility_bound = r.constant / (td * td);
  r.distance_bound = std::sqrt(r.constant) / td;
  r.violation = std::max(0.0, g_cur.maxCoeff());
  return r;
}

}  // namespace sqvi
