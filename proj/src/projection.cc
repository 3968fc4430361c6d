#include <sqvi/projection.h>

#include "internal.h"

#include <algorithm>
#include <cmath>

namespace sqvi {

namespace {

ProjectionResult Exact(Vec point) {
  ProjectionResult r;
  r.point = std::move(point);
  r.inner_iterations = 1;
  r.exact = true;
  return r;
}

void RequireMethod(InnerMethod method, InnerMethod wanted,
                   const std::string& kind) {
  if (method != InnerMethod::kAuto && method != wanted) {
    throw Error(ErrorCode::kInvalidParameters,
                "inner method '" + InnerMethodName(method) +
                    "' cannot handle a " + kind + " map");
  }
}

ProjectionResult FromPrimalDual(const PrimalDualResult& pd) {
  ProjectionResult r;
  r.point = pd.point;
  r.error_bound = pd.distance_bound;
  r.inner_iterations = pd.iterations;
  r.feasibility_violation = pd.violation;
  r.inner_constant = pd.constant;
  return r;
}

ProjectionResult ProjectArgmin(const map_kind::ArgminSet& a, const Vec& x,
                               const Vec& u, std::int64_t t) {
  SmoothObjective obj;
  const double inv_sigma = 1.0 / a.sigma;
  obj.value = [&](const Vec& y) {
    return 0.5 * (y - u).squaredNorm() + inv_sigma * a.value(x, y);
  };
  std::function<Vec(const Vec&)> grad_h =
      a.gradient_at ? a.gradient_at(x)
                    : [&](const Vec& y) -> Vec { return a.gradient(x, y); };
  obj.gradient = [&](const Vec& y) -> Vec {
    return (y - u) + inv_sigma * grad_h(y);
  };
  obj.lipschitz = 1.0 + a.curvature * inv_sigma;
  obj.strong_convexity = 1.0;

  const Vec y0 = ProjectSimple(a.feasible, u);
  // ||y0 - y*|| <= 2 ||G(y0)|| / mu with G the gradient mapping at y0.
  const Vec grad_map =
      obj.lipschitz *
      (y0 - ProjectSimple(a.feasible, y0 - obj.gradient(y0) / obj.lipschitz));
  double d0 = 2.0 * grad_map.norm();
  d0 = std::min(d0, 2.0 * a.feasible.EnclosingRadius());

  const FistaResult f = FistaSolve(obj, a.feasible, y0, t, d0);
  ProjectionResult r;
  r.point = f.point;
  r.error_bound = f.distance_bound;
  r.inner_iterations = t;
  r.feasibility_violation = a.feasible.Violation(f.point);
  r.inner_constant = 4.0 * obj.lipschitz * d0 * d0;
  return r;
}

}  // namespace

std::string InnerMethodName(InnerMethod m) {
  switch (m) {
    case InnerMethod::kAuto: return "auto";
    case InnerMethod::kClosedForm: return "closed_form";
    case InnerMethod::kFista: return "fista";
    case InnerMethod::kPrimalDual: return "primal_dual";
  }
  return "auto";
}

InnerMethod ParseInnerMethod(const std::string& name) {
  if (name == "auto") return InnerMethod::kAuto;
  if (name == "closed_form") return InnerMethod::kClosedForm;
  if (name == "fista") return InnerMethod::kFista;
  if (name == "primal_dual" || name == "apd") return InnerMethod::kPrimalDual;
  throw Error(ErrorCode::kConfigError, "unknown inner method '" + name + "'");
}

ProjectionResult InexactProject(const SetValuedMap& map, const Vec& x,
                                const Vec& u, std::int64_t t,
                                InnerMethod method) {
  if (t < 1) throw Error(ErrorCode::kInvalidParameters, "t must be >= 1");
  RequireDim(x, map.dim, "x");
  RequireDim(u, map.dim, "u");
  return std::visit(
      internal::Overloaded{
          [&](const map_kind::FixedSet& f) -> ProjectionResult {
            if (f.set.has_closed_form()) {
              RequireMethod(method, InnerMethod::kClosedForm, "fixed");
              return Exact(ProjectSimple(f.set, u));
            }
            RequireMethod(method, InnerMethod::kPrimalDual, "fixed");
            const ConvexConstraints c = internal::AsConstraints(f.set);
            const SimpleSet whole = SimpleSet::WholeSpace(map.dim);
            const Vec w = FindStrictlyFeasible(c, whole, f.set.Center());
            return FromPrimalDual(ApdSolve(u, c, whole, w, t));
          },
          [&](const map_kind::TranslatedSet&) -> ProjectionResult {
            RequireMethod(method, InnerMethod::kClosedForm, "translated");
            return Exact(TranslatedProjection(map, x, u));
          },
          [&](const map_kind::NonlinearConvex& nc) -> ProjectionResult {
            RequireMethod(method, InnerMethod::kPrimalDual, "nonlinear");
            const ConvexConstraints c = internal::AsConstraints(nc, x);
            const Vec w = nc.witness
                              ? nc.witness(x)
                              : FindStrictlyFeasible(
                                    c, nc.ambient,
                                    ProjectSimple(nc.ambient,
                                                  nc.ambient.Center()));
            ProjectionResult r = FromPrimalDual(ApdSolve(u, c, nc.ambient, w, t));
            // Snap onto the ambient set; the iterate already lies there up
            // to rounding.
            r.point = ProjectSimple(nc.ambient, r.point);
            return r;
          },
          [&](const map_kind::ArgminSet& a) -> ProjectionResult {
            RequireMethod(method, InnerMethod::kFista, "argmin");
            return ProjectArgmin(a, x, u, t);
          }},
      map.variant);
}

Vec ReferenceProject(const SetValuedMap& map, const Vec& x, const Vec& u,
                     std::int64_t budget, bool allow_exact_solver) {
  if (const auto* a = std::get_if<map_kind::ArgminSet>(&map.variant)) {
    if (allow_exact_solver && a->exact_projector) {
      return a->exact_projector(x, u);
    }
  }
  return InexactProject(map, x, u, budget).point;
}

RateAudit ProjectionRateAudit(const SetValuedMap& map, const Vec& x,
                              const Vec& u,
                              const std::vector<std::int64_t>& grid,
                              std::int64_t reference_budget) {
  RateAudit audit;
  audit.grid = grid;
  const ProjectionResult probe = InexactProject(map, x, u, 1);
  if (probe.exact) {
    audit.errors.assign(grid.size(), 0.0);
    audit.exact = true;
    audit.pass = true;
    return audit;
  }
  const Vec ref = ReferenceProject(map, x, u, reference_budget, false);
  constexpr double kFloor = 1e-15;
  std::vector<double> lx, ly;
  for (std::int64_t t : grid) {
    const double err = (InexactProject(map, x, u, t).point - ref).norm();
    audit.errors.push_back(err);
    if (err > 1e-14) {
      lx.push_back(std::log(static_cast<double>(t)));
      ly.push_back(std::log(std::max(err, kFloor)));
    }
  }
  if (lx.empty()) {
    audit.exact = true;
    audit.pass = true;
    return audit;
  }
  if (lx.size() < 2) {
    // Converged to the floor after the first grid point: faster than 1/t.
    audit.slope = -internal::kInf;
    audit.pass = true;
    return audit;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  audit.slope = sxy / sxx;
  audit.pass = audit.slope <= -0.95;
  return audit;
}

}  // namespace sqvi
