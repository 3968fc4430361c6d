#include <sqvi/constraint_map.h>
#include <sqvi/projection.h>

#include "internal.h"

#include <algorithm>
#include <cmath>

namespace sqvi {

std::string SetValuedMap::kind_name() const {
  return std::visit(
      internal::Overloaded{
          [](const map_kind::FixedSet&) { return std::string("fixed"); },
          [](const map_kind::TranslatedSet&) {
            return std::string("translated");
          },
          [](const map_kind::NonlinearConvex&) {
            return std::string("nonlinear");
          },
          [](const map_kind::ArgminSet&) { return std::string("argmin"); }},
      variant);
}

SetValuedMap MakeFixedSetMap(SimpleSet set) {
  const int n = set.dim();
  return SetValuedMap{map_kind::FixedSet{std::move(set)}, 0.0, n};
}

SetValuedMap MakeTranslatedSetMap(SimpleSet base, PointMap shift,
                                  double shift_lipschitz) {
  if (!(shift_lipschitz >= 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "shift Lipschitz must be >= 0");
  }
  const int n = base.dim();
  return SetValuedMap{
      map_kind::TranslatedSet{std::move(base), std::move(shift),
                              shift_lipschitz},
      2.0 * shift_lipschitz, n};
}

SetValuedMap MakeNonlinearConvexMap(map_kind::NonlinearConvex spec,
                                    double gamma) {
  if (!spec.g || !spec.jacobian) {
    throw Error(ErrorCode::kInvalidParameters,
                "nonlinear map needs g and its Jacobian");
  }
  const int n = spec.ambient.dim();
  return SetValuedMap{std::move(spec), gamma, n};
}

SetValuedMap MakeArgminSetMap(map_kind::ArgminSet spec, double gamma) {
  if (!spec.value || !spec.gradient) {
    throw Error(ErrorCode::kInvalidParameters,
                "argmin map needs value and gradient");
  }
  if (!(spec.sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "regularizer must be > 0");
  }
  const int n = spec.feasible.dim();
  return SetValuedMap{std::move(spec), gamma, n};
}

double ArgminMinValue(const SetValuedMap& map, const Vec& x) {
  const auto* a = std::get_if<map_kind::ArgminSet>(&map.variant);
  if (a == nullptr) {
    throw Error(ErrorCode::kWrongProblemKind, "not an argmin-set map");
  }
  if (a->min_value) return a->min_value(x);
  SmoothObjective obj;
  obj.value = [&](const Vec& y) { return a->value(x, y); };
  obj.gradient = [&](const Vec& y) { return a->gradient(x, y); };
  obj.lipschitz = std::max(a->curvature, 1e-12);
  const Vec y0 = ProjectSimple(a->feasible, a->feasible.Center());
  const FistaResult r = FistaSolve(obj, a->feasible, y0, a->min_value_budget,
                                   2.0 * a->feasible.EnclosingRadius());
  return a->value(x, r.point);
}

bool Member(const SetValuedMap& map, const Vec& x, const Vec& y, double tol) {
  RequireDim(x, map.dim, "x");
  RequireDim(y, map.dim, "y");
  return std::visit(
      internal::Overloaded{
          [&](const map_kind::FixedSet& f) { return f.set.Contains(y, tol); },
          [&](const map_kind::TranslatedSet& t) {
            return t.base.Contains(y - t.shift(x), tol);
          },
          [&](const map_kind::NonlinearConvex& c) {
            if (!c.ambient.Contains(y, tol)) return false;
            const Vec g = c.g(x, y);
            return g.size() == 0 || g.maxCoeff() <= tol;
          },
          [&](const map_kind::ArgminSet& a) {
            if (!a.feasible.Contains(y, tol)) return false;
            return a.value(x, y) - ArgminMinValue(map, x) <= tol;
          }},
      map.variant);
}

Vec TranslatedProjection(const SetValuedMap& map, const Vec& x, const Vec& u) {
  const auto* t = std::get_if<map_kind::TranslatedSet>(&map.variant);
  if (t == nullptr) {
    throw Error(ErrorCode::kWrongProblemKind, "not a translated-set map");
  }
  RequireDim(x, map.dim, "x");
  RequireDim(u, map.dim, "u");
  if (!t->base.has_closed_form()) {
    throw Error(ErrorCode::kUnsupportedBaseSet,
                "base set '" + t->base.name() + "' has no closed form");
  }
  const Vec m = t->shift(x);
  return m + ProjectSimple(t->base, u - m);
}

Vec FeasibilityWitness(const SetValuedMap& map, const Vec& x) {
  RequireDim(x, map.dim, "x");
  return std::visit(
      internal::Overloaded{
          [&](const map_kind::FixedSet& f) -> Vec {
            if (f.set.has_closed_form()) {
              return ProjectSimple(f.set, f.set.Center());
            }
            return FindStrictlyFeasible(internal::AsConstraints(f.set),
                                        SimpleSet::WholeSpace(map.dim),
                                        f.set.Center());
          },
          [&](const map_kind::TranslatedSet& t) -> Vec {
            if (!t.base.has_closed_form()) {
              throw Error(ErrorCode::kUnsupportedBaseSet,
                          "base set '" + t.base.name() + "' has no closed form");
            }
            return t.shift(x) + ProjectSimple(t.base, t.base.Center());
          },
          [&](const map_kind::NonlinearConvex& c) -> Vec {
            if (c.witness) return c.witness(x);
            return FindStrictlyFeasible(internal::AsConstraints(c, x),
                                        c.ambient,
                                        ProjectSimple(c.ambient,
                                                      c.ambient.Center()));
          },
          [&](const map_kind::ArgminSet& a) -> Vec {
            SmoothObjective obj;
            obj.value = [&](const Vec& y) { return a.value(x, y); };
            obj.gradient = [&](const Vec& y) { return a.gradient(x, y); };
            obj.lipschitz = std::max(a.curvature, 1e-12);
            const Vec y0 = ProjectSimple(a.feasible, a.feasible.Center());
            return FistaSolve(obj, a.feasible, y0, a.min_value_budget,
                              2.0 * a.feasible.EnclosingRadius())
                .point;
          }},
      map.variant);
}

ContractivityAudit AuditContractivity(const SetValuedMap& map,
                                      const MapProjector& projector,
                                      const std::vector<Triple>& triples) {
  ContractivityAudit audit;
  for (const auto& [x, y, u] : triples) {
    const double dx = (x - y).norm();
    if (dx < 1e-12) {
      ++audit.skipped;
      continue;
    }
    const double dp = (projector(x, u) - projector(y, u)).norm();
    audit.max_ratio = std::max(audit.max_ratio, dp / dx);
    ++audit.used;
  }
  audit.pass = audit.max_ratio <= map.gamma + 1e-6;
  return audit;
}

}  // namespace sqvi
