#ifndef SQVI_CONSTRAINT_MAP_H_
#define SQVI_CONSTRAINT_MAP_H_

#include <sqvi/simple_set.h>
#include <sqvi/types.h>

#include <functional>
#include <optional>
#include <tuple>
#include <variant>
#include <vector>

namespace sqvi {

using PointMap = std::function<Vec(const Vec&)>;
// (x, u) -> P_{K(x)}[u]
using MapProjector = std::function<Vec(const Vec& x, const Vec& u)>;

namespace map_kind {

// K(x) = S for every x.
struct FixedSet {
  SimpleSet set;
};

// K(x) = m(x) + base.
struct TranslatedSet {
  SimpleSet base;
  PointMap shift;
  double shift_lipschitz = 0.0;
};

// K(x) = {y in ambient : g(x, y) <= 0}, g(x, .) convex.
struct NonlinearConvex {
  int num_constraints = 0;
  std::function<Vec(const Vec& x, const Vec& y)> g;
  // m x n Jacobian of g(x, .) at y.
  std::function<Mat(const Vec& x, const Vec& y)> jacobian;
  SimpleSet ambient;
  double jacobian_bound = 0.0;   // sup ||J_y g|| over the ambient set
  double curvature_bound = 0.0;  // max_i Lipschitz constant of grad_y g_i
  // Optional strictly feasible point of K(x); searched for when absent.
  std::function<Vec(const Vec& x)> witness;
};

// K(x) = argmin_{y in feasible} h(x, y), h(x, .) convex and smooth.
// Projections solve the regularized problem
//   min_{y in feasible} 1/2 ||y - u||^2 + h(x, y) / sigma.
struct ArgminSet {
  std::function<double(const Vec& x, const Vec& y)> value;
  std::function<Vec(const Vec& x, const Vec& y)> gradient;
  double curvature = 0.0;  // Lipschitz constant of grad_y h
  // Optional y -> grad_y h(x, y) with x-dependent work hoisted out.
  std::function<std::function<Vec(const Vec&)>(const Vec& x)> gradient_at;
  SimpleSet feasible;
  double sigma = 1e-2;
  // Optional high-accuracy solver for the regularized problem.
  MapProjector exact_projector;
  // Optional high-accuracy min_y h(x, y); FISTA with `min_value_budget`
  // iterations otherwise.
  std::function<double(const Vec& x)> min_value;
  std::int64_t min_value_budget = 20000;
};

}  // namespace map_kind

// The set-valued constraint map K(.) with its declared contractivity
// constant gamma: ||P_{K(x)}[u] - P_{K(y)}[u]|| <= gamma ||x - y||.
struct SetValuedMap {
  using Variant = std::variant<map_kind::FixedSet, map_kind::TranslatedSet,
                               map_kind::NonlinearConvex, map_kind::ArgminSet>;

  Variant variant;
  double gamma = 0.0;
  int dim = 0;

  std::string kind_name() const;
};

SetValuedMap MakeFixedSetMap(SimpleSet set);
// gamma defaults to 2 * shift_lipschitz, the generic translated-set bound.
SetValuedMap MakeTranslatedSetMap(SimpleSet base, PointMap shift,
                                  double shift_lipschitz);
SetValuedMap MakeNonlinearConvexMap(map_kind::NonlinearConvex spec,
                                    double gamma);
SetValuedMap MakeArgminSetMap(map_kind::ArgminSet spec, double gamma);

// y in K(x) up to tol. For argmin sets this is h(x,y) - min h(x,.) <= tol.
bool Member(const SetValuedMap& map, const Vec& x, const Vec& y, double tol);

// m(x) + P_base[u - m(x)]; throws UnsupportedBaseSet without a closed form.
Vec TranslatedProjection(const SetValuedMap& map, const Vec& x, const Vec& u);

// min_{y in feasible} h(x, y) for an argmin-set map.
double ArgminMinValue(const SetValuedMap& map, const Vec& x);

// A point of K(x); throws InfeasibleSubproblem if none is found.
Vec FeasibilityWitness(const SetValuedMap& map, const Vec& x);

struct ContractivityAudit {
  double max_ratio = 0.0;
  int used = 0;
  int skipped = 0;  // degenerate triples with ||x - y|| < 1e-12
  bool pass = false;
};

using Triple = std::tuple<Vec, Vec, Vec>;  // (x, y, u)

ContractivityAudit AuditContractivity(const SetValuedMap& map,
                                      const MapProjector& projector,
                                      const std::vector<Triple>& triples);

}  // namespace sqvi

#endif  // SQVI_CONSTRAINT_MAP_H_
