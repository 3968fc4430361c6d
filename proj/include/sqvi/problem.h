#ifndef SQVI_PROBLEM_H_
#define SQVI_PROBLEM_H_

#include <sqvi/constraint_map.h>
#include <sqvi/operator.h>
#include <sqvi/simple_set.h>
#include <sqvi/types.h>

#include <functional>
#include <string>

#include <json.hpp>

namespace sqvi {

// An assembled SQVI: find x in K(x) with <F(x), y - x> >= 0 for y in K(x).
struct ProblemInstance {
  std::string name;
  OperatorSpec op;
  SetValuedMap map;
  SimpleSet ambient;  // X, with K(x) inside X
  Vec x0;

  double lipschitz = 0.0;
  double qg_mu = 0.0;
  double gamma = 0.0;
  double noise_level = 0.0;

  // P_{X*}; empty when the solution set is unknown.
  PointProjector solution_projector;
  // l(x) - min l for bilevel instances; empty otherwise.
  std::function<double(const Vec&)> lower_subopt;

  nlohmann::json metadata = nlohmann::json::object();

  int dim() const { return op.dim; }
  bool has_reference() const { return static_cast<bool>(solution_projector); }
};

}  // namespace sqvi

#endif  // SQVI_PROBLEM_H_
