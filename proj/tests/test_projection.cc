#include <sqvi/constraint_map.h>
#include <sqvi/projection.h>

#include <cmath>

#include <doctest.h>

#include "test_util.h"

using namespace sqvi;
using sqvi::testing::RandomMat;
using sqvi::testing::RandomVec;
using sqvi::testing::V;

namespace {

SetValuedMap UnitBallByConstraint(const SimpleSet& ambient) {
  map_kind::NonlinearConvex nc;
  nc.num_constraints = 1;
  nc.g = [](const Vec&, const Vec& y) { return V({y.squaredNorm() - 1.0}); };
  nc.jacobian = [](const Vec&, const Vec& y) -> Mat { return 2.0 * y.transpose(); };
  nc.ambient = ambient;
  nc.jacobian_bound = 2.0 * ambient.EnclosingRadius() + 2.0 * ambient.Center().norm();
  nc.curvature_bound = 2.0;
  return MakeNonlinearConvexMap(nc, 0.0);
}

ConvexConstraints Linear(const Vec& a, double b) {
  ConvexConstraints c;
  c.count = 1;
  c.value = [a, b](const Vec& y) { return V({a.dot(y) - b}); };
  c.jacobian = [a](const Vec&) -> Mat { return a.transpose(); };
  c.jacobian_bound = a.norm();
  return c;
}

// Least-squares lower level h(x, y) = 1/2 ||M y - N x||^2 over a ball.
SetValuedMap LeastSquaresArgmin(Rng& rng, int rows, int cols, double sigma) {
  const Mat m = RandomMat(rng, rows, cols);
  const Mat nx = RandomMat(rng, rows, cols);
  map_kind::ArgminSet a;
  a.value = [m, nx](const Vec& x, const Vec& y) { return 0.5 * (m * y - nx * x).squaredNorm(); };
  a.gradient = [m, nx](const Vec& x, const Vec& y) -> Vec {
    return m.transpose() * (m * y - nx * x);
  };
  a.curvature = Eigen::JacobiSVD<Mat>(m).singularValues()(0);
  a.curvature *= a.curvature;
  a.feasible = SimpleSet::Ball(Vec::Zero(cols), 2.0);
  a.sigma = sigma;
  return MakeArgminSetMap(a, 0.0);
}

}  // namespace

TEST_CASE("closed-form paths are exact") {
  const SetValuedMap t = MakeTranslatedSetMap(
      SimpleSet::Ball(Vec::Zero(2), 1.0), [](const Vec& x) -> Vec { return 0.5 * x; }, 0.5);
  for (std::int64_t steps : {1, 7, 1000}) {
    const ProjectionResult r = InexactProject(t, V({0, 0}), V({3, 4}), steps);
    CHECK(r.exact);
    CHECK(r.error_bound == 0.0);
    CHECK(r.feasibility_violation == 0.0);
    CHECK(r.point == TranslatedProjection(t, V({0, 0}), V({3, 4})));
  }
  const ProjectionResult f =
      InexactProject(MakeFixedSetMap(SimpleSet::UniformBox(2, 0, 1)), V({0, 0}), V({-1, 0.5}), 3);
  CHECK(f.exact);
  CHECK(f.point == V({0, 0.5}));
}

TEST_CASE("method and budget validation") {
  const SetValuedMap box = MakeFixedSetMap(SimpleSet::UniformBox(2, 0, 1));
  CHECK_THROWS_CODE(InexactProject(box, V({0, 0}), V({1, 1}), 0), ErrorCode::kInvalidParameters);
  CHECK_THROWS_CODE(InexactProject(box, V({0, 0}), V({1, 1}), 5, InnerMethod::kFista),
                    ErrorCode::kInvalidParameters);
  CHECK(ParseInnerMethod("apd") == InnerMethod::kPrimalDual);
  CHECK(InnerMethodName(ParseInnerMethod("fista")) == "fista");
  CHECK_THROWS_CODE(ParseInnerMethod("newton"), ErrorCode::kConfigError);
}

TEST_CASE("primal-dual on a ball written as a constraint") {
  const SetValuedMap m = UnitBallByConstraint(SimpleSet::UniformBox(2, -6, 6));
  const Vec truth = V({0.6, 0.8});
  double prev_bound = 1e300;
  for (std::int64_t t : {50, 200, 800}) {
    const ProjectionResult r = InexactProject(m, V({0, 0}), V({3, 4}), t);
    CAPTURE(t);
    CHECK((r.point - truth).norm() <= r.error_bound + 1e-9);
    CHECK(r.error_bound <= std::sqrt(r.inner_constant) / t + 1e-15);
    CHECK(r.error_bound <= prev_bound);
    prev_bound = r.error_bound;
  }
  const ProjectionResult r200 = InexactProject(m, V({0, 0}), V({3, 4}), 200);
  CHECK((r200.point - truth).norm() <= std::sqrt(r200.inner_constant) / 200);

  const ProjectionResult edge = InexactProject(m, V({0, 0}), V({2, 0}), 2000);
  CHECK((edge.point - V({1, 0})).norm() <= 1e-3);
}

TEST_CASE("apd reproduces a halfspace projection") {
  const Vec a = V({1, 2});
  const Vec u = V({3, 4});
  const Vec truth = ProjectSimple(SimpleSet::Halfspace(a, 1.0), u);
  const SimpleSet whole = SimpleSet::WholeSpace(2);
  const ConvexConstraints c = Linear(a, 1.0);
  const Vec w = FindStrictlyFeasible(c, whole, Vec::Zero(2));
  CHECK(c.value(w)[0] < 0.0);
  const PrimalDualResult r = ApdSolve(u, c, whole, w, 500);
  CHECK((r.point - truth).norm() <= 1e-6);
  CHECK(r.violation <= r.infeasibility_bound + 1e-12);
  CHECK((r.point - truth).norm() <= r.distance_bound + 1e-9);
  CHECK(r.suboptimality_bound == doctest::Approx(r.constant / (500.0 * 500.0)));
}

TEST_CASE("apd leaves feasible points alone") {
  const ConvexConstraints c = Linear(V({1, 1}), 10.0);
  const SimpleSet whole = SimpleSet::WholeSpace(2);
  for (std::int64_t t : {1, 10, 100}) {
    const PrimalDualResult r = ApdSolve(V({1, 2}), c, whole, V({0, 0}), t);
    CHECK((r.point - V({1, 2})).norm() <= 1e-12);
    CHECK(r.violation == 0.0);
  }
}

TEST_CASE("fixed halfspace intersections use the primal-dual path") {
  Mat a(2, 2);
  a << 1, 0, 0, 1;
  const SetValuedMap quad = MakeFixedSetMap(SimpleSet::Halfspaces(a, V({0, 0})));
  const ProjectionResult r = InexactProject(quad, V({0, 0}), V({1, 2}), 2000);
  CHECK_FALSE(r.exact);
  CHECK(r.point.norm() <= r.error_bound + 1e-9);
  CHECK(r.point.norm() <= 1e-3);
}

TEST_CASE("fista examples") {
  SmoothObjective obj;
  obj.value = [](const Vec& y) { return 0.5 * y.squaredNorm(); };
  obj.gradient = [](const Vec& y) -> Vec { return y; };
  obj.lipschitz = 1.0;
  obj.strong_convexity = 1.0;
  const SimpleSet box = SimpleSet::UniformBox(1, -1, 1);
  const FistaResult r10 = FistaSolve(obj, box, V({1}), 10, 1.0);
  CHECK(r10.gap_bound == doctest::Approx(2.0 / 121.0));
  CHECK(obj.value(r10.point) <= r10.gap_bound);
  CHECK(std::abs(r10.point[0]) <= 1e-12);
  const FistaResult r1 = FistaSolve(obj, box, V({1}), 1, 1.0);
  CHECK(r1.gap_bound == doctest::Approx(2.0 / 4.0));
  CHECK(r1.iterations == 1);
  CHECK(r1.distance_bound == doctest::Approx(1.0));

  SmoothObjective plain = obj;
  plain.strong_convexity = 0.0;
  CHECK(std::isinf(FistaSolve(plain, box, V({1}), 3, 1.0).distance_bound));
  CHECK_THROWS_CODE(FistaSolve(obj, box, V({1}), 0, 1.0), ErrorCode::kInvalidParameters);

  SmoothObjective blowup = obj;
  blowup.gradient = [](const Vec& y) -> Vec { return Vec::Constant(y.size(), 1e308) * 1e10; };
  CHECK_THROWS_CODE(FistaSolve(blowup, SimpleSet::WholeSpace(1), V({1}), 3, 1.0),
                    ErrorCode::kNonfiniteValue);
}

TEST_CASE("argmin projection onto a singleton") {
  map_kind::ArgminSet a;
  a.value = [](const Vec& x, const Vec& y) { return 0.5 * (y - x).squaredNorm(); };
  a.gradient = [](const Vec& x, const Vec& y) -> Vec { return y - x; };
  a.curvature = 1.0;
  a.feasible = SimpleSet::UniformBox(1, 0.0, 1.0);
  const SetValuedMap m = MakeArgminSetMap(a, 1.0);
  for (double u : {-3.0, 0.2, 5.0}) {
    for (std::int64_t t : {1, 10, 100}) {
      const ProjectionResult r = InexactProject(m, V({2}), V({u}), t);
      CHECK(std::abs(r.point[0] - 1.0) <= r.error_bound + 1e-12);
      CHECK(r.error_bound <= std::sqrt(r.inner_constant) / t + 1e-15);
    }
  }
}

TEST_CASE("certificates are sound on random argmin subproblems") {
  Rng rng = StreamId{51}.MakeRng();
  for (int trial = 0; trial < 3; ++trial) {
    const SetValuedMap m = LeastSquaresArgmin(rng, 4, 7, 0.1);
    const Vec x = RandomVec(rng, 7);
    const Vec u = RandomVec(rng, 7, 2.0);
    const Vec ref = ReferenceProject(m, x, u, 100000, false);
    double prev = 1e300;
    for (std::int64_t t : {5, 20, 80, 320}) {
      const ProjectionResult r = InexactProject(m, x, u, t);
      CHECK((r.point - ref).norm() <= r.error_bound + 1e-9);
      CHECK(r.error_bound <= prev);
      prev = r.error_bound;
    }
  }
}

TEST_CASE("rate audit") {
  const SetValuedMap box = MakeFixedSetMap(SimpleSet::UniformBox(2, 0, 1));
  const RateAudit exact = ProjectionRateAudit(box, V({0, 0}), V({2, 2}), {10, 20});
  CHECK(exact.exact);
  CHECK(exact.pass);
  CHECK(exact.errors == std::vector<double>{0.0, 0.0});

  Rng rng = StreamId{52}.MakeRng();
  const SetValuedMap ls = LeastSquaresArgmin(rng, 5, 10, 0.05);
  const RateAudit f = ProjectionRateAudit(ls, RandomVec(rng, 10), RandomVec(rng, 10, 2.0),
                                          {10, 20, 40, 80, 160});
  CAPTURE(f.slope);
  CHECK(f.pass);

  const SetValuedMap ball = UnitBallByConstraint(SimpleSet::UniformBox(2, -6, 6));
  const RateAudit p = ProjectionRateAudit(ball, V({0, 0}), V({3, 4}), {10, 20, 40, 80, 160});
  CAPTURE(p.slope);
  CHECK(p.pass);
}
