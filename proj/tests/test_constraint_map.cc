#include <sqvi/constraint_map.h>
#include <sqvi/projection.h>

#include <cmath>

#include <doctest.h>

#include "test_util.h"

using namespace sqvi;
using sqvi::testing::RandomVec;
using sqvi::testing::V;

namespace {

SetValuedMap HalfShiftBall() {
  return MakeTranslatedSetMap(SimpleSet::Ball(Vec::Zero(2), 1.0),
                              [](const Vec& x) -> Vec { return 0.5 * x; }, 0.5);
}

SetValuedMap BallInDisguise(const Vec& x_coef) {
  map_kind::NonlinearConvex nc;
  nc.num_constraints = 1;
  nc.g = [x_coef](const Vec& x, const Vec& y) {
    return V({y.squaredNorm() - x_coef.dot(x)});
  };
  nc.jacobian = [](const Vec&, const Vec& y) -> Mat { return 2.0 * y.transpose(); };
  nc.ambient = SimpleSet::WholeSpace(2);
  nc.jacobian_bound = 20.0;
  nc.curvature_bound = 2.0;
  return MakeNonlinearConvexMap(nc, 0.0);
}

// h(x, y) = 1/2 ||y - x||^2 over the box [0, 1]^n: K(x) = {clamp(x)}.
SetValuedMap ClampArgmin(int n) {
  map_kind::ArgminSet a;
  a.value = [](const Vec& x, const Vec& y) { return 0.5 * (y - x).squaredNorm(); };
  a.gradient = [](const Vec& x, const Vec& y) -> Vec { return y - x; };
  a.curvature = 1.0;
  a.feasible = SimpleSet::UniformBox(n, 0.0, 1.0);
  return MakeArgminSetMap(a, 1.0);
}

}  // namespace

TEST_CASE("member examples") {
  const SetValuedMap fixed = MakeFixedSetMap(SimpleSet::Ball(Vec::Zero(2), 1.0));
  CHECK(Member(fixed, V({9, 9}), V({0.5, 0}), 0.0));
  CHECK(Member(HalfShiftBall(), V({2, 0}), V({2, 0}), 0.0));
  CHECK_FALSE(Member(HalfShiftBall(), V({0, 0}), V({2, 0}), 0.0));

  const SetValuedMap nc = BallInDisguise(V({1, 0}));
  CHECK_FALSE(Member(nc, V({1, 0}), V({1.1, 0}), 1e-6));
  CHECK(Member(nc, V({1, 0}), V({0.9, 0}), 1e-6));
  CHECK(Member(nc, V({1, 0}), V({1.1, 0}), 0.22));

  const SetValuedMap am = ClampArgmin(1);
  CHECK(Member(am, V({2}), V({1}), 1e-8));
  CHECK_FALSE(Member(am, V({2}), V({0.9}), 1e-3));

  CHECK_THROWS_CODE(Member(fixed, V({0, 0}), V({0, 0, 0}), 0.0), ErrorCode::kDimensionMismatch);
}

TEST_CASE("declared gamma by kind") {
  CHECK(MakeFixedSetMap(SimpleSet::UniformBox(3, 0, 1)).gamma == 0.0);
  CHECK(HalfShiftBall().gamma == doctest::Approx(1.0));
  CHECK(HalfShiftBall().kind_name() == "translated");
}

TEST_CASE("translated_projection examples") {
  const SetValuedMap m = HalfShiftBall();
  const Vec a = TranslatedProjection(m, V({2, 0}), V({2, 0}));
  CHECK((a - V({2, 0})).norm() <= 1e-15);
  const Vec b = TranslatedProjection(m, V({0, 0}), V({3, 4}));
  CHECK((b - V({0.6, 0.8})).norm() <= 1e-15);
  const SetValuedMap box = MakeTranslatedSetMap(
      SimpleSet::UniformBox(2, -1, 1), [](const Vec& x) -> Vec { return 0.0 * x; }, 0.0);
  CHECK((TranslatedProjection(box, V({5, 5}), V({2, -3})) - V({1, -1})).norm() == 0.0);

  Mat a2(2, 2);
  a2 << 1, 0, 0, 1;
  const SetValuedMap bad = MakeTranslatedSetMap(SimpleSet::Halfspaces(a2, V({0, 0})),
                                                [](const Vec& x) -> Vec { return x; }, 1.0);
  CHECK_THROWS_CODE(TranslatedProjection(bad, V({0, 0}), V({1, 1})),
                    ErrorCode::kUnsupportedBaseSet);
  CHECK_THROWS_CODE(TranslatedProjection(MakeFixedSetMap(SimpleSet::WholeSpace(2)),
                                         V({0, 0}), V({1, 1})),
                    ErrorCode::kWrongProblemKind);
}

TEST_CASE("contractivity audit examples") {
  Rng rng = StreamId{41}.MakeRng();
  std::vector<Triple> triples;
  for (int i = 0; i < 10000; ++i) {
    triples.emplace_back(RandomVec(rng, 2, 2.0), RandomVec(rng, 2, 2.0), RandomVec(rng, 2, 3.0));
  }
  const SetValuedMap fixed = MakeFixedSetMap(SimpleSet::Ball(Vec::Zero(2), 1.0));
  const ContractivityAudit f = AuditContractivity(
      fixed, [&](const Vec& x, const Vec& u) { return ReferenceProject(fixed, x, u); }, triples);
  CHECK(f.max_ratio == 0.0);
  CHECK(f.pass);

  const SetValuedMap shift = MakeTranslatedSetMap(
      SimpleSet::Ball(Vec::Zero(2), 1.0), [](const Vec& x) -> Vec { return 0.1 * x; }, 0.1);
  const MapProjector proj = [&](const Vec& x, const Vec& u) {
    return TranslatedProjection(shift, x, u);
  };
  const ContractivityAudit t = AuditContractivity(shift, proj, triples);
  CHECK(t.pass);
  CHECK(t.max_ratio <= 0.2 + 1e-12);
  CHECK(t.used == 10000);

  // u far out along the shift direction: the projected points differ by the
  // shift itself.
  const ContractivityAudit c = AuditContractivity(
      shift, proj, {{V({1, 0}), V({0, 0}), V({100, 0})}, {V({3, 0}), V({-2, 0}), V({1e4, 0})}});
  CHECK(c.max_ratio == doctest::Approx(0.1).epsilon(1e-9));

  const ContractivityAudit d =
      AuditContractivity(shift, proj, {{V({1, 0}), V({1, 0}), V({0, 0})}});
  CHECK(d.skipped == 1);
  CHECK(d.used == 0);

  SetValuedMap understated = shift;
  understated.gamma = 0.05;
  CHECK_FALSE(AuditContractivity(understated, proj, triples).pass);
}

TEST_CASE("feasibility witnesses") {
  CHECK(FeasibilityWitness(MakeFixedSetMap(SimpleSet::Simplex(3)), V({0, 0, 0})).sum() ==
        doctest::Approx(1.0));
  const Vec w = FeasibilityWitness(HalfShiftBall(), V({4, 0}));
  CHECK(Member(HalfShiftBall(), V({4, 0}), w, 1e-12));
  const Vec wn = FeasibilityWitness(BallInDisguise(V({1, 0})), V({1, 0}));
  CHECK(wn.squaredNorm() < 1.0);
  const Vec wa = FeasibilityWitness(ClampArgmin(2), V({2, -1}));
  CHECK(Member(ClampArgmin(2), V({2, -1}), wa, 1e-8));
  CHECK_THROWS_CODE(FeasibilityWitness(BallInDisguise(V({1, 0})), V({-1, 0})),
                    ErrorCode::kInfeasibleSubproblem);
}

TEST_CASE("argmin min value") {
  const SetValuedMap am = ClampArgmin(3);
  CHECK(ArgminMinValue(am, V({2, 0.5, -1})) == doctest::Approx(0.5 * (1 + 1)).epsilon(1e-8));
  CHECK_THROWS_CODE(ArgminMinValue(HalfShiftBall(), V({0, 0})), ErrorCode::kWrongProblemKind);
}
