#include <sqvi/diagnostics.h>
#include <sqvi/problems.h>

#include <cmath>

#include <doctest.h>

#include "test_util.h"

using namespace sqvi;
using sqvi::testing::V;

namespace {

ProblemInstance FixedVi(const SimpleSet& k, const Mat& a, const Vec& c) {
  ProblemInstance p;
  p.op = MakeAffineOperator(a, c, 0.0, 1.0);
  p.map = MakeFixedSetMap(k);
  p.ambient = k;
  p.x0 = k.Center();
  p.lipschitz = 1.0;
  p.qg_mu = 1.0;
  return p;
}

}  // namespace

TEST_CASE("distance to solution examples") {
  ProblemInstance p = FixedVi(SimpleSet::UniformBox(2, -10, 10), Mat::Identity(2, 2), Vec::Zero(2));
  CHECK_THROWS_CODE(DistToSolution(p, V({1, 1})), ErrorCode::kNoReferenceSolution);
  p.solution_projector = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
  CHECK(DistToSolution(p, V({3, 4})) == doctest::Approx(5.0));
  CHECK(DistToSolution(p, V({0, 0})) == 0.0);
  const SimpleSet line = SimpleSet::Affine(V({1, 0}).transpose(), V({0}));
  p.solution_projector = [line](const Vec& x) { return ProjectSimple(line, x); };
  CHECK(DistToSolution(p, V({2, 7})) == doctest::Approx(2.0));
  CHECK(DistToSolution(p, V({0, 7})) == 0.0);
}

TEST_CASE("natural residual examples") {
  const ProblemInstance p =
      FixedVi(SimpleSet::UniformBox(1, 0, 2), Mat::Identity(1, 1), V({-1}));
  const ResidualValue r = NaturalResidual(p, V({0}), 1.0, 100);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.error_bound == 0.0);
  CHECK(NaturalResidual(p, V({1}), 1.0, 100).value <= 1e-10);
  CHECK(NaturalResidual(p, V({1}), 0.3, 100).value <= 1e-10);
  CHECK_THROWS_CODE(NaturalResidual(p, V({1}), 0.0, 100), ErrorCode::kInvalidParameters);
}

TEST_CASE("translated-box reference is a residual zero") {
  const ProblemInstance p = MakeTranslatedBoxQvi(TranslatedBoxSpec{});
  const Vec x_star = p.solution_projector(p.x0);
  for (double eta : {0.05, 0.2, 0.6}) {
    const ResidualValue r = NaturalResidual(p, x_star, eta, 100);
    CHECK(r.value <= r.error_bound + 1e-10);
  }
}

TEST_CASE("residual and distance vanish together along a trace") {
  const ProblemInstance p = MakeTranslatedBoxQvi(TranslatedBoxSpec{});
  SolverConfig c;
  const EtaInterval iv = AdmissibleEtaInterval(p.lipschitz, p.qg_mu, p.gamma);
  c.eta = 0.5 * (iv.lo + iv.hi);
  c.schedule.kind = ScheduleKind::kDeterministic;
  c.schedule.rho = 0.95;
  c.max_outer = 150;
  const IterationTrace t = RunSolver(p, c);
  const double d = *t.final_row.dist;
  const double r = *t.final_row.residual;
  CHECK(d <= 1e-6);
  CHECK(r <= 1e-6);
  const IterationTrace again = RunSolver(p, c);
  CHECK(*again.final_row.residual == r);
}

TEST_CASE("lower-level suboptimality requires a bilevel instance") {
  const ProblemInstance p =
      FixedVi(SimpleSet::UniformBox(1, 0, 2), Mat::Identity(1, 1), V({-1}));
  CHECK_THROWS_CODE(LowerLevelSubopt(p, V({0})), ErrorCode::kWrongProblemKind);
  ProblemInstance q = p;
  q.lower_subopt = [](const Vec& x) { return x.squaredNorm(); };
  CHECK(LowerLevelSubopt(q, V({2})) == 4.0);
}

TEST_CASE("rate fit examples") {
  std::vector<double> geo, flat;
  for (int k = 0; k < 60; ++k) {
    geo.push_back(std::pow(0.9, k));
    flat.push_back(3.0);
  }
  const RateFit g = FitLinearRate(geo, 0, 59);
  CHECK(g.slope == doctest::Approx(std::log10(0.9)).epsilon(1e-12));
  CHECK(g.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.samples == 60);
  const RateFit w = FitLinearRate(geo, 5, 50);
  CHECK(w.samples == 46);
  CHECK(std::abs(FitLinearRate(flat, 0, 59).slope) <= 1e-14);

  std::vector<double> tiny(20, 1e-15);
  tiny[0] = 1.0;
  tiny[1] = 0.5;
  CHECK_THROWS_CODE(FitLinearRate(tiny, 0, 19), ErrorCode::kInsufficientData);
  CHECK_THROWS_CODE(FitLinearRate(geo, 10, 12), ErrorCode::kInsufficientData);

  const LineFit line = FitLine({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(line.slope == doctest::Approx(2.0));
  CHECK(line.intercept == doctest::Approx(1.0));
  CHECK(line.r2 == doctest::Approx(1.0));
}

TEST_CASE("rate fit on a trace column") {
  IterationTrace t;
  for (int k = 0; k < 10; ++k) {
    TraceRow row;
    row.k = k;
    row.dist = std::pow(0.5, k);
    t.rows.push_back(row);
  }
  CHECK(FitLinearRate(t, Metric::kDist, 0, -1).slope == doctest::Approx(std::log10(0.5)));
  CHECK_THROWS_CODE(FitLinearRate(t, Metric::kResidual, 0, -1), ErrorCode::kInsufficientData);
}
