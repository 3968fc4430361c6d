#include <sqvi/diagnostics.h>

#include <cmath>

namespace sqvi {

double DistToSolution(const ProblemInstance& problem, const Vec& x) {
  if (!problem.has_reference()) {
    throw Error(ErrorCode::kNoReferenceSolution,
                "problem '" + problem.name + "' has no reference solution");
  }
  RequireDim(x, problem.dim(), "x");
  return (x - problem.solution_projector(x)).norm();
}

ResidualValue NaturalResidual(const ProblemInstance& problem, const Vec& x,
                              double eta, std::int64_t budget) {
  if (!(eta > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "eta must be > 0");
  }
  const Vec v = x - eta * EvaluateMean(problem.op, x);
  if (const auto* a = std::get_if<map_kind::ArgminSet>(&problem.map.variant)) {
    if (a->exact_projector) {
      return ResidualValue{(x - a->exact_projector(x, v)).norm(), 0.0};
    }
  }
  const ProjectionResult p = InexactProject(problem.map, x, v, budget);
  return ResidualValue{(x - p.point).norm(), p.error_bound};
}

double LowerLevelSubopt(const ProblemInstance& problem, const Vec& x) {
  if (!problem.lower_subopt) {
    throw Error(ErrorCode::kWrongProblemKind,
                "problem '" + problem.name + "' has no lower-level objective");
  }
  RequireDim(x, problem.dim(), "x");
  return problem.lower_subopt(x);
}

LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "line fit needs >= 2 points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) {
    throw Error(ErrorCode::kInsufficientData, "abscissae are all equal");
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

RateFit FitLinearRate(const std::vector<double>& values, int k_lo, int k_hi) {
  std::vector<double> ks, logs;
  const int last = static_cast<int>(values.size()) - 1;
  const int hi = k_hi < 0 ? last : std::min(k_hi, last);
  for (int k = std::max(k_lo, 0); k <= hi; ++k) {
    const double v = values[k];
    if (!(v > 1e-14) || !std::isfinite(v)) continue;
    ks.push_back(k);
    logs.push_back(std::log10(v));
  }
  if (ks.size() < 5) {
    throw Error(ErrorCode::kInsufficientData,
                "only " + std::to_string(ks.size()) +
                    " usable samples in window");
  }
  const LineFit f = FitLine(ks, logs);
  return RateFit{f.slope, f.r2, static_cast<int>(ks.size())};
}

RateFit FitLinearRate(const IterationTrace& trace, Metric metric, int k_lo,
                      int k_hi) {
  return FitLinearRate(trace.Column(metric), k_lo, k_hi);
}

}  // namespace sqvi
