#ifndef SQVI_DIAGNOSTICS_H_
#define SQVI_DIAGNOSTICS_H_

#include <sqvi/problem.h>
#include <sqvi/solver.h>
#include <sqvi/types.h>

#include <cstdint>
#include <vector>

namespace sqvi {

// ||x - P_{X*}(x)||. Throws NoReferenceSolution.
double DistToSolution(const ProblemInstance& problem, const Vec& x);

struct ResidualValue {
  double value = 0.0;
  double error_bound = 0.0;  // |value - true residual| <= error_bound
};

// ||x - P_{K(x)}(x - eta F(x))|| with F evaluated exactly. The projection is
// closed form where possible, then the map's exact solver, then the inner
// method with `budget` iterations.
ResidualValue NaturalResidual(const ProblemInstance& problem, const Vec& x,
                              double eta, std::int64_t budget);

// Lower objective gap l(x) - min l. Throws WrongProblemKind.
double LowerLevelSubopt(const ProblemInstance& problem, const Vec& x);

struct RateFit {
  double slope = 0.0;  // log10(value) per iteration
  double r2 = 0.0;
  int samples = 0;
};

// Least squares of log10(values[k]) on k for k in [k_lo, k_hi], skipping
// values <= 1e-14; k_hi < 0 means the last entry. Throws InsufficientData
// with fewer than 5 samples.
RateFit FitLinearRate(const std::vector<double>& values, int k_lo, int k_hi);
RateFit FitLinearRate(const IterationTrace& trace, Metric metric, int k_lo,
                      int k_hi);

// Plain least squares y = a + s x; returns (s, a, r^2).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sqvi

#endif  // SQVI_DIAGNOSTICS_H_
