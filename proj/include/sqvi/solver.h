#ifndef SQVI_SOLVER_H_
#define SQVI_SOLVER_H_

#include <sqvi/problem.h>
#include <sqvi/projection.h>
#include <sqvi/types.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sqvi {

// ---------------------------------------------------------------------------
// Parameter algebra

// beta = gamma + sqrt(1 + L^2 eta^2 - 2 eta mu).
double DeriveBeta(double lipschitz, double mu, double gamma, double eta);

struct EtaInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool Contains(double eta) const { return eta > lo && eta < hi; }
};

// The open interval of step sizes with beta < 1.
EtaInterval AdmissibleEtaInterval(double lipschitz, double mu, double gamma);

// alpha (1 - beta)(1 + beta b); b = 0 gives the gradient-method factor.
double ContractionFactor(double alpha, double beta, double b);

// ---------------------------------------------------------------------------
// Schedules

enum class ScheduleKind {
  kIncreasingSample,   // N_k = ceil(rho^-2k), t_k = ceil((k+1) ln^2(k+2) / rho^k)
  kConstantMinibatch,  // N_k = N, t_k = ceil((k+1) ln^2(k+2) / (1-q)^k)
  kDeterministic,      // exact F, t_k as for kIncreasingSample
  kRegressionPreset,   // N_k = N, t_k = max(1, ceil(k ln^2(k+1) (1-1e-3)^k))
};

std::string ScheduleKindName(ScheduleKind kind);
ScheduleKind ParseScheduleKind(const std::string& name);

struct Schedule {
  ScheduleKind kind = ScheduleKind::kDeterministic;
  double rho = 0.9;
  std::int64_t batch = 1;
};

struct ScheduleStep {
  std::int64_t batch = 1;
  std::int64_t inner = 1;
};

// Counts saturate at ~4e18 instead of overflowing.
ScheduleStep ScheduleValues(const Schedule& schedule, double q, int k);

// ---------------------------------------------------------------------------
// Solver configuration and traces

enum class Method { kExtraGradient, kGradient };

std::string MethodName(Method m);
Method ParseMethod(const std::string& name);

enum class Metric { kDist, kResidual, kLowerSubopt };

std::string MetricName(Metric m);
Metric ParseMetric(const std::string& name);

struct SolverConfig {
  Method method = Method::kExtraGradient;
  double eta = 0.1;
  double alpha = 0.5;
  double b = 0.5;
  Schedule schedule;
  int max_outer = 100;
  std::uint64_t seed = 1;
  InnerMethod inner_method = InnerMethod::kAuto;
  std::vector<Metric> metrics = {Metric::kDist, Metric::kResidual};
  // Stop once `floor_metric` drops below `metric_floor` (0 disables).
  double metric_floor = 0.0;
  Metric floor_metric = Metric::kDist;
  bool record_wall_time = false;
  std::optional<Vec> x0;
};

// beta, q and the admissible interval for a config against declared
// constants.
struct DerivedParameters {
  double beta = 0.0;
  double q = 0.0;
  std::optional<EtaInterval> interval;
  std::vector<std::string> warnings;
};

// Full validation. With `enforce` false, violations become warnings and the
// best-effort values are still returned (used by named presets).
DerivedParameters DeriveParameters(const SolverConfig& config,
                                   double lipschitz, double mu, double gamma,
                                   bool enforce = true);

struct TraceRow {
  int k = 0;
  std::int64_t batch = 0;
  std::int64_t inner = 0;
  std::int64_t cum_samples = 0;  // sum_{j<k} N_j
  std::int64_t cum_inner = 0;    // sum_{j<k} t_j
  std::optional<double> dist;
  std::optional<double> residual;
  std::optional<double> lower_subopt;
  std::optional<double> wall_ms;

  std::optional<double> Get(Metric m) const;
};

enum class RunStatus { kCompleted, kFloorReached, kNonfiniteIterate };

std::string RunStatusName(RunStatus s);

struct IterationTrace {
  std::vector<TraceRow> rows;  // metrics of x_k, k = 0..iterations-1
  TraceRow final_row;          // metrics of the last iterate
  Vec final_x;
  int iterations = 0;
  RunStatus status = RunStatus::kCompleted;
  std::string message;
  DerivedParameters derived;

  std::vector<double> Column(Metric m) const;
};

// Inexact extra-gradient and inexact gradient iterations. The config is
// validated against the problem's declared constants first unless
// `enforce_validation` is false.
IterationTrace RunIegSqvi(const ProblemInstance& problem,
                          const SolverConfig& config,
                          bool enforce_validation = true);
IterationTrace RunIgSqvi(const ProblemInstance& problem,
                         const SolverConfig& config,
                         bool enforce_validation = true);
// Dispatches on config.method.
IterationTrace RunSolver(const ProblemInstance& problem,
                         const SolverConfig& config,
                         bool enforce_validation = true);

struct ComplexityReport {
  int k = 0;
  std::int64_t samples = 0;
  std::int64_t inner = 0;
};

// First k with metric <= epsilon. Throws NotReached.
ComplexityReport OracleComplexityReport(const IterationTrace& trace,
                                        Metric metric, double epsilon);

}  // namespace sqvi

#endif  // SQVI_SOLVER_H_
