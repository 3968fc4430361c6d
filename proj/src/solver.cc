#include <sqvi/diagnostics.h>
#include <sqvi/solver.h>

#include "internal.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace sqvi {

namespace {

std::string Fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double InnerGrowth(int k) {
  const double l = std::log(static_cast<double>(k) + 2.0);
  return (static_cast<double>(k) + 1.0) * l * l;
}

void CheckRho(double rho, double q) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw Error(ErrorCode::kInvalidSchedule, "rho must lie in (0, 1)");
  }
  if (!(rho > 1.0 - q)) {
    throw Error(ErrorCode::kInvalidSchedule,
                "rho must exceed 1-q = " + Fmt(1.0 - q) + " (got " +
                    Fmt(rho) + ")");
  }
}

}  // namespace

double DeriveBeta(double lipschitz, double mu, double gamma, double eta) {
  if (!(lipschitz > 0.0) || !(mu >= 0.0) || !(gamma >= 0.0)) {
    throw Error(ErrorCode::kInvalidConstants,
                "need L > 0, mu >= 0, gamma >= 0");
  }
  if (mu > lipschitz) {
    throw Error(ErrorCode::kInvalidConstants,
                "mu_F = " + Fmt(mu) + " exceeds L = " + Fmt(lipschitz));
  }
  if (!(eta > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "eta must be > 0");
  }
  const double inside =
      1.0 + lipschitz * lipschitz * eta * eta - 2.0 * eta * mu;
  return gamma + std::sqrt(std::max(0.0, inside));
}

EtaInterval AdmissibleEtaInterval(double lipschitz, double mu, double gamma) {
  if (!(lipschitz > 0.0) || !(mu >= 0.0) || !(gamma >= 0.0)) {
    throw Error(ErrorCode::kInvalidConstants,
                "need L > 0, mu >= 0, gamma >= 0");
  }
  if (mu > lipschitz) {
    throw Error(ErrorCode::kInvalidConstants,
                "mu_F = " + Fmt(mu) + " exceeds L = " + Fmt(lipschitz));
  }
  const double l2 = lipschitz * lipschitz;
  const double disc = mu * mu - l2 * (2.0 * gamma - gamma * gamma);
  if (!(disc > 0.0)) {
    throw Error(ErrorCode::kNoAdmissibleStep,
                "mu_F^2 = " + Fmt(mu * mu) + " must exceed L^2(2g - g^2) = " +
                    Fmt(l2 * (2.0 * gamma - gamma * gamma)));
  }
  const double side = gamma + std::sqrt(std::max(0.0, 1.0 - mu * mu / l2));
  if (!(side < 1.0)) {
    throw Error(ErrorCode::kNoAdmissibleStep,
                "gamma + sqrt(1 - mu_F^2/L^2) = " + Fmt(side) +
                    " must be < 1");
  }
  const double delta = std::sqrt(disc);
  return EtaInterval{(mu - delta) / l2, (mu + delta) / l2};
}

double ContractionFactor(double alpha, double beta, double b) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidParameters, "alpha must lie in (0, 1)");
  }
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::kInvalidParameters,
                "beta = " + Fmt(beta) + " must lie in [0, 1)");
  }
  // With beta = 0 the factor does not depend on b.
  if (beta > 0.0 && !(b >= 0.0 && b < 1.0 / (1.0 - beta))) {
    throw Error(ErrorCode::kInvalidParameters,
                "b must lie in [0, 1/(1-beta)) = [0, " +
                    Fmt(1.0 / (1.0 - beta)) + ")");
  }
  return alpha * (1.0 - beta) * (1.0 + beta * b);
}

std::string ScheduleKindName(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kIncreasingSample: return "increasing";
    case ScheduleKind::kConstantMinibatch: return "constant";
    case ScheduleKind::kDeterministic: return "deterministic";
    case ScheduleKind::kRegressionPreset: return "regression";
  }
  return "deterministic";
}

ScheduleKind ParseScheduleKind(const std::string& name) {
  if (name == "increasing" || name == "increasing_sample") {
    return ScheduleKind::kIncreasingSample;
  }
  if (name == "constant" || name == "constant_minibatch") {
    return ScheduleKind::kConstantMinibatch;
  }
  if (name == "deterministic") return ScheduleKind::kDeterministic;
  if (name == "regression") return ScheduleKind::kRegressionPreset;
  throw Error(ErrorCode::kConfigError, "unknown schedule '" + name + "'");
}

ScheduleStep ScheduleValues(const Schedule& schedule, double q, int k) {
  if (k < 0) throw Error(ErrorCode::kInvalidParameters, "k must be >= 0");
  ScheduleStep s;
  const double kd = static_cast<double>(k);
  switch (schedule.kind) {
    case ScheduleKind::kIncreasingSample:
      CheckRho(schedule.rho, q);
      s.batch = internal::SaturatingCeil(std::pow(schedule.rho, -2.0 * kd));
      s.inner = internal::SaturatingCeil(InnerGrowth(k) /
                                         std::pow(schedule.rho, kd));
      break;
    case ScheduleKind::kDeterministic:
      CheckRho(schedule.rho, q);
      s.batch = 1;
      s.inner = internal::SaturatingCeil(InnerGrowth(k) /
                                         std::pow(schedule.rho, kd));
      break;
    case ScheduleKind::kConstantMinibatch:
      if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorCode::kInvalidSchedule, "q must lie in (0, 1)");
      }
      if (schedule.batch < 1) {
        throw Error(ErrorCode::kInvalidSchedule, "batch must be >= 1");
      }
      s.batch = schedule.batch;
      s.inner = internal::SaturatingCeil(InnerGrowth(k) /
                                         std::pow(1.0 - q, kd));
      break;
    case ScheduleKind::kRegressionPreset: {
      if (schedule.batch < 1) {
        throw Error(ErrorCode::kInvalidSchedule, "batch must be >= 1");
      }
      const double l = std::log(kd + 1.0);
      s.batch = schedule.batch;
      s.inner = internal::SaturatingCeil(kd * l * l * std::pow(1.0 - 1e-3, kd));
      break;
    }
  }
  s.inner = std::max<std::int64_t>(s.inner, 1);
  return s;
}

std::string MethodName(Method m) {
  return m == Method::kExtraGradient ? "ieg" : "ig";
}

Method ParseMethod(const std::string& name) {
  if (name == "ieg") return Method::kExtraGradient;
  if (name == "ig") return Method::kGradient;
  throw Error(ErrorCode::kConfigError, "unknown solver '" + name + "'");
}

std::string MetricName(Metric m) {
  switch (m) {
    case Metric::kDist: return "dist";
    case Metric::kResidual: return "residual";
    case Metric::kLowerSubopt: return "lower_subopt";
  }
  return "dist";
}

Metric ParseMetric(const std::string& name) {
  if (name == "dist") return Metric::kDist;
  if (name == "residual") return Metric::kResidual;
  if (name == "lower_subopt") return Metric::kLowerSubopt;
  throw Error(ErrorCode::kConfigError, "unknown metric '" + name + "'");
}

std::string RunStatusName(RunStatus s) {
  switch (s) {
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kFloorReached: return "floor_reached";
    case RunStatus::kNonfiniteIterate: return "nonfinite_iterate";
  }
  return "completed";
}

std::optional<double> TraceRow::Get(Metric m) const {
  switch (m) {
    case Metric::kDist: return dist;
    case Metric::kResidual: return residual;
    case Metric::kLowerSubopt: return lower_subopt;
  }
  return std::nullopt;
}

std::vector<double> IterationTrace::Column(Metric m) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const TraceRow& r : rows) {
    const auto v = r.Get(m);
    out.push_back(v ? *v : std::nan(""));
  }
  return out;
}

DerivedParameters DeriveParameters(const SolverConfig& config,
                                   double lipschitz, double mu, double gamma,
                                   bool enforce) {
  if (!(config.eta > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "eta must be > 0");
  }
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameters, "alpha must lie in (0, 1)");
  }
  if (!(config.b >= 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "b must be >= 0");
  }
  if (config.max_outer < 1) {
    throw Error(ErrorCode::kInvalidParameters, "T must be >= 1");
  }

  DerivedParameters d;
  auto fail = [&](const Error& e) {
    if (enforce) throw e;
    d.warnings.push_back(e.what());
  };

  d.beta = DeriveBeta(lipschitz, mu, gamma, config.eta);
  try {
    d.interval = AdmissibleEtaInterval(lipschitz, mu, gamma);
    if (!d.interval->Contains(config.eta)) {
      fail(Error(ErrorCode::kInvalidParameters,
                 "eta = " + Fmt(config.eta) + " outside admissible interval (" +
                     Fmt(d.interval->lo) + ", " + Fmt(d.interval->hi) + ")"));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoAdmissibleStep) throw;
    fail(e);
  }

  const double b = config.method == Method::kExtraGradient ? config.b : 0.0;
  try {
    d.q = ContractionFactor(config.alpha, d.beta, b);
  } catch (const Error& e) {
    fail(e);
    d.q = config.alpha * (1.0 - d.beta) * (1.0 + d.beta * b);
  }
  if (!(d.q > 0.0 && d.q < 1.0)) {
    fail(Error(ErrorCode::kInvalidParameters,
               "q = " + Fmt(d.q) + " must lie in (0, 1)"));
  }

  try {
    ScheduleValues(config.schedule, d.q, 0);
  } catch (const Error& e) {
    fail(e);
  }
  return d;
}

namespace {

TraceRow EvaluateMetrics(const ProblemInstance& problem,
                         const SolverConfig& config, const Vec& x,
                         std::int64_t inner_budget) {
  TraceRow row;
  for (Metric m : config.metrics) {
    switch (m) {
      case Metric::kDist:
        if (problem.has_reference()) row.dist = DistToSolution(problem, x);
        break;
      case Metric::kResidual: {
        const std::int64_t budget = std::min<std::int64_t>(
            std::max<std::int64_t>(10 * inner_budget, 1000), 100000);
        row.residual = NaturalResidual(problem, x, config.eta, budget).value;
        break;
      }
      case Metric::kLowerSubopt:
        if (problem.lower_subopt) row.lower_subopt = problem.lower_subopt(x);
        break;
    }
  }
  return row;
}

Vec Snap(const SimpleSet& ambient, const Vec& v) {
  return ambient.has_closed_form() ? ProjectSimple(ambient, v) : v;
}

IterationTrace Run(const ProblemInstance& problem, const SolverConfig& config,
                   bool enforce, bool extragradient) {
  IterationTrace trace;
  trace.derived = DeriveParameters(config, problem.lipschitz, problem.qg_mu,
                                   problem.gamma, enforce);
  const double q = trace.derived.q;
  const double eta = config.eta;
  const double alpha = config.alpha;
  const double b = config.b;
  const bool exact_mean =
      config.schedule.kind == ScheduleKind::kDeterministic;

  Vec x = config.x0 ? *config.x0 : problem.x0;
  RequireDim(x, problem.dim(), "x0");
  x = Snap(problem.ambient, x);

  const StreamId root{config.seed};
  auto estimate = [&](const Vec& at, std::int64_t n, StreamId s) -> Vec {
    if (exact_mean) return EvaluateMean(problem.op, at);
    return SampleBatch(problem.op, at, n, s).mean_estimate;
  };

  const auto start = std::chrono::steady_clock::now();
  auto stamp = [&](TraceRow& row) {
    if (!config.record_wall_time) return;
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  };

  std::int64_t cum_samples = 0;
  std::int64_t cum_inner = 0;
  std::int64_t last_inner = 1;
  for (int k = 0; k < config.max_outer; ++k) {
    const ScheduleStep step = ScheduleValues(config.schedule, q, k);
    last_inner = step.inner;
    TraceRow row = EvaluateMetrics(problem, config, x, step.inner);
    row.k = k;
    row.batch = step.batch;
    row.inner = step.inner;
    row.cum_samples = cum_samples;
    row.cum_inner = cum_inner;
    stamp(row);
    trace.rows.push_back(row);

    if (config.metric_floor > 0.0) {
      const auto v = row.Get(config.floor_metric);
      if (v && *v < config.metric_floor) {
        trace.status = RunStatus::kFloorReached;
        trace.final_row = row;
        trace.final_x = x;
        trace.iterations = k;
        return trace;
      }
    }

    const Vec g = estimate(x, step.batch, root.Child({std::uint64_t(k), 0}));
    const Vec d = Snap(problem.ambient,
                       InexactProject(problem.map, x, x - eta * g, step.inner,
                                      config.inner_method)
                           .point);
    Vec next;
    if (extragradient) {
      const Vec u = (1.0 - b) * x + b * d;
      const Vec gu =
          estimate(u, step.batch, root.Child({std::uint64_t(k), 1}));
      const Vec s = Snap(problem.ambient,
                         InexactProject(problem.map, u, u - eta * gu,
                                        step.inner, config.inner_method)
                             .point);
      next = (1.0 - alpha) * x + alpha * s;
    } else {
      next = (1.0 - alpha) * x + alpha * d;
    }

    cum_samples = internal::SaturatingAdd(cum_samples, step.batch);
    cum_inner = internal::SaturatingAdd(cum_inner, step.inner);
    if (!next.allFinite()) {
      trace.status = RunStatus::kNonfiniteIterate;
      trace.message = "iterate became nonfinite at k = " + std::to_string(k);
      trace.final_row = row;
      trace.final_x = x;
      trace.iterations = k;
      return trace;
    }
    x = std::move(next);
  }

  trace.iterations = config.max_outer;
  trace.final_x = x;
  trace.final_row = EvaluateMetrics(problem, config, x, last_inner);
  trace.final_row.k = config.max_outer;
  trace.final_row.cum_samples = cum_samples;
  trace.final_row.cum_inner = cum_inner;
  stamp(trace.final_row);
  return trace;
}

}  // namespace

IterationTrace RunIegSqvi(const ProblemInstance& problem,
                          const SolverConfig& config,
                          bool enforce_validation) {
  SolverConfig c = config;
  c.method = Method::kExtraGradient;
  return Run(problem, c, enforce_validation, true);
}

IterationTrace RunIgSqvi(const ProblemInstance& problem,
                         const SolverConfig& config, bool enforce_validation) {
  SolverConfig c = config;
  c.method = Method::kGradient;
  return Run(problem, c, enforce_validation, false);
}

IterationTrace RunSolver(const ProblemInstance& problem,
                         const SolverConfig& config, bool enforce_validation) {
  return config.method == Method::kExtraGradient
             ? RunIegSqvi(problem, config, enforce_validation)
             : RunIgSqvi(problem, config, enforce_validation);
}

ComplexityReport OracleComplexityReport(const IterationTrace& trace,
                                        Metric metric, double epsilon) {
  auto hit = [&](const TraceRow& r) {
    const auto v = r.Get(metric);
    return v && *v <= epsilon;
  };
  for (const TraceRow& r : trace.rows) {
    if (hit(r)) return ComplexityReport{r.k, r.cum_samples, r.cum_inner};
  }
  if (hit(trace.final_row)) {
    const TraceRow& r = trace.final_row;
    return ComplexityReport{r.k, r.cum_samples, r.cum_inner};
  }
  throw Error(ErrorCode::kNotReached,
              MetricName(metric) + " never reached " + Fmt(epsilon));
}

}  // namespace sqvi
