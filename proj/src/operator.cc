#include <sqvi/operator.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sqvi {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMissingMeanField: return "MissingMeanField";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kUnsupportedSet: return "UnsupportedSet";
    case ErrorCode::kUnsupportedBaseSet: return "UnsupportedBaseSet";
    case ErrorCode::kInfeasibleSubproblem: return "InfeasibleSubproblem";
    case ErrorCode::kNonfiniteValue: return "NonfiniteValue";
    case ErrorCode::kInvalidConstants: return "InvalidConstants";
    case ErrorCode::kNoAdmissibleStep: return "NoAdmissibleStep";
    case ErrorCode::kInvalidParameters: return "InvalidParameters";
    case ErrorCode::kInvalidSchedule: return "InvalidSchedule";
    case ErrorCode::kNotReached: return "NotReached";
    case ErrorCode::kNoReferenceSolution: return "NoReferenceSolution";
    case ErrorCode::kWrongProblemKind: return "WrongProblemKind";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kConstructionFailed: return "ConstructionFailed";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Error";
}

Vec EvaluateMean(const OperatorSpec& op, const Vec& x) {
  if (!op.has_mean()) {
    throw Error(ErrorCode::kMissingMeanField,
                "operator exposes samples only");
  }
  RequireDim(x, op.dim, "x");
  return op.mean_eval(x);
}

BatchEval SampleBatch(const OperatorSpec& op, const Vec& x, std::int64_t n,
                      StreamId stream) {
  RequireDim(x, op.dim, "x");
  if (n < 1) {
    throw Error(ErrorCode::kInvalidParameters, "batch size must be >= 1");
  }
  Rng rng = stream.MakeRng();
  Vec sum = Vec::Zero(op.dim);
  for (std::int64_t j = 0; j < n; ++j) sum += op.sampler(x, rng);
  return BatchEval{sum / static_cast<double>(n), n, stream};
}

OperatorSpec MakeNoisyOperator(int dim, MeanField mean, double noise_level,
                               double lipschitz, double qg_mu) {
  OperatorSpec op;
  op.dim = dim;
  op.noise_level = noise_level;
  op.lipschitz = lipschitz;
  op.qg_mu = qg_mu;
  op.mean_eval = mean;
  if (noise_level > 0.0) {
    const double sd = noise_level / std::sqrt(static_cast<double>(dim));
    op.sampler = [mean, sd](const Vec& x, Rng& rng) {
      std::normal_distribution<double> normal(0.0, sd);
      Vec g = mean(x);
      for (Eigen::Index i = 0; i < g.size(); ++i) g[i] += normal(rng);
      return g;
    };
  } else {
    op.sampler = [mean](const Vec& x, Rng&) { return mean(x); };
  }
  return op;
}

OperatorSpec MakeAffineOperator(const Mat& a, const Vec& c, double noise_level,
                                double qg_mu) {
  if (a.rows() != a.cols() || c.size() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "affine operator shapes");
  }
  const double lipschitz =
      a.size() == 0 ? 0.0
                    : Eigen::JacobiSVD<Mat>(a).singularValues()(0);
  return MakeNoisyOperator(
      static_cast<int>(a.rows()),
      [a, c](const Vec& x) -> Vec { return a * x + c; }, noise_level,
      lipschitz, qg_mu);
}

double EstimateQg(const OperatorSpec& op, const PointProjector& solution_proj,
                  const std::vector<Vec>& points) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const Vec& x : points) {
    const Vec y = solution_proj(x);
    const Vec diff = x - y;
    const double sq = diff.squaredNorm();
    if (std::sqrt(sq) < 1e-12) continue;
    const double ratio =
        (EvaluateMean(op, x) - EvaluateMean(op, y)).dot(diff) / sq;
    best = std::min(best, ratio);
    any = true;
  }
  if (!any) {
    throw Error(ErrorCode::kEmptySample,
                "all points lie on the solution set");
  }
  return best;
}

MonotonicityReport CheckMonotone(const OperatorSpec& op,
                                 const PointPairs& pairs) {
  MonotonicityReport report;
  report.min_inner_product = std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pairs) {
    const double ip = (EvaluateMean(op, x) - EvaluateMean(op, y)).dot(x - y);
    report.min_inner_product = std::min(report.min_inner_product, ip);
  }
  if (pairs.empty()) report.min_inner_product = 0.0;
  report.pass = report.min_inner_product >= -1e-10;
  return report;
}

LipschitzReport AuditLipschitz(const OperatorSpec& op,
                               const PointPairs& pairs) {
  LipschitzReport report;
  report.pass = true;
  for (const auto& [x, y] : pairs) {
    const double dx = (x - y).norm();
    if (dx < 1e-12) continue;
    const double df = (EvaluateMean(op, x) - EvaluateMean(op, y)).norm();
    report.max_ratio = std::max(report.max_ratio, df / dx);
    if (df > (op.lipschitz + 1e-8) * dx) report.pass = false;
  }
  return report;
}

double StrongMonotonicityModulus(const OperatorSpec& op,
                                 const std::vector<Vec>& points,
                                 double step) {
  if (points.empty()) {
    throw Error(ErrorCode::kEmptySample, "no probe points");
  }
  const int n = op.dim;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& x : points) {
    Mat jac(n, n);
    Vec probe = x;
    for (int j = 0; j < n; ++j) {
      probe[j] = x[j] + step;
      const Vec fp = EvaluateMean(op, probe);
      probe[j] = x[j] - step;
      const Vec fm = EvaluateMean(op, probe);
      probe[j] = x[j];
      jac.col(j) = (fp - fm) / (2.0 * step);
    }
    const Mat sym = 0.5 * (jac + jac.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
    best = std::min(best, eig.eigenvalues()(0));
  }
  return best;
}

SamplingAudit AuditSampling(const OperatorSpec& op, const Vec& x,
                            std::int64_t m, int trials, StreamId stream) {
  const Vec truth = EvaluateMean(op, x);
  SamplingAudit audit;
  audit.radius = 4.0 * op.noise_level / std::sqrt(static_cast<double>(m));
  int hits = 0;
  for (int r = 0; r < trials; ++r) {
    const BatchEval b = SampleBatch(op, x, m, stream.Child(r));
    if ((b.mean_estimate - truth).norm() <= audit.radius) ++hits;
  }
  audit.hit_frequency = trials > 0 ? static_cast<double>(hits) / trials : 0.0;
  return audit;
}

}  // namespace sqvi
