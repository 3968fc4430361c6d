#ifndef SQVI_OPERATOR_H_
#define SQVI_OPERATOR_H_

#include <sqvi/random.h>
#include <sqvi/types.h>

#include <functional>
#include <utility>
#include <vector>

namespace sqvi {

using MeanField = std::function<Vec(const Vec&)>;
using Sampler = std::function<Vec(const Vec&, Rng&)>;
using PointProjector = std::function<Vec(const Vec&)>;
using PointPairs = std::vector<std::pair<Vec, Vec>>;

// The stochastic operator F(x) = E[G(x, xi)]. Immutable once built; the
// sampler draws one realization G(x, xi) from the supplied generator.
struct OperatorSpec {
  int dim = 0;
  MeanField mean_eval;  // empty for sample-only operators
  Sampler sampler;
  double noise_level = 0.0;  // nu: E||G - F||^2 <= nu^2 per sample
  double lipschitz = 0.0;    // L
  double qg_mu = 0.0;        // mu_F, 0 when no quadratic growth is claimed

  bool has_mean() const { return static_cast<bool>(mean_eval); }
};

struct BatchEval {
  Vec mean_estimate;
  std::int64_t batch_size = 0;
  StreamId stream;
};

Vec EvaluateMean(const OperatorSpec& op, const Vec& x);

// Averages `n` fresh draws from `stream`. A pure function of (x, n, stream).
BatchEval SampleBatch(const OperatorSpec& op, const Vec& x, std::int64_t n,
                      StreamId stream);

// Affine F(x) = A x + c. L is the spectral norm of A; mu_F is taken from the
// caller (it depends on the solution set, not on A alone). With
// noise_level > 0 each sample adds N(0, nu^2/n) per coordinate.
OperatorSpec MakeAffineOperator(const Mat& a, const Vec& c, double noise_level,
                                double qg_mu);

// Wraps a mean field with the additive Gaussian noise model above.
OperatorSpec MakeNoisyOperator(int dim, MeanField mean, double noise_level,
                               double lipschitz, double qg_mu);

// min over points of <F(x)-F(y), x-y>/||x-y||^2 with y = P_{X*}(x).
// Points within 1e-12 of the solution set are skipped.
double EstimateQg(const OperatorSpec& op, const PointProjector& solution_proj,
                  const std::vector<Vec>& points);

struct MonotonicityReport {
  double min_inner_product = 0.0;
  bool pass = false;
};

MonotonicityReport CheckMonotone(const OperatorSpec& op,
                                 const PointPairs& pairs);

struct LipschitzReport {
  double max_ratio = 0.0;
  bool pass = false;
};

// max ||F(x)-F(y)||/||x-y||; passes when every pair obeys L + 1e-8.
LipschitzReport AuditLipschitz(const OperatorSpec& op, const PointPairs& pairs);

// Smallest eigenvalue of the symmetric part of a central-difference Jacobian,
// minimized over the supplied points. This is the local strong-monotonicity
// modulus; it is exact (up to rounding) for affine operators.
double StrongMonotonicityModulus(const OperatorSpec& op,
                                 const std::vector<Vec>& points,
                                 double step = 1e-3);

struct SamplingAudit {
  double hit_frequency = 0.0;  // share of trials inside the radius
  double radius = 0.0;
};

// Repeats SampleBatch `trials` times at x with batch size m and counts how
// often ||mean - F(x)|| <= 4 nu / sqrt(m).
SamplingAudit AuditSampling(const OperatorSpec& op, const Vec& x,
                            std::int64_t m, int trials, StreamId stream);

}  // namespace sqvi

#endif  // SQVI_OPERATOR_H_
