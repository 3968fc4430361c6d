#include <sqvi/diagnostics.h>
#include <sqvi/problems.h>

#include <cmath>
#include <random>

namespace sqvi {

namespace {

Mat GaussianMatrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace

ProblemInstance MakeTranslatedBoxQvi(const TranslatedBoxSpec& spec) {
  if (spec.n < 1) {
    throw Error(ErrorCode::kInvalidParameters, "n must be >= 1");
  }
  if (!(spec.shift_slope >= 0.0 && spec.shift_slope < 1.0)) {
    throw Error(ErrorCode::kInvalidParameters, "shift slope must be in [0,1)");
  }
  const int n = spec.n;
  Rng rng = StreamId{spec.seed}.Child(0).MakeRng();

  Mat a;
  if (spec.matrix) {
    a = *spec.matrix;
    if (a.rows() != n || a.cols() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "operator matrix shape");
    }
  } else {
    if (!(spec.ratio > 0.0 && spec.ratio <= 1.0) || !(spec.mu > 0.0)) {
      throw Error(ErrorCode::kInvalidParameters, "need mu > 0, ratio in (0,1]");
    }
    const Mat m = GaussianMatrix(n, n, rng);
    Mat gram = m.transpose() * m;
    const double top =
        Eigen::SelfAdjointEigenSolver<Mat>(gram, Eigen::EigenvaluesOnly)
            .eigenvalues()(n - 1);
    const double target = spec.mu / spec.ratio - spec.mu;
    if (top > 0.0) gram *= target / top;
    a = gram + spec.mu * Mat::Identity(n, n);
  }

  Vec c;
  if (spec.offset) {
    c = *spec.offset;
    RequireDim(c, n, "offset");
  } else {
    std::normal_distribution<double> normal(0.0, spec.offset_scale);
    c.resize(n);
    for (int i = 0; i < n; ++i) c[i] = normal(rng);
  }

  const Vec lo = spec.box_lo ? *spec.box_lo : Vec::Constant(n, -1.0);
  const Vec hi = spec.box_hi ? *spec.box_hi : Vec::Constant(n, 1.0);
  RequireDim(lo, n, "box_lo");
  RequireDim(hi, n, "box_hi");

  const double lipschitz = Eigen::JacobiSVD<Mat>(a).singularValues()(0);
  const Mat sym = 0.5 * (a + a.transpose());
  const double mu_f =
      Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly)
          .eigenvalues()(0);
  const double slope = spec.shift_slope;
  const double gamma = 2.0 * slope;
  if (!(mu_f > 0.0) ||
      !(gamma + std::sqrt(std::max(0.0, 1.0 - mu_f * mu_f /
                                                (lipschitz * lipschitz))) <
        1.0)) {
    throw Error(ErrorCode::kConstructionFailed,
                "2*slope + sqrt(1 - mu^2/L^2) must be < 1 (mu = " +
                    std::to_string(mu_f) + ", L = " +
                    std::to_string(lipschitz) + ")");
  }

  ProblemInstance p;
  p.name = "translated_box";
  p.op = MakeAffineOperator(a, c, spec.noise_level, mu_f);
  p.op.lipschitz = lipschitz;
  p.map = MakeTranslatedSetMap(
      SimpleSet::Box(lo, hi), [slope](const Vec& x) -> Vec { return slope * x; },
      slope);
  p.map.gamma = gamma;
  const double scale = 1.0 / (1.0 - slope);
  p.ambient = SimpleSet::Box((lo * scale).array() - spec.margin,
                             (hi * scale).array() + spec.margin);
  p.x0 = p.ambient.Center();
  p.lipschitz = lipschitz;
  p.qg_mu = mu_f;
  p.gamma = gamma;
  p.noise_level = spec.noise_level;

  // Reference solution: fixed-point iteration of the exact natural map; with
  // eta = mu/L^2 it contracts with factor gamma + sqrt(1 - mu^2/L^2).
  const double eta = mu_f / (lipschitz * lipschitz);
  Vec x = p.x0;
  bool converged = false;
  int polish = 0;
  for (int it = 0; it < 10000000 && polish < 1000; ++it) {
    const Vec next = TranslatedProjection(p.map, x, x - eta * (a * x + c));
    const double change = (next - x).norm();
    x = next;
    if (change <= 1e-12) converged = true;
    if (converged) ++polish;
    if (change == 0.0) break;
  }
  if (!converged) {
    throw Error(ErrorCode::kConstructionFailed,
                "reference fixed-point iteration did not converge");
  }
  const Vec x_star = x;
  p.solution_projector = [x_star](const Vec&) -> Vec { return x_star; };

  p.metadata = {{"problem", "translated_box"},
                {"n", n},
                {"shift_slope", slope},
                {"seed", spec.seed},
                {"L", lipschitz},
                {"mu_F", mu_f},
                {"gamma", gamma},
                {"noise_level", spec.noise_level},
                {"reference_residual",
                 (x_star - TranslatedProjection(p.map, x_star,
                                                x_star - eta * (a * x_star + c)))
                     .norm()}};
  return p;
}

}  // namespace sqvi
