#include <sqvi/operator.h>
#include <sqvi/problems.h>
#include <sqvi/projection.h>

#include "internal.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

namespace sqvi {

namespace {

// min 1/2 y'(V diag(lam) V')y - z'y over ||y|| <= radius, lam >= 0. Zero
// eigenvalues are treated as a pseudo-inverse at the interior candidate.
Vec BallQuadratic(const Mat& v, const Vec& lam, const Vec& z, double radius) {
  const Vec w = v.transpose() * z;
  const double cut = 1e-12 * std::max(1.0, lam.maxCoeff());
  Vec coef(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    coef[j] = lam[j] > cut ? w[j] / lam[j] : 0.0;
  }
  if (coef.norm() <= radius) return v * coef;
  auto norm_at = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      const double c = w[j] / (std::max(lam[j], 0.0) + nu);
      s += c * c;
    }
    return std::sqrt(s);
  };
  double lo = 0.0;
  double hi = w.norm() / radius;
  for (int it = 0; it < 200 && hi - lo > 1e-300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (norm_at(mid) > radius ? lo : hi) = mid;
  }
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    coef[j] = w[j] / (std::max(lam[j], 0.0) + hi);
  }
  // `hi` keeps the point feasible; rescale away the last rounding excess.
  const double nrm = coef.norm();
  if (nrm > radius) coef *= radius / nrm;
  return v * coef;
}

struct GameModel {
  int players = 0;
  int dim = 0;
  Mat a;  // training matrix
  Vec b;
  std::vector<Mat> gram;  // A_i' A_i
  std::vector<Mat> eigvec;
  std::vector<Vec> eigval;
  std::vector<Mat> h;     // A_i^val' A_i^val
  std::vector<Vec> hb;    // A_i^val' b_i^val
  double lambda = 1.0;
  double sigma = 1e-2;

  Eigen::Index Off(int i) const { return static_cast<Eigen::Index>(i) * dim; }

  // c_i = A_i'(A x - b) - G_i x_i, so grad_i h(x, y) = c_i + G_i y_i.
  Vec Coupling(const Vec& x) const {
    const Vec e = a * x - b;
    Vec c(x.size());
    for (int i = 0; i < players; ++i) {
      c.segment(Off(i), dim) = a.middleCols(Off(i), dim).transpose() * e -
                               gram[i] * x.segment(Off(i), dim);
    }
    return c;
  }

  double Value(const Vec& x, const Vec& y) const {
    const Vec e = a * x - b;
    double v = 0.0;
    for (int i = 0; i < players; ++i) {
      const Vec ri = e + a.middleCols(Off(i), dim) *
                             (y.segment(Off(i), dim) - x.segment(Off(i), dim));
      v += 0.5 * ri.squaredNorm();
    }
    return v;
  }

  Vec RegularizedProjection(const Vec& x, const Vec& u) const {
    const Vec c = Coupling(x);
    Vec y(x.size());
    for (int i = 0; i < players; ++i) {
      const Vec z = u.segment(Off(i), dim) - c.segment(Off(i), dim) / sigma;
      const Vec lam = Vec::Ones(dim) + eigval[i] / sigma;
      y.segment(Off(i), dim) = BallQuadratic(eigvec[i], lam, z, lambda);
    }
    return y;
  }

  double MinValue(const Vec& x) const {
    const Vec c = Coupling(x);
    Vec y(x.size());
    for (int i = 0; i < players; ++i) {
      y.segment(Off(i), dim) =
          BallQuadratic(eigvec[i], eigval[i], -c.segment(Off(i), dim), lambda);
    }
    return Value(x, y);
  }

  Vec ProjectBalls(Vec x) const {
    for (int i = 0; i < players; ++i) {
      auto seg = x.segment(Off(i), dim);
      const double n = seg.norm();
      if (n > lambda) seg *= lambda / n;
    }
    return x;
  }
};

void CheckData(const RegressionGameData& d) {
  if (d.players < 1 || d.dim < 1) {
    throw Error(ErrorCode::kShapeError, "players and dim must be >= 1");
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(d.players) * d.dim;
  if (d.a_train.cols() != cols || d.a_train.rows() != d.b_train.size()) {
    throw Error(ErrorCode::kShapeError, "training matrix shape");
  }
  if (static_cast<int>(d.a_val.size()) != d.players ||
      static_cast<int>(d.b_val.size()) != d.players) {
    throw Error(ErrorCode::kShapeError, "validation blocks per player");
  }
  for (int i = 0; i < d.players; ++i) {
    if (d.a_val[i].cols() != d.dim || d.a_val[i].rows() != d.b_val[i].size()) {
      throw Error(ErrorCode::kShapeError,
                  "validation block " + std::to_string(i) + " shape");
    }
  }
}

// Rows of player i own column block i; the first `overlap` rows of player
// i+1 (cyclically) load on block i as well, scaled by `coupling`.
Mat AssembleTraining(const std::vector<Mat>& own, const std::vector<Mat>& extra,
                     int overlap) {
  const int players = static_cast<int>(own.size());
  const Eigen::Index dim = own[0].cols();
  std::vector<Eigen::Index> row_off(players + 1, 0);
  for (int i = 0; i < players; ++i) row_off[i + 1] = row_off[i] + own[i].rows();
  Mat a = Mat::Zero(row_off[players], players * dim);
  for (int i = 0; i < players; ++i) {
    a.block(row_off[i], i * dim, own[i].rows(), dim) = own[i];
    if (players > 1 && overlap > 0) {
      const int next = (i + 1) % players;
      const Eigen::Index k = std::min<Eigen::Index>(overlap, own[next].rows());
      a.block(row_off[next], i * dim, k, dim) += extra[i].topRows(k);
    }
  }
  return a;
}

Mat Gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd) {
  std::normal_distribution<double> normal(0.0, sd);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

std::pair<int, int> SplitRows(int per_player, double train_fraction) {
  const int n_tr =
      static_cast<int>(std::floor(train_fraction * per_player + 0.5));
  return {n_tr, per_player - n_tr};
}

// Orthonormal basis of the null space of a (columns).
Mat NullBasis(const Mat& a, Eigen::Index cols) {
  if (a.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, s.size() ? s[0] : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < s.size(); ++j) rank += s[j] > tol ? 1 : 0;
  return svd.matrixV().rightCols(cols - rank);
}

double MaxStep(const Vec& anchor, const Vec& dir, int players,
                         int dim, double radius) {
  double step = internal::kInf;
  for (int i = 0; i < players; ++i) {
    const Vec a = anchor.segment(static_cast<Eigen::Index>(i) * dim, dim);
    const Vec d = dir.segment(static_cast<Eigen::Index>(i) * dim, dim);
    const double dd = d.squaredNorm();
    if (dd == 0.0) continue;
    const double ad = a.dot(d);
    const double slack = radius * radius - a.squaredNorm();
    step = std::min(step, (-ad + std::sqrt(std::max(0.0, ad * ad + dd * slack))) / dd);
  }
  return std::isfinite(step) ? step : 0.0;
}

}  // namespace

RegressionGameData MakeSyntheticGameData(const SyntheticGameSpec& spec) {
  if (spec.players < 1 || spec.features < 1 || spec.points < spec.players) {
    throw Error(ErrorCode::kShapeError,
                "synthetic game needs points >= players >= 1");
  }
  const int per = spec.points / spec.players;
  const auto [n_tr, n_val] = SplitRows(per, spec.train_fraction);
  if (n_tr < 1 || n_val < 1) {
    throw Error(ErrorCode::kShapeError,
                "each player needs a training and a validation row");
  }
  Rng rng = StreamId{spec.seed}.Child(1).MakeRng();
  const int d = spec.features;

  std::vector<Mat> own, extra, val;
  std::vector<Vec> planted;
  for (int i = 0; i < spec.players; ++i) {
    own.push_back(Gaussian(n_tr, d, rng, spec.feature_scale));
    val.push_back(Gaussian(n_val, d, rng, spec.feature_scale));
    extra.push_back(Gaussian(std::max(spec.overlap, 0), d, rng,
                             spec.feature_scale * spec.coupling_scale));
    planted.push_back(Gaussian(d, 1, rng, 1.0 / std::sqrt(d)).col(0));
  }

  RegressionGameData data;
  data.players = spec.players;
  data.dim = d;
  data.a_train = AssembleTraining(own, extra, spec.overlap);
  Vec w(static_cast<Eigen::Index>(spec.players) * d);
  for (int i = 0; i < spec.players; ++i) w.segment(i * d, d) = planted[i];
  std::normal_distribution<double> noise(0.0, 1.0);
  data.b_train = data.a_train * w;
  for (Eigen::Index r = 0; r < data.b_train.size(); ++r) {
    data.b_train[r] += spec.noise * noise(rng);
  }
  for (int i = 0; i < spec.players; ++i) {
    Vec bv = val[i] * planted[i];
    for (Eigen::Index r = 0; r < bv.size(); ++r) bv[r] += spec.noise * noise(rng);
    data.a_val.push_back(val[i]);
    data.b_val.push_back(bv);
  }
  return data;
}

RegressionGameData MakeDatasetGameData(const Mat& features,
                                       const Vec& targets, int players,
                                       int overlap, double train_fraction,
                                       double coupling_scale) {
  if (players < 1) throw Error(ErrorCode::kShapeError, "players must be >= 1");
  if (features.rows() != targets.size()) {
    throw Error(ErrorCode::kShapeError, "features and targets differ in rows");
  }
  if (features.rows() < players) {
    throw Error(ErrorCode::kShapeError,
                "dataset has " + std::to_string(features.rows()) +
                    " rows, fewer than " + std::to_string(players) +
                    " players");
  }
  const int per = static_cast<int>(features.rows() / players);
  const auto [n_tr, n_val] = SplitRows(per, train_fraction);
  if (n_tr < 1 || n_val < 1) {
    throw Error(ErrorCode::kShapeError,
                "each player needs a training and a validation row");
  }
  const Eigen::Index d = features.cols();
  std::vector<Mat> own, extra;
  RegressionGameData data;
  data.players = players;
  data.dim = static_cast<int>(d);
  Vec b(static_cast<Eigen::Index>(players) * n_tr);
  for (int i = 0; i < players; ++i) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(i) * per;
    own.push_back(features.middleRows(r0, n_tr));
    b.segment(static_cast<Eigen::Index>(i) * n_tr, n_tr) =
        targets.segment(r0, n_tr);
    data.a_val.push_back(features.middleRows(r0 + n_tr, n_val));
    data.b_val.push_back(targets.segment(r0 + n_tr, n_val));
  }
  for (int i = 0; i < players; ++i) {
    const int next = (i + 1) % players;
    extra.push_back(coupling_scale * own[next].topRows(std::min(overlap, n_tr)));
  }
  data.a_train = AssembleTraining(own, extra, std::min(overlap, n_tr));
  data.b_train = b;
  return data;
}

ProblemInstance MakeRegressionGame(const RegressionGameData& data,
                                   const RegressionGameOptions& options) {
  CheckData(data);
  if (!(options.lambda > 0.0) || !(options.sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "lambda and sigma must be > 0");
  }
  auto model = std::make_shared<GameModel>();
  GameModel& g = *model;
  g.players = data.players;
  g.dim = data.dim;
  g.a = data.a_train;
  g.b = data.b_train;
  g.lambda = options.lambda;
  g.sigma = options.sigma;
  const int n = data.players * data.dim;
  double curvature = 0.0;
  double lipschitz = 0.0;
  for (int i = 0; i < g.players; ++i) {
    const Mat ai = g.a.middleCols(g.Off(i), g.dim);
    g.gram.push_back(ai.transpose() * ai);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g.gram.back());
    g.eigvec.push_back(eig.eigenvectors());
    g.eigval.push_back(eig.eigenvalues().cwiseMax(0.0));
    curvature = std::max(curvature, g.eigval.back().maxCoeff());
    g.h.push_back(data.a_val[i].transpose() * data.a_val[i]);
    g.hb.push_back(data.a_val[i].transpose() * data.b_val[i]);
    lipschitz = std::max(
        lipschitz,
        Eigen::SelfAdjointEigenSolver<Mat>(g.h.back(), Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff());
  }

  std::vector<SimpleSet> balls;
  for (int i = 0; i < g.players; ++i) {
    balls.push_back(SimpleSet::Ball(Vec::Zero(g.dim), g.lambda));
  }
  const SimpleSet ambient = SimpleSet::Product(balls);

  ProblemInstance p;
  p.name = "regression_game";
  p.ambient = ambient;
  p.x0 = Vec::Zero(n);
  p.noise_level = options.noise_level;

  MeanField mean = [model](const Vec& x) -> Vec {
    const GameModel& m = *model;
    Vec f(x.size());
    for (int i = 0; i < m.players; ++i) {
      f.segment(m.Off(i), m.dim) =
          m.h[i] * x.segment(m.Off(i), m.dim) - m.hb[i];
    }
    return f;
  };

  map_kind::ArgminSet spec;
  spec.value = [model](const Vec& x, const Vec& y) {
    return model->Value(x, y);
  };
  spec.gradient = [model](const Vec& x, const Vec& y) -> Vec {
    const GameModel& m = *model;
    Vec grad = m.Coupling(x);
    for (int i = 0; i < m.players; ++i) {
      grad.segment(m.Off(i), m.dim) += m.gram[i] * y.segment(m.Off(i), m.dim);
    }
    return grad;
  };
  spec.gradient_at = [model](const Vec& x) {
    const Vec c = model->Coupling(x);
    return std::function<Vec(const Vec&)>([model, c](const Vec& y) -> Vec {
      const GameModel& m = *model;
      Vec grad = c;
      for (int i = 0; i < m.players; ++i) {
        grad.segment(m.Off(i), m.dim).noalias() +=
            m.gram[i] * y.segment(m.Off(i), m.dim);
      }
      return grad;
    });
  };
  spec.curvature = curvature;
  spec.feasible = ambient;
  spec.sigma = g.sigma;
  spec.exact_projector = [model](const Vec& x, const Vec& u) -> Vec {
    return model->RegularizedProjection(x, u);
  };
  spec.min_value = [model](const Vec& x) { return model->MinValue(x); };
  p.map = MakeArgminSetMap(spec, 0.0);

  // Minimum of the training loss over the product of balls.
  const Vec x_ls = g.a.completeOrthogonalDecomposition().solve(g.b);
  Vec x_low = x_ls;
  bool inside = true;
  for (int i = 0; i < g.players; ++i) {
    inside = inside && x_ls.segment(g.Off(i), g.dim).norm() <= g.lambda;
  }
  if (!inside) {
    const double lf =
        Eigen::JacobiSVD<Mat>(g.a).singularValues()(0) *
        Eigen::JacobiSVD<Mat>(g.a).singularValues()(0);
    Vec y = g.ProjectBalls(x_ls);
    Vec z = y;
    double theta = 1.0;
    for (int it = 0; it < 2000000; ++it) {
      const Vec grad_z = g.a.transpose() * (g.a * z - g.b);
      const Vec y_next = g.ProjectBalls(z - grad_z / lf);
      const double theta_next =
          0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      z = y_next + ((theta - 1.0) / theta_next) * (y_next - y);
      y = y_next;
      theta = theta_next;
      if (it % 100 == 0) {
        const Vec grad_y = g.a.transpose() * (g.a * y - g.b);
        const double gm = lf * (y - g.ProjectBalls(y - grad_y / lf)).norm();
        if (gm <= 1e-10) break;
        z = y;  // restart
        theta = 1.0;
      }
    }
    x_low = y;
  }
  const double low_min = 0.5 * (g.a * x_low - g.b).squaredNorm();
  p.lower_subopt = [model, low_min](const Vec& x) {
    return std::max(0.0, 0.5 * (model->a * x - model->b).squaredNorm() -
                             low_min);
  };

  // Solution set of the unregularized game when the balls are inactive:
  // A x = A x_ls together with N_i'(H_i x_i - A_i^val' b_i^val) = 0.
  std::vector<Mat> nulls;
  Eigen::Index extra_rows = 0;
  for (int i = 0; i < g.players; ++i) {
    nulls.push_back(NullBasis(g.a.middleCols(g.Off(i), g.dim), g.dim));
    extra_rows += nulls.back().cols();
  }
  Mat e = Mat::Zero(g.a.rows() + extra_rows, n);
  Vec f(g.a.rows() + extra_rows);
  e.topRows(g.a.rows()) = g.a;
  f.head(g.a.rows()) = g.a * x_ls;
  Eigen::Index row = g.a.rows();
  for (int i = 0; i < g.players; ++i) {
    const Eigen::Index k = nulls[i].cols();
    e.block(row, g.Off(i), k, g.dim) = nulls[i].transpose() * g.h[i];
    f.segment(row, k) = nulls[i].transpose() * g.hb[i];
    row += k;
  }
  double mu_f = 0.0;
  bool have_reference = false;
  try {
    const SimpleSet solutions = SimpleSet::Affine(e, f);
    const Vec center = solutions.Center();
    have_reference = inside;
    for (int i = 0; i < g.players && have_reference; ++i) {
      have_reference = center.segment(g.Off(i), g.dim).norm() < g.lambda;
    }
    if (have_reference) {
      p.solution_projector = [solutions](const Vec& x) -> Vec {
        return ProjectSimple(solutions, x);
      };
    }
    // Quadratic growth on argmin l: Rayleigh minimum of H on
    // null(A) minus null(E).
    const Mat qa = NullBasis(g.a, n);
    const Mat qe = NullBasis(e, n);
    if (qa.cols() > qe.cols()) {
      const Mat proj = qa * qa.transpose() - qe * qe.transpose();
      Eigen::SelfAdjointEigenSolver<Mat> pe(proj);
      const Mat v = pe.eigenvectors().rightCols(qa.cols() - qe.cols());
      Mat hv(n, v.cols());
      for (Eigen::Index j = 0; j < v.cols(); ++j) hv.col(j) = mean(v.col(j)) -
                                                              mean(Vec::Zero(n));
      const Mat ray = v.transpose() * hv;
      mu_f = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (ray + ray.transpose()),
                                                Eigen::EigenvaluesOnly)
                 .eigenvalues()(0);
    }
  } catch (const Error&) {
    have_reference = false;
  }

  p.op = MakeNoisyOperator(n, mean, options.noise_level, lipschitz, mu_f);
  p.lipschitz = lipschitz;
  p.qg_mu = mu_f;

  // Contractivity of the regularized projection, audited on random triples.
  double audit_ratio = 0.0;
  if (options.gamma) {
    p.gamma = *options.gamma;
  } else {
    Rng rng = StreamId{options.seed}.Child(2).MakeRng();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_point = [&]() {
      Vec x(n);
      for (int j = 0; j < n; ++j) x[j] = normal(rng);
      for (int i = 0; i < g.players; ++i) {
        auto seg = x.segment(g.Off(i), g.dim);
        seg *= g.lambda * unit(rng) / std::max(seg.norm(), 1e-300);
      }
      return x;
    };
    std::vector<Triple> triples;
    for (int t = 0; t < options.audit_triples; ++t) {
      Vec x = random_point();
      Vec y = random_point();
      Vec u = random_point();
      triples.emplace_back(std::move(x), std::move(y), std::move(u));
    }
    const ContractivityAudit audit =
        AuditContractivity(p.map, spec.exact_projector, triples);
    audit_ratio = audit.max_ratio;
    p.gamma = options.gamma_safety * audit.max_ratio;
  }
  p.map.gamma = p.gamma;

  p.metadata = {{"problem", "regression_game"},
                {"players", g.players},
                {"dim", g.dim},
                {"train_rows", g.a.rows()},
                {"lambda", g.lambda},
                {"sigma", g.sigma},
                {"L", lipschitz},
                {"mu_F", mu_f},
                {"gamma", p.gamma},
                {"gamma_audit_ratio", audit_ratio},
                {"gamma_safety", options.gamma_safety},
                {"lower_min", low_min},
                {"noise_level", options.noise_level},
                {"has_reference", have_reference}};
  return p;
}

RegressionGameAudit AuditRegressionGame(const RegressionGameData& data,
                                        const ProblemInstance& game,
                                        int points, std::uint64_t seed) {
  CheckData(data);
  if (game.name != "regression_game" ||
      !std::holds_alternative<map_kind::ArgminSet>(game.map.variant)) {
    throw Error(ErrorCode::kWrongProblemKind, "not a regression game");
  }
  if (!game.has_reference()) {
    throw Error(ErrorCode::kNoReferenceSolution,
                "regression game has no reference solution set");
  }
  const int n = data.players * data.dim;
  RequireDim(game.x0, n, "game dimension");
  const double lambda = game.metadata.at("lambda").get<double>();
  const Mat qa = NullBasis(data.a_train, n);
  const Vec anchor = game.solution_projector(game.x0);

  RegressionGameAudit audit;
  Rng rng = StreamId{seed}.Child(3).MakeRng();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < points && qa.cols() > 0; ++t) {
    Vec xi(qa.cols());
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi[j] = normal(rng);
    const Vec dir = qa * xi;
    // Largest step keeping every block within 0.9 lambda.
    double reach = MaxStep(anchor, dir, data.players, data.dim,
                                     0.9 * lambda);
    audit.lower_feasible_points.push_back(anchor + unit(rng) * reach * dir);
  }
  audit.qg_estimate =
      EstimateQg(game.op, game.solution_projector, audit.lower_feasible_points);
  std::vector<Vec> probe = {anchor};
  audit.strong_monotonicity = StrongMonotonicityModulus(game.op, probe);
  return audit;
}

}  // namespace sqvi
