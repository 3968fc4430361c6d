#ifndef SQVI_PROBLEMS_H_
#define SQVI_PROBLEMS_H_

#include <sqvi/problem.h>
#include <sqvi/types.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sqvi {

// ---------------------------------------------------------------------------
// Translated-box QVI: F(x) = A x + c, K(x) = slope * x + [lo, hi].

struct TranslatedBoxSpec {
  int n = 20;
  double shift_slope = 0.05;
  std::uint64_t seed = 7;
  // Random operators use A = M^T M + mu I scaled so that lambda_min / L is at
  // least `ratio`.
  double mu = 4.0;
  double ratio = 0.8;
  double offset_scale = 2.0;  // c ~ N(0, offset_scale^2) per coordinate
  std::optional<Mat> matrix;
  std::optional<Vec> offset;
  std::optional<Vec> box_lo;  // default -1
  std::optional<Vec> box_hi;  // default +1
  double noise_level = 0.0;
  double margin = 1.0;  // ambient box slack beyond the invariant region
};

// Throws ConstructionFailed when 2 slope + sqrt(1 - mu_F^2/L^2) >= 1.
ProblemInstance MakeTranslatedBoxQvi(const TranslatedBoxSpec& spec);

// ---------------------------------------------------------------------------
// Over-parameterized regression game.

struct RegressionGameData {
  int players = 0;
  int dim = 0;  // parameters per player
  Mat a_train;  // (players * n_train) x (players * dim)
  Vec b_train;
  std::vector<Mat> a_val;
  std::vector<Vec> b_val;
};

struct SyntheticGameSpec {
  int players = 10;
  int points = 250;
  int features = 25;
  std::uint64_t seed = 1;
  // Training rows of player i+1 that also load on player i's parameters.
  int overlap = 2;
  double feature_scale = 1.0;
  double coupling_scale = 0.05;
  double noise = 0.01;
  double train_fraction = 0.8;
};

RegressionGameData MakeSyntheticGameData(const SyntheticGameSpec& spec);

// Splits the rows evenly among players (remainder dropped), then each
// player's rows into a leading training part and a trailing validation part.
// Throws ShapeError if some player would get no training or validation row.
RegressionGameData MakeDatasetGameData(const Mat& features,
                                       const Vec& targets, int players,
                                       int overlap = 0,
                                       double train_fraction = 0.8,
                                       double coupling_scale = 0.05);

struct RegressionGameOptions {
  double lambda = 10.0;  // ball radius of each X_i
  double sigma = 1e-2;   // regularizer of the projection subproblem
  double noise_level = 0.0;
  std::uint64_t seed = 1;
  int audit_triples = 1000;
  double gamma_safety = 1.5;
  std::optional<double> gamma;  // skip the audit when given
};

ProblemInstance MakeRegressionGame(const RegressionGameData& data,
                                   const RegressionGameOptions& options);

// Quantities used by audits of a regression-game instance.
struct RegressionGameAudit {
  std::vector<Vec> lower_feasible_points;  // points of argmin l over X
  double qg_estimate = 0.0;
  double strong_monotonicity = 0.0;
};

// Points are drawn from argmin l inside the balls around the reference
// solution. Throws NoReferenceSolution when the game has none.
RegressionGameAudit AuditRegressionGame(const RegressionGameData& data,
                                        const ProblemInstance& game,
                                        int points, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Coupled-constraint saddle point:
//   min_{u in U(w)} max_{w in W(u)} 1/2 u'Pu + u'Bw - 1/2 w'Qw + p'u + q'w
// with U(w) = {u in box_u : C_u u + C_w w <= d} and W(u) likewise.

struct CoupledSpSpec {
  Mat p, b, q;
  Vec p_lin, q_lin;
  Mat coupling_u, coupling_w;  // zero rows for no coupling
  Vec coupling_rhs;
  Vec u_lo, u_hi, w_lo, w_hi;
  double noise_level = 0.0;
  std::uint64_t seed = 1;
  int audit_triples = 100;
  std::int64_t audit_budget = 20000;
  double gamma_safety = 1.5;
  std::optional<double> gamma;
};

ProblemInstance MakeCoupledSp(const CoupledSpSpec& spec);

// ---------------------------------------------------------------------------

struct LibsvmData {
  Mat features;
  Vec targets;
};

// Dense read of "label idx:val ..." lines with 1-based ascending indices.
// Throws IoError, EmptyFile, ParseError (with line number).
LibsvmData LoadLibsvm(const std::string& path);
LibsvmData ParseLibsvm(const std::string& text);

}  // namespace sqvi

#endif  // SQVI_PROBLEMS_H_
