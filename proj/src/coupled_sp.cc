#include <sqvi/operator.h>
#include <sqvi/problems.h>
#include <sqvi/projection.h>

#include <algorithm>
#include <random>

namespace sqvi {

namespace {

double MinEig(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  const Mat sym = 0.5 * (m + m.transpose());
  return Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly)
      .eigenvalues()(0);
}

void RequireShape(const Mat& m, Eigen::Index rows, Eigen::Index cols,
                  const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
}

// Row-wise extremes of c z over the box [lo, hi].
Vec RowMin(const Mat& c, const Vec& lo, const Vec& hi) {
  return (c.cwiseMax(0.0) * lo + c.cwiseMin(0.0) * hi);
}
Vec RowMax(const Mat& c, const Vec& lo, const Vec& hi) {
  return (c.cwiseMax(0.0) * hi + c.cwiseMin(0.0) * lo);
}

}  // namespace

ProblemInstance MakeCoupledSp(const CoupledSpSpec& spec) {
  const Eigen::Index nu = spec.p.rows();
  const Eigen::Index nw = spec.q.rows();
  if (nu < 1 || nw < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "empty player block");
  }
  RequireShape(spec.p, nu, nu, "P");
  RequireShape(spec.q, nw, nw, "Q");
  RequireShape(spec.b, nu, nw, "B");
  RequireDim(spec.p_lin, nu, "p");
  RequireDim(spec.q_lin, nw, "q");
  RequireDim(spec.u_lo, nu, "u_lo");
  RequireDim(spec.u_hi, nu, "u_hi");
  RequireDim(spec.w_lo, nw, "w_lo");
  RequireDim(spec.w_hi, nw, "w_hi");
  const Eigen::Index rows = spec.coupling_u.rows();
  RequireShape(spec.coupling_u, rows, nu, "C_u");
  RequireShape(spec.coupling_w, rows, nw, "C_w");
  RequireDim(spec.coupling_rhs, rows, "d");
  if ((spec.u_lo.array() > spec.u_hi.array()).any() ||
      (spec.w_lo.array() > spec.w_hi.array()).any()) {
    throw Error(ErrorCode::kConstructionFailed, "box with lo > hi");
  }
  if (MinEig(spec.p) < -1e-12 || MinEig(spec.q) < -1e-12) {
    throw Error(ErrorCode::kConstructionFailed,
                "P and Q must be positive semidefinite");
  }
  // K(x) must stay nonempty (with slack) for every x in the ambient box.
  if (rows > 0) {
    const Vec u_side = RowMin(spec.coupling_u, spec.u_lo, spec.u_hi) +
                       RowMax(spec.coupling_w, spec.w_lo, spec.w_hi);
    const Vec w_side = RowMax(spec.coupling_u, spec.u_lo, spec.u_hi) +
                       RowMin(spec.coupling_w, spec.w_lo, spec.w_hi);
    if (((u_side - spec.coupling_rhs).array() >= 0.0).any() ||
        ((w_side - spec.coupling_rhs).array() >= 0.0).any()) {
      throw Error(ErrorCode::kConstructionFailed,
                  "coupling constraints leave U(w) or W(u) without interior "
                  "for some opponent strategy in the box");
    }
  }

  const Eigen::Index n = nu + nw;
  Mat m(n, n);
  m << spec.p, spec.b, -spec.b.transpose(), spec.q;
  Vec c(n);
  c << spec.p_lin, -spec.q_lin;
  const double lipschitz = Eigen::JacobiSVD<Mat>(m).singularValues()(0);
  const double mu_f = std::max(0.0, MinEig(m));

  Vec lo(n), hi(n);
  lo << spec.u_lo, spec.w_lo;
  hi << spec.u_hi, spec.w_hi;
  const SimpleSet box = SimpleSet::Box(lo, hi);

  ProblemInstance p;
  p.name = "coupled_saddle_point";
  p.op = MakeAffineOperator(m, c, spec.noise_level, mu_f);
  p.ambient = box;
  p.x0 = box.Center();
  p.lipschitz = lipschitz;
  p.qg_mu = mu_f;
  p.noise_level = spec.noise_level;

  double audit_ratio = 0.0;
  if (rows == 0) {
    p.map = MakeFixedSetMap(box);
    p.gamma = 0.0;
  } else {
    const Mat cu = spec.coupling_u;
    const Mat cw = spec.coupling_w;
    const Vec d = spec.coupling_rhs;
    map_kind::NonlinearConvex nc;
    nc.num_constraints = static_cast<int>(2 * rows);
    nc.g = [cu, cw, d, nu, nw](const Vec& x, const Vec& y) -> Vec {
      Vec g(2 * d.size());
      g.head(d.size()) = cu * y.head(nu) + cw * x.tail(nw) - d;
      g.tail(d.size()) = cu * x.head(nu) + cw * y.tail(nw) - d;
      return g;
    };
    Mat jac = Mat::Zero(2 * rows, n);
    jac.block(0, 0, rows, nu) = cu;
    jac.block(rows, nu, rows, nw) = cw;
    nc.jacobian = [jac](const Vec&, const Vec&) -> Mat { return jac; };
    nc.ambient = box;
    nc.jacobian_bound = Eigen::JacobiSVD<Mat>(jac).singularValues()(0);
    nc.curvature_bound = 0.0;
    p.map = MakeNonlinearConvexMap(std::move(nc), 0.0);

    if (spec.gamma) {
      p.gamma = *spec.gamma;
    } else {
      Rng rng = StreamId{spec.seed}.Child(4).MakeRng();
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      auto in_box = [&]() {
        Vec x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
        }
        return x;
      };
      const Vec span = hi - lo;
      auto around = [&]() {
        Vec x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          x[i] = lo[i] - span[i] + 3.0 * span[i] * unit(rng);
        }
        return x;
      };
      std::vector<Triple> triples;
      for (int t = 0; t < spec.audit_triples; ++t) {
        Vec x = in_box();
        Vec y = in_box();
        triples.emplace_back(std::move(x), std::move(y), around());
      }
      const SetValuedMap& map = p.map;
      const std::int64_t budget = spec.audit_budget;
      const ContractivityAudit audit = AuditContractivity(
          map,
          [&map, budget](const Vec& x, const Vec& u) {
            return InexactProject(map, x, u, budget).point;
          },
          triples);
      audit_ratio = audit.max_ratio;
      p.gamma = spec.gamma_safety * audit.max_ratio;
    }
  }
  p.map.gamma = p.gamma;

  p.metadata = {{"problem", "coupled_saddle_point"},
                {"n_u", nu},
                {"n_w", nw},
                {"coupling_rows", rows},
                {"L", lipschitz},
                {"mu_F", mu_f},
                {"gamma", p.gamma},
                {"gamma_audit_ratio", audit_ratio},
                {"gamma_safety", spec.gamma_safety},
                {"noise_level", spec.noise_level}};
  return p;
}

}  // namespace sqvi
