#include <sqvi/simple_set.h>

#include "internal.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace sqvi {

namespace {

using internal::kInf;
using internal::Overloaded;

Vec ProjectSimplexScaled(const Vec& u, double scale) {
  // Sort-based projection onto {y >= 0, sum y = scale}.
  const Eigen::Index n = u.size();
  std::vector<double> s(u.data(), u.data() + n);
  std::sort(s.begin(), s.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumulative += s[i];
    const double candidate = (cumulative - scale) / static_cast<double>(i + 1);
    if (s[i] - candidate > 0.0) theta = candidate;
  }
  return (u.array() - theta).max(0.0).matrix();
}

template <class Fn>
void ForEachBlock(const set_kind::Product& p, Fn&& fn) {
  Eigen::Index offset = 0;
  for (const auto& block : p.blocks) {
    fn(*block, offset);
    offset += block->dim();
  }
}

}  // namespace

SimpleSet SimpleSet::Ball(Vec center, double radius) {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "ball radius must be > 0");
  }
  const int n = static_cast<int>(center.size());
  return SimpleSet(set_kind::Ball{std::move(center), radius}, n);
}

SimpleSet SimpleSet::Box(Vec lo, Vec hi) {
  if (lo.size() != hi.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "box bounds differ in size");
  }
  if ((lo.array() > hi.array()).any()) {
    throw Error(ErrorCode::kInvalidParameters, "box requires lo <= hi");
  }
  const int n = static_cast<int>(lo.size());
  return SimpleSet(set_kind::Box{std::move(lo), std::move(hi)}, n);
}

SimpleSet SimpleSet::UniformBox(int dim, double lo, double hi) {
  return Box(Vec::Constant(dim, lo), Vec::Constant(dim, hi));
}

SimpleSet SimpleSet::Simplex(int dim, double scale) {
  if (dim < 1 || !(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "simplex needs dim>=1, scale>0");
  }
  return SimpleSet(set_kind::Simplex{dim, scale}, dim);
}

SimpleSet SimpleSet::Halfspaces(Mat a, Vec b) {
  if (a.rows() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "halfspace rows vs rhs");
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a.row(i).norm() == 0.0) {
      throw Error(ErrorCode::kInvalidParameters, "halfspace normal is zero");
    }
  }
  const int n = static_cast<int>(a.cols());
  return SimpleSet(set_kind::Halfspaces{std::move(a), std::move(b)}, n);
}

SimpleSet SimpleSet::Halfspace(const Vec& a, double b) {
  Mat row = a.transpose();
  return Halfspaces(std::move(row), Vec::Constant(1, b));
}

SimpleSet SimpleSet::WholeSpace(int dim) {
  return SimpleSet(set_kind::Halfspaces{Mat(0, dim), Vec(0)}, dim);
}

SimpleSet SimpleSet::Affine(Mat a, Vec b) {
  if (a.rows() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "affine rows vs rhs");
  }
  Mat pinv = a.completeOrthogonalDecomposition().pseudoInverse();
  // Reject inconsistent systems: the least-squares point must satisfy a y = b.
  const Vec y = pinv * b;
  if ((a * y - b).norm() > 1e-9 * (1.0 + b.norm())) {
    throw Error(ErrorCode::kInvalidParameters, "affine set is empty");
  }
  const int n = static_cast<int>(a.cols());
  return SimpleSet(set_kind::Affine{std::move(a), std::move(b), std::move(pinv)},
                   n);
}

SimpleSet SimpleSet::Product(const std::vector<SimpleSet>& blocks) {
  set_kind::Product p;
  int n = 0;
  for (const SimpleSet& b : blocks) {
    p.blocks.push_back(std::make_shared<const SimpleSet>(b));
    n += b.dim();
  }
  return SimpleSet(std::move(p), n);
}

std::string SimpleSet::name() const {
  return std::visit(
      Overloaded{[](const set_kind::Ball&) { return std::string("ball"); },
                 [](const set_kind::Box&) { return std::string("box"); },
                 [](const set_kind::Simplex&) { return std::string("simplex"); },
                 [](const set_kind::Halfspaces&) {
                   return std::string("halfspaces");
                 },
                 [](const set_kind::Affine&) { return std::string("affine"); },
                 [](const set_kind::Product&) {
                   return std::string("product");
                 }},
      kind_);
}

bool SimpleSet::has_closed_form() const {
  return std::visit(
      Overloaded{[](const set_kind::Halfspaces& h) { return h.a.rows() <= 1; },
                 [](const set_kind::Product& p) {
                   return std::all_of(p.blocks.begin(), p.blocks.end(),
                                      [](const auto& b) {
                                        return b->has_closed_form();
                                      });
                 },
                 [](const auto&) { return true; }},
      kind_);
}

double SimpleSet::Violation(const Vec& y) const {
  RequireDim(y, dim_, "point");
  return std::visit(
      Overloaded{
          [&](const set_kind::Ball& b) {
            return std::max(0.0, (y - b.center).norm() - b.radius);
          },
          [&](const set_kind::Box& b) {
            const double below = (b.lo - y).maxCoeff();
            const double above = (y - b.hi).maxCoeff();
            return std::max({0.0, below, above});
          },
          [&](const set_kind::Simplex& s) {
            return std::max({0.0, -y.minCoeff(), std::abs(y.sum() - s.scale)});
          },
          [&](const set_kind::Halfspaces& h) {
            if (h.a.rows() == 0) return 0.0;
            return std::max(0.0, (h.a * y - h.b).maxCoeff());
          },
          [&](const set_kind::Affine& a) {
            if (a.a.rows() == 0) return 0.0;
            return (a.a * y - a.b).cwiseAbs().maxCoeff();
          },
          [&](const set_kind::Product& p) {
            double worst = 0.0;
            ForEachBlock(p, [&](const SimpleSet& block, Eigen::Index off) {
              worst = std::max(worst,
                               block.Violation(y.segment(off, block.dim())));
            });
            return worst;
          }},
      kind_);
}

bool SimpleSet::Contains(const Vec& y, double tol) const {
  return Violation(y) <= tol;
}

Vec SimpleSet::Center() const {
  return std::visit(
      Overloaded{[&](const set_kind::Ball& b) -> Vec { return b.center; },
                 [&](const set_kind::Box& b) -> Vec {
                   return 0.5 * (b.lo + b.hi);
                 },
                 [&](const set_kind::Simplex& s) -> Vec {
                   return Vec::Constant(s.dim, s.scale / s.dim);
                 },
                 [&](const set_kind::Halfspaces& h) -> Vec {
                   // Closest point to the origin is a reasonable anchor; for
                   // a single halfspace it is exact.
                   Vec zero = Vec::Zero(dim_);
                   if (h.a.rows() <= 1) return ProjectSimple(*this, zero);
                   return zero;
                 },
                 [&](const set_kind::Affine& a) -> Vec { return a.pinv * a.b; },
                 [&](const set_kind::Product& p) -> Vec {
                   Vec c(dim_);
                   ForEachBlock(p, [&](const SimpleSet& block,
                                       Eigen::Index off) {
                     c.segment(off, block.dim()) = block.Center();
                   });
                   return c;
                 }},
      kind_);
}

double SimpleSet::EnclosingRadius() const {
  return std::visit(
      Overloaded{[](const set_kind::Ball& b) { return b.radius; },
                 [](const set_kind::Box& b) {
                   return 0.5 * (b.hi - b.lo).norm();
                 },
                 [](const set_kind::Simplex& s) {
                   return s.scale * std::sqrt(1.0 - 1.0 / s.dim);
                 },
                 [](const set_kind::Halfspaces&) { return kInf; },
                 [](const set_kind::Affine& a) {
                   // A singleton when the system pins every coordinate.
                   const Eigen::Index n = a.a.cols();
                   return (a.pinv * a.a - Mat::Identity(n, n)).norm() < 1e-9
                              ? 0.0
                              : kInf;
                 },
                 [](const set_kind::Product& p) {
                   double sq = 0.0;
                   for (const auto& b : p.blocks) {
                     const double r = b->EnclosingRadius();
                     sq += r * r;
                   }
                   return std::sqrt(sq);
                 }},
      kind_);
}

Vec ProjectSimple(const SimpleSet& set, const Vec& u) {
  RequireDim(u, set.dim(), "u");
  return std::visit(
      Overloaded{
          [&](const set_kind::Ball& b) -> Vec {
            const Vec d = u - b.center;
            const double r = d.norm();
            if (r <= b.radius) return u;
            return b.center + (b.radius / r) * d;
          },
          [&](const set_kind::Box& b) -> Vec {
            return u.cwiseMax(b.lo).cwiseMin(b.hi);
          },
          [&](const set_kind::Simplex& s) -> Vec {
            return ProjectSimplexScaled(u, s.scale);
          },
          [&](const set_kind::Halfspaces& h) -> Vec {
            if (h.a.rows() == 0) return u;
            if (h.a.rows() > 1) {
              throw Error(ErrorCode::kUnsupportedSet,
                          "intersection of " + std::to_string(h.a.rows()) +
                              " halfspaces has no closed-form projection");
            }
            const Vec a = h.a.row(0).transpose();
            const double excess = a.dot(u) - h.b[0];
            if (excess <= 0.0) return u;
            return u - (excess / a.squaredNorm()) * a;
          },
          [&](const set_kind::Affine& a) -> Vec {
            if (a.a.rows() == 0) return u;
            return u - a.pinv * (a.a * u - a.b);
          },
          [&](const set_kind::Product& p) -> Vec {
            Vec y(u.size());
            ForEachBlock(p, [&](const SimpleSet& block, Eigen::Index off) {
              y.segment(off, block.dim()) =
                  ProjectSimple(block, u.segment(off, block.dim()));
            });
            return y;
          }},
      set.kind());
}

}  // namespace sqvi
