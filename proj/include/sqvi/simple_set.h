#ifndef SQVI_SIMPLE_SET_H_
#define SQVI_SIMPLE_SET_H_

#include <sqvi/types.h>

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace sqvi {

class SimpleSet;

namespace set_kind {

struct Ball {
  Vec center;
  double radius = 1.0;
};

struct Box {
  Vec lo;
  Vec hi;
};

// {y >= 0, sum(y) = scale}
struct Simplex {
  int dim = 0;
  double scale = 1.0;
};

// {y : a y <= b}; zero rows is the whole space.
struct Halfspaces {
  Mat a;
  Vec b;
};

// {y : a y = b}; `pinv` caches the pseudo-inverse of a.
struct Affine {
  Mat a;
  Vec b;
  Mat pinv;
};

// Cartesian product of blocks laid out consecutively.
struct Product {
  std::vector<std::shared_ptr<const SimpleSet>> blocks;
};

}  // namespace set_kind

// Closed convex sets with cheap membership and (mostly) closed-form
// projections. Invariants (radius > 0, lo <= hi, ...) are enforced by the
// factory functions.
class SimpleSet {
 public:
  using Kind = std::variant<set_kind::Ball, set_kind::Box, set_kind::Simplex,
                            set_kind::Halfspaces, set_kind::Affine,
                            set_kind::Product>;

  // The zero-dimensional whole space; placeholder for default construction.
  SimpleSet() : SimpleSet(set_kind::Halfspaces{Mat(0, 0), Vec(0)}, 0) {}

  static SimpleSet Ball(Vec center, double radius);
  static SimpleSet Box(Vec lo, Vec hi);
  static SimpleSet UniformBox(int dim, double lo, double hi);
  static SimpleSet Simplex(int dim, double scale = 1.0);
  static SimpleSet Halfspaces(Mat a, Vec b);
  static SimpleSet Halfspace(const Vec& a, double b);
  static SimpleSet WholeSpace(int dim);
  static SimpleSet Affine(Mat a, Vec b);
  static SimpleSet Product(const std::vector<SimpleSet>& blocks);

  const Kind& kind() const { return kind_; }
  int dim() const { return dim_; }
  std::string name() const;

  // Closed-form Euclidean projection exists (everything except an
  // intersection of two or more halfspaces).
  bool has_closed_form() const;

  bool Contains(const Vec& y, double tol = 0.0) const;
  // Largest constraint violation (0 inside the set).
  double Violation(const Vec& y) const;
  // Box midpoint, ball center, simplex barycenter, min-norm affine point;
  // componentwise for products.
  Vec Center() const;
  // Radius of a ball around Center() containing the set (inf if unbounded).
  double EnclosingRadius() const;

 private:
  SimpleSet(Kind kind, int dim) : kind_(std::move(kind)), dim_(dim) {}

  Kind kind_;
  int dim_ = 0;
};

// argmin_{y in set} ||y - u||. Throws UnsupportedSet when there is no closed
// form (route those through InexactProject).
Vec ProjectSimple(const SimpleSet& set, const Vec& u);

}  // namespace sqvi

#endif  // SQVI_SIMPLE_SET_H_
