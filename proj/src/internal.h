#ifndef SQVI_SRC_INTERNAL_H_
#define SQVI_SRC_INTERNAL_H_

#include <sqvi/constraint_map.h>
#include <sqvi/projection.h>

#include <cmath>
#include <cstdint>
#include <limits>

namespace sqvi::internal {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Halfspace intersection {a y <= b} as linear constraints.
ConvexConstraints AsConstraints(const SimpleSet& halfspaces);
// g(x, .) frozen at x.
ConvexConstraints AsConstraints(const map_kind::NonlinearConvex& c,
                                const Vec& x);

inline std::int64_t SaturatingCeil(double v) {
  constexpr double kCap = 4.0e18;
  if (!(v < kCap)) return static_cast<std::int64_t>(kCap);
  return static_cast<std::int64_t>(std::ceil(v));
}

inline std::int64_t SaturatingAdd(std::int64_t a, std::int64_t b) {
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  return a > kMax - b ? kMax : a + b;
}

}  // namespace sqvi::internal

#endif  // SQVI_SRC_INTERNAL_H_
