#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace psm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Integer m-tuple; entry i is the degree (or derivative order) along axis i.
using MultiIndex = std::vector<int>;

/// Requested size exceeds a configured resource cap.
class ResourceLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A factorisation or iteration failed where the mathematics says it should not.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resource caps. Defaults cover the 4D n=8 and 2D n=200 workloads.
struct Limits {
  int max_degree = 1024;
  std::size_t max_grid_size = 200000;
  /// Largest size for which dense N x N operators may be materialised.
  std::size_t max_dense_size = 8000;
};

inline const Limits& default_limits() {
  static const Limits limits{};
  return limits;
}

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
  double lo = -1.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  double to_reference(double x) const { return (2.0 * x - lo - hi) / (hi - lo); }
  double from_reference(double t) const { return 0.5 * (lo + hi) + 0.5 * (hi - lo) * t; }
  bool operator==(const Interval&) const = default;
};

using Box = std::vector<Interval>;

inline Box reference_box(int m) { return Box(static_cast<std::size_t>(m), Interval{}); }

inline Box cube(int m, double lo, double hi) {
  return Box(static_cast<std::size_t>(m), Interval{lo, hi});
}

inline void validate_box(const Box& box) {
  if (box.empty()) throw std::invalid_argument("box must have at least one coordinate");
  for (const auto& iv : box) {
    if (!(iv.lo < iv.hi)) {
      throw std::invalid_argument("degenerate box interval [" + std::to_string(iv.lo) + ", " +
                                  std::to_string(iv.hi) + "]");
    }
  }
}

inline double box_volume(const Box& box) {
  double v = 1.0;
  for (const auto& iv : box) v *= iv.length();
  return v;
}

/// Integer power for sizes, with overflow guarded against a cap.
inline std::size_t checked_pow(std::size_t base, int exponent, std::size_t cap) {
  std::size_t r = 1;
  for (int i = 0; i < exponent; ++i) {
    if (r > cap / base) throw ResourceLimitError("grid size exceeds cap " + std::to_string(cap));
    r *= base;
  }
  if (r > cap) throw ResourceLimitError("grid size exceeds cap " + std::to_string(cap));
  return r;
}

}  // namespace psm
