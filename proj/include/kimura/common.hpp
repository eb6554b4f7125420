#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kimura {

/// Raised on invalid input or a failed numerical invariant.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A real number or +infinity, kept apart from floating-point inf so that
/// "not absolutely continuous" never leaks into arithmetic by accident.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  [[nodiscard]] constexpr bool is_infinite() const { return infinite_; }
  [[nodiscard]] constexpr bool is_finite() const { return !infinite_; }

  [[nodiscard]] double value() const {
    if (infinite_) throw Error("ExtendedReal: value() on +infinity");
    return value_;
  }

  /// For printing and JSON only.
  [[nodiscard]] double as_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Pairwise summation; the result depends only on the order of `v`.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t mid = v.size() / 2;
  return pairwise_sum(v.subspan(0, mid)) + pairwise_sum(v.subspan(mid));
}

inline double sqr(double x) { return x * x; }

}  // namespace kimura
