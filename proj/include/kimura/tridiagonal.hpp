#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "kimura/common.hpp"

namespace kimura {

/// Square tridiagonal matrix. lower[i] = A(i+1,i), upper[i] = A(i,i+1).
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  explicit Tridiagonal(std::size_t n = 0)
      : lower(n ? n - 1 : 0, 0.0), diag(n, 0.0), upper(n ? n - 1 : 0, 0.0) {}

  [[nodiscard]] std::size_t size() const { return diag.size(); }

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += lower[i - 1] * x[i - 1];
      if (i + 1 < n) s += upper[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  [[nodiscard]] Tridiagonal transpose() const {
    Tridiagonal t = *this;
    std::swap(t.lower, t.upper);
    return t;
  }

  /// alpha * I + beta * this
  [[nodiscard]] Tridiagonal shifted(double alpha, double beta) const {
    Tridiagonal t(size());
    for (std::size_t i = 0; i < size(); ++i) t.diag[i] = alpha + beta * diag[i];
    for (std::size_t i = 0; i + 1 < size(); ++i) {
      t.lower[i] = beta * lower[i];
      t.upper[i] = beta * upper[i];
    }
    return t;
  }
};

/// LU factorization without pivoting (Thomas). Stable for the diagonally
/// dominant M-matrices produced by implicit steps.
class TridiagonalLU {
 public:
  TridiagonalLU() = default;
  explicit TridiagonalLU(const Tridiagonal& a) : lower_(a.lower), upper_(a.upper) {
    const std::size_t n = a.size();
    pivot_.resize(n);
    factor_.resize(n ? n - 1 : 0);
    pivot_[0] = a.diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      if (pivot_[i - 1] == 0.0) throw Error("TridiagonalLU: zero pivot");
      factor_[i - 1] = lower_[i - 1] / pivot_[i - 1];
      pivot_[i] = a.diag[i] - factor_[i - 1] * upper_[i - 1];
    }
    if (n && pivot_[n - 1] == 0.0) throw Error("TridiagonalLU: singular matrix");
  }

  [[nodiscard]] std::vector<double> solve(std::span<const double> b) const {
    const std::size_t n = pivot_.size();
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t i = 1; i < n; ++i) x[i] -= factor_[i - 1] * x[i - 1];
    x[n - 1] /= pivot_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - upper_[i] * x[i + 1]) / pivot_[i];
    return x;
  }

 private:
  std::vector<double> lower_, upper_, pivot_, factor_;
};

}  // namespace kimura
