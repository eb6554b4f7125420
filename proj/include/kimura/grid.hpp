#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "kimura/common.hpp"

namespace kimura {

/// Uniform cell-centered grid on (0,1). Cell i covers [i h, (i+1) h].
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::size_t n) : n_(n), h_(1.0 / static_cast<double>(n)) {
    if (n < 3) throw Error("Grid: need at least 3 cells");
  }

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] double center(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) * h_;
  }
  [[nodiscard]] double face(std::size_t f) const {
    return static_cast<double>(f) * h_;
  }

  [[nodiscard]] std::vector<double> centers() const {
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = center(i);
    return x;
  }

  /// Cell containing x (clamped to the grid).
  [[nodiscard]] std::size_t locate(double x) const {
    const double k = std::floor(x / h_);
    if (k < 0) return 0;
    return std::min(static_cast<std::size_t>(k), n_ - 1);
  }

  /// Samples f at cell centers.
  template <class F>
  [[nodiscard]] std::vector<double> sample(F&& f) const {
    std::vector<double> v(n_);
    for (std::size_t i = 0; i < n_; ++i) v[i] = f(center(i));
    return v;
  }

  /// h * sum(v), pairwise.
  [[nodiscard]] double integrate(std::span<const double> v) const {
    return h_ * pairwise_sum(v);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_ = 0;
  double h_ = 0.0;
};

/// Cell values plus the two boundary values of a field on [0,1].
struct NodalField {
  double at0 = 0.0;
  std::vector<double> cells;
  double at1 = 0.0;
};

/// Probability measure on [0,1]: atom at 0, cell densities, atom at 1.
struct BoundaryMeasure {
  Grid grid;
  double atom0 = 0.0;
  std::vector<double> interior;
  double atom1 = 0.0;

  [[nodiscard]] double interior_mass() const { return grid.integrate(interior); }
  [[nodiscard]] double total_mass() const { return atom0 + atom1 + interior_mass(); }
  [[nodiscard]] bool has_atoms() const { return atom0 > 0.0 || atom1 > 0.0; }

  /// integral of f against the measure, f given at nodes.
  [[nodiscard]] double integrate(const NodalField& f) const {
    std::vector<double> w(interior.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = f.cells[i] * interior[i];
    return atom0 * f.at0 + grid.integrate(w) + atom1 * f.at1;
  }
};

/// Throws unless the measure is nonnegative with unit mass.
inline void check_probability(const BoundaryMeasure& p, double tol = 1e-8) {
  if (p.interior.size() != p.grid.size())
    throw Error("BoundaryMeasure: interior size does not match grid");
  if (p.atom0 < 0 || p.atom1 < 0) throw Error("BoundaryMeasure: negative atom");
  for (double v : p.interior)
    if (!(v >= 0)) throw Error("BoundaryMeasure: negative or NaN density");
  if (std::abs(p.total_mass() - 1.0) > tol)
    throw Error("BoundaryMeasure: total mass " + std::to_string(p.total_mass()) +
                " differs from 1");
}

/// Dirac mass. Endpoints become atoms; interior points are split over the
/// two bracketing cells so the first moment is exact.
inline BoundaryMeasure dirac(const Grid& g, double x0) {
  if (x0 < 0.0 || x0 > 1.0) throw Error("dirac: location outside [0,1]");
  BoundaryMeasure p{g, 0.0, std::vector<double>(g.size(), 0.0), 0.0};
  if (x0 == 0.0) {
    p.atom0 = 1.0;
    return p;
  }
  if (x0 == 1.0) {
    p.atom1 = 1.0;
    return p;
  }
  const double h = g.h();
  const double s = x0 / h - 0.5;  // fractional cell-center coordinate
  if (s <= 0.0) {
    p.interior.front() = 1.0 / h;
  } else if (s >= static_cast<double>(g.size() - 1)) {
    p.interior.back() = 1.0 / h;
  } else {
    const auto i = static_cast<std::size_t>(std::floor(s));
    const double w = s - static_cast<double>(i);
    p.interior[i] = (1.0 - w) / h;
    if (w > 0.0) p.interior[i + 1] = w / h;
  }
  return p;
}

inline BoundaryMeasure uniform_measure(const Grid& g) {
  return {g, 0.0, std::vector<double>(g.size(), 1.0), 0.0};
}

/// Interior density proportional to `density`, renormalized to mass 1.
inline BoundaryMeasure from_density(const Grid& g, std::vector<double> density) {
  if (density.size() != g.size()) throw Error("from_density: size mismatch");
  const double m = g.integrate(density);
  if (!(m > 0)) throw Error("from_density: density has no mass");
  for (double& v : density) v /= m;
  return {g, 0.0, std::move(density), 0.0};
}

/// Boundary values of an interior density by quadratic extrapolation from
/// the three cells nearest each end.
inline std::pair<double, double> boundary_trace(std::span<const double> d) {
  if (d.size() < 3) throw Error("boundary_trace: need at least 3 cells");
  const std::size_t n = d.size();
  const double left = (15.0 * d[0] - 10.0 * d[1] + 3.0 * d[2]) / 8.0;
  const double right = (15.0 * d[n - 1] - 10.0 * d[n - 2] + 3.0 * d[n - 3]) / 8.0;
  return {left, right};
}

}  // namespace kimura
