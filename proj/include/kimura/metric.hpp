#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kimura/coefficients.hpp"
#include "kimura/common.hpp"
#include "kimura/evolution.hpp"
#include "kimura/grid.hpp"
#include "kimura/qprocess.hpp"
#include "kimura/spectral.hpp"

namespace kimura {

namespace detail {

// x = sin^2(pi s / 2) maps [0,1] onto [0,1] and turns the 1/sqrt(theta)
// endpoint singularities into a smooth integrand in s.
inline double stretch(double s) {
  const double v = std::sin(0.5 * std::numbers::pi * s);
  return v * v;
}
inline double unstretch(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return 2.0 / std::numbers::pi * std::atan2(std::sqrt(x), std::sqrt(1.0 - x));
}

// d i / d s where i(x) = int_0^x theta^{-1/2}.
inline double arclength_rate(const Profile& theta, double slope0, double slope1, double s) {
  constexpr double pi = std::numbers::pi;
  const double a = 0.5 * pi * s;
  const double sn = std::sin(a), cs = std::cos(a);
  // dx/ds = pi sin(a) cos(a)
  if (sn < 1e-7) return pi * cs / std::sqrt(slope0);
  if (cs < 1e-7) return pi * sn / std::sqrt(-slope1);
  const double th = s <= 0.5 ? theta.value(sn * sn) : theta.value_from_right(cs * cs);
  return pi * sn * cs / std::sqrt(th);
}

}  // namespace detail

/// d_theta(x,y) = | int_x^y theta^{-1/2} |, adaptive Gauss-Kronrod in the
/// stretched variable.
inline double shahshahani_distance(const CoefficientSet& c, double x, double y) {
  if (x < 0 || x > 1 || y < 0 || y > 1) throw Error("shahshahani_distance: point outside [0,1]");
  if (x == y) return 0.0;
  double a = detail::unstretch(std::min(x, y));
  double b = detail::unstretch(std::max(x, y));
  auto f = [&](double s) {
    return detail::arclength_rate(c.theta_profile, c.theta_slope0, c.theta_slope1, s);
  };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12);
}

/// Arclength map i(x) = int_0^x theta^{-1/2} on a fine stretched grid, with
/// cubic Hermite interpolation and a monotone inverse.
class IsometryTable {
 public:
  IsometryTable() = default;
  explicit IsometryTable(const CoefficientSet& c, std::size_t intervals = 4096)
      : s_(intervals + 1), value_(intervals + 1), rate_(intervals + 1) {
    auto f = [&](double s) {
      return detail::arclength_rate(c.theta_profile, c.theta_slope0, c.theta_slope1, s);
    };
    for (std::size_t k = 0; k <= intervals; ++k) {
      s_[k] = static_cast<double>(k) / static_cast<double>(intervals);
      rate_[k] = f(s_[k]);
    }
    value_[0] = 0.0;
    for (std::size_t k = 1; k <= intervals; ++k)
      value_[k] = value_[k - 1] +
                  boost::math::quadrature::gauss<double, 15>::integrate(f, s_[k - 1], s_[k]);
  }

  [[nodiscard]] double diameter() const { return value_.back(); }

  [[nodiscard]] double operator()(double x) const { return eval_s(detail::unstretch(x)); }

  [[nodiscard]] double inverse(double y) const {
    if (y <= 0) return 0.0;
    if (y >= diameter()) return 1.0;
    const auto it = std::upper_bound(value_.begin(), value_.end(), y);
    const auto k = static_cast<std::size_t>(it - value_.begin()) - 1;
    double lo = s_[k], hi = s_[k + 1];
    for (int iter = 0; iter < 200 && hi - lo > 1e-17; ++iter) {
      const double mid = 0.5 * (lo + hi);
      (eval_s(mid) < y ? lo : hi) = mid;
    }
    return detail::stretch(0.5 * (lo + hi));
  }

  /// (x, i(x)) at the table nodes.
  [[nodiscard]] std::vector<std::pair<double, double>> nodes() const {
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k < s_.size(); ++k) out.emplace_back(detail::stretch(s_[k]), value_[k]);
    return out;
  }

 private:
  [[nodiscard]] double eval_s(double s) const {
    const std::size_t m = s_.size() - 1;
    const double u = std::clamp(s, 0.0, 1.0) * static_cast<double>(m);
    const std::size_t k = std::min(static_cast<std::size_t>(u), m - 1);
    const double t = u - static_cast<double>(k);
    const double d = 1.0 / static_cast<double>(m);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * value_[k] + (t3 - 2 * t2 + t) * d * rate_[k] +
           (-2 * t3 + 3 * t2) * value_[k + 1] + (t3 - t2) * d * rate_[k + 1];
  }

  std::vector<double> s_, value_, rate_;
};

/// Quantile function of a measure on [0,1] made of atoms and uniform cells:
/// on [levels[k], levels[k+1]] it is affine from lo[k] to hi[k].
struct QuantileTable {
  std::vector<double> levels;
  std::vector<double> lo;
  std::vector<double> hi;

  struct Piece {
    double a;  // a == b: atom
    double b;
    double mass;
  };

  static QuantileTable from_pieces(std::vector<Piece> pieces) {
    std::stable_sort(pieces.begin(), pieces.end(), [](const Piece& p, const Piece& q) {
      return p.a < q.a || (p.a == q.a && p.b < q.b);
    });
    double total = 0.0;
    for (const auto& p : pieces) {
      if (p.mass < 0 || p.a < 0 || p.b > 1 || p.b < p.a)
        throw Error("QuantileTable: invalid piece");
      total += p.mass;
    }
    if (std::abs(total - 1.0) > 1e-8) throw Error("QuantileTable: measure is not a probability");
    QuantileTable t;
    t.levels.push_back(0.0);
    double acc = 0.0;
    for (const auto& p : pieces) {
      if (p.mass <= 0) continue;
      acc += p.mass / total;
      t.levels.push_back(acc);
      t.lo.push_back(p.a);
      t.hi.push_back(p.b);
    }
    t.levels.back() = 1.0;
    return t;
  }

  static QuantileTable from_measure(const BoundaryMeasure& p) {
    std::vector<Piece> pieces;
    pieces.push_back({0.0, 0.0, p.atom0});
    const double h = p.grid.h();
    for (std::size_t i = 0; i < p.interior.size(); ++i)
      pieces.push_back({p.grid.face(i), p.grid.face(i + 1), h * p.interior[i]});
    pieces.push_back({1.0, 1.0, p.atom1});
    return from_pieces(std::move(pieces));
  }

  static QuantileTable from_atoms(std::span<const double> x, std::span<const double> w) {
    if (x.size() != w.size()) throw Error("QuantileTable: size mismatch");
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k < x.size(); ++k) pieces.push_back({x[k], x[k], w[k]});
    return from_pieces(std::move(pieces));
  }

  /// Histogram with uniform density on each bin.
  static QuantileTable from_histogram(std::span<const double> edges,
                                      std::span<const double> mass) {
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k < mass.size(); ++k) pieces.push_back({edges[k], edges[k + 1], mass[k]});
    return from_pieces(std::move(pieces));
  }

  [[nodiscard]] double at(std::size_t k, double s) const {
    const double w = levels[k + 1] - levels[k];
    const double t = w > 0 ? (s - levels[k]) / w : 0.0;
    return lo[k] + (hi[k] - lo[k]) * std::clamp(t, 0.0, 1.0);
  }
};

/// W_theta via the arclength isometry: W^2 = int_0^1 |i(Q_q) - i(Q_r)|^2 ds,
/// integrated exactly over the merged quantile breakpoints.
inline double wasserstein_shahshahani(const IsometryTable& iso, const QuantileTable& q,
                                      const QuantileTable& r) {
  using Gauss = boost::math::quadrature::gauss<double, 10>;
  std::vector<double> parts;
  std::size_t a = 0, b = 0;
  double u = 0.0;
  while (a + 1 < q.levels.size() && b + 1 < r.levels.size()) {
    const double v = std::min(q.levels[a + 1], r.levels[b + 1]);
    if (v > u) {
      const bool flat = q.lo[a] == q.hi[a] && r.lo[b] == r.hi[b];
      if (flat) {
        parts.push_back((v - u) * sqr(iso(q.lo[a]) - iso(r.lo[b])));
      } else {
        auto f = [&](double s) { return sqr(iso(q.at(a, s)) - iso(r.at(b, s))); };
        parts.push_back(Gauss::integrate(f, u, v));
      }
      u = v;
    }
    if (q.levels[a + 1] <= v) ++a;
    if (r.levels[b + 1] <= v) ++b;
  }
  return std::sqrt(std::max(0.0, pairwise_sum(parts)));
}

inline double wasserstein_shahshahani(const IsometryTable& iso, const BoundaryMeasure& q,
                                      const BoundaryMeasure& r) {
  return wasserstein_shahshahani(iso, QuantileTable::from_measure(q),
                                 QuantileTable::from_measure(r));
}

/// H_pi(q) = int sigma log sigma dpi; +infinity when q charges {0,1}.
inline ExtendedReal relative_entropy(const BoundaryMeasure& q, const StationaryPi& pi) {
  if (q.has_atoms()) return ExtendedReal::infinity();
  std::vector<double> t(q.interior.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double qi = q.interior[i];
    t[i] = qi > 0 ? qi * std::log(qi / pi.values[i]) : 0.0;
  }
  return ExtendedReal(q.grid.integrate(t));
}

namespace detail {

// d/dx of log(q/pi) at cells: central inside, one-sided second order at the ends.
inline std::vector<double> log_ratio_slope(std::span<const double> q, std::span<const double> pi,
                                           double h) {
  const std::size_t n = q.size();
  std::vector<double> l(n), d(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = std::log(q[i] / pi[i]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (l[i + 1] - l[i - 1]) / (2 * h);
  d[0] = (-3 * l[0] + 4 * l[1] - l[2]) / (2 * h);
  d[n - 1] = (3 * l[n - 1] - 4 * l[n - 2] + l[n - 3]) / (2 * h);
  return d;
}

inline bool strictly_positive(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x > 0; });
}

}  // namespace detail

/// I_pi(q) = int theta |sigma'/sigma|^2 dq.
inline ExtendedReal fisher_information(const CoefficientSet& c, const BoundaryMeasure& q,
                                       const StationaryPi& pi) {
  if (q.has_atoms() || !detail::strictly_positive(q.interior)) return ExtendedReal::infinity();
  const auto d = detail::log_ratio_slope(q.interior, pi.values, c.grid.h());
  std::vector<double> t(d.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = c.theta[i] * d[i] * d[i] * q.interior[i];
  return ExtendedReal(c.grid.integrate(t));
}

/// Kinetic norm of the velocity v = -theta (log sigma)' at a recorded time,
/// sqrt(int |v|^2 / theta dq).
inline double metric_speed(const CoefficientSet& c, const Trajectory& traj,
                           const StationaryPi& pi, double t, double t0 = 1e-3) {
  if (t < t0) throw Error("metric_speed: t must be at least t0");
  const auto& q = traj.states[traj.index_of(t)];
  if (!detail::strictly_positive(q.interior)) throw Error("metric_speed: density not positive");
  const auto d = detail::log_ratio_slope(q.interior, pi.values, c.grid.h());
  std::vector<double> t2(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double v = -c.theta[i] * d[i];
    t2[i] = v * v / c.theta[i] * q.interior[i];
  }
  return std::sqrt(c.grid.integrate(t2));
}

/// |xi|^2 / theta(x) with the boundary convention 0 (xi = 0) or +infinity.
inline ExtendedReal lagrangian(const CoefficientSet& c, double x, double xi) {
  if (x < 0 || x > 1) throw Error("lagrangian: x outside [0,1]");
  if (x == 0.0 || x == 1.0) return xi == 0.0 ? ExtendedReal(0.0) : ExtendedReal::infinity();
  return ExtendedReal(xi * xi / c.theta_profile.value(x));
}

struct ConvexityModulus {
  double lambda = 0.0;
  double argmin = 0.0;
  std::vector<double> g;  // sqrt(theta) (sqrt(theta) W')' at cells
};

/// lambda = min sqrt(theta) (sqrt(theta) W')', W = U + log(sqrt(theta) / eta^2),
/// expanded termwise and simplified with theta (eta'' - U' eta') = -lambda0 eta:
///   g = theta U'' + theta''/2 + theta' U'/2 - theta'^2/(4 theta) + 2 lambda0
///       - 2 theta U' r + 2 theta r^2 - theta' r,     r = eta'/eta.
inline ConvexityModulus convexity_modulus(const CoefficientSet& c, const EtaFunction& eta) {
  const std::size_t n = c.grid.size();
  const double h = c.grid.h();
  const auto& e = eta.values;
  std::vector<double> r(n);
  for (std::size_t i = 1; i + 1 < n; ++i) r[i] = (e[i + 1] - e[i - 1]) / (2 * h) / e[i];
  // End cells: quadratic through the boundary zero and two cells.
  r[0] = detail::three_point_slope(0.0, 0.5 * h, 1.5 * h, 0.0, e[0], e[1], 0.5 * h) / e[0];
  r[n - 1] = detail::three_point_slope(1.0 - 1.5 * h, 1.0 - 0.5 * h, 1.0, e[n - 2], e[n - 1], 0.0,
                                       1.0 - 0.5 * h) /
             e[n - 1];

  ConvexityModulus m;
  m.g.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = c.theta[i], t1 = c.theta_prime[i], t2 = c.theta_second[i];
    const double u1 = c.u_prime[i], u2 = c.u_second[i];
    m.g[i] = th * u2 + 0.5 * t2 + 0.5 * t1 * u1 - 0.25 * t1 * t1 / th + 2 * eta.lambda0 -
             2 * th * u1 * r[i] + 2 * th * r[i] * r[i] - t1 * r[i];
  }
  const auto k = static_cast<std::size_t>(std::min_element(m.g.begin(), m.g.end()) - m.g.begin());
  m.lambda = m.g[k];
  m.argmin = c.grid.center(k);
  if (k > 0 && k + 1 < n) {
    const double a = m.g[k - 1], b = m.g[k], d = m.g[k + 1];
    const double curv = a - 2 * b + d;
    if (curv > 0) {
      m.argmin = c.grid.center(k) - 0.5 * h * (d - a) / curv;
      m.lambda = b - (d - a) * (d - a) / (8 * curv);
    }
  }
  return m;
}

}  // namespace kimura
