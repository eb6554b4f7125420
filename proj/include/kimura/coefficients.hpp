#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/makima.hpp>

#include "kimura/common.hpp"
#include "kimura/grid.hpp"

namespace kimura {

/// A smooth scalar function on [0,1] with its first two derivatives.
struct Profile {
  std::string label;
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
  bool closed_form = false;
  /// Optional y -> f(1 - y), exact for small y.
  std::function<double(double)> mirrored = {};

  [[nodiscard]] double value_from_right(double y) const {
    return mirrored ? mirrored(y) : value(1.0 - y);
  }
};

struct TablePoint {
  double x;
  double value;
};

namespace detail {

// Derivative at x[k] of the quadratic through three consecutive samples.
inline double three_point_slope(double x0, double x1, double x2, double y0, double y1,
                                double y2, double at) {
  const double l0 = ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2));
  const double l1 = ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2));
  const double l2 = ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1));
  return l0 * y0 + l1 * y1 + l2 * y2;
}

}  // namespace detail

inline Profile wright_fisher_theta() {
  return {"wright-fisher", [](double x) { return x * (1.0 - x); },
          [](double x) { return 1.0 - 2.0 * x; }, [](double) { return -2.0; }, true,
          [](double y) { return y * (1.0 - y); }};
}

inline Profile neutral_potential() {
  return {"neutral", [](double) { return 0.0; }, [](double) { return 0.0; },
          [](double) { return 0.0; }, true};
}

inline Profile linear_potential(double slope) {
  return {"linear s=" + std::to_string(slope), [slope](double x) { return slope * x; },
          [slope](double) { return slope; }, [](double) { return 0.0; }, true};
}

/// Interpolating profile through tabulated samples covering [0,1].
inline Profile table_profile(std::vector<TablePoint> pts, std::string label = "table") {
  if (pts.size() < 4) throw Error(label + ": need at least 4 table rows");
  std::sort(pts.begin(), pts.end(),
            [](const TablePoint& a, const TablePoint& b) { return a.x < b.x; });
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (!(pts[k].x > pts[k - 1].x)) throw Error(label + ": duplicate abscissa");
  if (std::abs(pts.front().x) > 1e-12 || std::abs(pts.back().x - 1.0) > 1e-12)
    throw Error(label + ": table must span [0,1]");
  for (const auto& p : pts)
    if (!std::isfinite(p.value)) throw Error(label + ": non-finite table value");

  std::vector<double> x, y;
  for (const auto& p : pts) {
    x.push_back(p.x);
    y.push_back(p.value);
  }
  const std::size_t m = x.size();
  const double d0 =
      detail::three_point_slope(x[0], x[1], x[2], y[0], y[1], y[2], x[0]);
  const double d1 = detail::three_point_slope(x[m - 3], x[m - 2], x[m - 1], y[m - 3],
                                              y[m - 2], y[m - 1], x[m - 1]);
  using Interp = boost::math::interpolators::makima<std::vector<double>>;
  auto interp = std::make_shared<Interp>(std::move(x), std::move(y), d0, d1);

  Profile p;
  p.label = std::move(label);
  p.value = [interp](double t) { return (*interp)(std::clamp(t, 0.0, 1.0)); };
  p.first = [interp](double t) { return interp->prime(std::clamp(t, 0.0, 1.0)); };
  p.second = [interp](double t) {
    constexpr double d = 1e-5;
    const double a = std::max(0.0, t - d);
    const double b = std::min(1.0, t + d);
    return (interp->prime(b) - interp->prime(a)) / (b - a);
  };
  return p;
}

/// Reads a two-column CSV (x,value) with a header row.
inline std::vector<TablePoint> read_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("file not found: " + path);
  std::vector<TablePoint> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b))
      throw Error(path + ":" + std::to_string(lineno) + ": expected two columns");
    try {
      pts.push_back({std::stod(a), std::stod(b)});
    } catch (const std::exception&) {
      throw Error(path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return pts;
}

/// Resolves "wright-fisher", "table:<path>" for theta.
inline Profile theta_from_name(const std::string& name) {
  if (name == "wright-fisher") return wright_fisher_theta();
  if (name.rfind("table:", 0) == 0)
    return table_profile(read_table_csv(name.substr(6)), name);
  throw Error("unknown theta preset: " + name);
}

/// Resolves "neutral", "linear:<s>", "linear s=<s>", "table:<path>" for U.
inline Profile potential_from_name(const std::string& name) {
  if (name == "neutral") return neutral_potential();
  if (name.rfind("linear", 0) == 0) {
    auto pos = name.find_first_of(":=");
    const double s = pos == std::string::npos ? 1.0 : std::stod(name.substr(pos + 1));
    return linear_potential(s);
  }
  if (name.rfind("table:", 0) == 0)
    return table_profile(read_table_csv(name.substr(6)), name);
  throw Error("unknown potential preset: " + name);
}

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;

  [[nodiscard]] bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AssumptionCheck& c) { return c.passed; });
  }
  [[nodiscard]] const AssumptionCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline constexpr double kSlopeTolerance = 1e-8;

// Order of the zero of theta at an endpoint, from theta(2d)/theta(d).
inline double zero_order(const Profile& theta, bool at_left, double d) {
  auto at = [&](double s) { return theta.value(at_left ? s : 1.0 - s); };
  const double a = at(d), b = at(2 * d);
  if (!(a > 0) || !(b > 0)) return std::numeric_limits<double>::infinity();
  return std::log2(b / a);
}

inline AssumptionCheck check_simple_zero(const Profile& theta, bool at_left, double slope,
                                         double d) {
  const std::string where = at_left ? "0" : "1";
  AssumptionCheck c{"simple zero at " + where, true, ""};
  const double end_value = theta.value(at_left ? 0.0 : 1.0);
  const double order = zero_order(theta, at_left, d);
  const bool right_sign = at_left ? slope > 0 : slope < 0;
  if (std::abs(end_value) > 1e-10) {
    c.passed = false;
    c.detail = "theta does not vanish at " + where;
  } else if (std::abs(slope) < kSlopeTolerance || order > 1.5) {
    c.passed = false;
    c.detail = "non-simple zero at " + where;
  } else if (!right_sign) {
    c.passed = false;
    c.detail = "theta slope has the wrong sign at " + where;
  }
  return c;
}

}  // namespace detail

/// Checks positivity of theta, simple boundary zeros and finiteness of U.
inline AssumptionReport validate_assumptions(const Profile& theta, const Profile& potential,
                                             const Grid& grid) {
  AssumptionReport r;
  const std::size_t n = grid.size();

  AssumptionCheck pos{"theta positive in the interior", true, ""};
  for (std::size_t i = 0; i < n && pos.passed; ++i) {
    const double v = theta.value(grid.center(i));
    if (v < 0) {
      pos = {pos.name, false, "negative theta at x=" + std::to_string(grid.center(i))};
    } else if (!(v > 0)) {
      pos = {pos.name, false,
             "theta vanishes in the interior at x=" + std::to_string(grid.center(i))};
    }
  }
  for (std::size_t f = 1; f < n && pos.passed; ++f) {
    if (!(theta.value(grid.face(f)) > 0))
      pos = {pos.name, false, "theta vanishes in the interior at x=" + std::to_string(grid.face(f))};
  }
  r.checks.push_back(pos);

  const double d = std::min(grid.h(), 1e-3);
  r.checks.push_back(detail::check_simple_zero(theta, true, theta.first(0.0), d));
  r.checks.push_back(detail::check_simple_zero(theta, false, theta.first(1.0), d));

  AssumptionCheck fin{"potential finite", true, ""};
  for (std::size_t f = 0; f <= n && fin.passed; ++f) {
    const double x = grid.face(f);
    if (!std::isfinite(potential.value(x)) || !std::isfinite(potential.first(x)))
      fin = {fin.name, false, "non-finite potential at x=" + std::to_string(x)};
  }
  r.checks.push_back(fin);
  return r;
}

/// The initial datum must charge the interior.
inline AssumptionCheck check_not_fixated(const BoundaryMeasure& p0) {
  const double m = p0.interior_mass();
  if (m > 0) return {"initial datum not completely fixated", true, ""};
  return {"initial datum not completely fixated", false,
          "initial measure is supported on the boundary {0,1}"};
}

/// Model data sampled on a grid.
struct CoefficientSet {
  Grid grid;
  Profile theta_profile;
  Profile potential_profile;

  std::vector<double> theta;         // cells
  std::vector<double> theta_prime;   // cells
  std::vector<double> theta_second;  // cells
  std::vector<double> theta_face;    // n+1 faces, zero at both ends
  double theta_slope0 = 0.0;
  double theta_slope1 = 0.0;

  std::vector<double> u;         // cells
  std::vector<double> u_prime;   // cells
  std::vector<double> u_second;  // cells
  std::vector<double> u_hat;     // U + log theta, cells

  /// Potential at link midpoints. Link f joins node f-1 to node f, where
  /// node -1 is x=0 and node n is x=1; links 0 and n have length h/2.
  std::vector<double> u_link;

  [[nodiscard]] double link_length(std::size_t f) const {
    return (f == 0 || f == grid.size()) ? 0.5 * grid.h() : grid.h();
  }
  [[nodiscard]] double link_midpoint(std::size_t f) const {
    if (f == 0) return 0.25 * grid.h();
    if (f == grid.size()) return 1.0 - 0.25 * grid.h();
    return grid.face(f);
  }
};

inline CoefficientSet build_coefficients(Profile theta, Profile potential, std::size_t n) {
  if (n < 16) throw Error("build_coefficients: need n >= 16");
  const Grid grid(n);
  const auto report = validate_assumptions(theta, potential, grid);
  for (const auto& c : report.checks)
    if (!c.passed) throw Error(c.detail);

  CoefficientSet c;
  c.grid = grid;
  const double h = grid.h();
  c.theta = grid.sample(theta.value);
  if (theta.closed_form) {
    c.theta_prime = grid.sample(theta.first);
    c.theta_second = grid.sample(theta.second);
    c.theta_slope0 = theta.first(0.0);
    c.theta_slope1 = theta.first(1.0);
  } else {
    const double d = 0.5 * h;
    c.theta_prime = grid.sample(
        [&](double x) { return (theta.value(x + d) - theta.value(x - d)) / (2 * d); });
    c.theta_second = grid.sample([&](double x) {
      return (theta.value(x + d) - 2 * theta.value(x) + theta.value(x - d)) / (d * d);
    });
    c.theta_slope0 = (-3 * theta.value(0) + 4 * theta.value(h) - theta.value(2 * h)) / (2 * h);
    c.theta_slope1 =
        (3 * theta.value(1) - 4 * theta.value(1 - h) + theta.value(1 - 2 * h)) / (2 * h);
  }
  c.theta_face.resize(n + 1);
  for (std::size_t f = 0; f <= n; ++f) c.theta_face[f] = theta.value(grid.face(f));
  c.theta_face.front() = 0.0;
  c.theta_face.back() = 0.0;

  c.u = grid.sample(potential.value);
  if (potential.closed_form) {
    c.u_prime = grid.sample(potential.first);
    c.u_second = grid.sample(potential.second);
  } else {
    const double d = 0.5 * h;
    c.u_prime = grid.sample(
        [&](double x) { return (potential.value(x + d) - potential.value(x - d)) / (2 * d); });
    c.u_second = grid.sample([&](double x) {
      return (potential.value(x + d) - 2 * potential.value(x) + potential.value(x - d)) /
             (d * d);
    });
  }
  c.u_hat.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.u_hat[i] = c.u[i] + std::log(c.theta[i]);
  c.u_link.resize(n + 1);
  c.theta_profile = std::move(theta);
  c.potential_profile = std::move(potential);
  for (std::size_t f = 0; f <= n; ++f) c.u_link[f] = c.potential_profile.value(c.link_midpoint(f));
  return c;
}

inline CoefficientSet build_coefficients(const std::string& theta_name,
                                         const std::string& potential_name, std::size_t n) {
  return build_coefficients(theta_from_name(theta_name), potential_from_name(potential_name), n);
}

inline AssumptionReport validate_assumptions(const CoefficientSet& c) {
  return validate_assumptions(c.theta_profile, c.potential_profile, c.grid);
}

/// Fixation probability F(x) = int_0^x e^U / int_0^1 e^U, as the midpoint-rule
/// antiderivative over the partition {0, cell centers, 1}. This F is exactly
/// annihilated by the discrete generator of the finite-volume scheme.
inline NodalField fixation_probability(const CoefficientSet& c) {
  const std::size_t n = c.grid.size();
  std::vector<double> increments(n + 1);
  for (std::size_t f = 0; f <= n; ++f) {
    increments[f] = std::exp(c.u_link[f]) * c.link_length(f);
    if (!std::isfinite(increments[f]))
      throw Error("fixation_probability: quadrature failed (non-finite potential)");
  }
  const double total = pairwise_sum(increments);
  NodalField F{0.0, std::vector<double>(n), 1.0};
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += increments[i];
    F.cells[i] = acc / total;
  }
  return F;
}

struct FixationLimits {
  double a_inf = 0.0;  // mass eventually fixated at 0
  double b_inf = 0.0;  // mass eventually fixated at 1
};

/// Long-time atoms from the two conservation laws: a+b=1, b = int F dp0.
inline FixationLimits fixation_limits(const BoundaryMeasure& p0, const NodalField& F) {
  check_probability(p0);
  if (F.cells.size() != p0.grid.size()) throw Error("fixation_limits: grid mismatch");
  const double b = std::clamp(p0.integrate(F) / p0.total_mass(), 0.0, 1.0);
  return {1.0 - b, b};
}

}  // namespace kimura
