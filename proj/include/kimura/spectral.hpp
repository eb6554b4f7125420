#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "kimura/coefficients.hpp"
#include "kimura/common.hpp"
#include "kimura/grid.hpp"
#include "kimura/tridiagonal.hpp"

namespace kimura {

/// Finite-volume discretization of the adjoint generator
///   L* p = (theta p)'' + (theta p U')' = ( e^{-U} (e^U theta p)' )'
/// in flux form. With g = e^U theta p and kappa_f = e^{-U_f} / l_f, the flux
/// through link f is J_f = kappa_f (g_right - g_left), g = 0 at x = 0 and 1,
/// and dp_i/dt = (J_{i+1} - J_i) / h. The outer-link fluxes feed the atoms.
struct AdjointOperator {
  Grid grid;
  Tridiagonal matrix;          // dp/dt = matrix * p
  std::vector<double> kappa;   // n+1 link conductances
  std::vector<double> weight;  // D_i = e^{U_i} theta_i, the symmetrizing weight

  /// Rate of mass transfer into the atom at 0.
  [[nodiscard]] double outflow0(std::span<const double> p) const {
    return kappa.front() * weight.front() * p.front();
  }
  /// Rate of mass transfer into the atom at 1.
  [[nodiscard]] double outflow1(std::span<const double> p) const {
    return kappa.back() * weight.back() * p.back();
  }
};

inline AdjointOperator assemble_adjoint_operator(const CoefficientSet& c) {
  const std::size_t n = c.grid.size();
  const double h = c.grid.h();
  AdjointOperator op;
  op.grid = c.grid;
  op.kappa.resize(n + 1);
  for (std::size_t f = 0; f <= n; ++f) op.kappa[f] = std::exp(-c.u_link[f]) / c.link_length(f);
  op.weight.resize(n);
  for (std::size_t i = 0; i < n; ++i) op.weight[i] = std::exp(c.u[i]) * c.theta[i];

  op.matrix = Tridiagonal(n);
  for (std::size_t i = 0; i < n; ++i) {
    op.matrix.diag[i] = -(op.kappa[i] + op.kappa[i + 1]) * op.weight[i] / h;
    if (i + 1 < n) {
      op.matrix.upper[i] = op.kappa[i + 1] * op.weight[i + 1] / h;
      op.matrix.lower[i] = op.kappa[i + 1] * op.weight[i] / h;
    }
  }
  return op;
}

/// Eigenpairs (lambda_j, alpha_j) of -L*, orthonormal in <f,g> = h sum f g D.
struct SpectralDecomposition {
  Grid grid;
  std::vector<double> lambdas;
  std::vector<std::vector<double>> alphas;
  std::vector<double> weight;

  [[nodiscard]] std::size_t modes() const { return lambdas.size(); }

  [[nodiscard]] double inner(std::span<const double> f, std::span<const double> g) const {
    std::vector<double> t(f.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = f[i] * g[i] * weight[i];
    return grid.integrate(t);
  }
};

inline SpectralDecomposition eigendecompose(const AdjointOperator& op, std::size_t modes) {
  const std::size_t n = op.grid.size();
  if (modes == 0 || modes > n / 4) throw Error("eigendecompose: need 1 <= J <= n/4");

  // S = D^{1/2} A D^{-1/2} must be symmetric.
  Eigen::VectorXd diag(n), sub(n - 1);
  for (std::size_t i = 0; i < n; ++i) diag[i] = -op.matrix.diag[i];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double r = std::sqrt(op.weight[i] / op.weight[i + 1]);
    const double up = op.matrix.upper[i] * r;
    const double lo = op.matrix.lower[i] / r;
    if (std::abs(up - lo) > 1e-10 * std::max(std::abs(up), std::abs(lo)))
      throw Error("eigendecompose: symmetrized operator is not symmetric");
    sub[i] = -0.5 * (up + lo);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw Error("eigendecompose: eigensolver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (!(ev[0] > 1e-12 * std::abs(ev[n - 1])))
    throw Error("eigendecompose: operator is not positive definite");

  SpectralDecomposition sd;
  sd.grid = op.grid;
  sd.weight = op.weight;
  const double inv_sqrt_h = 1.0 / std::sqrt(op.grid.h());
  for (std::size_t j = 0; j < modes; ++j) {
    if (j > 0 && !(ev[j] > ev[j - 1])) throw Error("eigendecompose: degenerate spectrum");
    sd.lambdas.push_back(ev[j]);
    std::vector<double> a(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = es.eigenvectors()(i, j) * inv_sqrt_h / std::sqrt(op.weight[i]);
      sum += a[i];
    }
    const double sign = j == 0 ? (sum < 0 ? -1.0 : 1.0) : (a.front() < 0 ? -1.0 : 1.0);
    for (double& v : a) v *= sign;
    sd.alphas.push_back(std::move(a));
  }
  for (double v : sd.alphas.front())
    if (!(v > 0)) throw Error("eigendecompose: principal mode is not positive");
  return sd;
}

/// Principal eigenfunction of the generator L = theta (d^2 - U' d), vanishing
/// at both ends, normalized by int eta d(alpha) = 1.
struct EtaFunction {
  Grid grid;
  std::vector<double> values;  // cells
  double lambda0 = 0.0;
  double slope0 = 0.0;  // one-sided derivative at 0
  double slope1 = 0.0;  // one-sided derivative at 1

  /// Piecewise-linear interpolation through (0,0), cell centers, (1,0).
  [[nodiscard]] double operator()(double x) const {
    const std::size_t n = grid.size();
    const double h = grid.h();
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double s = x / h - 0.5;
    if (s < 0.0) return values.front() * (x / (0.5 * h));
    if (s >= static_cast<double>(n - 1)) return values.back() * ((1.0 - x) / (0.5 * h));
    const auto i = static_cast<std::size_t>(s);
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
  }

  /// Quadratic extrapolation of the cell values to the two ends.
  [[nodiscard]] std::pair<double, double> extrapolated_ends() const {
    return boundary_trace(values);
  }
};

/// Inverse iteration on the discrete generator (the transpose of the adjoint
/// operator). Independent of the eigendecomposition route.
inline EtaFunction principal_eta(const CoefficientSet& c,
                                 std::optional<std::vector<double>> initial = std::nullopt) {
  const auto op = assemble_adjoint_operator(c);
  const std::size_t n = c.grid.size();
  const double h = c.grid.h();
  const Tridiagonal minus_l = op.matrix.transpose().shifted(0.0, -1.0);
  const TridiagonalLU lu(minus_l);

  std::vector<double> eta = initial ? *initial : c.theta;
  if (eta.size() != n) throw Error("principal_eta: initial guess has the wrong size");
  auto normalize_max = [](std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    for (double& x : v) x /= m;
  };
  normalize_max(eta);
  for (int it = 0; it < 500; ++it) {
    auto next = lu.solve(eta);
    double s = 0.0;
    for (double x : next) s += x;
    if (s < 0)
      for (double& x : next) x = -x;
    normalize_max(next);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - eta[i]));
    eta = std::move(next);
    if (change < 1e-15) break;
  }
  for (double v : eta)
    if (!(v > 0)) throw Error("principal_eta: eigenfunction changes sign in the interior");

  // Rayleigh quotient; -L is self-adjoint in the weight 1/D.
  const auto le = minus_l.apply(eta);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += eta[i] * le[i] / op.weight[i];
    den += eta[i] * eta[i] / op.weight[i];
  }

  // alpha is proportional to eta / D.
  double a_mass = 0.0, pairing = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a_mass += h * eta[i] / op.weight[i];
    pairing += h * eta[i] * eta[i] / op.weight[i];
  }
  const double scale = a_mass / pairing;
  for (double& v : eta) v *= scale;

  EtaFunction e;
  e.grid = c.grid;
  e.lambda0 = num / den;
  e.slope0 = (9.0 * eta[0] - eta[1]) / (3.0 * h);
  e.slope1 = -(9.0 * eta[n - 1] - eta[n - 2]) / (3.0 * h);
  e.values = std::move(eta);
  return e;
}

/// Quasi-stationary distribution alpha_0 / int alpha_0 (no atoms).
inline BoundaryMeasure qsd(const SpectralDecomposition& sd) {
  return from_density(sd.grid, sd.alphas.front());
}

struct SeriesResult {
  std::vector<double> density;
  double truncation_bound = 0.0;
  bool truncation_warning = false;
};

/// p_t = sum_j exp(-lambda_j t) P_j alpha_j with P_j = <alpha_j, p_0>.
inline SeriesResult series_evolve(const SpectralDecomposition& sd,
                                  std::span<const double> p0_interior, double t,
                                  double tolerance = 1e-6) {
  if (t < 0) throw Error("series_evolve: negative time");
  const std::size_t n = sd.grid.size();
  SeriesResult r;
  r.density.assign(n, 0.0);
  double max_coeff = 0.0, alpha_norms = 0.0;
  for (std::size_t j = 0; j < sd.modes(); ++j) {
    const double pj = sd.inner(sd.alphas[j], p0_interior);
    max_coeff = std::max(max_coeff, std::abs(pj));
    double sup = 0.0;
    for (double v : sd.alphas[j]) sup = std::max(sup, std::abs(v));
    alpha_norms += sup;
    const double decay = std::exp(-sd.lambdas[j] * t) * pj;
    for (std::size_t i = 0; i < n; ++i) r.density[i] += decay * sd.alphas[j][i];
  }
  // The first neglected eigenvalue exceeds the last computed one.
  r.truncation_bound = std::exp(-sd.lambdas.back() * t) * max_coeff * alpha_norms;
  r.truncation_warning = r.truncation_bound > tolerance;
  return r;
}

}  // namespace kimura
