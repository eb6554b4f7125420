#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kimura/coefficients.hpp"
#include "kimura/evolution.hpp"
#include "kimura/grid.hpp"
#include "kimura/spectral.hpp"
#include "kimura/tridiagonal.hpp"

namespace kimura {

/// q = eta p / int eta dp. Atoms are annihilated because eta = 0 on {0,1}.
inline BoundaryMeasure condition_measure(const BoundaryMeasure& p, const EtaFunction& eta) {
  if (!(p.grid == eta.grid)) throw Error("condition_measure: grid mismatch");
  const std::size_t n = p.grid.size();
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = eta.values[i] * p.interior[i];
  const double z = p.grid.integrate(q);
  if (!(z > 0))
    throw Error("condition_measure: measure is completely fixated (supported on {0,1})");
  for (double& v : q) v /= z;
  return {p.grid, 0.0, std::move(q), 0.0};
}

/// U -> U~ = U - 2 log eta -> V = U~ + log theta -> W = V - log sqrt(theta).
struct PotentialLadder {
  std::vector<double> u_tilde;
  std::vector<double> v;
  std::vector<double> w;
};

inline PotentialLadder potential_ladder(const CoefficientSet& c, const EtaFunction& eta) {
  const std::size_t n = c.grid.size();
  PotentialLadder l;
  l.u_tilde.resize(n);
  l.v.resize(n);
  l.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eta.values[i] > 0)) throw Error("potential_ladder: eta must be positive");
    l.u_tilde[i] = c.u[i] - 2.0 * std::log(eta.values[i]);
    l.v[i] = l.u_tilde[i] + std::log(c.theta[i]);
    l.w[i] = l.v[i] - 0.5 * std::log(c.theta[i]);
  }
  return l;
}

struct StationaryPi {
  Grid grid;
  std::vector<double> values;
  double z = 1.0;  // int e^{-V}

  [[nodiscard]] BoundaryMeasure measure() const { return {grid, 0.0, values, 0.0}; }
};

/// pi = e^{-V}/Z, cross-checked against the normalized product eta * alpha.
inline StationaryPi stationary_pi(const CoefficientSet& c, const EtaFunction& eta,
                                  const BoundaryMeasure& alpha) {
  const std::size_t n = c.grid.size();
  const auto ladder = potential_ladder(c, eta);
  std::vector<double> gibbs(n), product(n);
  for (std::size_t i = 0; i < n; ++i) {
    gibbs[i] = std::exp(-ladder.v[i]);
    product[i] = eta.values[i] * alpha.interior[i];
  }
  StationaryPi pi;
  pi.grid = c.grid;
  pi.z = c.grid.integrate(gibbs);
  const double zp = c.grid.integrate(product);
  double l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    gibbs[i] /= pi.z;
    l1 += c.grid.h() * std::abs(gibbs[i] - product[i] / zp);
  }
  if (l1 > 1e-8)
    throw Error("stationary_pi: Gibbs and eta*alpha forms disagree (L1=" + std::to_string(l1) +
                ")");
  pi.values = std::move(gibbs);
  return pi;
}

/// Conditioned Fokker-Planck operator as the Doob transform of the adjoint
/// operator by the discrete eta. Face flux J_f = w_f (sigma_R - sigma_L),
/// sigma = q / pi, w_f = kappa_f eta_L eta_R; the outer faces carry no flux.
struct ConditionedOperator {
  Grid grid;
  Tridiagonal matrix;
  std::vector<double> face_weight;  // interior faces 1..n-1, index f-1
  std::vector<double> pi_unnormalized;
};

inline ConditionedOperator assemble_conditioned_operator(const CoefficientSet& c,
                                                         const EtaFunction& eta) {
  const auto op = assemble_adjoint_operator(c);
  const std::size_t n = c.grid.size();
  const double h = c.grid.h();
  ConditionedOperator co;
  co.grid = c.grid;
  co.pi_unnormalized.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    co.pi_unnormalized[i] = eta.values[i] * eta.values[i] / op.weight[i];
  co.face_weight.resize(n - 1);
  co.matrix = Tridiagonal(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double w = op.kappa[i + 1] * eta.values[i] * eta.values[i + 1];
    co.face_weight[i] = w;
    co.matrix.upper[i] = w / (h * co.pi_unnormalized[i + 1]);
    co.matrix.lower[i] = w / (h * co.pi_unnormalized[i]);
  }
  // Zero column sums: mass is conserved by construction.
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    if (i > 0) s += co.matrix.upper[i - 1];
    if (i + 1 < n) s += co.matrix.lower[i];
    co.matrix.diag[i] = -s;
  }
  return co;
}

/// Backward Euler on the conditioned operator. Trajectory states carry no atoms.
inline Trajectory evolve_conditioned(const CoefficientSet& c, const EtaFunction& eta,
                                     const BoundaryMeasure& q0, std::span<const double> t_grid,
                                     double dt, const EvolutionOptions& opt = {}) {
  check_probability(q0);
  check_time_grid(t_grid);
  if (q0.has_atoms()) throw Error("evolve_conditioned: initial datum must be an interior density");
  if (!(dt > 0)) throw Error("evolve_conditioned: dt must be positive");
  const auto co = assemble_conditioned_operator(c, eta);
  std::map<double, TridiagonalLU> factors;

  Trajectory traj;
  traj.method = "conditioned-finite-volume";
  traj.times.assign(t_grid.begin(), t_grid.end());
  traj.states.push_back(q0);
  BoundaryMeasure q = q0;
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double span = t_grid[k] - t_grid[k - 1];
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    const double tau = span / static_cast<double>(steps);
    auto it = factors.find(tau);
    if (it == factors.end())
      it = factors.emplace(tau, TridiagonalLU(co.matrix.shifted(1.0, -tau))).first;
    for (std::size_t s = 0; s < steps; ++s) q.interior = it->second.solve(q.interior);
    for (double v : q.interior)
      if (v < -opt.negativity_tolerance) throw Error("evolve_conditioned: negative density");
    if (std::abs(q.interior_mass() - 1.0) > 1e-10)
      throw Error("evolve_conditioned: mass drift beyond tolerance");
    traj.states.push_back(q);
  }
  return traj;
}

struct EnvelopeRow {
  double t = 0.0;
  double c0 = 0.0;  // min q_t / pi
  double C0 = 0.0;  // max q_t / pi
};

inline std::vector<EnvelopeRow> envelope_check(const Trajectory& traj, const StationaryPi& pi,
                                               double t0) {
  if (!(t0 > 0)) throw Error("envelope_check: t0 must be positive");
  std::vector<EnvelopeRow> rows;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] < t0) continue;
    EnvelopeRow r{traj.times[k], std::numeric_limits<double>::infinity(), 0.0};
    const auto& q = traj.states[k].interior;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double ratio = q[i] / pi.values[i];
      r.c0 = std::min(r.c0, ratio);
      r.C0 = std::max(r.C0, ratio);
    }
    rows.push_back(r);
  }
  return rows;
}

/// p_t = e^{-lambda0 t} (int eta dp_0) q_t / eta on the interior. The atoms
/// follow from the two conservation laws: total mass 1 and int F dp_t fixed.
inline Trajectory unconditioned_from_conditioned(const CoefficientSet& c,
                                                 const Trajectory& q_traj,
                                                 const EtaFunction& eta,
                                                 const BoundaryMeasure& p0) {
  const std::size_t n = c.grid.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = eta.values[i] * p0.interior[i];
  const double eta_mass = c.grid.integrate(w);
  if (!(eta_mass > 0)) throw Error("unconditioned_from_conditioned: int eta dp0 must be positive");
  const auto F = fixation_probability(c);
  const double moment = p0.integrate(F);

  Trajectory out;
  out.method = "reconstructed";
  out.times = q_traj.times;
  for (std::size_t k = 0; k < q_traj.size(); ++k) {
    const double f = std::exp(-eta.lambda0 * q_traj.times[k]) * eta_mass;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      // (q/theta) * (theta/eta): both factors stay bounded near the ends.
      p[i] = f * (q_traj.states[k].interior[i] / c.theta[i]) * (c.theta[i] / eta.values[i]);
    }
    BoundaryMeasure s{c.grid, 0.0, std::move(p), 0.0};
    s.atom1 = moment - s.integrate(F);
    s.atom0 = 1.0 - s.atom1 - s.interior_mass();
    out.states.push_back(std::move(s));
  }
  return out;
}

}  // namespace kimura
