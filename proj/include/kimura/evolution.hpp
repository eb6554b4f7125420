#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "kimura/coefficients.hpp"
#include "kimura/grid.hpp"
#include "kimura/spectral.hpp"
#include "kimura/tridiagonal.hpp"

namespace kimura {

struct Trajectory {
  std::vector<double> times;
  std::vector<BoundaryMeasure> states;
  std::string method;

  [[nodiscard]] std::size_t size() const { return times.size(); }

  /// Index of the recorded time closest to t.
  [[nodiscard]] std::size_t index_of(double t) const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < times.size(); ++k)
      if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
    return best;
  }
};

/// 0, step, 2 step, ..., T (T included).
inline std::vector<double> uniform_times(double T, double step) {
  if (!(T > 0) || !(step > 0)) throw Error("uniform_times: T and step must be positive");
  const auto m = static_cast<std::size_t>(std::llround(T / step));
  std::vector<double> t(m + 1);
  for (std::size_t k = 0; k <= m; ++k) t[k] = T * static_cast<double>(k) / static_cast<double>(m);
  return t;
}

inline void check_time_grid(std::span<const double> t_grid) {
  if (t_grid.empty() || t_grid.front() != 0.0) throw Error("time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw Error("time grid must be strictly increasing");
}

struct EvolutionOptions {
  double negativity_tolerance = 1e-10;
  double mass_tolerance_per_time = 1e-8;
};

/// Backward Euler on the finite-volume adjoint operator; the atoms receive
/// the outer-link fluxes of the implicit state, so total mass and the
/// fixation-probability moment are conserved to roundoff.
inline Trajectory evolve_unconditioned(const CoefficientSet& c, const BoundaryMeasure& p0,
                                       std::span<const double> t_grid, double dt,
                                       const EvolutionOptions& opt = {}) {
  check_probability(p0);
  check_time_grid(t_grid);
  if (!(dt > 0)) throw Error("evolve_unconditioned: dt must be positive");
  if (!(p0.grid == c.grid)) throw Error("evolve_unconditioned: grid mismatch");

  const auto op = assemble_adjoint_operator(c);
  std::map<double, TridiagonalLU> factors;
  auto factor_for = [&](double tau) -> const TridiagonalLU& {
    auto it = factors.find(tau);
    if (it == factors.end())
      it = factors.emplace(tau, TridiagonalLU(op.matrix.shifted(1.0, -tau))).first;
    return it->second;
  };

  Trajectory traj;
  traj.method = "finite-volume";
  traj.times.assign(t_grid.begin(), t_grid.end());
  traj.states.push_back(p0);
  BoundaryMeasure p = p0;
  const double m0 = p0.total_mass();
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double span = t_grid[k] - t_grid[k - 1];
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    const double tau = span / static_cast<double>(steps);
    const auto& lu = factor_for(tau);
    for (std::size_t s = 0; s < steps; ++s) {
      p.interior = lu.solve(p.interior);
      p.atom0 += tau * op.outflow0(p.interior);
      p.atom1 += tau * op.outflow1(p.interior);
    }
    for (double v : p.interior)
      if (v < -opt.negativity_tolerance)
        throw Error("evolve_unconditioned: negative interior density");
    if (std::abs(p.total_mass() - m0) > opt.mass_tolerance_per_time * std::max(1.0, t_grid[k]))
      throw Error("evolve_unconditioned: mass drift beyond tolerance");
    traj.states.push_back(p);
  }
  return traj;
}

struct ConservationReport {
  double max_mass_deviation = 0.0;
  double max_moment_deviation = 0.0;
};

inline ConservationReport conservation_report(const Trajectory& traj, const NodalField& F) {
  ConservationReport r;
  if (traj.states.empty()) return r;
  const double m0 = traj.states.front().total_mass();
  const double f0 = traj.states.front().integrate(F);
  for (const auto& s : traj.states) {
    r.max_mass_deviation = std::max(r.max_mass_deviation, std::abs(s.total_mass() - m0));
    r.max_moment_deviation = std::max(r.max_moment_deviation, std::abs(s.integrate(F) - f0));
  }
  return r;
}

struct AtomCurves {
  std::vector<double> atom0;
  std::vector<double> atom1;
};

/// Atoms from the boundary kinematics d/dt atom = -d_nu theta * trace,
/// integrated by the trapezoidal rule over the sampled trace history.
inline AtomCurves reconstruct_atoms(double atom0, double atom1, std::span<const double> times,
                                    std::span<const double> trace0,
                                    std::span<const double> trace1, double theta_slope0,
                                    double theta_slope1) {
  if (times.size() != trace0.size() || times.size() != trace1.size())
    throw Error("reconstruct_atoms: history length mismatch");
  AtomCurves a;
  a.atom0.push_back(atom0);
  a.atom1.push_back(atom1);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double dt = times[k] - times[k - 1];
    atom0 += theta_slope0 * 0.5 * dt * (trace0[k] + trace0[k - 1]);
    atom1 += -theta_slope1 * 0.5 * dt * (trace1[k] + trace1[k - 1]);
    a.atom0.push_back(atom0);
    a.atom1.push_back(atom1);
  }
  return a;
}

/// Same, reading traces off a trajectory's interior densities.
inline AtomCurves reconstruct_atoms(const CoefficientSet& c, const Trajectory& traj) {
  std::vector<double> t0, t1;
  for (const auto& s : traj.states) {
    auto [l, r] = boundary_trace(s.interior);
    t0.push_back(l);
    t1.push_back(r);
  }
  return reconstruct_atoms(traj.states.front().atom0, traj.states.front().atom1, traj.times,
                           t0, t1, c.theta_slope0, c.theta_slope1);
}

}  // namespace kimura
