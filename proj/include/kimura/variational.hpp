#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kimura/coefficients.hpp"
#include "kimura/evolution.hpp"
#include "kimura/metric.hpp"
#include "kimura/qprocess.hpp"

namespace kimura {

struct VerificationRow {
  std::string name;
  std::string reference;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double runtime_s = 0.0;
  bool gating = true;
  std::string note = {};
};

/// Rows of checks; a row passes iff margin >= -tolerance.
class VerificationReport {
 public:
  VerificationRow& add(VerificationRow row) {
    row.pass = std::isfinite(row.margin) ? row.margin >= -row.tolerance : row.margin > 0;
    rows_.push_back(std::move(row));
    return rows_.back();
  }

  /// Times `body`, which fills in the row, then adds it.
  VerificationRow& run(const std::function<VerificationRow()>& body) {
    const auto start = std::chrono::steady_clock::now();
    auto row = body();
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return add(std::move(row));
  }

  [[nodiscard]] const std::vector<VerificationRow>& rows() const { return rows_; }

  [[nodiscard]] bool gating_passed() const {
    return std::all_of(rows_.begin(), rows_.end(),
                       [](const VerificationRow& r) { return r.pass || !r.gating; });
  }

  void print_table(std::ostream& os) const {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-28s %14s %14s %12s %10s %6s %8s\n", "check", "lhs", "rhs",
                  "margin", "tol", "pass", "time_s");
    os << buf;
    for (const auto& r : rows_) {
      std::snprintf(buf, sizeof buf, "%-28s %14.6g %14.6g %12.4g %10.2g %6s %8.3f%s\n",
                    r.name.c_str(), r.lhs, r.rhs, r.margin, r.tolerance,
                    r.pass ? "yes" : (r.gating ? "NO" : "info"), r.runtime_s,
                    r.note.empty() ? "" : ("  " + r.note).c_str());
      os << buf;
    }
  }

  void write_csv(std::ostream& os) const {
    os << "name,reference,lhs,rhs,margin,tolerance,pass,gating\n";
    char buf[256];
    for (const auto& r : rows_) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d,%d\n", r.lhs, r.rhs, r.margin,
                    r.tolerance, r.pass ? 1 : 0, r.gating ? 1 : 0);
      os << r.name << ",\"" << r.reference << "\"," << buf;
    }
  }

 private:
  std::vector<VerificationRow> rows_;
};

/// Energy-dissipation residual on [t0, t1]:
///   int (|q'|^2/2 + I_pi(q)/2) ds + H_pi(q_t1) - H_pi(q_t0),
/// time integral by the trapezoidal rule over the recorded times.
struct EdiResult {
  double residual = 0.0;
  double dissipation = 0.0;
  double h_t0 = 0.0;
  double h_t1 = 0.0;
};

inline EdiResult edi_residual(const CoefficientSet& c, const Trajectory& traj,
                              const StationaryPi& pi, double t0, double t1) {
  if (!(t0 > 0) || !(t1 > t0)) throw Error("edi_residual: need 0 < t0 < t1");
  const std::size_t a = traj.index_of(t0), b = traj.index_of(t1);
  std::vector<double> parts;
  double prev = 0.0;
  for (std::size_t k = a; k <= b; ++k) {
    const double speed = metric_speed(c, traj, pi, traj.times[k], t0 * 0.5);
    const double density = 0.5 * speed * speed +
                           0.5 * fisher_information(c, traj.states[k], pi).value();
    if (k > a) parts.push_back(0.5 * (traj.times[k] - traj.times[k - 1]) * (density + prev));
    prev = density;
  }
  EdiResult r;
  r.dissipation = pairwise_sum(parts);
  r.h_t0 = relative_entropy(traj.states[a], pi).value();
  r.h_t1 = relative_entropy(traj.states[b], pi).value();
  r.residual = r.dissipation + r.h_t1 - r.h_t0;
  return r;
}

/// Evolution variational inequality at time t against a reference y:
///   d/dt W^2(q_t, y)/2 + lambda W^2/2 + H(q_t) - H(y) <= 0.
/// The derivative is a central difference with step `delta`; `scale` is
/// the sum of the magnitudes of the terms, for scale-relative tolerances.
struct EviResult {
  double residual = 0.0;
  double scale = 0.0;
  [[nodiscard]] double relative() const { return scale > 0 ? residual / scale : residual; }
};

inline EviResult evi_residual(const IsometryTable& iso,
                              const Trajectory& traj, const StationaryPi& pi,
                              const BoundaryMeasure& y, double lambda, double t,
                              double delta = 1e-3) {
  const std::size_t km = traj.index_of(t - delta), k = traj.index_of(t),
                    kp = traj.index_of(t + delta);
  if (km == k || kp == k) throw Error("evi_residual: trajectory not recorded around t");
  const auto yq = QuantileTable::from_measure(y);
  auto half_w2 = [&](std::size_t j) {
    return 0.5 * sqr(wasserstein_shahshahani(iso, QuantileTable::from_measure(traj.states[j]), yq));
  };
  const double deriv = (half_w2(kp) - half_w2(km)) / (traj.times[kp] - traj.times[km]);
  const double w2 = half_w2(k);
  const double hq = relative_entropy(traj.states[k], pi).value();
  const double hy = relative_entropy(y, pi).value();
  EviResult r;
  r.residual = deriv + lambda * w2 + hq - hy;
  r.scale = std::abs(deriv) + std::abs(lambda * w2) + std::abs(hq) + std::abs(hy);
  return r;
}

/// max_t W(q1_t, q2_t) e^{lambda t} / W(q1_0, q2_0).
struct ContractionResult {
  bool degenerate = false;
  double max_ratio = 0.0;
  double argmax = 0.0;
  std::vector<double> ratios;
};

inline ContractionResult contraction_check(const IsometryTable& iso, const Trajectory& a,
                                           const Trajectory& b, double lambda) {
  if (a.times != b.times) throw Error("contraction_check: time grids differ");
  ContractionResult r;
  const double w0 = wasserstein_shahshahani(iso, a.states.front(), b.states.front());
  if (!(w0 > 1e-14)) {
    r.degenerate = true;
    return r;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double ratio =
        wasserstein_shahshahani(iso, a.states[k], b.states[k]) * std::exp(lambda * a.times[k]) / w0;
    r.ratios.push_back(ratio);
    if (ratio > r.max_ratio) {
      r.max_ratio = ratio;
      r.argmax = a.times[k];
    }
  }
  return r;
}

/// Margin I_pi(q)/(2 lambda) - H_pi(q); +infinity when I_pi(q) is.
struct LsiResult {
  ExtendedReal entropy;
  ExtendedReal fisher;
  ExtendedReal margin;
};

inline LsiResult lsi_check(const CoefficientSet& c, const BoundaryMeasure& q,
                           const StationaryPi& pi, double lambda) {
  if (!(lambda > 0)) throw Error("lsi_check: lambda must be positive");
  LsiResult r;
  r.entropy = relative_entropy(q, pi);
  r.fisher = fisher_information(c, q, pi);
  if (r.fisher.is_infinite())
    r.margin = ExtendedReal::infinity();
  else
    r.margin = ExtendedReal(r.fisher.value() / (2 * lambda) - r.entropy.value());
  return r;
}

/// Half of the L1 distance between two interior densities (plus atoms).
inline double total_variation(const BoundaryMeasure& q, const BoundaryMeasure& r) {
  std::vector<double> d(q.interior.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(q.interior[i] - r.interior[i]);
  return 0.5 * (q.grid.integrate(d) + std::abs(q.atom0 - r.atom0) + std::abs(q.atom1 - r.atom1));
}

struct LongtimeRow {
  double t = 0.0;
  double w = 0.0, w_bound = 0.0;
  double tv = 0.0, tv_bound = 0.0;
  double h = 0.0, h_bound = 0.0;
};

/// Decay of q_t towards pi against the three exponential bounds.
inline std::vector<LongtimeRow> longtime_report(const IsometryTable& iso, const Trajectory& traj,
                                                const StationaryPi& pi, double lambda) {
  if (!(lambda > 0)) throw Error("longtime_report: lambda must be positive");
  const auto pm = pi.measure();
  const auto pq = QuantileTable::from_measure(pm);
  const double w0 = wasserstein_shahshahani(iso, QuantileTable::from_measure(traj.states[0]), pq);
  const double h0 = relative_entropy(traj.states[0], pi).value();
  std::vector<LongtimeRow> rows;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    const auto& q = traj.states[k];
    LongtimeRow r;
    r.t = t;
    r.w = wasserstein_shahshahani(iso, QuantileTable::from_measure(q), pq);
    r.w_bound = std::exp(-lambda * t) * w0;
    r.tv = total_variation(q, pm);
    r.tv_bound = std::exp(-lambda * t) * std::sqrt(2 * h0);
    r.h = relative_entropy(q, pi).value();
    r.h_bound = std::exp(-2 * lambda * t) * h0;
    rows.push_back(r);
  }
  return rows;
}

/// Largest ratio value/bound over the rows, per column (W, TV, H); rows
/// with a zero bound are skipped.
struct LongtimeSummary {
  double w_ratio = 0.0;
  double tv_ratio = 0.0;
  double h_ratio = 0.0;
};

inline LongtimeSummary summarize(const std::vector<LongtimeRow>& rows) {
  LongtimeSummary s;
  for (const auto& r : rows) {
    if (r.w_bound > 0) s.w_ratio = std::max(s.w_ratio, r.w / r.w_bound);
    if (r.tv_bound > 0) s.tv_ratio = std::max(s.tv_ratio, r.tv / r.tv_bound);
    if (r.h_bound > 0) s.h_ratio = std::max(s.h_ratio, r.h / r.h_bound);
  }
  return s;
}

/// Csiszar-Kullback-Pinsker margin sqrt(2 H) - TV.
inline double ckp_margin(const BoundaryMeasure& q, const StationaryPi& pi) {
  const auto h = relative_entropy(q, pi);
  if (h.is_infinite()) return std::numeric_limits<double>::infinity();
  return std::sqrt(2 * h.value()) - total_variation(q, pi.measure());
}

/// q proportional to pi e^{eps phi}, phi a random trigonometric polynomial
/// with sup |phi| <= 1 and eps uniform in (0, max_eps].
inline std::vector<BoundaryMeasure> random_perturbations(const StationaryPi& pi, std::size_t count,
                                                         double max_eps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), eps(0.0, max_eps);
  const auto xs = pi.grid.centers();
  std::vector<BoundaryMeasure> out;
  for (std::size_t m = 0; m < count; ++m) {
    double a[4], b[4];
    for (int j = 0; j < 4; ++j) {
      a[j] = coef(gen);
      b[j] = coef(gen);
    }
    std::vector<double> phi(xs.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double v = 0.0;
      for (int j = 0; j < 4; ++j) {
        const double w = std::numbers::pi * (j + 1) * xs[i];
        v += (a[j] * std::cos(w) + b[j] * std::sin(w)) / (j + 1);
      }
      phi[i] = v;
      sup = std::max(sup, std::abs(v));
    }
    const double e = std::max(1e-3, eps(gen));
    std::vector<double> q(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) q[i] = pi.values[i] * std::exp(e * phi[i] / sup);
    out.push_back(from_density(pi.grid, std::move(q)));
  }
  return out;
}

/// pi restricted to (a, b) and renormalized.
inline BoundaryMeasure restricted_pi(const StationaryPi& pi, double a, double b) {
  if (!(a < b)) throw Error("restricted_pi: need a < b");
  std::vector<double> q(pi.values.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double x = pi.grid.center(i);
    if (x > a && x < b) q[i] = pi.values[i];
  }
  return from_density(pi.grid, std::move(q));
}

/// Naive entropy int p log p + int p U_hat, U_hat = U + log theta, of the
/// normalized restriction of e^{-U}/theta to (1/k, 1 - 1/k). Integrated in
/// the logit variable u = log(x/(1-x)), where dx = x(1-x) du.
struct NaiveEntropyProbe {
  std::vector<double> k;
  std::vector<double> value;
  double correlation = 0.0;  // with -log log k
  bool strictly_decreasing = false;
};

inline NaiveEntropyProbe naive_entropy_probe(const CoefficientSet& c, std::span<const double> ks) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const auto& th = c.theta_profile;
  const auto& pot = c.potential_profile;
  NaiveEntropyProbe r;
  for (double k : ks) {
    if (!(k > 2)) throw Error("naive_entropy_probe: k must exceed 2");
    const double lo = std::log(1.0 / (k - 1.0)), hi = -lo;
    auto x_of = [](double u) { return 1.0 / (1.0 + std::exp(-u)); };
    auto jac = [&](double u) {
      const double x = x_of(u);
      return x * (1.0 - x);
    };
    // unnormalized density e^{-U}/theta, times the jacobian
    auto f = [&](double u) {
      const double x = x_of(u);
      return std::exp(-pot.value(x)) / th.value(x) * jac(u);
    };
    const double z = GK::integrate(f, lo, hi, 15, 1e-13);
    // int p log p + int p (U + log theta) = int p (log f_raw - log z + U + log theta) = -log z
    // in exact arithmetic; evaluated termwise so that tables are handled too.
    auto g = [&](double u) {
      const double x = x_of(u);
      const double raw = std::exp(-pot.value(x)) / th.value(x);
      const double p = raw / z;
      return p * (std::log(p) + pot.value(x) + std::log(th.value(x))) * jac(u);
    };
    r.k.push_back(k);
    r.value.push_back(GK::integrate(g, lo, hi, 15, 1e-13));
  }
  r.strictly_decreasing = true;
  for (std::size_t j = 1; j < r.value.size(); ++j)
    if (!(r.value[j] < r.value[j - 1])) r.strictly_decreasing = false;
  if (r.value.size() >= 2) {
    std::vector<double> x;
    for (double k : r.k) x.push_back(-std::log(std::log(k)));
    const double m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      mx += x[j] / m;
      my += r.value[j] / m;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      sxy += (x[j] - mx) * (r.value[j] - my);
      sxx += sqr(x[j] - mx);
      syy += sqr(r.value[j] - my);
    }
    r.correlation = sxy / std::sqrt(sxx * syy);
  }
  return r;
}

}  // namespace kimura
