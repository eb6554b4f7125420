#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "kimura/coefficients.hpp"
#include "kimura/common.hpp"
#include "kimura/metric.hpp"
#include "kimura/rng.hpp"
#include "kimura/spectral.hpp"

namespace kimura {

/// Inverse-CDF sampling from a quantile table.
inline double sample_quantile(const QuantileTable& law, double u) {
  const auto it = std::upper_bound(law.levels.begin(), law.levels.end(), u);
  std::size_t k = static_cast<std::size_t>(it - law.levels.begin());
  k = std::clamp<std::size_t>(k, 1, law.lo.size()) - 1;
  return law.at(k, u);
}

/// Runs body(begin, end) over fixed blocks of [0, count) on worker threads.
/// Results must be written per index; block layout never affects them.
template <class Body>
void parallel_blocks(std::size_t count, Body&& body, std::size_t block = 2048) {
  const std::size_t blocks = (count + block - 1) / block;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b * block, std::min(count, (b + 1) * block));
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers)
        body(b * block, std::min(count, (b + 1) * block));
    });
  }
  for (auto& t : pool) t.join();
}

struct Ensemble {
  std::size_t particles = 0;
  double dt = 0.0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;  // [snapshot][particle]
  std::vector<double> absorption_time;         // +inf while alive at the horizon
  std::vector<std::int8_t> absorbed_at;        // -1 alive, 0 or 1
  std::vector<std::uint64_t> steps;            // per particle
  std::vector<std::uint32_t> halvings;         // conditioned runs only
  std::vector<std::uint32_t> reflections;      // conditioned runs only

  [[nodiscard]] std::size_t snapshot_index(double t) const {
    for (std::size_t k = 0; k < snapshot_times.size(); ++k)
      if (std::abs(snapshot_times[k] - t) <= 0.5 * dt) return k;
    throw Error("ensemble has no snapshot at t=" + std::to_string(t));
  }
  [[nodiscard]] bool alive_at(std::size_t i, double t) const { return absorption_time[i] > t; }
  [[nodiscard]] std::uint64_t total_steps() const {
    std::uint64_t s = 0;
    for (auto v : steps) s += v;
    return s;
  }
  [[nodiscard]] std::uint64_t total_reflections() const {
    std::uint64_t s = 0;
    for (auto v : reflections) s += v;
    return s;
  }
};

struct SimulationParameters {
  double horizon = 1.0;
  double dt = 1e-3;
  std::size_t particles = 10000;
  std::uint64_t seed = 1;
  std::vector<double> snapshot_times;
};

namespace detail {

inline std::vector<std::size_t> snapshot_steps(const SimulationParameters& p) {
  std::vector<std::size_t> s;
  for (double t : p.snapshot_times) {
    if (t < 0 || t > p.horizon + 0.5 * p.dt) throw Error("snapshot time outside [0, T]");
    s.push_back(static_cast<std::size_t>(std::llround(t / p.dt)));
  }
  return s;
}

inline Ensemble make_ensemble(const SimulationParameters& p) {
  if (p.particles == 0) throw Error("simulation needs at least one particle");
  if (!(p.dt > 0) || !(p.horizon > 0)) throw Error("simulation needs positive dt and T");
  Ensemble e;
  e.particles = p.particles;
  e.dt = p.dt;
  e.horizon = p.horizon;
  e.seed = p.seed;
  e.snapshot_times = p.snapshot_times;
  e.snapshots.assign(p.snapshot_times.size(), std::vector<double>(p.particles, 0.0));
  e.absorption_time.assign(p.particles, std::numeric_limits<double>::infinity());
  e.absorbed_at.assign(p.particles, -1);
  e.steps.assign(p.particles, 0);
  e.halvings.assign(p.particles, 0);
  e.reflections.assign(p.particles, 0);
  return e;
}

}  // namespace detail

/// Euler-Maruyama for dX = -theta U' dt + sqrt(2 theta) dB, killed on {0,1}:
/// a step leaving (0,1) absorbs the particle at the crossed end.
inline Ensemble simulate_killed(const CoefficientSet& c, const QuantileTable& initial,
                                const SimulationParameters& p) {
  Ensemble e = detail::make_ensemble(p);
  const auto snap = detail::snapshot_steps(p);
  const auto total = static_cast<std::size_t>(std::llround(p.horizon / p.dt));
  const auto& theta = c.theta_profile;
  const auto& potential = c.potential_profile;

  parallel_blocks(p.particles, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ParticleStream rng(p.seed, i);
      double x = sample_quantile(initial, rng.uniform());
      std::size_t k = 0;
      auto record = [&](std::size_t step, double pos) {
        for (std::size_t s = 0; s < snap.size(); ++s)
          if (snap[s] == step) e.snapshots[s][i] = pos;
      };
      if (x <= 0.0 || x >= 1.0) {
        x = x <= 0.0 ? 0.0 : 1.0;
        e.absorption_time[i] = 0.0;
        e.absorbed_at[i] = static_cast<std::int8_t>(x);
        for (std::size_t s = 0; s < snap.size(); ++s) e.snapshots[s][i] = x;
        continue;
      }
      record(0, x);
      for (k = 1; k <= total; ++k) {
        const double th = std::max(0.0, theta.value(x));
        x += -th * potential.first(x) * p.dt + std::sqrt(2.0 * th * p.dt) * rng.normal();
        if (x <= 0.0 || x >= 1.0) {
          x = x <= 0.0 ? 0.0 : 1.0;
          e.absorption_time[i] = static_cast<double>(k) * p.dt;
          e.absorbed_at[i] = static_cast<std::int8_t>(x);
          for (std::size_t s = 0; s < snap.size(); ++s)
            if (snap[s] >= k) e.snapshots[s][i] = x;
          break;
        }
        record(k, x);
      }
      e.steps[i] = std::min(k, total);
    }
  });
  return e;
}

struct Histogram {
  std::vector<double> edges;
  std::vector<double> counts;
  std::vector<double> density;
  std::vector<double> density_error;  // multinomial standard error
  std::size_t samples = 0;

  [[nodiscard]] QuantileTable law() const {
    std::vector<double> mass(counts.size());
    for (std::size_t k = 0; k < mass.size(); ++k) mass[k] = counts[k] / static_cast<double>(samples);
    return QuantileTable::from_histogram(edges, mass);
  }
};

inline Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw Error("histogram needs at least one bin");
  Histogram hg;
  hg.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) hg.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  hg.counts.assign(bins, 0.0);
  for (double v : values) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
    hg.counts[b] += 1.0;
  }
  hg.samples = values.size();
  const double w = 1.0 / static_cast<double>(bins);
  const auto m = static_cast<double>(hg.samples);
  for (double c : hg.counts) {
    const double f = c / m;
    hg.density.push_back(f / w);
    hg.density_error.push_back(std::sqrt(f * (1.0 - f) / m) / w);
  }
  return hg;
}

/// Law of the survivors at time t (the Yaglom-limit estimator).
inline Histogram yaglom_estimate(const Ensemble& e, double t, std::size_t bins,
                                 std::size_t min_survivors = 100) {
  const auto k = e.snapshot_index(t);
  std::vector<double> alive;
  for (std::size_t i = 0; i < e.particles; ++i)
    if (e.alive_at(i, e.snapshot_times[k])) alive.push_back(e.snapshots[k][i]);
  if (alive.size() < min_survivors)
    throw Error("yaglom_estimate: insufficient survivors (" + std::to_string(alive.size()) + ")");
  return make_histogram(alive, bins);
}

struct SurvivalCurve {
  std::vector<double> times;
  std::vector<double> fraction;
  double slope = 0.0;  // d log S / dt on the fit window
  double slope_error = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;

  [[nodiscard]] double decay_rate() const { return -slope; }
};

/// Survival fractions on `times` and a least-squares fit of log S over the
/// part of [fit_start, inf) where at least `min_survivors` remain.
inline SurvivalCurve survival_curve(const Ensemble& e, std::span<const double> times,
                                    double fit_start, std::size_t min_survivors = 500,
                                    std::size_t min_events = 1000) {
  std::vector<double> absorbed;
  for (double t : e.absorption_time)
    if (std::isfinite(t)) absorbed.push_back(t);
  std::sort(absorbed.begin(), absorbed.end());

  SurvivalCurve sc;
  const auto n = static_cast<double>(e.particles);
  std::vector<double> fx, fy;
  for (double t : times) {
    const auto dead = static_cast<std::size_t>(
        std::upper_bound(absorbed.begin(), absorbed.end(), t) - absorbed.begin());
    const std::size_t alive = e.particles - dead;
    sc.times.push_back(t);
    sc.fraction.push_back(static_cast<double>(alive) / n);
    if (t >= fit_start && alive >= min_survivors && t <= e.horizon) {
      fx.push_back(t);
      fy.push_back(std::log(static_cast<double>(alive) / n));
    }
  }
  if (absorbed.size() < min_events) throw Error("survival_curve: not enough absorptions to fit");
  if (fx.size() < 3) throw Error("survival_curve: fit window empty");

  const double m = static_cast<double>(fx.size());
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    sx += fx[k];
    sy += fy[k];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    sxx += (fx[k] - mx) * (fx[k] - mx);
    sxy += (fx[k] - mx) * (fy[k] - my);
  }
  sc.slope = sxy / sxx;
  double rss = 0;
  for (std::size_t k = 0; k < fx.size(); ++k) rss += sqr(fy[k] - my - sc.slope * (fx[k] - mx));
  sc.slope_error = std::sqrt(rss / std::max(1.0, m - 2) / sxx);
  sc.window_start = fx.front();
  sc.window_end = fx.back();
  return sc;
}

struct EtaEstimate {
  double x = 0.0;
  double eta = 0.0;
  double error = 0.0;
};

/// eta(x) ~ P_x(t < tau) / P_alpha(t < tau) at a large time t.
inline std::vector<EtaEstimate> eta_ratio_estimate(const CoefficientSet& c,
                                                   const QuantileTable& alpha,
                                                   std::span<const double> xs, double t,
                                                   double dt, std::size_t particles,
                                                   std::uint64_t seed) {
  auto survival = [&](const QuantileTable& law, std::uint64_t s) {
    const auto e = simulate_killed(c, law, {t, dt, particles, s, {}});
    std::size_t alive = 0;
    for (std::size_t i = 0; i < e.particles; ++i) alive += e.alive_at(i, t) ? 1 : 0;
    return static_cast<double>(alive) / static_cast<double>(particles);
  };
  const double den = survival(alpha, seed);
  if (!(den > 0)) throw Error("eta_ratio_estimate: zero survival from alpha");
  const auto n = static_cast<double>(particles);
  std::vector<EtaEstimate> out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double x = xs[k];
    const double w[] = {1.0};
    const double num = survival(QuantileTable::from_atoms(std::span(&x, 1), w), seed + 1 + k);
    const double ratio = num / den;
    const double rel2 = (num > 0 ? (1 - num) / (n * num) : 0.0) + (1 - den) / (n * den);
    out.push_back({x, ratio, ratio * std::sqrt(rel2)});
  }
  return out;
}

/// theta * eta'/eta on the nodes {0, cell centers, 1}; finite at the ends
/// (limit theta'(0), theta'(1)) because eta vanishes linearly there.
class LogDriftTable {
 public:
  LogDriftTable(const CoefficientSet& c, const EtaFunction& eta) : h_(c.grid.h()) {
    const std::size_t n = c.grid.size();
    const auto& v = eta.values;
    values_.resize(n + 2);
    values_[0] = c.theta_slope0;
    values_[n + 1] = c.theta_slope1;
    for (std::size_t i = 0; i < n; ++i) {
      double d;
      if (i == 0)
        d = detail::three_point_slope(0.0, 0.5 * h_, 1.5 * h_, 0.0, v[0], v[1], 0.5 * h_);
      else if (i + 1 == n)
        d = detail::three_point_slope(1 - 1.5 * h_, 1 - 0.5 * h_, 1.0, v[n - 2], v[n - 1], 0.0,
                                      1 - 0.5 * h_);
      else
        d = (v[i + 1] - v[i - 1]) / (2 * h_);
      values_[i + 1] = c.theta[i] * d / v[i];
    }
  }

  [[nodiscard]] double operator()(double x) const {
    const std::size_t n = values_.size() - 2;
    if (x <= 0) return values_.front();
    if (x >= 1) return values_.back();
    const double s = x / h_ + 0.5;  // node coordinate: node k+1 at cell k
    if (s < 1.0) return values_[0] + (values_[1] - values_[0]) * (x / (0.5 * h_));
    if (s >= static_cast<double>(n)) {
      const double w = (x - (1.0 - 0.5 * h_)) / (0.5 * h_);
      return values_[n] + (values_[n + 1] - values_[n]) * w;
    }
    const auto k = static_cast<std::size_t>(s);
    const double w = s - static_cast<double>(k);
    return (1 - w) * values_[k] + w * values_[k + 1];
  }

 private:
  double h_;
  std::vector<double> values_;
};

struct ConditionedOptions {
  int max_halvings = 20;
  double max_reflection_fraction = 1e-3;
};

/// Euler-Maruyama for the conditioned SDE
///   dX = theta (-U' + 2 eta'/eta) dt + sqrt(2 theta) dB.
/// A proposal leaving (0,1) is retried with halved substeps; after
/// max_halvings the step is reflected and counted.
inline Ensemble simulate_conditioned(const CoefficientSet& c, const EtaFunction& eta,
                                     const QuantileTable& initial, const SimulationParameters& p,
                                     const ConditionedOptions& opt = {}) {
  Ensemble e = detail::make_ensemble(p);
  const auto snap = detail::snapshot_steps(p);
  const auto total = static_cast<std::size_t>(std::llround(p.horizon / p.dt));
  const LogDriftTable psi(c, eta);
  const auto& theta = c.theta_profile;
  const auto& potential = c.potential_profile;

  parallel_blocks(p.particles, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ParticleStream rng(p.seed, i);
      double x = sample_quantile(initial, rng.uniform());
      if (x <= 0.0 || x >= 1.0) throw Error("simulate_conditioned: initial law charges {0,1}");
      auto record = [&](std::size_t step) {
        for (std::size_t s = 0; s < snap.size(); ++s)
          if (snap[s] == step) e.snapshots[s][i] = x;
      };
      record(0);
      std::uint32_t halvings = 0, reflections = 0;
      for (std::size_t k = 1; k <= total; ++k) {
        double remaining = p.dt;
        double local = p.dt;
        int depth = 0;
        while (remaining > 0) {
          const double tau = std::min(local, remaining);
          const double th = std::max(0.0, theta.value(x));
          const double drift = -th * potential.first(x) + 2.0 * psi(x);
          const double y = x + drift * tau + std::sqrt(2.0 * th * tau) * rng.normal();
          if (y > 0.0 && y < 1.0) {
            x = y;
            remaining -= tau;
          } else if (depth < opt.max_halvings) {
            local *= 0.5;
            ++depth;
            ++halvings;
          } else {
            x = y <= 0.0 ? std::min(-y, 0.5) : std::max(2.0 - y, 0.5);
            if (x <= 0.0 || x >= 1.0) x = 0.5 * (y <= 0.0 ? local : 2.0 - local);
            remaining -= tau;
            ++reflections;
          }
        }
        record(k);
      }
      e.steps[i] = total;
      e.halvings[i] = halvings;
      e.reflections[i] = reflections;
    }
  });
  const double frac = static_cast<double>(e.total_reflections()) /
                      static_cast<double>(std::max<std::uint64_t>(1, e.total_steps()));
  if (frac > opt.max_reflection_fraction)
    throw Error("simulate_conditioned: reflection fallback exceeded 0.1% of steps");
  return e;
}

struct MeanEstimate {
  double mean = 0.0;
  double error = 0.0;  // standard error
};

inline MeanEstimate sample_mean(std::span<const double> v) {
  const auto n = static_cast<double>(v.size());
  const double m = pairwise_sum(v) / n;
  std::vector<double> d(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) d[i] = sqr(v[i] - m);
  const double var = pairwise_sum(d) / std::max(1.0, n - 1);
  return {m, std::sqrt(var / n)};
}

struct GirsanovReport {
  MeanEstimate weight;           // E_P[M_s]
  MeanEstimate weighted_f;       // E_P[M_s f(X_s)]
  MeanEstimate conditioned_f;    // E_Q[f(X_s)] from a conditioned ensemble
  bool has_conditioned = false;
};

/// M_s = e^{lambda0 s} eta(X_s) / int eta dp0 on survivors, 0 on absorbed paths.
inline GirsanovReport girsanov_check(const Ensemble& killed, const EtaFunction& eta,
                                     double eta_mass, const std::function<double(double)>& f,
                                     double s, const Ensemble* conditioned = nullptr) {
  if (!(eta_mass > 0)) throw Error("girsanov_check: int eta dp0 must be positive");
  const auto k = killed.snapshot_index(s);
  const double t = killed.snapshot_times[k];
  const double scale = std::exp(eta.lambda0 * t) / eta_mass;
  std::vector<double> m(killed.particles), mf(killed.particles);
  for (std::size_t i = 0; i < killed.particles; ++i) {
    const double x = killed.snapshots[k][i];
    const double w = killed.alive_at(i, t) ? scale * eta(x) : 0.0;
    m[i] = w;
    mf[i] = w * f(x);
  }
  GirsanovReport r;
  r.weight = sample_mean(m);
  r.weighted_f = sample_mean(mf);
  if (conditioned) {
    const auto kq = conditioned->snapshot_index(s);
    std::vector<double> fq(conditioned->particles);
    for (std::size_t i = 0; i < fq.size(); ++i) fq[i] = f(conditioned->snapshots[kq][i]);
    r.conditioned_f = sample_mean(fq);
    r.has_conditioned = true;
  }
  return r;
}

}  // namespace kimura
