#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kimura/metric.hpp"
#include "kimura/qprocess.hpp"
#include "ot_oracle.hpp"

using namespace kimura;

namespace {

constexpr double pi_v = std::numbers::pi;

const CoefficientSet& wf() {
  static const auto c = build_coefficients("wright-fisher", "neutral", 400);
  return c;
}

const IsometryTable& wf_iso() {
  static const IsometryTable iso(wf());
  return iso;
}

std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t k) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> w(k);
  double s = 0.0;
  for (double& x : w) s += (x = u(gen));
  for (double& x : w) x /= s;
  return w;
}

}  // namespace

TEST(Distance, WrightFisherClosedForms) {
  const auto& c = wf();
  EXPECT_NEAR(shahshahani_distance(c, 0.0, 1.0), pi_v, 1e-10);
  EXPECT_NEAR(shahshahani_distance(c, 0.25, 0.75), pi_v / 3, 1e-8);
  EXPECT_NEAR(shahshahani_distance(c, 0.75, 0.25), pi_v / 3, 1e-8);
  EXPECT_EQ(shahshahani_distance(c, 0.4, 0.4), 0.0);
  for (double x : {0.01, 0.2, 0.5, 0.9}) {
    const double exact = 2 * std::asin(std::sqrt(x));
    EXPECT_NEAR(shahshahani_distance(c, 0.0, x), exact, 1e-9) << x;
  }
}

TEST(Isometry, DiameterInverseAndClosedForm) {
  const auto& iso = wf_iso();
  EXPECT_NEAR(iso.diameter(), pi_v, 1e-10);
  for (double x : {0.0, 1e-6, 0.03, 0.25, 0.5, 0.77, 0.999999, 1.0}) {
    EXPECT_NEAR(iso(x), 2 * std::asin(std::sqrt(x)), 1e-9) << x;
    EXPECT_NEAR(iso.inverse(iso(x)), x, 1e-10) << x;
  }
}

TEST(Isometry, MatchesDirectQuadratureOnCoarseGrid) {
  const auto c = build_coefficients("wright-fisher", "neutral", 200);
  const IsometryTable iso(c);
  for (double x : {0.1, 0.6}) EXPECT_NEAR(iso(x), shahshahani_distance(c, 0.0, x), 1e-9);
}

TEST(Wasserstein, DiracsGiveGeodesicDistance) {
  const auto& c = wf();
  const auto& iso = wf_iso();
  const double one = 1.0;
  for (auto [x, y] : {std::pair{0.1, 0.7}, {0.0, 1.0}, {0.25, 0.75}, {0.5, 0.5}}) {
    const auto a = QuantileTable::from_atoms(std::span(&x, 1), std::span(&one, 1));
    const auto b = QuantileTable::from_atoms(std::span(&y, 1), std::span(&one, 1));
    EXPECT_NEAR(wasserstein_shahshahani(iso, a, b), shahshahani_distance(c, x, y), 1e-8);
  }
}

TEST(Wasserstein, NetworkFlowOracle) {
  const auto& c = wf();
  const auto& iso = wf_iso();
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t m = 2 + trial % 4, n = 3 + trial % 3;
    std::vector<double> xs(m), ys(n);
    for (double& x : xs) x = u(gen);
    for (double& y : ys) y = u(gen);
    if (trial == 0) xs[0] = 0.0, ys[0] = 1.0;
    const auto a = random_simplex(gen, m), b = random_simplex(gen, n);
    const double oracle = testing_oracle::min_cost_flow(a, b, [&](std::size_t i, std::size_t j) {
      return sqr(shahshahani_distance(c, xs[i], ys[j]));
    });
    const double w = wasserstein_shahshahani(iso, QuantileTable::from_atoms(xs, a), QuantileTable::from_atoms(ys, b));
    EXPECT_NEAR(w * w, oracle, 1e-8) << trial;
  }
}

TEST(Wasserstein, SymmetricAndTriangle) {
  const auto& iso = wf_iso();
  const auto& g = wf().grid;
  const auto a = uniform_measure(g), b = dirac(g, 0.2);
  BoundaryMeasure d{g, 0.3, std::vector<double>(400, 0.5), 0.2};
  const double ab = wasserstein_shahshahani(iso, a, b), ba = wasserstein_shahshahani(iso, b, a);
  EXPECT_NEAR(ab, ba, 1e-12);
  EXPECT_LE(ab, wasserstein_shahshahani(iso, a, d) + wasserstein_shahshahani(iso, d, b) + 1e-12);
  EXPECT_NEAR(wasserstein_shahshahani(iso, a, a), 0.0, 1e-12);
}

TEST(Wasserstein, AtomsReachBoundaryAtDiameter) {
  const auto& iso = wf_iso();
  const auto& g = wf().grid;
  EXPECT_NEAR(wasserstein_shahshahani(iso, dirac(g, 0.0), dirac(g, 1.0)), pi_v, 1e-10);
}

TEST(Entropy, UniformAgainstNeutralPi) {
  // int log(1 / (6 x (1-x))) dx = 2 - log 6
  double prev = 0.0;
  for (std::size_t n : {200u, 400u, 800u}) {
    const auto c = build_coefficients("wright-fisher", "neutral", n);
    const auto eta = principal_eta(c);
    const auto pi = stationary_pi(c, eta, qsd(eigendecompose(assemble_adjoint_operator(c), 2)));
    const double err = std::abs(relative_entropy(uniform_measure(c.grid), pi).value() - (2 - std::log(6.0)));
    if (n == 400) { EXPECT_LE(err, 2e-3); }
    if (prev > 0) { EXPECT_LT(err, prev); }
    prev = err;
  }
}

TEST(Entropy, InfiniteWithAtomsAndZeroAtPi) {
  const auto& c = wf();
  const auto eta = principal_eta(c);
  const auto pi = stationary_pi(c, eta, qsd(eigendecompose(assemble_adjoint_operator(c), 2)));
  BoundaryMeasure p{c.grid, 1e-3, pi.values, 0.0};
  for (double& v : p.interior) v *= 1 - 1e-3;
  EXPECT_TRUE(relative_entropy(p, pi).is_infinite());
  EXPECT_NEAR(relative_entropy(pi.measure(), pi).value(), 0.0, 1e-14);
  EXPECT_TRUE(fisher_information(c, p, pi).is_infinite());
  EXPECT_TRUE(fisher_information(c, dirac(c.grid, 0.5), pi).is_infinite());
}

TEST(Fisher, ExponentialTiltQuadratureOracle) {
  const auto& c = wf();
  const auto eta = principal_eta(c);
  const auto pi = stationary_pi(c, eta, qsd(eigendecompose(assemble_adjoint_operator(c), 2)));
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  for (double eps : {0.5, 2.0}) {
    auto dens = [&](double x) { return 6 * x * (1 - x) * std::exp(eps * x); };
    const double z = GK::integrate(dens, 0.0, 1.0);
    const double exact = eps * eps * GK::integrate([&](double x) { return x * (1 - x) * dens(x); }, 0.0, 1.0) / z;
    std::vector<double> q(400);
    for (std::size_t i = 0; i < 400; ++i) q[i] = pi.values[i] * std::exp(eps * c.grid.center(i));
    const double zq = c.grid.integrate(q);
    for (double& v : q) v /= zq;
    const double got = fisher_information(c, {c.grid, 0.0, q, 0.0}, pi).value();
    EXPECT_NEAR(got, exact, 1e-4 * exact + 1e-6) << eps;
  }
}

TEST(Lagrangian, BoundaryConvention) {
  const auto& c = wf();
  EXPECT_EQ(lagrangian(c, 0.0, 0.0).value(), 0.0);
  EXPECT_TRUE(lagrangian(c, 1.0, 0.3).is_infinite());
  EXPECT_NEAR(lagrangian(c, 0.5, 0.5).value(), 1.0, 1e-14);
  EXPECT_THROW(lagrangian(c, 1.5, 0.0), Error);
}

TEST(Convexity, NeutralModulusIsThreeAtMidpoint) {
  const auto& c = wf();
  const auto m = convexity_modulus(c, principal_eta(c));
  EXPECT_NEAR(m.lambda, 3.0, 1e-3);
  EXPECT_NEAR(m.argmin, 0.5, 1e-2);
  EXPECT_GT(m.g.front(), 100.0);
  EXPECT_GT(m.g.back(), 100.0);
}

TEST(Convexity, SecondOrderConvergence) {
  double e[3];
  std::size_t k = 0;
  for (std::size_t n : {100u, 200u, 400u}) {
    const auto c = build_coefficients("wright-fisher", "neutral", n);
    e[k++] = std::abs(convexity_modulus(c, principal_eta(c)).lambda - 3.0);
  }
  EXPECT_GT(e[0] / e[1], 3.0);
  EXPECT_GT(e[1] / e[2], 3.0);
}

TEST(MetricSpeed, EqualsRootFisherAndMatchesFiniteDifference) {
  const auto& c = wf();
  const auto eta = principal_eta(c);
  const auto pi = stationary_pi(c, eta, qsd(eigendecompose(assemble_adjoint_operator(c), 2)));
  std::vector<double> q0(400);
  for (std::size_t i = 0; i < 400; ++i) q0[i] = pi.values[i] * (1 + 0.8 * std::cos(pi_v * c.grid.center(i)));
  const auto traj = evolve_conditioned(c, eta, {c.grid, 0.0, q0, 0.0}, uniform_times(0.3, 1e-3), 1e-4);
  for (double t : {0.1, 0.2}) {
    const auto& q = traj.states[traj.index_of(t)];
    const double speed = metric_speed(c, traj, pi, t);
    EXPECT_NEAR(speed, std::sqrt(fisher_information(c, q, pi).value()), 1e-12);
    const auto& a = traj.states[traj.index_of(t - 1e-3)];
    const auto& b = traj.states[traj.index_of(t + 1e-3)];
    const double fd = wasserstein_shahshahani(wf_iso(), a, b) / 2e-3;
    EXPECT_NEAR(fd / speed, 1.0, 2e-2) << t;
  }
  EXPECT_THROW(metric_speed(c, traj, pi, 0.0), Error);
}
