#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kimura/qprocess.hpp"
#include "kimura/variational.hpp"

using namespace kimura;

namespace {

struct Fixture {
  CoefficientSet c;
  EtaFunction eta;
  StationaryPi pi;
  IsometryTable iso;

  explicit Fixture(std::size_t n, const std::string& u = "neutral")
      : c(build_coefficients("wright-fisher", u, n)),
        eta(principal_eta(c)),
        pi(stationary_pi(c, eta, qsd(eigendecompose(assemble_adjoint_operator(c), 2)))),
        iso(c) {}
};

const Fixture& neutral() {
  static const Fixture f(400);
  return f;
}

}  // namespace

TEST(Report, PassRuleAndCsv) {
  VerificationReport rep;
  rep.add({"a", "ref", 1.0, 1.0, -1e-3, 1e-2});
  rep.add({"b", "ref", 1.0, 1.0, -1.0, 1e-2, false, 0.0, false});
  rep.add({"c", "ref", 0.0, 0.0, std::numeric_limits<double>::infinity(), 0.0});
  EXPECT_TRUE(rep.rows()[0].pass);
  EXPECT_FALSE(rep.rows()[1].pass);
  EXPECT_TRUE(rep.rows()[2].pass);
  EXPECT_TRUE(rep.gating_passed());
  rep.add({"d", "ref", 0.0, 0.0, -0.5, 0.1});
  EXPECT_FALSE(rep.gating_passed());
  std::ostringstream a, b;
  rep.write_csv(a);
  rep.write_csv(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().find("runtime"), std::string::npos);
}

TEST(Edi, StationaryTrajectoryHasZeroResidual) {
  const auto& f = neutral();
  const auto traj = evolve_conditioned(f.c, f.eta, f.pi.measure(), uniform_times(0.5, 1e-2), 1e-3);
  const auto r = edi_residual(f.c, traj, f.pi, 0.05, 0.5);
  EXPECT_NEAR(r.residual, 0.0, 1e-12);
  EXPECT_NEAR(r.dissipation, 0.0, 1e-12);
  EXPECT_THROW(edi_residual(f.c, traj, f.pi, 0.0, 0.5), Error);
}

TEST(Edi, ResidualHalvesUnderRefinement) {
  double res[2];
  std::size_t k = 0;
  for (auto [n, dt] : {std::pair<std::size_t, double>{200, 2e-3}, {400, 1e-3}}) {
    const Fixture f(n);
    const auto q0 = restricted_pi(f.pi, 0.0, 0.5);
    const auto traj = evolve_conditioned(f.c, f.eta, q0, uniform_times(1.0, dt), dt);
    const auto r = edi_residual(f.c, traj, f.pi, 0.05, 1.0);
    EXPECT_GT(r.dissipation, 0.0);
    EXPECT_LE(std::abs(r.residual), 2e-2 * std::abs(r.h_t0) + 1e-10) << n;
    res[k++] = std::abs(r.residual);
  }
  EXPECT_NEAR(res[1] / res[0], 0.5, 0.15);
}

TEST(Evi, ReferenceEqualToStateGivesNonpositiveResidual) {
  const auto& f = neutral();
  const auto q0 = restricted_pi(f.pi, 0.0, 0.5);
  const auto traj = evolve_conditioned(f.c, f.eta, q0, uniform_times(0.6, 1e-3), 1e-3);
  for (double t : {0.1, 0.3, 0.5}) {
    const auto& y = traj.states[traj.index_of(t)];
    const auto r = evi_residual(f.iso, traj, f.pi, y, 3.0, t);
    // W(q_t, y) = 0 and H(q_t) = H(y); only the O(delta) difference quotient remains.
    EXPECT_LE(r.residual, 1e-9) << t;
    EXPECT_LE(std::abs(r.residual), 1e-4) << t;
  }
}

TEST(Evi, HoldsAgainstPi) {
  const auto& f = neutral();
  const auto traj =
      evolve_conditioned(f.c, f.eta, restricted_pi(f.pi, 0.0, 0.5), uniform_times(0.6, 1e-3), 1e-3);
  for (double t : {0.1, 0.3, 0.5}) {
    const auto r = evi_residual(f.iso, traj, f.pi, f.pi.measure(), 3.0, t);
    EXPECT_LE(r.relative(), 5e-2) << t;
    EXPECT_GT(r.scale, 0.0);
  }
  EXPECT_THROW(evi_residual(f.iso, traj, f.pi, f.pi.measure(), 3.0, 0.0), Error);
}

TEST(Evi, VanishesAtEquilibrium) {
  const auto& f = neutral();
  const auto traj = evolve_conditioned(f.c, f.eta, f.pi.measure(), uniform_times(0.3, 1e-3), 1e-3);
  const auto r = evi_residual(f.iso, traj, f.pi, f.pi.measure(), 3.0, 0.2);
  EXPECT_LT(r.scale, 1e-12);
  EXPECT_LT(std::abs(r.residual), 1e-10);
}

TEST(Contraction, IdenticalDataAreDegenerate) {
  const auto& f = neutral();
  const auto t = uniform_times(0.2, 0.1);
  const auto a = evolve_conditioned(f.c, f.eta, f.pi.measure(), t, 1e-3);
  EXPECT_TRUE(contraction_check(f.iso, a, a, 3.0).degenerate);
}

TEST(Contraction, RatioBoundedAtModulus) {
  const auto& f = neutral();
  const auto t = uniform_times(1.0, 0.02);
  const auto a = evolve_conditioned(f.c, f.eta, restricted_pi(f.pi, 0.0, 0.5), t, 1e-3);
  const auto b = evolve_conditioned(f.c, f.eta, restricted_pi(f.pi, 0.5, 1.0), t, 1e-3);
  const auto r = contraction_check(f.iso, a, b, 3.0);
  EXPECT_FALSE(r.degenerate);
  EXPECT_NEAR(r.ratios.front(), 1.0, 1e-12);
  EXPECT_LE(r.max_ratio, 1.02);
  EXPECT_GT(contraction_check(f.iso, a, b, 6.0).max_ratio, 1.5);
}

TEST(Lsi, ZeroAtPiAndPositiveOnPerturbations) {
  const auto& f = neutral();
  const auto at_pi = lsi_check(f.c, f.pi.measure(), f.pi, 3.0);
  EXPECT_NEAR(at_pi.margin.value(), 0.0, 1e-12);
  for (const auto& q : random_perturbations(f.pi, 20, 1.0, 5))
    EXPECT_GE(lsi_check(f.c, q, f.pi, 3.0).margin.value(), -1e-4);
  EXPECT_TRUE(lsi_check(f.c, dirac(f.c.grid, 0.3), f.pi, 3.0).margin.is_infinite());
  EXPECT_THROW(lsi_check(f.c, f.pi.measure(), f.pi, 0.0), Error);
}

TEST(Ckp, HoldsOnRandomMeasures) {
  const auto& f = neutral();
  for (const auto& q : random_perturbations(f.pi, 50, 3.0, 17)) EXPECT_GE(ckp_margin(q, f.pi), 0.0);
  EXPECT_NEAR(ckp_margin(f.pi.measure(), f.pi), 0.0, 1e-12);
  EXPECT_TRUE(std::isinf(ckp_margin(dirac(f.c.grid, 0.0), f.pi)));
}

TEST(Perturbations, AreProbabilitiesAndReproducible) {
  const auto& f = neutral();
  const auto a = random_perturbations(f.pi, 5, 1.0, 3), b = random_perturbations(f.pi, 5, 1.0, 3);
  for (std::size_t m = 0; m < 5; ++m) {
    EXPECT_EQ(a[m].interior, b[m].interior);
    EXPECT_NEAR(a[m].total_mass(), 1.0, 1e-12);
    for (std::size_t i = 0; i < a[m].interior.size(); ++i) {
      const double r = a[m].interior[i] / f.pi.values[i];
      EXPECT_LT(r, std::exp(2.0) + 1e-9);
      EXPECT_GT(r, std::exp(-2.0) - 1e-9);
    }
  }
}

TEST(TotalVariation, DisjointAndIdentical) {
  const auto& f = neutral();
  EXPECT_NEAR(total_variation(restricted_pi(f.pi, 0.0, 0.5), restricted_pi(f.pi, 0.5, 1.0)), 1.0, 1e-12);
  EXPECT_EQ(total_variation(f.pi.measure(), f.pi.measure()), 0.0);
  EXPECT_NEAR(total_variation(dirac(f.c.grid, 0.0), dirac(f.c.grid, 1.0)), 1.0, 1e-15);
}

TEST(Longtime, BoundsHold) {
  const auto& f = neutral();
  const auto traj =
      evolve_conditioned(f.c, f.eta, restricted_pi(f.pi, 0.0, 0.5), uniform_times(2.0, 0.05), 1e-3);
  const auto rows = longtime_report(f.iso, traj, f.pi, 3.0);
  EXPECT_EQ(rows.size(), traj.size());
  const auto s = summarize(rows);
  EXPECT_LE(s.w_ratio, 1.0 + 1e-2);
  EXPECT_LE(s.tv_ratio, 1.0);
  EXPECT_LE(s.h_ratio, 1.0 + 1e-2);
  EXPECT_THROW(longtime_report(f.iso, traj, f.pi, 0.0), Error);
}

TEST(RestrictedPi, SupportAndMass) {
  const auto& f = neutral();
  const auto q = restricted_pi(f.pi, 0.25, 0.5);
  EXPECT_NEAR(q.total_mass(), 1.0, 1e-12);
  for (std::size_t i = 0; i < q.interior.size(); ++i) {
    const double x = f.c.grid.center(i);
    if (x < 0.25 || x > 0.5) { EXPECT_EQ(q.interior[i], 0.0); }
  }
  EXPECT_THROW(restricted_pi(f.pi, 0.5, 0.5), Error);
}

TEST(NaiveEntropy, NeutralClosedFormAndDivergence) {
  // e^{-U}/theta = 1/(x(1-x)) has mass 2 log(k-1) on (1/k, 1-1/k) and the
  // functional reduces to minus the log of that mass.
  const auto& f = neutral();
  const std::vector<double> ks{10, 100, 1e3, 1e4, 1e5, 1e6};
  const auto r = naive_entropy_probe(f.c, ks);
  for (std::size_t j = 0; j < ks.size(); ++j)
    EXPECT_NEAR(r.value[j], -std::log(2 * std::log(ks[j] - 1)), 1e-9) << ks[j];
  EXPECT_TRUE(r.strictly_decreasing);
  EXPECT_GE(r.correlation, 0.99);
  EXPECT_THROW(naive_entropy_probe(f.c, std::vector<double>{2.0}), Error);
}
