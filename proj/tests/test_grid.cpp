#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "kimura/common.hpp"
#include "kimura/grid.hpp"
#include "kimura/tridiagonal.hpp"

using namespace kimura;

TEST(PairwiseSum, MatchesCompensatedReference) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(10007);
  for (double& x : v) x = u(gen);
  long double ref = 0.0L;
  for (double x : v) ref += x;
  EXPECT_NEAR(pairwise_sum(v), static_cast<double>(ref), 1e-12);
}

TEST(ExtendedReal, InfinityIsNotAValue) {
  const auto inf = ExtendedReal::infinity();
  EXPECT_TRUE(inf.is_infinite());
  EXPECT_THROW((void)inf.value(), Error);
  EXPECT_TRUE(std::isinf(inf.as_double()));
  EXPECT_EQ(ExtendedReal(2.5).value(), 2.5);
}

TEST(Grid, CentersFacesAndLocate) {
  const Grid g(8);
  EXPECT_DOUBLE_EQ(g.h(), 0.125);
  EXPECT_DOUBLE_EQ(g.center(0), 0.0625);
  EXPECT_DOUBLE_EQ(g.face(8), 1.0);
  EXPECT_EQ(g.locate(0.0), 0u);
  EXPECT_EQ(g.locate(0.99), 7u);
  EXPECT_EQ(g.locate(1.0), 7u);
}

TEST(Dirac, EndpointsBecomeAtoms) {
  const Grid g(16);
  const auto a = dirac(g, 0.0);
  EXPECT_EQ(a.atom0, 1.0);
  EXPECT_EQ(a.interior_mass(), 0.0);
  const auto b = dirac(g, 1.0);
  EXPECT_EQ(b.atom1, 1.0);
}

TEST(Dirac, InteriorSplitKeepsMassAndFirstMoment) {
  const Grid g(400);
  for (double x0 : {0.3, 0.5, 0.123456, 0.9}) {
    const auto p = dirac(g, x0);
    EXPECT_NEAR(p.total_mass(), 1.0, 1e-14);
    std::vector<double> xm(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) xm[i] = g.center(i) * p.interior[i];
    EXPECT_NEAR(g.integrate(xm), x0, 1e-14) << x0;
  }
}

TEST(Dirac, RejectsOutsidePoints) {
  EXPECT_THROW(dirac(Grid(16), 1.5), Error);
  EXPECT_THROW(dirac(Grid(16), -0.1), Error);
}

TEST(BoundaryTrace, ExactOnQuadratics) {
  const Grid g(32);
  auto f = [](double x) { return 2.0 - 3.0 * x + 5.0 * x * x; };
  const auto v = g.sample(f);
  const auto [l, r] = boundary_trace(v);
  EXPECT_NEAR(l, f(0.0), 1e-12);
  EXPECT_NEAR(r, f(1.0), 1e-12);
}

TEST(CheckProbability, RejectsNegativeOrUnnormalized) {
  const Grid g(16);
  auto p = uniform_measure(g);
  EXPECT_NO_THROW(check_probability(p));
  p.interior[3] = -1.0;
  EXPECT_THROW(check_probability(p), Error);
  auto q = uniform_measure(g);
  q.atom0 = 0.5;
  EXPECT_THROW(check_probability(q), Error);
}

TEST(Tridiagonal, ThomasSolveMatchesApply) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Tridiagonal a(50);
  for (std::size_t i = 0; i < 50; ++i) a.diag[i] = 3.0 + u(gen);
  for (std::size_t i = 0; i < 49; ++i) {
    a.lower[i] = -u(gen);
    a.upper[i] = -u(gen);
  }
  std::vector<double> x(50);
  for (double& v : x) v = u(gen);
  const auto b = a.apply(x);
  const auto y = TridiagonalLU(a).solve(b);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(y[i], x[i], 1e-13);
  const auto t = a.transpose();
  EXPECT_EQ(t.lower, a.upper);
}
