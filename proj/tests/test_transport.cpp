#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "wass/transport.hpp"

using namespace wass;

namespace {

void expect_certified(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const OTSolution& s) {
  const auto& pl = s.plan;
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j)
      EXPECT_LE(s.phi[i] + s.psi[j], dist2(mu.point(i), nu.point(j)) + 1e-9);
  for (const auto& e : pl.entries()) {
    if (e.mass > 1e-12) {
      EXPECT_NEAR(s.phi[e.source] + s.psi[e.target], dist2(mu.point(e.source), nu.point(e.target)), 1e-7);
    }
  }
  EXPECT_LE(s.duality_gap, 1e-7 * (1 + s.squared_cost));
  double mean_psi = 0.0;
  for (std::size_t j = 0; j < nu.size(); ++j) mean_psi += nu.weight(j) * s.psi[j];
  EXPECT_NEAR(mean_psi, 0.0, 1e-12);
  double dual = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) dual += mu.weight(i) * s.phi[i];
  for (std::size_t j = 0; j < nu.size(); ++j) dual += nu.weight(j) * s.psi[j];
  EXPECT_NEAR(dual, s.squared_cost, 1e-7);
}

}  // namespace

TEST(SolveOt, TwoDiracs) {
  auto s = solve_ot(DiscreteMeasure::dirac(Point{0.0, 0.0}), DiscreteMeasure::dirac(Point{3.0, 4.0}));
  EXPECT_DOUBLE_EQ(s.squared_cost, 25.0);
  EXPECT_DOUBLE_EQ(s.w2(), 5.0);
}

TEST(SolveOt, IdentityCase) {
  Rng rng(11);
  auto mu = oracle::random_measure(rng, 5, 2);
  auto s = solve_ot(mu, mu);
  EXPECT_NEAR(s.squared_cost, 0.0, 1e-15);
  for (const auto& e : s.plan.entries()) {
    if (e.mass > 1e-12) {
      EXPECT_EQ(e.source, e.target);
    }
  }
}

TEST(SolveOt, MonotoneOneDimensional) {
  auto mu = new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  auto nu = new_discrete({Point{0.0}, Point{2.0}}, {0.5, 0.5});
  EXPECT_NEAR(oracle::w2_squared_1d(mu, nu), 0.5, 1e-15);
  auto s = solve_ot(mu, nu);
  EXPECT_NEAR(s.squared_cost, 0.5, 1e-12);
  expect_certified(mu, nu, s);
}

TEST(SolveOt, DimensionMismatch) {
  EXPECT_THROW(solve_ot(DiscreteMeasure::dirac(Point{0.0}), DiscreteMeasure::dirac(Point{0.0, 1.0})),
               InvalidArgument);
}

TEST(SolveOt, MatchesVertexEnumeration) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(1000 + seed);
    auto mu = oracle::random_measure(rng, 1 + rng.below(4), 1 + rng.below(3));
    auto nu = oracle::random_measure(rng, 1 + rng.below(4), mu.dim());
    auto s = solve_ot(mu, nu);
    EXPECT_NEAR(s.squared_cost, oracle::brute_force_w2_squared(mu, nu), 1e-9) << "seed " << seed;
    expect_certified(mu, nu, s);
    EXPECT_TRUE(is_cyclically_monotone(s.plan, 4).monotone);
  }
}

TEST(SolveOt, OneDimensionalOracle) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    auto mu = oracle::random_measure(rng, 1 + rng.below(8), 1, 5.0);
    auto nu = oracle::random_measure(rng, 1 + rng.below(8), 1, 5.0);
    EXPECT_NEAR(w2_squared(mu, nu), oracle::w2_squared_1d(mu, nu), 1e-9);
  }
}

TEST(SolveOt, DegenerateMarginals) {
  // equal-mass atoms produce degenerate bases
  std::vector<Point> a, b;
  for (int i = 0; i < 6; ++i) {
    a.push_back(Point{double(i), 0.0});
    b.push_back(Point{double(5 - i), 1.0});
  }
  auto mu = DiscreteMeasure::uniform(a), nu = DiscreteMeasure::uniform(b);
  auto s = solve_ot(mu, nu);
  EXPECT_NEAR(s.squared_cost, 1.0, 1e-12);
  expect_certified(mu, nu, s);
}

TEST(SolveOt, MetricAxioms) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(500 + seed);
    const std::size_t d = 1 + rng.below(3);
    auto a = oracle::random_measure(rng, 1 + rng.below(6), d);
    auto b = oracle::random_measure(rng, 1 + rng.below(6), d);
    auto c = oracle::random_measure(rng, 1 + rng.below(6), d);
    EXPECT_NEAR(w2(a, b), w2(b, a), 1e-9);
    EXPECT_LE(w2(a, c), w2(a, b) + w2(b, c) + 1e-7);
    EXPECT_NEAR(w2(a, a), 0.0, 1e-7);
    auto s = solve_ot(a, b);
    EXPECT_TRUE(is_cyclically_monotone(s.plan, std::clamp<std::size_t>(s.plan.entries().size(), 2, 5)).monotone);
  }
  auto a = new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  auto b = new_discrete({Point{0.0}, Point{1.0 + 1e-3}}, {0.5, 0.5});
  EXPECT_GT(w2(a, b), 0.0);
}

TEST(CyclicalMonotonicity, IdentityAndAntiMonotone) {
  Rng rng(5);
  auto mu = oracle::random_measure(rng, 4, 2);
  EXPECT_TRUE(is_cyclically_monotone(TransportPlan::identity(mu), 4).monotone);

  auto m = new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  TransportPlan anti(m, m, {{0, 1, 0.5}, {1, 0, 0.5}});
  auto r = is_cyclically_monotone(anti, 2);
  EXPECT_FALSE(r.monotone);
  EXPECT_NEAR(r.min_cycle_sum, -1.0, 1e-15);
  EXPECT_EQ(r.witness.size(), 2u);
  EXPECT_THROW(is_cyclically_monotone(anti, 1), InvalidArgument);
}

TEST(TransportPlan, RejectsBadMarginals) {
  auto m = new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  EXPECT_THROW(TransportPlan(m, m, {{0, 0, 0.5}, {1, 1, 0.4}}), InvalidArgument);
  EXPECT_THROW(TransportPlan(m, m, {{0, 0, 0.6}, {1, 1, 0.5}, {0, 1, -0.1}}), InvalidArgument);
}

TEST(Glue, IdentityCouplings) {
  Rng rng(9);
  auto mu = oracle::random_measure(rng, 3, 2);
  auto id = TransportPlan::identity(mu);
  auto g = glue(id, id);
  for (std::size_t a = 0; a < g.size(); ++a) {
    EXPECT_EQ(g.point(0, a), g.point(1, a));
    EXPECT_EQ(g.point(0, a), g.point(2, a));
  }
}

TEST(Glue, SingleFirstAtomIsProduct) {
  auto d0 = DiscreteMeasure::dirac(Point{0.0});
  auto half = new_discrete({Point{1.0}, Point{2.0}}, {0.5, 0.5});
  TransportPlan g12(d0, half, {{0, 0, 0.5}, {0, 1, 0.5}});
  TransportPlan g13(d0, DiscreteMeasure::dirac(Point{5.0}), {{0, 0, 1.0}});
  auto g = glue(g12, g13);
  std::vector<std::vector<Point>> slots{{Point{0.0}, Point{0.0}}, {Point{1.0}, Point{2.0}}, {Point{5.0}, Point{5.0}}};
  EXPECT_TRUE(same_product(g, ProductMeasure(slots, {0.5, 0.5}), 1e-15));
}

TEST(Glue, ConditionalEnumerationOracle) {
  // first marginal 0.4 d0 + 0.6 d1 with distinct conditionals
  auto base = new_discrete({Point{0.0}, Point{1.0}}, {0.4, 0.6});
  auto t2 = new_discrete({Point{10.0}, Point{11.0}}, {0.5, 0.5});
  auto t3 = new_discrete({Point{20.0}, Point{21.0}, Point{22.0}}, {0.3, 0.3, 0.4});
  TransportPlan g12(base, t2, {{0, 0, 0.3}, {0, 1, 0.1}, {1, 0, 0.2}, {1, 1, 0.4}});
  TransportPlan g13(base, t3, {{0, 0, 0.2}, {0, 2, 0.2}, {1, 0, 0.1}, {1, 1, 0.3}, {1, 2, 0.2}});
  auto g = glue(g12, g13);
  // gamma(i,j,k) = P(i) P(j|i) P(k|i), enumerated by hand
  const double p12[2][2] = {{0.3, 0.1}, {0.2, 0.4}};
  const double p13[2][3] = {{0.2, 0.0, 0.2}, {0.1, 0.3, 0.2}};
  const double w[2] = {0.4, 0.6};
  std::vector<std::vector<Point>> slots(3);
  std::vector<double> m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 3; ++k) {
        if (p13[i][k] == 0.0) continue;
        slots[0].push_back(base.point(i));
        slots[1].push_back(t2.point(j));
        slots[2].push_back(t3.point(k));
        m.push_back(p12[i][j] * p13[i][k] / w[i]);
      }
  EXPECT_TRUE(same_product(g, ProductMeasure(slots, m), 1e-15));
  EXPECT_TRUE(same_product(marginal(g, {0, 1}), g12.as_product(), 1e-9));
  EXPECT_TRUE(same_product(marginal(g, {0, 2}), g13.as_product(), 1e-9));
}

TEST(Glue, MismatchedFirstMarginals) {
  auto a = new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  auto b = new_discrete({Point{0.0}, Point{1.0}}, {0.4, 0.6});
  EXPECT_THROW(glue(TransportPlan::identity(a), TransportPlan::identity(b)), InvalidArgument);
}

TEST(Glue, RecoversOptimalMarginals) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(77 + seed);
    auto b = oracle::random_measure(rng, 1 + rng.below(4), 2);
    auto m0 = oracle::random_measure(rng, 1 + rng.below(4), 2);
    auto m1 = oracle::random_measure(rng, 1 + rng.below(4), 2);
    auto p0 = solve_ot(b, m0).plan, p1 = solve_ot(b, m1).plan;
    auto g = glue(p0, p1);
    EXPECT_TRUE(same_product(marginal(g, {0, 1}), p0.as_product(), 1e-9));
    EXPECT_TRUE(same_product(marginal(g, {0, 2}), p1.as_product(), 1e-9));
  }
}

TEST(PlanStability, ConstantSequence) {
  Rng rng(1);
  auto mu = oracle::random_measure(rng, 3, 2), nu = oracle::random_measure(rng, 3, 2);
  auto s = solve_ot(mu, nu);
  std::vector<OTSolution> seq(8, s);
  auto r = check_plan_stability(seq, s.plan);
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.limit_cost, r.tail_min_cost, 1e-15);
}

TEST(PlanStability, DiracsConvergingToZero) {
  std::vector<OTSolution> seq;
  for (int n = 1; n <= 20; ++n)
    seq.push_back(solve_ot(DiscreteMeasure::dirac(Point{1.0 / n}), DiscreteMeasure::dirac(Point{0.0})));
  auto r = check_plan_stability(seq, TransportPlan::identity(DiscreteMeasure::dirac(Point{0.0})));
  EXPECT_TRUE(r.passed());
  EXPECT_THROW(check_plan_stability({}, TransportPlan::identity(DiscreteMeasure::dirac(Point{0.0}))),
               InvalidArgument);
}

TEST(PlanStability, PerturbedMarginals) {
  Rng rng(42);
  auto mu = oracle::random_measure(rng, 3, 2), nu = oracle::random_measure(rng, 3, 2);
  std::vector<OTSolution> seq;
  for (int n = 1; n <= 40; ++n) {
    const double eps = std::pow(0.5, n);
    auto mun = pushforward(mu, [eps](const Point& x) { return x + Point{eps, -eps}; });
    seq.push_back(solve_ot(mun, nu));
  }
  auto r = check_plan_stability(seq, solve_ot(mu, nu).plan);
  EXPECT_TRUE(r.passed());
  // a non-optimal limit is flagged
  auto m = new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  TransportPlan anti(m, m, {{0, 1, 0.5}, {1, 0, 0.5}});
  EXPECT_FALSE(check_plan_stability({solve_ot(m, m)}, anti).limit_optimal);
}
