#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "wass/geodesy.hpp"

using namespace wass;

TEST(Interpolate, DiracPlan) {
  auto d0 = DiscreteMeasure::dirac(Point{0.0}), d1 = DiscreteMeasure::dirac(Point{1.0});
  TransportPlan p(d0, d1, {{0, 0, 1.0}});
  EXPECT_TRUE(same_measure(interpolate(p, 0.5), DiscreteMeasure::dirac(Point{0.5})));
  EXPECT_THROW(interpolate(p, 1.5), InvalidArgument);
  EXPECT_THROW(interpolate(p, -0.1), InvalidArgument);
}

TEST(Interpolate, EndpointsAreMarginals) {
  Rng rng(2);
  auto a = oracle::random_measure(rng, 4, 2), b = oracle::random_measure(rng, 3, 2);
  auto plan = solve_ot(a, b).plan;
  EXPECT_TRUE(same_measure(interpolate(plan, 0.0), a, 1e-12));
  EXPECT_TRUE(same_measure(interpolate(plan, 1.0), b, 1e-12));
}

TEST(Interpolate, MonotoneCouplingOnTheLine) {
  auto mu0 = new_discrete({Point{0.0}, Point{4.0}}, {0.5, 0.5});
  auto mu1 = new_discrete({Point{2.0}, Point{6.0}}, {0.5, 0.5});
  auto mid = interpolate(solve_ot(mu0, mu1).plan, 0.5);
  EXPECT_TRUE(same_measure(mid, new_discrete({Point{1.0}, Point{5.0}}, {0.5, 0.5})));
}

TEST(Geodesic, DiracsAndConstant) {
  auto g = geodesic(DiscreteMeasure::dirac(Point{0.0}), DiscreteMeasure::dirac(Point{1.0}), {0.0, 0.5, 1.0});
  ASSERT_EQ(g.size(), 3u);
  EXPECT_TRUE(same_measure(g[1].measure, DiscreteMeasure::dirac(Point{0.5})));
  EXPECT_TRUE(same_measure(g[2].measure, DiscreteMeasure::dirac(Point{1.0})));

  Rng rng(4);
  auto mu = oracle::random_measure(rng, 3, 2);
  for (const auto& s : geodesic(mu, mu)) EXPECT_TRUE(same_measure(s.measure, mu, 1e-12));
  EXPECT_THROW(geodesic(mu, mu, {0.0, 2.0}), InvalidArgument);
}

TEST(Geodesic, ConstantSpeed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(300 + seed);
    const std::size_t d = 1 + rng.below(3);
    auto a = oracle::random_measure(rng, 3, d), b = oracle::random_measure(rng, 3, d);
    const double total = w2(a, b);
    auto samples = geodesic(a, b);
    for (const auto& p : samples)
      for (const auto& q : samples) {
        const double expect = std::abs(p.s - q.s) * total;
        EXPECT_NEAR(w2(p.measure, q.measure), expect, 1e-7 * std::max(1.0, total));
      }
    for (const auto& p : samples) {
      double mass = 0.0;
      for (double w : p.measure.weights()) mass += w;
      EXPECT_NEAR(mass, 1.0, 1e-12);
      EXPECT_TRUE(std::isfinite(moment(p.measure, 2)));
    }
  }
}

TEST(GeneralizedGeodesic, BaseEqualsStart) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    auto a = oracle::random_measure(rng, 3, 2), b = oracle::random_measure(rng, 4, 2);
    for (double t : {0.0, 0.3, 1.0})
      EXPECT_TRUE(same_measure(generalized_geodesic(a, a, b, t), interpolate(solve_ot(a, b).plan, t), 1e-9));
  }
}

TEST(GeneralizedGeodesic, AllDiracs) {
  auto g = generalized_geodesic(DiscreteMeasure::dirac(Point{5.0, 5.0}), DiscreteMeasure::dirac(Point{1.0, 0.0}),
                                DiscreteMeasure::dirac(Point{3.0, 2.0}), 0.25);
  EXPECT_TRUE(same_measure(g, DiscreteMeasure::dirac(Point{1.5, 0.5})));
  EXPECT_THROW(generalized_geodesic(DiscreteMeasure::dirac(Point{0.0}), DiscreteMeasure::dirac(Point{0.0}),
                                    DiscreteMeasure::dirac(Point{0.0}), 2.0),
               InvalidArgument);
}

TEST(Glue, OptimalConditionalsKeepMarginals) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(70 + seed);
    auto b = oracle::random_measure(rng, 3, 2), m0 = oracle::random_measure(rng, 4, 2),
         m1 = oracle::random_measure(rng, 4, 2);
    auto p0 = solve_ot(b, m0).plan, p1 = solve_ot(b, m1).plan;
    auto g = glue(p0, p1, GlueRule::optimal_conditionals);
    EXPECT_TRUE(same_product(marginal(g, {0, 1}), p0.as_product(), 1e-9));
    EXPECT_TRUE(same_product(marginal(g, {0, 2}), p1.as_product(), 1e-9));
    // never costlier between slots 1 and 2 than the independent glue
    EXPECT_LE(coupling_cost(g, 1, 2), coupling_cost(glue(p0, p1), 1, 2) + 1e-12);
  }
}

TEST(GeneralizedGeodesic, SameEndpointsIsConstant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(50 + seed);
    auto base = oracle::random_measure(rng, 3, 2), mu = oracle::random_measure(rng, 4, 2);
    for (double t : {0.0, 0.5, 0.9}) EXPECT_TRUE(same_measure(generalized_geodesic(base, mu, mu, t), mu, 1e-9));
  }
}

TEST(GeneralizedGeodesic, TwoAtomEnumerationOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(900 + seed);
    auto base = oracle::random_measure(rng, 2, 2), m0 = oracle::random_measure(rng, 2, 2),
         m1 = oracle::random_measure(rng, 2, 2);
    const auto g12 = oracle::optimal_2x2(base, m0), g13 = oracle::optimal_2x2(base, m1);
    const double t = rng.uniform();
    std::vector<Point> pts;
    std::vector<double> w;
    for (int i = 0; i < 2; ++i) {
      // conditionals of base atom i, coupled by the same two-vertex comparison
      const double wi = base.weight(i);
      const DiscreteMeasure c2(m0.points(), {std::max(0.0, g12[i][0]) / wi, std::max(0.0, g12[i][1]) / wi});
      const DiscreteMeasure c3(m1.points(), {std::max(0.0, g13[i][0]) / wi, std::max(0.0, g13[i][1]) / wi});
      const auto c23 = oracle::optimal_2x2(c2, c3);
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          pts.push_back(lerp(m0.point(j), m1.point(k), t));
          w.push_back(wi * std::max(0.0, c23[j][k]));
        }
    }
    const DiscreteMeasure expect(pts, w);
    EXPECT_NEAR(w2(generalized_geodesic(base, m0, m1, t), expect), 0.0, 1e-6) << "seed " << seed;
  }
}
