#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "wass/measure.hpp"

using namespace wass;

TEST(Measure, DiracAndTwoAtom) {
  auto d = new_discrete({Point{0.0}}, {1.0});
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.weight(0), 1.0);
  auto two = new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.5});
  EXPECT_EQ(two.size(), 2u);
  EXPECT_EQ(two.dim(), 1u);
}

TEST(Measure, RejectsBadInput) {
  EXPECT_THROW(new_discrete({Point{0.0}, Point{1.0}}, {0.5, 0.4}), InvalidArgument);
  EXPECT_THROW(new_discrete({Point{0.0}, Point{1.0}}, {1.5, -0.5}), InvalidArgument);
  EXPECT_THROW(new_discrete({Point{0.0}, Point{1.0, 2.0}}, {0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(new_discrete({}, {}), InvalidArgument);
  EXPECT_THROW(new_discrete({Point{0.0}}, {0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(new_discrete({Point{NAN}}, {1.0}), InvalidArgument);
}

TEST(Measure, RenormalizesInsideWindow) {
  auto mu = new_discrete({Point{0.0}, Point{1.0}}, {0.5 + 4e-10, 0.5});
  EXPECT_NEAR(mu.weight(0) + mu.weight(1), 1.0, 1e-15);
  EXPECT_THROW(new_discrete({Point{0.0}, Point{1.0}}, {0.5 + 2e-9, 0.5}), InvalidArgument);
}

TEST(Measure, Moments) {
  EXPECT_EQ(moment(DiscreteMeasure::dirac(Point{0.0}), 2), 0.0);
  EXPECT_DOUBLE_EQ(moment(new_discrete({Point{0.0}, Point{2.0}}, {0.5, 0.5}), 2), 2.0);
  EXPECT_DOUBLE_EQ(moment(DiscreteMeasure::dirac(Point{3.0, 4.0}), 2), 25.0);
  EXPECT_THROW(moment(DiscreteMeasure::dirac(Point{1.0}), 0.5), InvalidArgument);
}

TEST(Measure, Pushforward) {
  auto half = pushforward(DiscreteMeasure::dirac(Point{1.0}), [](const Point& x) { return 0.5 * x; });
  EXPECT_TRUE(same_measure(half, DiscreteMeasure::dirac(Point{0.5})));

  auto collapsed = pushforward(new_discrete({Point{0.0}, Point{2.0}}, {0.5, 0.5}),
                               [](const Point&) { return Point{0.0}; });
  ASSERT_EQ(collapsed.size(), 1u);
  EXPECT_DOUBLE_EQ(collapsed.weight(0), 1.0);

  Rng rng(7);
  auto mu = oracle::random_measure(rng, 5, 2);
  EXPECT_TRUE(same_measure(pushforward(mu, [](const Point& x) { return x; }), mu, 1e-15));

  EXPECT_THROW(pushforward(new_discrete({Point{0.0}, Point{2.0}}, {0.5, 0.5}),
                           [](const Point& x) { return x[0] > 1 ? Point{1.0, 1.0} : Point{1.0}; }),
               InvalidArgument);
}

TEST(Measure, PushforwardProperties) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto mu = oracle::random_measure(rng, 1 + rng.below(6), 1 + rng.below(3), 3.0);
    const double c = rng.uniform(-3.0, 3.0);
    const double p = rng.uniform(1.0, 4.0);
    auto img = pushforward(mu, [c](const Point& x) { return c * x; });
    double mass = 0.0;
    for (double w : img.weights()) mass += w;
    EXPECT_NEAR(mass, 1.0, 1e-12);
    const double expect = std::pow(std::abs(c), p) * moment(mu, p);
    EXPECT_NEAR(moment(img, p), expect, 1e-9 * std::max(1.0, expect));
  }
}

TEST(Measure, CanonicalMerge) {
  auto mu = new_discrete({Point{1.0}, Point{0.0}, Point{1.0 + 1e-14}, Point{2.0}}, {0.25, 0.25, 0.25, 0.25});
  auto c = canonicalize(mu);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.point(0)[0], 0.0);
  EXPECT_DOUBLE_EQ(c.weight(1), 0.5);
  auto z = new_discrete({Point{1.0}, Point{0.0}}, {1.0, 0.0});
  EXPECT_EQ(canonicalize(z).size(), 1u);
}

TEST(Measure, Marginals) {
  auto g = product(DiscreteMeasure::dirac(Point{0.0}), DiscreteMeasure::dirac(Point{1.0}));
  EXPECT_TRUE(same_measure(marginal(g, 0), DiscreteMeasure::dirac(Point{0.0})));
  EXPECT_TRUE(same_measure(marginal(g, 1), DiscreteMeasure::dirac(Point{1.0})));
  EXPECT_THROW(marginal(g, 2), InvalidArgument);
  EXPECT_THROW(marginal(g, std::vector<std::size_t>{0, 3}), InvalidArgument);

  Rng rng(3);
  auto mu = oracle::random_measure(rng, 4, 2);
  ProductMeasure diag({mu.points(), mu.points()}, mu.weights());
  EXPECT_TRUE(same_measure(marginal(diag, 0), mu, 1e-15));
}

TEST(Measure, ThreeSlotMarginalMatchesDirectSummation) {
  // gamma on {a0,a1} x {b0,b1} x {c0,c1} with explicit masses.
  const std::vector<Point> A{Point{0.0}, Point{1.0}}, B{Point{10.0}, Point{11.0}}, C{Point{20.0}, Point{21.0}};
  std::vector<std::vector<Point>> slots(3);
  std::vector<double> w;
  const double masses[8] = {0.05, 0.10, 0.15, 0.20, 0.02, 0.08, 0.30, 0.10};
  int k = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        slots[0].push_back(A[a]);
        slots[1].push_back(B[b]);
        slots[2].push_back(C[c]);
        w.push_back(masses[k++]);
      }
  ProductMeasure g(slots, w);
  auto m13 = marginal(g, std::vector<std::size_t>{0, 2});
  // direct summation over the middle slot
  std::vector<std::vector<Point>> es(2);
  std::vector<double> ew;
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) {
      es[0].push_back(A[a]);
      es[1].push_back(C[c]);
      ew.push_back(masses[a * 4 + c] + masses[a * 4 + 2 + c]);
    }
  EXPECT_TRUE(same_product(m13, ProductMeasure(es, ew), 1e-15));

  // marginal of marginal equals marginal
  auto m12 = marginal(g, std::vector<std::size_t>{0, 1});
  EXPECT_TRUE(same_measure(marginal(m12, 0), marginal(g, 0), 1e-15));
}
