#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cheaptalk/errors.hpp"
#include "cheaptalk/geometry.hpp"
#include "support.hpp"

namespace cheaptalk {
namespace {

using testing::Gen;
using testing::sq;

BiasVector B(std::vector<double> v) { return BiasVector(std::move(v)); }

TEST(EncoderCost, Examples) {
  EXPECT_EQ(encoder_cost(Point{0, 0}, Point{0, 0}, B({0, 0})), 0.0);
  EXPECT_DOUBLE_EQ(encoder_cost(Point{1.5, 0}, Point{0, 0}, B({0.5, 0})), 1.0);
  EXPECT_DOUBLE_EQ(encoder_cost(Point{1, 1}, Point{1, 1}, B({1, 1})), 2.0);
  EXPECT_THROW(encoder_cost(Point{1, 1}, Point{1}, B({1, 1})), DimensionMismatch);
  EXPECT_THROW(encoder_cost(Point{1, 1}, Point{1, 1}, B({1})), DimensionMismatch);
}

TEST(DecoderCost, Examples) {
  EXPECT_EQ(decoder_cost(Point{0.3, -2}, Point{0.3, -2}), 0.0);
  EXPECT_DOUBLE_EQ(decoder_cost(Point{1, 0}, Point{0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(decoder_cost(Point{1, 2}, Point{-1, 0}), 8.0);
  EXPECT_THROW(decoder_cost(Point{1, 2}, Point{-1}), DimensionMismatch);
}

TEST(HValue, Examples) {
  const Point u1{0, 0}, u2{2, 0};
  const auto b = B({0.5, 0});
  EXPECT_EQ(h_value(Point{1.5, 7}, u1, u2, b), 0.0);
  EXPECT_DOUBLE_EQ(h_value(Point{2, 0}, u1, u2, b), -1.0);
  EXPECT_DOUBLE_EQ(h_value(Point{0, 0}, u1, u2, b), 3.0);
  EXPECT_THROW(h_value(Point{0, 0}, u1, u1, b), InvalidArgument);
}

TEST(GeoSlack, Examples) {
  EXPECT_DOUBLE_EQ(geo_slack(Point{0, 0}, Point{0, 2}, B({1, 0})), 4.0);
  EXPECT_DOUBLE_EQ(geo_slack(Point{0, 0}, Point{1, 0}, B({1, 0})), -1.0);
  EXPECT_EQ(geo_slack(Point{0.7, 1}, Point{0.7, 1}, B({1, 3})), 0.0);
}

TEST(LambdaBar, Examples) {
  EXPECT_DOUBLE_EQ(lambda_bar(Point{0, 0}, Point{0, 3}, B({1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(lambda_bar(Point{0, 0}, Point{2, 0}, B({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(lambda_bar(Point{0, 0}, Point{4, 0}, B({1, 0})), 0.75);
  EXPECT_THROW(lambda_bar(Point{1, 1}, Point{1, 1}, B({1, 0})), InvalidArgument);
}

TEST(GSlackTransformed, Examples) {
  EXPECT_EQ(g_slack_transformed(Point{1, 2}, Point{1, 2}, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(g_slack_transformed(Point{-1, 2}, Point{3, 2}, 5.0), 16.0);
  EXPECT_DOUBLE_EQ(g_slack_transformed(Point{0, 0}, Point{0, 1}, 2.0), -3.0);
  EXPECT_THROW(g_slack_transformed(Point{0, 0, 0}, Point{0, 1, 0}, 2.0), DimensionMismatch);
}

TEST(AssignAction, Examples) {
  const ActionSet set(std::vector<Point>{{0, 0}, {2, 0}});
  const auto b = B({0.5, 0});
  EXPECT_EQ(assign_action(Point{1.5, 0}, set, b), 0u);
  EXPECT_EQ(assign_action(Point{1.6, 0}, set, b), 1u);
  const ActionSet single(std::vector<Point>{{4, -1}});
  Gen g(1);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(assign_action(g.point(2), single, b), 0u);
  EXPECT_THROW(assign_action(Point{0, 0}, ActionSet(), b), InvalidArgument);
}

TEST(ActionSet, MergesCoincidentActions) {
  const ActionSet set(std::vector<Point>{{0, 0}, {1, 0}, {0, 0}, {1, 1e-12}}, 1e-9);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set[1][0], 1.0);
  EXPECT_THROW(ActionSet(std::vector<Point>{{0, std::nan("")}}), InvalidArgument);
}

TEST(Hyperplane, MatchesHValue) {
  Gen g(2);
  for (int i = 0; i < 200; ++i) {
    const Point ua = g.point(3), ub = g.point(3), m = g.point(3);
    const auto b = g.bias(3);
    const Hyperplane h = indifference_hyperplane(ua, ub, b);
    EXPECT_NEAR(h.evaluate(m), h_value(m, ua, ub, b), 1e-12);
  }
}

TEST(MinPairwiseGeoSlack, BruteForce) {
  Gen g(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point> pts;
    const std::size_t k = 1 + g.index(6);
    for (std::size_t i = 0; i < k; ++i) pts.push_back(g.point(2));
    const auto b = g.bias(2);
    double expected = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        const double d0 = pts[j][0] - pts[i][0], d1 = pts[j][1] - pts[i][1];
        expected = std::min(expected, d0 * d0 + d1 * d1 - 2 * std::abs(d0 * b[0] + d1 * b[1]));
      }
    const double got = min_pairwise_geo_slack(ActionSet(pts), b);
    if (k == 1)
      EXPECT_TRUE(std::isinf(got) && got > 0);
    else
      EXPECT_NEAR(got, expected, 1e-12);
  }
}

// Properties

TEST(GeometryProperties, HValueSignMatchesCostPreference) {
  Gen g(10);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + g.index(4);
    const Point m = g.lattice_or_point(n), ua = g.lattice_or_point(n), ub = g.lattice_or_point(n);
    if (ua == ub) continue;
    const auto b = BiasVector(g.lattice_or_point(n, 2.0));
    const double h = h_value(m, ua, ub, b);
    const double ca = encoder_cost(m, ua, b), cb = encoder_cost(m, ub, b);
    // The cost difference is exactly 2h in real arithmetic.
    EXPECT_NEAR(cb - ca, 2.0 * h, 1e-9 * (1.0 + std::abs(ca) + std::abs(cb)));
    if (std::abs(h) > 1e-9) EXPECT_EQ(h > 0.0, ca < cb);
  }
}

TEST(GeometryProperties, HValueAntisymmetric) {
  Gen g(11);
  for (int i = 0; i < 2000; ++i) {
    const Point m = g.point(3), ua = g.point(3), ub = g.point(3);
    const auto b = g.bias(3);
    EXPECT_NEAR(h_value(m, ua, ub, b), -h_value(m, ub, ua, b), 1e-12);
  }
}

TEST(GeometryProperties, GeoSlackSymmetricAndTranslationInvariant) {
  Gen g(12);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t n = 1 + g.index(4);
    Point ua = g.point(n), ub = g.point(n);
    const auto b = g.bias(n);
    const double s = geo_slack(ua, ub, b);
    EXPECT_NEAR(s, geo_slack(ub, ua, b), 1e-12);
    const Point shift = g.point(n, 10.0);
    for (std::size_t k = 0; k < n; ++k) {
      ua[k] += shift[k];
      ub[k] += shift[k];
    }
    EXPECT_NEAR(s, geo_slack(ua, ub, b), 1e-10);
  }
}

TEST(GeometryProperties, LambdaBarInUnitIntervalIffSlackNonnegative) {
  Gen g(13);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + g.index(3);
    Point ua = g.lattice_or_point(n), ub = g.lattice_or_point(n);
    if (ua == ub) continue;
    BiasVector b = BiasVector(g.lattice_or_point(n, 2.0));
    if (i % 5 == 0) {
      // Boundary case: |d^T b| = |d|^2 / 2 exactly along the bias.
      Point d(n);
      for (std::size_t k = 0; k < n; ++k) d[k] = ub[k] - ua[k];
      std::vector<double> bb(n);
      for (std::size_t k = 0; k < n; ++k) bb[k] = (g.coin() ? 0.5 : -0.5) * d[k];
      b = BiasVector(bb);
    }
    const double s = geo_slack(ua, ub, b);
    const double l = lambda_bar(ua, ub, b);
    const double tol = 1e-12;
    if (s > tol) EXPECT_TRUE(l >= 0.0 && l <= 1.0) << s << " " << l;
    if (s < -tol) EXPECT_FALSE(l >= 0.0 && l <= 1.0) << s << " " << l;
    if (std::abs(s) <= tol) EXPECT_TRUE(l >= -tol && l <= 1.0 + tol) << s << " " << l;
  }
}

TEST(GeometryProperties, AssignedRegionsAreConvex) {
  Gen g(14);
  int tested = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + g.index(3);
    std::vector<Point> pts;
    const std::size_t k = 2 + g.index(5);
    for (std::size_t j = 0; j < k; ++j) pts.push_back(g.point(n));
    const ActionSet set(pts);
    const auto b = g.bias(n);
    const Point m1 = g.point(n, 5.0), m2 = g.point(n, 5.0);
    const std::size_t a1 = assign_action(m1, set, b);
    if (assign_action(m2, set, b) != a1) continue;
    const double theta = g.uniform(0.0, 1.0);
    Point mid(n);
    for (std::size_t d = 0; d < n; ++d) mid[d] = theta * m1[d] + (1.0 - theta) * m2[d];
    // Decisions within rounding distance of a boundary are not informative.
    double margin = std::numeric_limits<double>::infinity();
    const double own = encoder_cost(mid, set[a1], b);
    for (std::size_t j = 0; j < set.size(); ++j)
      if (j != a1) margin = std::min(margin, encoder_cost(mid, set[j], b) - own);
    if (std::abs(margin) < 1e-9) continue;
    EXPECT_EQ(assign_action(mid, set, b), a1);
    ++tested;
  }
  EXPECT_GT(tested, 1000);
}

TEST(GeometryProperties, AssignActionIsFirstArgmin) {
  Gen g(15);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Point> pts;
    for (int j = 0; j < 5; ++j) pts.push_back(g.lattice_or_point(2));
    const ActionSet set(pts);
    const auto b = BiasVector(g.lattice_or_point(2, 1.0));
    const Point m = g.lattice_or_point(2);
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < set.size(); ++j) {
      const double c = sq(m[0] - set[j][0] - b[0]) + sq(m[1] - set[j][1] - b[1]);
      if (c < best_cost) {
        best_cost = c;
        best = j;
      }
    }
    EXPECT_EQ(assign_action(m, set, b), best);
  }
}

}  // namespace
}  // namespace cheaptalk
