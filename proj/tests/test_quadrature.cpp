#include "dgrham/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace dgrham;

namespace {

double integrate(const QuadratureRule& r, int a, int b) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.points[i].x(), a) * std::pow(r.points[i].y(), b);
  return s;
}

// Closed forms: segment int x^a over [-1,1]; square int x^a y^b over [0,1]^2;
// triangle int x^a y^b = a! b! / (a+b+2)!.
double segment_exact(int a) { return a % 2 ? 0.0 : 2.0 / (a + 1); }
double square_exact(int a, int b) { return 1.0 / ((a + 1.0) * (b + 1.0)); }
double triangle_exact(int a, int b) { return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0); }

}  // namespace

TEST(Segment, OnePointIsMidpoint) {
  const QuadratureRule r = segment_rule(1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.points[0].x(), 0.0);
  EXPECT_EQ(r.weights[0], 2.0);
}

TEST(Segment, TwoPointNodes) {
  const QuadratureRule r = segment_rule(2);
  EXPECT_NEAR(std::abs(r.points[0].x()), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(integrate(r, 2, 0), 2.0 / 3.0, 1e-15);
}

TEST(Segment, ThreePointQuartic) { EXPECT_NEAR(integrate(segment_rule(3), 4, 0), 0.4, 1e-15); }

TEST(Segment, ExactToDegree2nMinus1) {
  for (int n = 1; n <= 10; ++n) {
    const QuadratureRule r = segment_rule(n);
    double wsum = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      wsum += w;
    }
    EXPECT_NEAR(wsum, 2.0, 1e-14);
    for (int a = 0; a <= 2 * n - 1; ++a) EXPECT_NEAR(integrate(r, a, 0), segment_exact(a), 1e-14) << "n=" << n << " a=" << a;
  }
}

TEST(Segment, RejectsUnsupportedCounts) {
  EXPECT_THROW(segment_rule(0), std::invalid_argument);
  EXPECT_THROW(segment_rule(11), std::invalid_argument);
}

TEST(Square, Examples) {
  EXPECT_DOUBLE_EQ(integrate(square_rule(2), 1, 1), 0.25);
  EXPECT_NEAR(integrate(square_rule(3), 4, 4), 1.0 / 25.0, 1e-15);
  const QuadratureRule r = square_rule(4);
  EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-15);
}

TEST(Square, TensorExactness) {
  for (int n = 1; n <= 6; ++n) {
    const QuadratureRule r = square_rule(n);
    for (int a = 0; a <= 2 * n - 1; ++a)
      for (int b = 0; b <= 2 * n - 1; ++b) EXPECT_NEAR(integrate(r, a, b), square_exact(a, b), 1e-14);
  }
  EXPECT_THROW(square_rule(11), std::invalid_argument);
}

TEST(Triangle, CentroidRule) {
  const QuadratureRule r = triangle_rule(1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r.weights[0], 0.5);
  EXPECT_NEAR(integrate(r, 1, 0), 1.0 / 6.0, 1e-16);
}

TEST(Triangle, Examples) {
  EXPECT_NEAR(integrate(triangle_rule(2), 1, 0), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(integrate(triangle_rule(4), 2, 2), 1.0 / 180.0, 1e-14);
}

TEST(Triangle, MonomialExactness) {
  for (int d = 0; d <= 12; ++d) {
    const QuadratureRule r = triangle_rule(d);
    double wsum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_GT(r.weights[i], 0.0);
      EXPECT_GE(r.points[i].x(), 0.0);
      EXPECT_GE(r.points[i].y(), 0.0);
      EXPECT_LE(r.points[i].x() + r.points[i].y(), 1.0 + 1e-15);
      wsum += r.weights[i];
    }
    EXPECT_NEAR(wsum, 0.5, 1e-15);
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) EXPECT_NEAR(integrate(r, a, b), triangle_exact(a, b), 1e-15) << d << " " << a << " " << b;
  }
  EXPECT_THROW(triangle_rule(13), std::invalid_argument);
  EXPECT_THROW(triangle_rule(-1), std::invalid_argument);
}

TEST(Defaults, AssemblyOrders) {
  EXPECT_EQ(quad_points_per_axis(2), 5);
  EXPECT_EQ(triangle_degree(2), 8);
  EXPECT_EQ(side_points(0), 3);
}
