#pragma once

/// @file quadrature.hpp
/// @brief Gauss rules on the reference segment [-1,1], the unit square
/// [0,1]^2 and the unit triangle {x,y >= 0, x+y <= 1}.

#include "dgrham/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgrham {

/// Points and positive weights on a reference domain. One-dimensional rules
/// store their abscissa in the x component.
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre rule with n points on [-1,1], exact to degree 2n-1.
inline QuadratureRule segment_rule(int n) {
  if (n < 1 || n > 10) {
    throw std::invalid_argument("segment_rule: unsupported point count " + std::to_string(n));
  }
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      const double pn = (n == 1) ? x : p1;
      const double pnm1 = (n == 1) ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.points[i] = Vec2(x, 0.0);
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n == 1) {
    rule.points[0] = Vec2(0.0, 0.0);
    rule.weights[0] = 2.0;
  }
  return rule;
}

/// Tensor Gauss-Legendre rule on [0,1]^2 with n points per axis.
inline QuadratureRule square_rule(int n) {
  const QuadratureRule line = segment_rule(n);
  QuadratureRule rule;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      rule.points.emplace_back(0.5 * (line.points[i].x() + 1.0), 0.5 * (line.points[j].x() + 1.0));
      rule.weights.push_back(0.25 * line.weights[i] * line.weights[j]);
    }
  }
  return rule;
}

/// Rule on the unit triangle exact to the given total degree. Degree <= 1 is
/// the centroid rule; higher degrees use the collapsed (Duffy) tensor product
/// of Gauss-Legendre rules.
inline QuadratureRule triangle_rule(int degree) {
  if (degree < 0 || degree > 12) {
    throw std::invalid_argument("triangle_rule: unsupported degree " + std::to_string(degree));
  }
  QuadratureRule rule;
  if (degree <= 1) {
    rule.points.emplace_back(1.0 / 3.0, 1.0 / 3.0);
    rule.weights.push_back(0.5);
    return rule;
  }
  // The collapsed map adds one power of (1-u) to the integrand.
  const int n = (degree + 2 + 1) / 2;
  const QuadratureRule line = segment_rule(n);
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (line.points[i].x() + 1.0);
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (line.points[j].x() + 1.0);
      rule.points.emplace_back(u, v * (1.0 - u));
      rule.weights.push_back(0.25 * line.weights[i] * line.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

/// Default assembly orders for DG degree k.
inline int quad_points_per_axis(int k) { return k + 3; }
inline int triangle_degree(int k) { return 2 * k + 4; }
inline int side_points(int k) { return k + 3; }

}  // namespace dgrham
