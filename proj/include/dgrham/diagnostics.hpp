#pragma once

/// @file diagnostics.hpp
/// @brief L2 errors, constraint drift, energy and convergence tables.

#include "dgrham/operators.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgrham {

/// Squared L2 error integrated with the space's cell rules; exact data is
/// evaluated on the periodic image of each quadrature point.
template <class PointError>
double integrate_squared_error(const FiniteElementSpace& sp, const Eigen::VectorXd& coeffs, PointError&& err) {
  const Mesh& mesh = sp.mesh();
  std::vector<double> partial(mesh.num_cells(), 0.0);
  parallel_for(mesh.num_cells(), [&](std::size_t c) {
    const Eigen::VectorXd local = gather(sp, coeffs, c);
    const QuadratureRule& rule = sp.cell_rule(c);
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const BasisEval e = sp.evaluate(c, rule.points[q], false);
      sum += rule.weights[q] * e.det_j * err(e, local, mesh.wrap(e.x));
    }
    partial[c] = sum;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

/// L2 error of a scalar field against exact(x, t).
inline double l2_error(const Field& f, const ScalarFieldT& exact, double t) {
  if (f.space->is_vector()) throw std::invalid_argument("l2_error: scalar exact solution for a vector field");
  return std::sqrt(integrate_squared_error(*f.space, f.coeffs, [&](const BasisEval& e, const Eigen::VectorXd& local, const Vec2& x) {
    const double d = scalar_value(e, local) - exact(x, t);
    return d * d;
  }));
}

/// L2 error of a vector field against exact(x, t).
inline double l2_error(const Field& f, const VectorFieldT& exact, double t) {
  if (!f.space->is_vector()) throw std::invalid_argument("l2_error: vector exact solution for a scalar field");
  return std::sqrt(integrate_squared_error(*f.space, f.coeffs, [&](const BasisEval& e, const Eigen::VectorXd& local, const Vec2& x) {
    return (vector_value(e, local) - exact(x, t)).squaredNorm();
  }));
}

/// L2 error of one component (0 = x, 1 = y) of a vector field.
inline double l2_error_component(const Field& f, int comp, const VectorFieldT& exact, double t) {
  if (!f.space->is_vector()) throw std::invalid_argument("l2_error_component: scalar field");
  if (comp < 0 || comp > 1) throw std::invalid_argument("l2_error_component: component must be 0 or 1");
  return std::sqrt(integrate_squared_error(*f.space, f.coeffs, [&](const BasisEval& e, const Eigen::VectorXd& local, const Vec2& x) {
    const double d = vector_value(e, local)[comp] - exact(x, t)[comp];
    return d * d;
  }));
}

enum class DriftKind { AdjointCurl, AdjointDiv };

inline std::string to_string(DriftKind k) { return k == DriftKind::AdjointCurl ? "adjoint_curl" : "adjoint_div"; }

inline GradientKind gradient_kind(DriftKind k) { return k == DriftKind::AdjointCurl ? GradientKind::Perp : GradientKind::Grad; }

/// A_{k+1} mass norm of adj(u) - adj(u0) with a cached adjoint operator.
class DriftMeter {
 public:
  DriftMeter(SpacePtr vector_space, DriftKind kind)
      : kind_(kind), adjoint_(std::make_shared<AdjointOperator>(potential_space(*vector_space), vector_space, gradient_kind(kind))) {}

  DriftKind kind() const { return kind_; }
  const AdjointOperator& adjoint() const { return *adjoint_; }

  /// Mass norm of the adjoint image of u.
  double norm(const Eigen::VectorXd& u) const { return adjoint_->norm(u); }

  double drift(const Eigen::VectorXd& u, const Eigen::VectorXd& u0) const {
    const Eigen::VectorXd d = adjoint_->apply(u) - adjoint_->apply(u0);
    return std::sqrt(std::max(0.0, adjoint_->mass().inner(d, d)));
  }

 private:
  DriftKind kind_;
  std::shared_ptr<AdjointOperator> adjoint_;
};

inline double constraint_drift(const Field& u, const Field& u0, DriftKind kind) {
  if (u.space != u0.space && (u.space->family() != u0.space->family() || u.space->dim() != u0.space->dim() ||
                              u.space->mesh_ptr() != u0.space->mesh_ptr())) {
    throw std::invalid_argument("constraint_drift: fields live in different spaces");
  }
  if (!u.space->is_vector()) throw std::invalid_argument("constraint_drift: vector fields required");
  return DriftMeter(u.space, kind).drift(u.coeffs, u0.coeffs);
}

/// Magnetic-type energy 1/2 |u|^2 integrated with the space's mass matrix.
inline double energy(const Field& u, const MassOperator& mass) { return 0.5 * mass.inner(u.coeffs, u.coeffs); }
inline double energy(const Field& u) { return energy(u, MassOperator(u.space)); }

struct ConvergenceTable {
  std::vector<std::string> variables;
  /// Rows sorted by decreasing h.
  std::vector<double> h;
  /// errors[row][variable]
  std::vector<std::vector<double>> errors;
  /// rates[row][variable]; row 0 holds NaN.
  std::vector<std::vector<double>> rates;
  /// Least-squares slope of log(error) against log(h) per variable.
  std::vector<double> slopes;

  double last_rate(std::size_t var) const { return rates.back()[var]; }
};

inline double least_squares_slope(const std::vector<double>& hs, const std::vector<double>& es) {
  const std::size_t n = hs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(hs[i]);
    my += std::log(es[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(hs[i]) - mx;
    sxy += dx * (std::log(es[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Pairwise rates log(e_{i-1}/e_i)/log(h_{i-1}/h_i) plus least-squares slopes.
inline ConvergenceTable convergence_table(const std::vector<std::vector<double>>& errors, const std::vector<double>& hs,
                                          std::vector<std::string> variables = {}) {
  if (hs.size() < 2) throw std::invalid_argument("convergence_table: at least two meshes are required");
  if (errors.size() != hs.size()) throw std::invalid_argument("convergence_table: one error row per mesh is required");
  for (std::size_t i = 1; i < hs.size(); ++i) {
    if (!(hs[i] < hs[i - 1])) throw std::invalid_argument("convergence_table: mesh sizes must be strictly decreasing");
  }
  const std::size_t nv = errors.front().size();
  for (const auto& row : errors) {
    if (row.size() != nv) throw std::invalid_argument("convergence_table: ragged error rows");
  }
  if (variables.empty()) {
    for (std::size_t v = 0; v < nv; ++v) variables.push_back("var" + std::to_string(v));
  }
  ConvergenceTable t;
  t.variables = std::move(variables);
  t.h = hs;
  t.errors = errors;
  t.rates.assign(hs.size(), std::vector<double>(nv, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t i = 1; i < hs.size(); ++i)
    for (std::size_t v = 0; v < nv; ++v) t.rates[i][v] = std::log(errors[i - 1][v] / errors[i][v]) / std::log(hs[i - 1] / hs[i]);
  for (std::size_t v = 0; v < nv; ++v) {
    std::vector<double> es;
    for (const auto& row : errors) es.push_back(row[v]);
    t.slopes.push_back(least_squares_slope(hs, es));
  }
  return t;
}

}  // namespace dgrham
