#pragma once

/// @file spaces.hpp
/// @brief Finite element spaces of the nonconforming de Rham complex
/// A_{k+1} -> dB^curl_k -> C_k (and its rotated twin through dB^div_k),
/// together with plain DG scalar and tensor vector spaces.
///
/// Quads use the bilinear map from [-1,1]^2 with reference monomials;
/// dB^div is mapped with the Piola transform u = J u_hat / det J and
/// dB^curl with the covariant transform u = J^{-T} u_hat, both rescaled by a
/// per-cell constant so they reduce to the identity on square cells.
/// Triangles use monomials of the physical coordinates centered at the
/// centroid and scaled by the cell diameter.

#include "dgrham/mesh.hpp"
#include "dgrham/quadrature.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dgrham {

enum class SpaceFamily { ContinuousScalar, DGScalar, VectorTensor, VectorDivOptimal, VectorCurlOptimal, CellFace };

inline std::string to_string(SpaceFamily f) {
  switch (f) {
    case SpaceFamily::ContinuousScalar: return "A";
    case SpaceFamily::DGScalar: return "dG";
    case SpaceFamily::VectorTensor: return "dQ";
    case SpaceFamily::VectorDivOptimal: return "dBdiv";
    case SpaceFamily::VectorCurlOptimal: return "dBcurl";
    case SpaceFamily::CellFace: return "C";
  }
  return "?";
}

/// One monomial coeff * r^px * s^py placed in vector component comp.
struct Term {
  int comp = 0;
  double coeff = 1.0;
  int px = 0;
  int py = 0;
};
using Polynomial = std::vector<Term>;

/// Basis data at one point of one cell. Scalar spaces fill value/grad;
/// vector spaces fill vvalue/vgrad/div/curl. Rows index local functions.
struct BasisEval {
  Vec2 x = Vec2::Zero();
  double det_j = 0.0;
  Eigen::VectorXd value;
  Eigen::MatrixX2d grad;
  Eigen::MatrixX2d vvalue;
  std::vector<Mat2> vgrad;
  Eigen::VectorXd div;
  Eigen::VectorXd curl;
};

/// Quadrature orders for one complex; defaults follow degree k.
struct QuadratureOrder {
  int quad_points = 0;
  int triangle_degree = 0;
  int side_points = 0;

  static QuadratureOrder for_degree(int k) { return {dgrham::quad_points_per_axis(k), dgrham::triangle_degree(k), dgrham::side_points(k)}; }
  bool operator==(const QuadratureOrder&) const = default;
};

/// Reference map of one cell evaluated at a reference point.
struct MapEval {
  Vec2 x;
  Mat2 jac;
  Mat2 jac_inv;
  double det = 0.0;
  Mat2 djac[2];
};

inline MapEval map_cell(const Cell& cell, const Vec2& r) {
  MapEval m;
  const auto& p = cell.coords;
  if (cell.shape == CellShape::Triangle) {
    m.jac.col(0) = p[1] - p[0];
    m.jac.col(1) = p[2] - p[0];
    m.x = p[0] + m.jac * r;
    m.djac[0].setZero();
    m.djac[1].setZero();
  } else {
    const double xi = r.x();
    const double eta = r.y();
    m.x = 0.25 * ((1 - xi) * (1 - eta) * p[0] + (1 + xi) * (1 - eta) * p[1] + (1 + xi) * (1 + eta) * p[2] +
                  (1 - xi) * (1 + eta) * p[3]);
    m.jac.col(0) = 0.25 * (-(1 - eta) * p[0] + (1 - eta) * p[1] + (1 + eta) * p[2] - (1 + eta) * p[3]);
    m.jac.col(1) = 0.25 * (-(1 - xi) * p[0] - (1 + xi) * p[1] + (1 + xi) * p[2] + (1 - xi) * p[3]);
    const Vec2 a3 = 0.25 * (p[0] - p[1] + p[2] - p[3]);
    m.djac[0].col(0).setZero();
    m.djac[0].col(1) = a3;
    m.djac[1].col(0) = a3;
    m.djac[1].col(1).setZero();
  }
  m.det = m.jac.determinant();
  m.jac_inv = m.jac.inverse();
  return m;
}

/// Reference vertices: unit triangle, or [-1,1]^2 for quads.
inline Vec2 reference_vertex(CellShape shape, int i) {
  if (shape == CellShape::Triangle) {
    static const Vec2 tri[3] = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    return tri[i];
  }
  static const Vec2 quad[4] = {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
  return quad[i];
}

inline Vec2 reference_center(CellShape shape) {
  return shape == CellShape::Triangle ? Vec2(1.0 / 3.0, 1.0 / 3.0) : Vec2(0.0, 0.0);
}

/// Cell rule in reference coordinates with weights summing to the
/// reference area (1/2 or 4).
inline QuadratureRule reference_cell_rule(CellShape shape, const QuadratureOrder& q) {
  if (shape == CellShape::Triangle) return triangle_rule(q.triangle_degree);
  QuadratureRule unit = square_rule(q.quad_points);
  for (std::size_t i = 0; i < unit.size(); ++i) {
    unit.points[i] = 2.0 * unit.points[i] - Vec2(1.0, 1.0);
    unit.weights[i] *= 4.0;
  }
  return unit;
}

/// Side rule on t in [0,1] (abscissa in x), weights summing to 1.
inline QuadratureRule reference_side_rule(const QuadratureOrder& q) {
  QuadratureRule rule = segment_rule(q.side_points);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    rule.points[i] = Vec2(0.5 * (rule.points[i].x() + 1.0), 0.0);
    rule.weights[i] *= 0.5;
  }
  return rule;
}

namespace detail {

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

/// Value and first derivatives of a polynomial at (r, s).
inline void eval_poly(const Polynomial& poly, double r, double s, Vec2& value, Mat2& dvalue) {
  value.setZero();
  dvalue.setZero();
  for (const Term& t : poly) {
    const double pr = ipow(r, t.px);
    const double ps = ipow(s, t.py);
    value[t.comp] += t.coeff * pr * ps;
    if (t.px > 0) dvalue(t.comp, 0) += t.coeff * t.px * ipow(r, t.px - 1) * ps;
    if (t.py > 0) dvalue(t.comp, 1) += t.coeff * t.py * pr * ipow(s, t.py - 1);
  }
}

inline std::vector<std::pair<int, int>> q_monomials(int kx, int ky) {
  std::vector<std::pair<int, int>> m;
  for (int b = 0; b <= ky; ++b)
    for (int a = 0; a <= kx; ++a) m.emplace_back(a, b);
  return m;
}

inline std::vector<std::pair<int, int>> p_monomials(int k) {
  std::vector<std::pair<int, int>> m;
  for (int total = 0; total <= k; ++total)
    for (int b = 0; b <= total; ++b) m.emplace_back(total - b, b);
  return m;
}

inline Polynomial monomial(int comp, int a, int b, double coeff = 1.0) { return {Term{comp, coeff, a, b}}; }

inline std::vector<Polynomial> scalar_monomial_basis(const std::vector<std::pair<int, int>>& mons, int comp = 0) {
  std::vector<Polynomial> out;
  for (auto [a, b] : mons) out.push_back(monomial(comp, a, b));
  return out;
}

/// Lagrange basis for the given monomial space at the given nodes.
inline std::vector<Polynomial> lagrange_basis(const std::vector<std::pair<int, int>>& mons, const std::vector<Vec2>& nodes) {
  const int n = static_cast<int>(mons.size());
  if (static_cast<int>(nodes.size()) != n) throw std::logic_error("lagrange_basis: node count mismatch");
  Eigen::MatrixXd v(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v(i, j) = ipow(nodes[i].x(), mons[j].first) * ipow(nodes[i].y(), mons[j].second);
  const Eigen::MatrixXd c = v.fullPivLu().inverse();
  std::vector<Polynomial> out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (c(j, i) != 0.0) out[i].push_back(Term{0, c(j, i), mons[j].first, mons[j].second});
  return out;
}

/// Nodes of the degree-m Lagrange element: vertices, then edge-interior
/// nodes edge by edge (from vertex e towards vertex e+1), then interior.
inline std::vector<Vec2> lagrange_nodes(CellShape shape, int m) {
  const int nv = shape == CellShape::Triangle ? 3 : 4;
  std::vector<Vec2> nodes;
  for (int i = 0; i < nv; ++i) nodes.push_back(reference_vertex(shape, i));
  for (int e = 0; e < nv; ++e) {
    const Vec2 a = reference_vertex(shape, e);
    const Vec2 b = reference_vertex(shape, (e + 1) % nv);
    for (int l = 1; l < m; ++l) nodes.push_back(a + (static_cast<double>(l) / m) * (b - a));
  }
  if (shape == CellShape::Quad) {
    for (int j = 1; j < m; ++j)
      for (int i = 1; i < m; ++i) nodes.emplace_back(-1.0 + 2.0 * i / m, -1.0 + 2.0 * j / m);
  } else {
    for (int j = 1; j < m; ++j)
      for (int i = 1; i + j < m; ++i) nodes.emplace_back(static_cast<double>(i) / m, static_cast<double>(j) / m);
  }
  return nodes;
}

inline std::vector<Polynomial> vector_basis(const std::vector<std::pair<int, int>>& cx,
                                            const std::vector<std::pair<int, int>>& cy,
                                            const std::vector<Polynomial>& extra) {
  std::vector<Polynomial> out = scalar_monomial_basis(cx, 0);
  for (auto& p : scalar_monomial_basis(cy, 1)) out.push_back(p);
  for (const auto& p : extra) out.push_back(p);
  return out;
}

/// Reference description of one family on one cell shape.
struct LocalBasis {
  std::vector<Polynomial> polys;
  bool vector = false;
  /// Polynomials live in physical scaled coordinates rather than reference ones.
  bool physical = false;
};

inline LocalBasis make_local_basis(SpaceFamily family, CellShape shape, int k) {
  LocalBasis lb;
  const bool quad = shape == CellShape::Quad;
  switch (family) {
    case SpaceFamily::ContinuousScalar: {
      const int m = k + 1;
      const auto mons = quad ? q_monomials(m, m) : p_monomials(m);
      lb.polys = lagrange_basis(mons, lagrange_nodes(shape, m));
      break;
    }
    case SpaceFamily::DGScalar:
      lb.polys = scalar_monomial_basis(quad ? q_monomials(k, k) : p_monomials(k));
      lb.physical = !quad;
      break;
    case SpaceFamily::VectorTensor: {
      const auto mons = quad ? q_monomials(k, k) : p_monomials(k);
      lb.polys = vector_basis(mons, mons, {});
      lb.vector = true;
      lb.physical = !quad;
      break;
    }
    case SpaceFamily::VectorDivOptimal:
    case SpaceFamily::VectorCurlOptimal: {
      lb.vector = true;
      if (!quad) {
        const auto mons = p_monomials(k);
        lb.polys = vector_basis(mons, mons, {});
        lb.physical = true;
        break;
      }
      auto cx = q_monomials(k, k);
      auto cy = q_monomials(k, k);
      Polynomial extra;
      if (family == SpaceFamily::VectorDivOptimal) {
        for (int b = 0; b <= k - 1; ++b) cx.emplace_back(k + 1, b);
        for (int a = 0; a <= k - 1; ++a) cy.emplace_back(a, k + 1);
        extra = {Term{0, -1.0, k + 1, k}, Term{1, 1.0, k, k + 1}};
      } else {
        for (int a = 0; a <= k - 1; ++a) cx.emplace_back(a, k + 1);
        for (int b = 0; b <= k - 1; ++b) cy.emplace_back(k + 1, b);
        extra = {Term{0, 1.0, k, k + 1}, Term{1, 1.0, k + 1, k}};
      }
      lb.polys = vector_basis(cx, cy, {extra});
      break;
    }
    case SpaceFamily::CellFace: {
      if (quad) {
        auto mons = q_monomials(k, k);
        mons.pop_back();  // drop r^k s^k
        lb.polys = scalar_monomial_basis(mons);
      } else if (k >= 1) {
        lb.polys = scalar_monomial_basis(p_monomials(k - 1));
        lb.physical = true;
      }
      break;
    }
  }
  return lb;
}

}  // namespace detail

/// Space on a fixed mesh; immutable after construction.
class FiniteElementSpace {
 public:
  FiniteElementSpace(std::shared_ptr<const Mesh> mesh, SpaceFamily family, int degree,
                     QuadratureOrder order = {})
      : mesh_(std::move(mesh)), family_(family), degree_(degree) {
    if (!mesh_) throw std::invalid_argument("build_space: null mesh");
    if (degree < 0 || degree > 2) throw std::invalid_argument("build_space: degree must be 0, 1 or 2");
    order_ = order.quad_points > 0 ? order : QuadratureOrder::for_degree(degree);
    for (int s = 0; s < 2; ++s) {
      const CellShape shape = s == 0 ? CellShape::Triangle : CellShape::Quad;
      local_[s] = detail::make_local_basis(family, shape, degree);
      rules_[s] = reference_cell_rule(shape, order_);
    }
    side_rule_ = reference_side_rule(order_);
    build_geometry();
    build_dofs();
  }

  SpaceFamily family() const { return family_; }
  int degree() const { return degree_; }
  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const QuadratureOrder& quadrature_order() const { return order_; }
  bool is_vector() const { return local_[1].vector; }
  std::size_t dim() const { return dim_; }

  /// Number of cell functions (the cell block for C_k).
  int local_dim(std::size_t c) const { return static_cast<int>(cell_dofs_[c].size()); }
  const std::vector<int>& cell_dofs(std::size_t c) const { return cell_dofs_[c]; }

  /// C_k side block: k+1 Legendre polynomials in the side parameter.
  int side_dim() const { return family_ == SpaceFamily::CellFace ? degree_ + 1 : 0; }
  int side_dof(std::size_t s, int j) const { return static_cast<int>(side_offset_ + s * side_dim() + j); }

  const QuadratureRule& cell_rule(std::size_t c) const { return rules_[shape_index(c)]; }
  const QuadratureRule& side_rule() const { return side_rule_; }

  /// Reference point on the side at parameter t, seen from the left or right cell.
  Vec2 side_reference_point(std::size_t s, double t, bool left) const {
    const Side& side = mesh_->sides[s];
    const int c = left ? side.left_cell : side.right_cell;
    const Cell& cell = mesh_->cells[c];
    const int nv = cell.num_vertices();
    const int e = left ? side.left_local : side.right_local;
    const Vec2 v0 = reference_vertex(cell.shape, e);
    const Vec2 v1 = reference_vertex(cell.shape, (e + 1) % nv);
    return left ? Vec2(v0 + t * (v1 - v0)) : Vec2(v1 + t * (v0 - v1));
  }

  /// Basis values (and derivatives) of cell c at a reference point.
  BasisEval evaluate(std::size_t c, const Vec2& ref, bool derivatives = true) const {
    const Cell& cell = mesh_->cells[c];
    const detail::LocalBasis& lb = local_[shape_index(c)];
    const MapEval m = map_cell(cell, ref);
    const int n = static_cast<int>(lb.polys.size());
    BasisEval e;
    e.x = m.x;
    e.det_j = m.det;
    if (m.det <= 0.0) throw std::runtime_error("evaluate_basis: non-positive Jacobian in cell " + std::to_string(c));
    double r = ref.x();
    double s = ref.y();
    double scale = 1.0;  // d(poly coords)/d(physical) for physical bases
    if (lb.physical) {
      const Geometry& g = geometry_[c];
      r = (m.x.x() - g.center.x()) / g.diameter;
      s = (m.x.y() - g.center.y()) / g.diameter;
      scale = 1.0 / g.diameter;
    }
    const Mat2 jit = m.jac_inv.transpose();
    Vec2 val;
    Mat2 dval;
    if (!lb.vector) {
      e.value.resize(n);
      if (derivatives) e.grad.resize(n, 2);
      double factor = 1.0;
      if (family_ == SpaceFamily::CellFace && cell.shape == CellShape::Quad) factor = geometry_[c].det_center / m.det;
      for (int i = 0; i < n; ++i) {
        detail::eval_poly(lb.polys[i], r, s, val, dval);
        e.value[i] = factor * val[0];
        if (derivatives) {
          const Vec2 g = lb.physical ? Vec2(scale * dval.row(0).transpose()) : Vec2(jit * dval.row(0).transpose());
          e.grad.row(i) = g.transpose();
        }
      }
      return e;
    }
    e.vvalue.resize(n, 2);
    if (derivatives) {
      e.vgrad.resize(n);
      e.div.resize(n);
      e.curl.resize(n);
    }
    // u = A(ref) u_hat(ref); physical bases use A = I.
    Mat2 a = Mat2::Identity();
    Mat2 da[2] = {Mat2::Zero(), Mat2::Zero()};
    if (!lb.physical && family_ != SpaceFamily::VectorTensor) {
      const double sc = std::sqrt(geometry_[c].det_center);
      if (family_ == SpaceFamily::VectorDivOptimal) {
        a = sc * m.jac / m.det;
        for (int d = 0; d < 2; ++d) {
          const Mat2& dj = m.djac[d];
          const double ddet = m.jac(0, 0) * dj(1, 1) + dj(0, 0) * m.jac(1, 1) - m.jac(0, 1) * dj(1, 0) - dj(0, 1) * m.jac(1, 0);
          da[d] = sc * (dj / m.det - m.jac * ddet / (m.det * m.det));
        }
      } else {
        a = sc * jit;
        for (int d = 0; d < 2; ++d) da[d] = -sc * jit * m.djac[d].transpose() * jit;
      }
    }
    for (int i = 0; i < n; ++i) {
      detail::eval_poly(lb.polys[i], r, s, val, dval);
      const Vec2 u = a * val;
      e.vvalue.row(i) = u.transpose();
      if (!derivatives) continue;
      Mat2 g;
      if (lb.physical) {
        g = scale * dval;
      } else {
        Mat2 dref;
        for (int d = 0; d < 2; ++d) dref.col(d) = da[d] * val + a * dval.col(d);
        g = dref * m.jac_inv;
      }
      e.vgrad[i] = g;
      e.div[i] = g(0, 0) + g(1, 1);
      e.curl[i] = g(1, 0) - g(0, 1);
    }
    return e;
  }

  /// Left and right cell basis at side parameter t (same physical point).
  std::pair<BasisEval, BasisEval> trace(std::size_t s, double t, bool derivatives = false) const {
    const Side& side = mesh_->sides[s];
    return {evaluate(side.left_cell, side_reference_point(s, t, true), derivatives),
            evaluate(side.right_cell, side_reference_point(s, t, false), derivatives)};
  }

  /// C_k side basis at parameter t: Legendre P_j(2t-1), j = 0..k.
  Eigen::VectorXd side_basis(double t) const {
    const int n = side_dim();
    Eigen::VectorXd p(n);
    const double x = 2.0 * t - 1.0;
    if (n > 0) p[0] = 1.0;
    if (n > 1) p[1] = x;
    for (int j = 2; j < n; ++j) p[j] = ((2.0 * j - 1.0) * x * p[j - 1] - (j - 1.0) * p[j - 2]) / j;
    return p;
  }

  /// Number of cell-block unknowns (precede the side block for C_k).
  std::size_t cell_block_dim() const { return side_offset_; }

 private:
  struct Geometry {
    Vec2 center;
    double diameter = 1.0;
    double det_center = 1.0;
  };

  int shape_index(std::size_t c) const { return mesh_->cells[c].shape == CellShape::Triangle ? 0 : 1; }

  void build_geometry() {
    geometry_.resize(mesh_->num_cells());
    for (std::size_t c = 0; c < mesh_->num_cells(); ++c) {
      const Cell& cell = mesh_->cells[c];
      Geometry& g = geometry_[c];
      g.center = mesh_->cell_centroid(c);
      g.diameter = mesh_->cell_diameter(c);
      g.det_center = map_cell(cell, reference_center(cell.shape)).det;
      if (!(g.det_center > 0.0)) throw std::invalid_argument("build_space: inverted cell " + std::to_string(c));
    }
  }

  void build_dofs() {
    const Mesh& mesh = *mesh_;
    const std::size_t nc = mesh.num_cells();
    cell_dofs_.assign(nc, {});
    if (family_ == SpaceFamily::ContinuousScalar) {
      const int m = degree_ + 1;
      const std::size_t nv = mesh.num_vertices();
      const std::size_t ns = mesh.num_sides();
      std::size_t next = nv + ns * static_cast<std::size_t>(m - 1);
      for (std::size_t c = 0; c < nc; ++c) {
        const Cell& cell = mesh.cells[c];
        const int nvc = cell.num_vertices();
        auto& dofs = cell_dofs_[c];
        for (int i = 0; i < nvc; ++i) dofs.push_back(cell.vertices[i]);
        for (int e = 0; e < nvc; ++e) {
          const int s = mesh.cell_sides[c][e];
          const bool left = mesh.cell_side_signs[c][e] > 0;
          for (int l = 1; l < m; ++l) {
            const int pos = left ? l - 1 : m - 1 - l;
            dofs.push_back(static_cast<int>(nv + static_cast<std::size_t>(s) * (m - 1) + pos));
          }
        }
        const int total = static_cast<int>(local_[shape_index(c)].polys.size());
        while (static_cast<int>(dofs.size()) < total) dofs.push_back(static_cast<int>(next++));
      }
      dim_ = next;
      side_offset_ = dim_;
      return;
    }
    std::size_t next = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      const int n = static_cast<int>(local_[shape_index(c)].polys.size());
      for (int i = 0; i < n; ++i) cell_dofs_[c].push_back(static_cast<int>(next++));
    }
    side_offset_ = next;
    if (family_ == SpaceFamily::CellFace) next += mesh.num_sides() * static_cast<std::size_t>(degree_ + 1);
    dim_ = next;
  }

  std::shared_ptr<const Mesh> mesh_;
  SpaceFamily family_;
  int degree_;
  QuadratureOrder order_;
  detail::LocalBasis local_[2];
  QuadratureRule rules_[2];
  QuadratureRule side_rule_;
  std::vector<Geometry> geometry_;
  std::vector<std::vector<int>> cell_dofs_;
  std::size_t side_offset_ = 0;
  std::size_t dim_ = 0;
};

using SpacePtr = std::shared_ptr<const FiniteElementSpace>;

/// Builds a space of the complex with index k (A uses polynomial degree k+1).
inline SpacePtr build_space(std::shared_ptr<const Mesh> mesh, SpaceFamily family, int degree, QuadratureOrder order = {}) {
  return std::make_shared<const FiniteElementSpace>(std::move(mesh), family, degree, order);
}

/// Coefficients of a function in a space.
struct Field {
  SpacePtr space;
  Eigen::VectorXd coeffs;

  Field() = default;
  explicit Field(SpacePtr s) : space(std::move(s)), coeffs(Eigen::VectorXd::Zero(space->dim())) {}
  Field(SpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coeffs(std::move(c)) {
    if (static_cast<std::size_t>(coeffs.size()) != space->dim()) throw std::invalid_argument("Field: coefficient length mismatch");
  }
};

/// Local coefficient vector of cell c (cell block only for C_k).
inline Eigen::VectorXd gather(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs, std::size_t c) {
  const auto& dofs = space.cell_dofs(c);
  Eigen::VectorXd local(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) local[i] = coeffs[dofs[i]];
  return local;
}

/// Scalar value of a field at an evaluated point.
inline double scalar_value(const BasisEval& e, const Eigen::VectorXd& local) { return e.value.dot(local); }
/// Vector value of a field at an evaluated point.
inline Vec2 vector_value(const BasisEval& e, const Eigen::VectorXd& local) { return e.vvalue.transpose() * local; }

}  // namespace dgrham
