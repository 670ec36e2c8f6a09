#pragma once

/// @file operators.hpp
/// @brief Mass matrices, L2 and cell-face projections, distributional
/// divergence/curl into C_k, and the four adjoint operators.
///
/// Every integral uses the quadrature attached to the spaces involved, and
/// spaces combined in one operator must share it, so adjoints are literal
/// transposes up to the mass solve.

#include "dgrham/spaces.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgrham {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct LinearSolveSpec {
  enum class Method { BlockCholesky, ConjugateGradient };
  Method method = Method::BlockCholesky;
  double relative_tolerance = 1e-14;
  /// 0 selects 10 * sqrt(DOFs).
  int max_iterations = 0;
};

/// Mass operator: dense per-cell (and per-side for C_k) blocks with their
/// Cholesky factors, or a global sparse matrix solved by Jacobi-preconditioned
/// conjugate gradients for the continuous space.
class MassOperator {
 public:
  explicit MassOperator(SpacePtr space) : space_(std::move(space)) {
    if (space_->family() == SpaceFamily::ContinuousScalar) {
      spec_.method = LinearSolveSpec::Method::ConjugateGradient;
      assemble_global();
    } else {
      assemble_blocks();
    }
  }

  const SpacePtr& space() const { return space_; }
  const LinearSolveSpec& solve_spec() const { return spec_; }
  bool is_global() const { return spec_.method == LinearSolveSpec::Method::ConjugateGradient; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    check_size(x);
    if (is_global()) return matrix_ * x;
    Eigen::VectorXd y(x.size());
    for (const Block& b : blocks_) y.segment(b.offset, b.m.rows()) = b.m * x.segment(b.offset, b.m.rows());
    return y;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    check_size(rhs);
    if (is_global()) {
      if (rhs.norm() == 0.0) return Eigen::VectorXd::Zero(rhs.size());
      Eigen::VectorXd x = cg_->solve(rhs);
      if (cg_->info() != Eigen::Success) {
        throw std::runtime_error("conjugate gradient did not converge (" + std::to_string(cg_->iterations()) +
                                 " iterations, relative residual " + std::to_string(cg_->error()) + ")");
      }
      return x;
    }
    Eigen::VectorXd x(rhs.size());
    for (const Block& b : blocks_) x.segment(b.offset, b.m.rows()) = b.llt.solve(rhs.segment(b.offset, b.m.rows()));
    return x;
  }

  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const { return a.dot(apply(b)); }

  /// Global sparse form (assembled from the blocks for DG spaces).
  SparseMatrix sparse() const {
    if (is_global()) return matrix_;
    std::vector<Eigen::Triplet<double>> t;
    for (const Block& b : blocks_)
      for (int i = 0; i < b.m.rows(); ++i)
        for (int j = 0; j < b.m.cols(); ++j) t.emplace_back(b.offset + i, b.offset + j, b.m(i, j));
    SparseMatrix m(space_->dim(), space_->dim());
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  /// Sparse block-diagonal inverse (DG spaces only).
  SparseMatrix inverse_blocks() const {
    if (is_global()) throw std::logic_error("inverse_blocks: global mass matrix has no block inverse");
    std::vector<Eigen::Triplet<double>> t;
    for (const Block& b : blocks_) {
      const Eigen::MatrixXd inv = b.llt.solve(Eigen::MatrixXd::Identity(b.m.rows(), b.m.cols()));
      for (int i = 0; i < inv.rows(); ++i)
        for (int j = 0; j < inv.cols(); ++j) t.emplace_back(b.offset + i, b.offset + j, inv(i, j));
    }
    SparseMatrix m(space_->dim(), space_->dim());
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  struct Block {
    int offset = 0;
    Eigen::MatrixXd m;
    Eigen::LLT<Eigen::MatrixXd> llt;
  };
  const std::vector<Block>& blocks() const { return blocks_; }
  const SparseMatrix& matrix() const { return matrix_; }

 private:
  void check_size(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != space_->dim()) throw std::invalid_argument("mass operator: vector length mismatch");
  }

  Eigen::MatrixXd cell_matrix(std::size_t c) const {
    const FiniteElementSpace& sp = *space_;
    const int n = sp.local_dim(c);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    const QuadratureRule& rule = sp.cell_rule(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const BasisEval e = sp.evaluate(c, rule.points[q], false);
      const double w = rule.weights[q] * e.det_j;
      if (sp.is_vector()) {
        m.noalias() += w * e.vvalue * e.vvalue.transpose();
      } else {
        m.noalias() += w * e.value * e.value.transpose();
      }
    }
    return 0.5 * (m + m.transpose());
  }

  void assemble_blocks() {
    const FiniteElementSpace& sp = *space_;
    const Mesh& mesh = sp.mesh();
    const std::size_t nc = mesh.num_cells();
    std::vector<Block> cells(nc);
    parallel_for(nc, [&](std::size_t c) {
      if (sp.local_dim(c) == 0) return;
      cells[c].offset = sp.cell_dofs(c).front();
      cells[c].m = cell_matrix(c);
    });
    for (std::size_t c = 0; c < nc; ++c) {
      if (cells[c].m.size() == 0) continue;
      cells[c].llt.compute(cells[c].m);
      if (cells[c].llt.info() != Eigen::Success) throw std::runtime_error("mass matrix block of cell " + std::to_string(c) + " is not SPD");
      blocks_.push_back(std::move(cells[c]));
    }
    if (sp.family() == SpaceFamily::CellFace) {
      const int ns = sp.side_dim();
      const QuadratureRule& rule = sp.side_rule();
      for (std::size_t s = 0; s < mesh.num_sides(); ++s) {
        Block b;
        b.offset = sp.side_dof(s, 0);
        b.m = Eigen::MatrixXd::Zero(ns, ns);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const Eigen::VectorXd p = sp.side_basis(rule.points[q].x());
          b.m.noalias() += rule.weights[q] * mesh.sides[s].length * p * p.transpose();
        }
        b.llt.compute(b.m);
        if (b.llt.info() != Eigen::Success) throw std::runtime_error("mass matrix block of side " + std::to_string(s) + " is not SPD");
        blocks_.push_back(std::move(b));
      }
    }
  }

  void assemble_global() {
    const FiniteElementSpace& sp = *space_;
    const std::size_t nc = sp.mesh().num_cells();
    std::vector<Eigen::MatrixXd> local(nc);
    parallel_for(nc, [&](std::size_t c) { local[c] = cell_matrix(c); });
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& dofs = sp.cell_dofs(c);
      for (std::size_t i = 0; i < dofs.size(); ++i)
        for (std::size_t j = 0; j < dofs.size(); ++j) t.emplace_back(dofs[i], dofs[j], local[c](i, j));
    }
    matrix_.resize(sp.dim(), sp.dim());
    matrix_.setFromTriplets(t.begin(), t.end());
    const int n = static_cast<int>(sp.dim());
    spec_.max_iterations = std::max(10 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))), 100);
    cg_ = std::make_shared<Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>>();
    cg_->setTolerance(spec_.relative_tolerance);
    cg_->setMaxIterations(spec_.max_iterations);
    cg_->compute(matrix_);
  }

  SpacePtr space_;
  LinearSolveSpec spec_;
  std::vector<Block> blocks_;
  SparseMatrix matrix_;
  std::shared_ptr<Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>> cg_;
};

inline MassOperator mass_matrix(SpacePtr space) { return MassOperator(std::move(space)); }

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void require_compatible(const FiniteElementSpace& a, const FiniteElementSpace& b) {
  require(a.mesh_ptr() == b.mesh_ptr() || &a.mesh() == &b.mesh(), "spaces live on different meshes");
  require(a.quadrature_order() == b.quadrature_order(), "spaces use different quadrature orders");
  require(a.degree() == b.degree(), "spaces belong to complexes of different degree");
}

/// Calls f(c, eval, weight) at every cell quadrature point.
template <class F>
void for_cell_points(const FiniteElementSpace& sp, std::size_t c, bool derivatives, F&& f) {
  const QuadratureRule& rule = sp.cell_rule(c);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const BasisEval e = sp.evaluate(c, rule.points[q], derivatives);
    f(e, rule.weights[q] * e.det_j, rule.points[q]);
  }
}

}  // namespace detail

/// L2 projection of a scalar function (evaluated on the periodic image).
inline Field l2_project(const MassOperator& mass, const ScalarFunction& f) {
  const FiniteElementSpace& sp = *mass.space();
  detail::require(!sp.is_vector(), "l2_project: scalar function into a vector space");
  const Mesh& mesh = sp.mesh();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sp.dim());
  std::vector<Eigen::VectorXd> local(mesh.num_cells());
  parallel_for(mesh.num_cells(), [&](std::size_t c) {
    local[c] = Eigen::VectorXd::Zero(sp.local_dim(c));
    detail::for_cell_points(sp, c, false, [&](const BasisEval& e, double w, const Vec2&) {
      local[c] += w * f(mesh.wrap(e.x)) * e.value;
    });
  });
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& dofs = sp.cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i) rhs[dofs[i]] += local[c][i];
  }
  if (sp.family() == SpaceFamily::CellFace) {
    const QuadratureRule& rule = sp.side_rule();
    for (std::size_t s = 0; s < mesh.num_sides(); ++s) {
      const Side& side = mesh.sides[s];
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double t = rule.points[q].x();
        const Eigen::VectorXd p = sp.side_basis(t);
        const double g = f(mesh.wrap(side.point(t)));
        for (int j = 0; j < sp.side_dim(); ++j) rhs[sp.side_dof(s, j)] += rule.weights[q] * side.length * g * p[j];
      }
    }
  }
  return Field(mass.space(), mass.solve(rhs));
}

/// L2 projection of a vector function.
inline Field l2_project(const MassOperator& mass, const VectorFunction& f) {
  const FiniteElementSpace& sp = *mass.space();
  detail::require(sp.is_vector(), "l2_project: vector function into a scalar space");
  const Mesh& mesh = sp.mesh();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sp.dim());
  parallel_for(mesh.num_cells(), [&](std::size_t c) {
    Eigen::VectorXd local = Eigen::VectorXd::Zero(sp.local_dim(c));
    detail::for_cell_points(sp, c, false, [&](const BasisEval& e, double w, const Vec2&) {
      local += w * (e.vvalue * f(mesh.wrap(e.x)));
    });
    const auto& dofs = sp.cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i) rhs[dofs[i]] = local[i];
  });
  return Field(mass.space(), mass.solve(rhs));
}

inline Field l2_project(SpacePtr space, const ScalarFunction& f) { return l2_project(MassOperator(std::move(space)), f); }
inline Field l2_project(SpacePtr space, const VectorFunction& f) { return l2_project(MassOperator(std::move(space)), f); }

/// Projection onto C_k: independent L2 projections on every cell and side.
inline Field cellface_project(const MassOperator& mass, const ScalarFunction& g) {
  detail::require(mass.space()->family() == SpaceFamily::CellFace, "cellface_project: target is not a cell-face space");
  return l2_project(mass, g);
}
inline Field cellface_project(SpacePtr space, const ScalarFunction& g) { return cellface_project(MassOperator(std::move(space)), g); }

namespace detail {

enum class Derivative { Div, Curl };

/// C_k coefficients of the distributional divergence or curl of u.
inline Field distributional(const Field& u, const MassOperator& cmass, Derivative kind) {
  const FiniteElementSpace& vs = *u.space;
  const FiniteElementSpace& cs = *cmass.space();
  require(cs.family() == SpaceFamily::CellFace, "distributional operator: codomain must be C_k");
  require(vs.is_vector(), "distributional operator: argument must be a vector field");
  require_compatible(vs, cs);
  const Mesh& mesh = vs.mesh();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cs.dim());
  parallel_for(mesh.num_cells(), [&](std::size_t c) {
    if (cs.local_dim(c) == 0) return;
    const Eigen::VectorXd uc = gather(vs, u.coeffs, c);
    Eigen::VectorXd local = Eigen::VectorXd::Zero(cs.local_dim(c));
    const QuadratureRule& rule = cs.cell_rule(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const BasisEval ev = vs.evaluate(c, rule.points[q], true);
      const BasisEval ec = cs.evaluate(c, rule.points[q], false);
      const double d = kind == Derivative::Div ? ev.div.dot(uc) : ev.curl.dot(uc);
      local += rule.weights[q] * ev.det_j * d * ec.value;
    }
    const auto& dofs = cs.cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i) rhs[dofs[i]] = local[i];
  });
  const QuadratureRule& rule = cs.side_rule();
  parallel_for(mesh.num_sides(), [&](std::size_t s) {
    const Side& side = mesh.sides[s];
    const Eigen::VectorXd ul = gather(vs, u.coeffs, side.left_cell);
    const Eigen::VectorXd ur = gather(vs, u.coeffs, side.right_cell);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double t = rule.points[q].x();
      const auto [el, er] = vs.trace(s, t);
      const Vec2 jump = vector_value(el, ul) - vector_value(er, ur);
      // div: -Jump(u).n ; curl: +Jump(u^perp).n
      const double j = kind == Derivative::Div ? -jump.dot(side.normal) : perp(jump).dot(side.normal);
      const Eigen::VectorXd p = cs.side_basis(t);
      for (int k = 0; k < cs.side_dim(); ++k) rhs[cs.side_dof(s, k)] += rule.weights[q] * side.length * j * p[k];
    }
  });
  return Field(cmass.space(), cmass.solve(rhs));
}

/// Right-hand side <f, D v_i>_C for every basis function v_i of vspace.
inline Eigen::VectorXd adjoint_distributional_rhs(const Field& f, const FiniteElementSpace& vs, Derivative kind) {
  const FiniteElementSpace& cs = *f.space;
  require(cs.family() == SpaceFamily::CellFace, "adjoint distributional operator: argument must lie in C_k");
  require_compatible(vs, cs);
  const Mesh& mesh = vs.mesh();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(vs.dim());
  parallel_for(mesh.num_cells(), [&](std::size_t c) {
    if (cs.local_dim(c) == 0) return;
    const Eigen::VectorXd fc = gather(cs, f.coeffs, c);
    Eigen::VectorXd local = Eigen::VectorXd::Zero(vs.local_dim(c));
    const QuadratureRule& rule = vs.cell_rule(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const BasisEval ev = vs.evaluate(c, rule.points[q], true);
      const BasisEval ec = cs.evaluate(c, rule.points[q], false);
      const double w = rule.weights[q] * ev.det_j * ec.value.dot(fc);
      local += w * (kind == Derivative::Div ? ev.div : ev.curl);
    }
    const auto& dofs = vs.cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i) rhs[dofs[i]] = local[i];
  });
  // Side terms touch two cells; accumulate sequentially for determinism.
  const QuadratureRule& rule = vs.side_rule();
  for (std::size_t s = 0; s < mesh.num_sides(); ++s) {
    const Side& side = mesh.sides[s];
    Eigen::VectorXd fs(cs.side_dim());
    for (int k = 0; k < cs.side_dim(); ++k) fs[k] = f.coeffs[cs.side_dof(s, k)];
    const auto& dl = vs.cell_dofs(side.left_cell);
    const auto& dr = vs.cell_dofs(side.right_cell);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double t = rule.points[q].x();
      const double w = rule.weights[q] * side.length * cs.side_basis(t).dot(fs);
      const auto [el, er] = vs.trace(s, t);
      // Jump(v) . m with m = -n (div) or m such that perp(v).n = v.(-n^perp) (curl).
      const Vec2 m = kind == Derivative::Div ? Vec2(-side.normal) : Vec2(-perp(side.normal));
      const Eigen::VectorXd tl = el.vvalue * m;
      const Eigen::VectorXd tr = er.vvalue * m;
      for (std::size_t i = 0; i < dl.size(); ++i) rhs[dl[i]] += w * tl[i];
      for (std::size_t i = 0; i < dr.size(); ++i) rhs[dr[i]] -= w * tr[i];
    }
  }
  return rhs;
}

}  // namespace detail

/// Distributional divergence of u in dB^div_k, as an element of C_k.
inline Field dist_div(const Field& u, const MassOperator& cmass) {
  detail::require(u.space->family() == SpaceFamily::VectorDivOptimal, "dist_div: argument must lie in dB^div_k");
  return detail::distributional(u, cmass, detail::Derivative::Div);
}
inline Field dist_div(const Field& u, SpacePtr cf) { return dist_div(u, MassOperator(std::move(cf))); }

/// Distributional curl of u in dB^curl_k, as an element of C_k.
inline Field dist_curl(const Field& u, const MassOperator& cmass) {
  detail::require(u.space->family() == SpaceFamily::VectorCurlOptimal, "dist_curl: argument must lie in dB^curl_k");
  return detail::distributional(u, cmass, detail::Derivative::Curl);
}
inline Field dist_curl(const Field& u, SpacePtr cf) { return dist_curl(u, MassOperator(std::move(cf))); }

/// Adjoint of the distributional curl: C_k -> dB^curl_k.
inline Field adjoint_dist_curl(const Field& f, const MassOperator& vmass) {
  detail::require(vmass.space()->family() == SpaceFamily::VectorCurlOptimal, "adjoint_dist_curl: target must be dB^curl_k");
  return Field(vmass.space(), vmass.solve(detail::adjoint_distributional_rhs(f, *vmass.space(), detail::Derivative::Curl)));
}
inline Field adjoint_dist_curl(const Field& f, SpacePtr curl_space) { return adjoint_dist_curl(f, MassOperator(std::move(curl_space))); }

/// Adjoint of the distributional divergence: C_k -> dB^div_k.
inline Field adjoint_dist_div(const Field& f, const MassOperator& vmass) {
  detail::require(vmass.space()->family() == SpaceFamily::VectorDivOptimal, "adjoint_dist_div: target must be dB^div_k");
  return Field(vmass.space(), vmass.solve(detail::adjoint_distributional_rhs(f, *vmass.space(), detail::Derivative::Div)));
}
inline Field adjoint_dist_div(const Field& f, SpacePtr div_space) { return adjoint_dist_div(f, MassOperator(std::move(div_space))); }

enum class GradientKind { Grad, Perp };

/// Sparse coupling G_ij = integral of grad(psi_i) . v_j (or rotated
/// gradient), psi in A_{k+1} and v in a vector DG space.
inline SparseMatrix coupling_matrix(const FiniteElementSpace& as, const FiniteElementSpace& vs, GradientKind kind) {
  detail::require(as.family() == SpaceFamily::ContinuousScalar, "coupling_matrix: first space must be A_{k+1}");
  detail::require(vs.is_vector(), "coupling_matrix: second space must be a vector space");
  detail::require_compatible(as, vs);
  const std::size_t nc = as.mesh().num_cells();
  std::vector<Eigen::MatrixXd> local(nc);
  parallel_for(nc, [&](std::size_t c) {
    local[c] = Eigen::MatrixXd::Zero(as.local_dim(c), vs.local_dim(c));
    const QuadratureRule& rule = vs.cell_rule(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const BasisEval ea = as.evaluate(c, rule.points[q], true);
      const BasisEval ev = vs.evaluate(c, rule.points[q], false);
      Eigen::MatrixX2d g = ea.grad;
      if (kind == GradientKind::Perp) {
        g.col(0) = -ea.grad.col(1);
        g.col(1) = ea.grad.col(0);
      }
      local[c].noalias() += rule.weights[q] * ev.det_j * g * ev.vvalue.transpose();
    }
  });
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& da = as.cell_dofs(c);
    const auto& dv = vs.cell_dofs(c);
    for (std::size_t i = 0; i < da.size(); ++i)
      for (std::size_t j = 0; j < dv.size(); ++j) t.emplace_back(da[i], dv[j], local[c](i, j));
  }
  SparseMatrix g(as.dim(), vs.dim());
  g.setFromTriplets(t.begin(), t.end());
  return g;
}

/// The A_{k+1} space paired with a DG space of the same complex.
inline SpacePtr potential_space(const FiniteElementSpace& vs) {
  return build_space(vs.mesh_ptr(), SpaceFamily::ContinuousScalar, vs.degree(), vs.quadrature_order());
}

/// Adjoint gradient (or rotated gradient) into A_{k+1}: solves M_A x = G u.
class AdjointOperator {
 public:
  AdjointOperator(SpacePtr a_space, SpacePtr v_space, GradientKind kind)
      : mass_(std::make_shared<MassOperator>(a_space)), v_space_(std::move(v_space)), kind_(kind) {
    coupling_ = coupling_matrix(*a_space, *v_space_, kind);
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return mass_->solve(coupling_ * u); }

  Field apply(const Field& u) const {
    detail::require(u.space == v_space_ || u.space->dim() == v_space_->dim(), "adjoint operator: field space mismatch");
    return Field(mass_->space(), apply(u.coeffs));
  }

  /// A mass norm of the adjoint image.
  double norm(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd x = apply(u);
    return std::sqrt(std::max(0.0, mass_->inner(x, x)));
  }

  const MassOperator& mass() const { return *mass_; }
  const SparseMatrix& coupling() const { return coupling_; }
  GradientKind kind() const { return kind_; }
  const SpacePtr& vector_space() const { return v_space_; }

 private:
  std::shared_ptr<MassOperator> mass_;
  SpacePtr v_space_;
  GradientKind kind_;
  SparseMatrix coupling_;
};

/// Adjoint gradient of u (any vector DG space) into A_{k+1}.
inline Field adjoint_grad(const Field& u) {
  return AdjointOperator(potential_space(*u.space), u.space, GradientKind::Grad).apply(u);
}

/// Adjoint rotated gradient of u into A_{k+1}.
inline Field adjoint_perp(const Field& u) {
  return AdjointOperator(potential_space(*u.space), u.space, GradientKind::Perp).apply(u);
}

/// u0 = -(adjoint distributional curl)(cell-face projection of f0).
inline Field divfree_init(const ScalarFunction& f0, const MassOperator& curl_mass, const MassOperator& cf_mass) {
  const Field f = cellface_project(cf_mass, f0);
  Field u = adjoint_dist_curl(f, curl_mass);
  u.coeffs = -u.coeffs;
  return u;
}
inline Field divfree_init(const ScalarFunction& f0, SpacePtr curl_space, SpacePtr cf_space) {
  return divfree_init(f0, MassOperator(std::move(curl_space)), MassOperator(std::move(cf_space)));
}

struct CohomologyReport {
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  std::size_t dim_c = 0;
  std::size_t rank_grad = 0;
  std::size_t rank_curl = 0;
  /// dim ker(grad)
  std::size_t b0 = 0;
  /// dim ker(dist curl) - rank(grad)
  std::size_t b1 = 0;
  /// dim C - rank(dist curl)
  std::size_t b2 = 0;
  /// max |dist_curl(grad f)| over the coefficient matrix
  double complex_residual = 0.0;
};

namespace detail {
inline std::size_t numerical_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  std::size_t r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > 1e-9 * s[0]) ++r;
  return r;
}
}  // namespace detail

/// Dense ranks of grad: A_{k+1} -> dB^curl_k and dist curl: dB^curl_k -> C_k.
inline CohomologyReport cohomology_report(std::shared_ptr<const Mesh> mesh, int k) {
  if (mesh->num_cells() > 16) throw std::invalid_argument("cohomology_report: mesh too large for dense ranks (max 16 cells)");
  const SpacePtr as = build_space(mesh, SpaceFamily::ContinuousScalar, k);
  const SpacePtr bs = build_space(mesh, SpaceFamily::VectorCurlOptimal, k);
  const SpacePtr cs = build_space(mesh, SpaceFamily::CellFace, k);
  const MassOperator bmass(bs);
  const MassOperator cmass(cs);
  const SparseMatrix g = coupling_matrix(*as, *bs, GradientKind::Grad);
  const Eigen::MatrixXd gt = Eigen::MatrixXd(g).transpose();
  Eigen::MatrixXd grad(bs->dim(), as->dim());
  for (int j = 0; j < gt.cols(); ++j) grad.col(j) = bmass.solve(gt.col(j));
  Eigen::MatrixXd curl(cs->dim(), bs->dim());
  for (std::size_t j = 0; j < bs->dim(); ++j) {
    Field e(bs);
    e.coeffs[j] = 1.0;
    curl.col(j) = dist_curl(e, cmass).coeffs;
  }
  CohomologyReport r;
  r.dim_a = as->dim();
  r.dim_b = bs->dim();
  r.dim_c = cs->dim();
  r.rank_grad = detail::numerical_rank(grad);
  r.rank_curl = detail::numerical_rank(curl);
  r.b0 = r.dim_a - r.rank_grad;
  r.b1 = r.dim_b - r.rank_curl - r.rank_grad;
  r.b2 = r.dim_c - r.rank_curl;
  r.complex_residual = (curl * grad).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace dgrham
