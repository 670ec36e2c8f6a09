#pragma once

/// @file solver.hpp
/// @brief Semidiscrete DG residuals for the wave, Maxwell and induction
/// systems and SSP Runge-Kutta time stepping.
///
/// The residual for each unknown is volume term minus side fluxes tested
/// against the jump of the test function, followed by the block mass solve.
/// The induction residual adds the coupling v . b (adj_grad u), which needs
/// one global A_{k+1} solve per evaluation.

#include "dgrham/diagnostics.hpp"
#include "dgrham/systems.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dgrham {

/// Default CFL numbers per degree.
inline double default_cfl(int k) {
  switch (k) {
    case 0: return 0.5;
    case 1: return 0.33;
    default: return 0.2;
  }
}

struct TimeIntegrator {
  int order = 1;
  double cfl = 0.5;

  /// RK order k+1 and the degree's CFL number.
  static TimeIntegrator for_degree(int k) { return {k + 1, default_cfl(k)}; }
};

enum class InitMode { Projection, DivergenceFree };

/// Spaces, mass operators and flux choice for one system on one mesh.
class Discretization {
 public:
  Discretization(SystemDef system, FluxFamily family, SpacePtr vector_space)
      : system_(std::move(system)), flux_(make_flux_spec(family, system_)), vector_space_(std::move(vector_space)) {
    if (!vector_space_->is_vector()) throw std::invalid_argument("Discretization: the vector unknown needs a vector space");
    if (system_.kind == SystemKind::Induction && !system_.b) throw std::invalid_argument("Discretization: induction needs a field b");
    vector_mass_ = std::make_shared<MassOperator>(vector_space_);
    if (system_.has_scalar()) {
      scalar_space_ = build_space(vector_space_->mesh_ptr(), SpaceFamily::DGScalar, vector_space_->degree(), vector_space_->quadrature_order());
      scalar_mass_ = std::make_shared<MassOperator>(scalar_space_);
    }
    if (system_.kind == SystemKind::Induction) {
      adjoint_ = std::make_shared<AdjointOperator>(potential_space(*vector_space_), vector_space_, GradientKind::Grad);
      build_side_lambda();
    }
  }

  const SystemDef& system() const { return system_; }
  const FluxSpec& flux() const { return flux_; }
  const Mesh& mesh() const { return vector_space_->mesh(); }
  const SpacePtr& scalar_space() const { return scalar_space_; }
  const SpacePtr& vector_space() const { return vector_space_; }
  const MassOperator* scalar_mass() const { return scalar_mass_.get(); }
  const MassOperator& vector_mass() const { return *vector_mass_; }
  /// Adjoint gradient used by the induction coupling (null otherwise).
  const AdjointOperator* adjoint() const { return adjoint_.get(); }

  std::size_t scalar_dim() const { return scalar_space_ ? scalar_space_->dim() : 0; }
  std::size_t vector_dim() const { return vector_space_->dim(); }
  std::size_t size() const { return scalar_dim() + vector_dim(); }

  /// Flux parameters on side s: lambda = local max |b| for induction.
  FluxSpec side_flux(std::size_t s) const {
    FluxSpec f = flux_;
    if (system_.kind == SystemKind::Induction) f.lambda = side_lambda_[s];
    return f;
  }

  /// Advecting field at a physical point (evaluated on the periodic image).
  Vec2 b_at(const Vec2& x) const { return system_.b(mesh().wrap(x)); }

 private:
  void build_side_lambda() {
    const Mesh& m = mesh();
    const QuadratureRule& rule = vector_space_->side_rule();
    side_lambda_.assign(m.num_sides(), 0.0);
    for (std::size_t s = 0; s < m.num_sides(); ++s)
      for (const Vec2& t : rule.points) side_lambda_[s] = std::max(side_lambda_[s], b_at(m.sides[s].point(t.x())).norm());
  }

  SystemDef system_;
  FluxSpec flux_;
  SpacePtr vector_space_;
  SpacePtr scalar_space_;
  std::shared_ptr<MassOperator> vector_mass_;
  std::shared_ptr<MassOperator> scalar_mass_;
  std::shared_ptr<AdjointOperator> adjoint_;
  std::vector<double> side_lambda_;
};

/// One Field per unknown plus the current time.
struct SolverState {
  Field scalar;
  Field vector;
  double time = 0.0;

  Eigen::VectorXd pack() const {
    const Eigen::Index ns = scalar.space ? scalar.coeffs.size() : 0;
    Eigen::VectorXd x(ns + vector.coeffs.size());
    if (ns > 0) x.head(ns) = scalar.coeffs;
    x.tail(vector.coeffs.size()) = vector.coeffs;
    return x;
  }
};

inline SolverState unpack(const Discretization& d, const Eigen::VectorXd& x, double time) {
  if (static_cast<std::size_t>(x.size()) != d.size()) throw std::invalid_argument("unpack: state length mismatch");
  SolverState s;
  if (d.scalar_space()) s.scalar = Field(d.scalar_space(), x.head(d.scalar_dim()));
  s.vector = Field(d.vector_space(), x.tail(d.vector_dim()));
  s.time = time;
  return s;
}

namespace detail {

/// Flux linearization on one side: [F; G] = P_l (s_l, u_l) + P_r (s_r, u_r)
/// with g = flux potential, evaluated by calling the flux functions on unit
/// states.
struct SideFluxMaps {
  Eigen::Matrix3d left;
  Eigen::Matrix3d right;
};

inline SideFluxMaps side_flux_maps(const Discretization& d, std::size_t s, const Vec2& x) {
  const SystemDef& sys = d.system();
  const FluxSpec spec = d.side_flux(s);
  const Vec2 n = d.mesh().sides[s].normal;
  SideFluxMaps m;
  for (int k = 0; k < 3; ++k) {
    const double sv = k == 0 ? 1.0 : 0.0;
    const Vec2 uv = k == 0 ? Vec2::Zero() : Vec2(k == 1 ? 1.0 : 0.0, k == 2 ? 1.0 : 0.0);
    const double g = sys.flux_potential(sv, uv, x);
    for (int side = 0; side < 2; ++side) {
      const bool l = side == 0;
      const Vec2 zero = Vec2::Zero();
      double f = 0.0;
      if (sys.has_scalar()) f = scalar_numerical_flux(sys, spec, l ? sv : 0.0, l ? 0.0 : sv, l ? uv : zero, l ? zero : uv, n);
      const Vec2 gv = vector_numerical_flux(spec, l ? g : 0.0, l ? 0.0 : g, l ? uv : zero, l ? zero : uv, n, sys.direction());
      Eigen::Matrix3d& p = l ? m.left : m.right;
      p(0, k) = f;
      p(1, k) = gv.x();
      p(2, k) = gv.y();
    }
  }
  return m;
}

}  // namespace detail

/// Matrix-free time derivative of a packed state.
inline Eigen::VectorXd semidiscrete_rhs(const Discretization& d, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != d.size()) throw std::invalid_argument("semidiscrete_rhs: state length mismatch");
  const Mesh& mesh = d.mesh();
  const SystemDef& sys = d.system();
  const FiniteElementSpace& vs = *d.vector_space();
  const FiniteElementSpace* ss = d.scalar_space().get();
  const std::size_t ns = d.scalar_dim();
  const Eigen::VectorXd xs = x.head(ns);
  const Eigen::VectorXd xv = x.tail(d.vector_dim());
  Eigen::VectorXd rs = Eigen::VectorXd::Zero(ns);
  Eigen::VectorXd rv = Eigen::VectorXd::Zero(d.vector_dim());
  const double c2 = sys.c * sys.c;

  Eigen::VectorXd dstar;
  const FiniteElementSpace* as = nullptr;
  if (sys.kind == SystemKind::Induction) {
    dstar = d.adjoint()->apply(xv);
    as = d.adjoint()->mass().space().get();
  }

  parallel_for(mesh.num_cells(), [&](std::size_t c) {
    const Eigen::VectorXd ul = gather(vs, xv, c);
    Eigen::VectorXd sl;
    Eigen::VectorXd ls;
    if (ss) {
      sl = gather(*ss, xs, c);
      ls = Eigen::VectorXd::Zero(sl.size());
    }
    Eigen::VectorXd lv = Eigen::VectorXd::Zero(ul.size());
    Eigen::VectorXd dl;
    if (as) dl = gather(*as, dstar, c);
    const QuadratureRule& rule = vs.cell_rule(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2& ref = rule.points[q];
      const BasisEval ev = vs.evaluate(c, ref, true);
      const double w = rule.weights[q] * ev.det_j;
      const Vec2 u = vector_value(ev, ul);
      if (sys.kind == SystemKind::Induction) {
        const Vec2 b = d.b_at(ev.x);
        const BasisEval ea = as->evaluate(c, ref, false);
        lv += w * b.dot(perp(u)) * ev.curl;
        lv += w * scalar_value(ea, dl) * (ev.vvalue * b);
        continue;
      }
      const BasisEval es = ss->evaluate(c, ref, true);
      const double s = scalar_value(es, sl);
      if (sys.kind == SystemKind::Wave) {
        ls += w * (es.grad * u);
        lv += w * c2 * s * ev.div;
      } else {
        ls += w * (es.grad * Vec2(-perp(u)));
        lv += w * c2 * s * ev.curl;
      }
    }
    const auto& dv = vs.cell_dofs(c);
    for (std::size_t i = 0; i < dv.size(); ++i) rv[dv[i]] += lv[i];
    if (ss) {
      const auto& dsd = ss->cell_dofs(c);
      for (std::size_t i = 0; i < dsd.size(); ++i) rs[dsd[i]] += ls[i];
    }
  });

  // Per-side contributions, scattered sequentially afterwards.
  struct SideOut {
    Eigen::VectorXd sl, sr, vl, vr;
  };
  std::vector<SideOut> out(mesh.num_sides());
  const QuadratureRule& srule = vs.side_rule();
  parallel_for(mesh.num_sides(), [&](std::size_t s) {
    const Side& side = mesh.sides[s];
    const FluxSpec spec = d.side_flux(s);
    const Eigen::VectorXd ul = gather(vs, xv, side.left_cell);
    const Eigen::VectorXd ur = gather(vs, xv, side.right_cell);
    SideOut& o = out[s];
    o.vl = Eigen::VectorXd::Zero(ul.size());
    o.vr = Eigen::VectorXd::Zero(ur.size());
    Eigen::VectorXd pl, pr;
    if (ss) {
      pl = gather(*ss, xs, side.left_cell);
      pr = gather(*ss, xs, side.right_cell);
      o.sl = Eigen::VectorXd::Zero(pl.size());
      o.sr = Eigen::VectorXd::Zero(pr.size());
    }
    for (std::size_t q = 0; q < srule.size(); ++q) {
      const double t = srule.points[q].x();
      const double w = srule.weights[q] * side.length;
      const auto [evl, evr] = vs.trace(s, t);
      const Vec2 u_l = vector_value(evl, ul);
      const Vec2 u_r = vector_value(evr, ur);
      const Vec2 x = side.point(t);
      double s_l = 0.0, s_r = 0.0;
      if (ss) {
        const auto [esl, esr] = ss->trace(s, t);
        s_l = scalar_value(esl, pl);
        s_r = scalar_value(esr, pr);
        const double f = scalar_numerical_flux(sys, spec, s_l, s_r, u_l, u_r, side.normal);
        o.sl -= w * f * esl.value;
        o.sr += w * f * esr.value;
      }
      const Vec2 xw = mesh.wrap(x);
      const Vec2 g = vector_numerical_flux(spec, sys.flux_potential(s_l, u_l, xw), sys.flux_potential(s_r, u_r, xw), u_l, u_r,
                                           side.normal, sys.direction());
      o.vl -= w * (evl.vvalue * g);
      o.vr += w * (evr.vvalue * g);
    }
  });
  for (std::size_t s = 0; s < mesh.num_sides(); ++s) {
    const Side& side = mesh.sides[s];
    const auto& dl = vs.cell_dofs(side.left_cell);
    const auto& dr = vs.cell_dofs(side.right_cell);
    for (std::size_t i = 0; i < dl.size(); ++i) rv[dl[i]] += out[s].vl[i];
    for (std::size_t i = 0; i < dr.size(); ++i) rv[dr[i]] += out[s].vr[i];
    if (ss) {
      const auto& sl = ss->cell_dofs(side.left_cell);
      const auto& sr = ss->cell_dofs(side.right_cell);
      for (std::size_t i = 0; i < sl.size(); ++i) rs[sl[i]] += out[s].sl[i];
      for (std::size_t i = 0; i < sr.size(); ++i) rs[sr[i]] += out[s].sr[i];
    }
  }
  Eigen::VectorXd r(d.size());
  if (ss) r.head(ns) = d.scalar_mass()->solve(rs);
  r.tail(d.vector_dim()) = d.vector_mass().solve(rv);
  return r;
}

/// Time derivative of a SolverState.
inline SolverState semidiscrete_rhs(const Discretization& d, const SolverState& state) {
  return unpack(d, semidiscrete_rhs(d, state.pack()), state.time);
}

/// The linear semidiscrete operator assembled once as dense cell-to-cell
/// blocks (already multiplied by the inverse block mass). Induction adds
/// the low-rank-in-structure term M_v^{-1} C M_A^{-1} G.
class SemiDiscreteOperator {
 public:
  explicit SemiDiscreteOperator(std::shared_ptr<const Discretization> d) : d_(std::move(d)) { assemble(); }

  const Discretization& discretization() const { return *d_; }
  std::size_t size() const { return d_->size(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != size()) throw std::invalid_argument("SemiDiscreteOperator: state length mismatch");
    Eigen::VectorXd y(x.size());
    parallel_for(rows_.size(), [&](std::size_t c) {
      const CellRow& row = rows_[c];
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(row.index.size());
      for (const Entry& e : row.entries) {
        const auto& cols = rows_[e.cell].index;
        Eigen::VectorXd xc(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) xc[j] = x[cols[j]];
        acc.noalias() += e.block * xc;
      }
      for (std::size_t i = 0; i < row.index.size(); ++i) y[row.index[i]] = acc[i];
    });
    if (d_->system().kind == SystemKind::Induction) {
      const Eigen::VectorXd xv = x.tail(d_->vector_dim());
      y.tail(d_->vector_dim()) += induction_coupling_ * d_->adjoint()->apply(xv);
    }
    return y;
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return apply(x); }

  /// Number of stored block entries (for memory reporting).
  std::size_t stored_values() const {
    std::size_t n = 0;
    for (const auto& r : rows_)
      for (const auto& e : r.entries) n += static_cast<std::size_t>(e.block.size());
    return n + static_cast<std::size_t>(induction_coupling_.nonZeros());
  }

 private:
  struct Entry {
    int cell;
    Eigen::MatrixXd block;
  };
  struct CellRow {
    /// Global indices of the cell's scalar then vector unknowns.
    std::vector<int> index;
    int ns = 0;
    std::vector<Entry> entries;
  };

  /// Trace/value matrix mapping cell-local state to (s, u_x, u_y).
  static Eigen::MatrixXd state_matrix(const BasisEval* es, const BasisEval& ev, int ns) {
    const int nv = static_cast<int>(ev.vvalue.rows());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(3, ns + nv);
    if (es && ns > 0) t.row(0).head(ns) = es->value.transpose();
    t.block(1, ns, 2, nv) = ev.vvalue.transpose();
    return t;
  }

  void add_entry(CellRow& row, int cell, const Eigen::MatrixXd& block) {
    for (Entry& e : row.entries) {
      if (e.cell == cell) {
        e.block += block;
        return;
      }
    }
    row.entries.push_back({cell, block});
  }

  void assemble() {
    const Discretization& d = *d_;
    const Mesh& mesh = d.mesh();
    const SystemDef& sys = d.system();
    const FiniteElementSpace& vs = *d.vector_space();
    const FiniteElementSpace* ss = d.scalar_space().get();
    const int offset_v = static_cast<int>(d.scalar_dim());
    const double c2 = sys.c * sys.c;
    const std::size_t nc = mesh.num_cells();
    rows_.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      CellRow& row = rows_[c];
      if (ss) {
        row.index = ss->cell_dofs(c);
        row.ns = static_cast<int>(row.index.size());
      }
      for (int i : vs.cell_dofs(c)) row.index.push_back(offset_v + i);
    }

    // Volume blocks.
    std::vector<Eigen::MatrixXd> self(nc);
    parallel_for(nc, [&](std::size_t c) {
      const int ns = rows_[c].ns;
      const int nv = vs.local_dim(c);
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ns + nv, ns + nv);
      const QuadratureRule& rule = vs.cell_rule(c);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec2& ref = rule.points[q];
        const BasisEval ev = vs.evaluate(c, ref, true);
        const double w = rule.weights[q] * ev.det_j;
        if (sys.kind == SystemKind::Induction) {
          const Vec2 qv = -perp(d.b_at(ev.x));
          k.noalias() += w * ev.curl * (ev.vvalue * qv).transpose();
          continue;
        }
        const BasisEval es = ss->evaluate(c, ref, true);
        Eigen::MatrixX2d gw = es.grad;
        const Eigen::VectorXd& dv = sys.kind == SystemKind::Wave ? ev.div : ev.curl;
        if (sys.kind == SystemKind::Maxwell) {
          gw.col(0) = -es.grad.col(1);
          gw.col(1) = es.grad.col(0);
        }
        k.block(0, ns, ns, nv).noalias() += w * gw * ev.vvalue.transpose();
        k.block(ns, 0, nv, ns).noalias() += w * c2 * dv * es.value.transpose();
      }
      self[c] = std::move(k);
    });
    for (std::size_t c = 0; c < nc; ++c) add_entry(rows_[c], static_cast<int>(c), self[c]);

    // Side blocks: LL, LR, RL, RR.
    struct SideBlocks {
      Eigen::MatrixXd ll, lr, rl, rr;
    };
    std::vector<SideBlocks> sb(mesh.num_sides());
    const QuadratureRule& srule = vs.side_rule();
    parallel_for(mesh.num_sides(), [&](std::size_t s) {
      const Side& side = mesh.sides[s];
      const int nl = static_cast<int>(rows_[side.left_cell].index.size());
      const int nr = static_cast<int>(rows_[side.right_cell].index.size());
      SideBlocks& b = sb[s];
      b.ll = Eigen::MatrixXd::Zero(nl, nl);
      b.lr = Eigen::MatrixXd::Zero(nl, nr);
      b.rl = Eigen::MatrixXd::Zero(nr, nl);
      b.rr = Eigen::MatrixXd::Zero(nr, nr);
      for (std::size_t q = 0; q < srule.size(); ++q) {
        const double t = srule.points[q].x();
        const double w = srule.weights[q] * side.length;
        const auto [evl, evr] = vs.trace(s, t);
        Eigen::MatrixXd tl, tr;
        if (ss) {
          const auto [esl, esr] = ss->trace(s, t);
          tl = state_matrix(&esl, evl, rows_[side.left_cell].ns);
          tr = state_matrix(&esr, evr, rows_[side.right_cell].ns);
        } else {
          tl = state_matrix(nullptr, evl, 0);
          tr = state_matrix(nullptr, evr, 0);
        }
        const detail::SideFluxMaps p = detail::side_flux_maps(d, s, mesh.wrap(side.point(t)));
        const Eigen::MatrixXd fl = p.left * tl;
        const Eigen::MatrixXd fr = p.right * tr;
        b.ll.noalias() -= w * tl.transpose() * fl;
        b.lr.noalias() -= w * tl.transpose() * fr;
        b.rl.noalias() += w * tr.transpose() * fl;
        b.rr.noalias() += w * tr.transpose() * fr;
      }
    });
    for (std::size_t s = 0; s < mesh.num_sides(); ++s) {
      const Side& side = mesh.sides[s];
      add_entry(rows_[side.left_cell], side.left_cell, sb[s].ll);
      add_entry(rows_[side.left_cell], side.right_cell, sb[s].lr);
      add_entry(rows_[side.right_cell], side.left_cell, sb[s].rl);
      add_entry(rows_[side.right_cell], side.right_cell, sb[s].rr);
    }

    // Multiply every row by the inverse cell mass.
    parallel_for(nc, [&](std::size_t c) {
      CellRow& row = rows_[c];
      const int n = static_cast<int>(row.index.size());
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      const QuadratureRule& rule = vs.cell_rule(c);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const BasisEval ev = vs.evaluate(c, rule.points[q], false);
        const double w = rule.weights[q] * ev.det_j;
        m.block(row.ns, row.ns, n - row.ns, n - row.ns).noalias() += w * ev.vvalue * ev.vvalue.transpose();
        if (ss) {
          const BasisEval es = ss->evaluate(c, rule.points[q], false);
          m.block(0, 0, row.ns, row.ns).noalias() += w * es.value * es.value.transpose();
        }
      }
      const Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m + m.transpose()));
      for (Entry& e : row.entries) e.block = llt.solve(e.block);
    });

    if (sys.kind == SystemKind::Induction) {
      // C_ij = integral of v_i . b psi_j, premultiplied by the vector mass inverse.
      const FiniteElementSpace& as = *d.adjoint()->mass().space();
      std::vector<Eigen::MatrixXd> local(nc);
      parallel_for(nc, [&](std::size_t c) {
        local[c] = Eigen::MatrixXd::Zero(vs.local_dim(c), as.local_dim(c));
        const QuadratureRule& rule = vs.cell_rule(c);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const BasisEval ev = vs.evaluate(c, rule.points[q], false);
          const BasisEval ea = as.evaluate(c, rule.points[q], false);
          local[c].noalias() += rule.weights[q] * ev.det_j * (ev.vvalue * d.b_at(ev.x)) * ea.value.transpose();
        }
      });
      const SparseMatrix minv = d.vector_mass().inverse_blocks();
      std::vector<Eigen::Triplet<double>> trip;
      for (std::size_t c = 0; c < nc; ++c) {
        const auto& dv = vs.cell_dofs(c);
        const auto& da = as.cell_dofs(c);
        for (std::size_t i = 0; i < dv.size(); ++i)
          for (std::size_t j = 0; j < da.size(); ++j) trip.emplace_back(dv[i], da[j], local[c](i, j));
      }
      SparseMatrix cm(vs.dim(), as.dim());
      cm.setFromTriplets(trip.begin(), trip.end());
      induction_coupling_ = minv * cm;
    }
  }

  std::shared_ptr<const Discretization> d_;
  std::vector<CellRow> rows_;
  SparseMatrix induction_coupling_;
};

/// dt = CFL * h_min / (2 lambda_max) with h_min = sqrt(min cell area).
/// The factor 2 is the space dimension.
inline double compute_dt(const Mesh& mesh, const SystemDef& system, const TimeIntegrator& integ,
                         const QuadratureOrder& order = QuadratureOrder::for_degree(0)) {
  const double lambda = system.lambda_max(mesh, order);
  if (!(lambda > 0.0)) throw std::invalid_argument("compute_dt: zero wave speed");
  return integ.cfl * mesh.h_min() / (2.0 * lambda);
}

/// Step count and step sizes reaching t_final exactly: all steps equal dt
/// except a clipped final one.
inline std::vector<double> time_steps(double t_final, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time_steps: dt must be positive");
  const long n = std::max(1L, static_cast<long>(std::ceil(t_final / dt * (1.0 - 1e-12))));
  std::vector<double> steps(n, dt);
  const double last = t_final - (n - 1) * dt;
  if (std::abs(last - dt) > 1e-12 * dt) steps.back() = last;
  return steps;
}

/// Shu-Osher SSP Runge-Kutta step of order 1, 2 or 3 for u' = L(u).
template <class State, class Rhs>
State ssp_rk_step(int order, Rhs&& rhs, const State& u, double dt) {
  switch (order) {
    case 1: return State(u + dt * rhs(u));
    case 2: {
      const State u1 = u + dt * rhs(u);
      return State(0.5 * u + 0.5 * (u1 + dt * rhs(u1)));
    }
    case 3: {
      const State u1 = u + dt * rhs(u);
      const State u2 = 0.75 * u + 0.25 * (u1 + dt * rhs(u1));
      return State((1.0 / 3.0) * u + (2.0 / 3.0) * (u2 + dt * rhs(u2)));
    }
    default: throw std::invalid_argument("ssp_rk_step: order must be 1, 2 or 3");
  }
}

/// SSP step on a SolverState; advances its time by dt.
inline SolverState ssp_rk_step(int order, const SemiDiscreteOperator& op, const SolverState& state, double dt) {
  const Eigen::VectorXd x = ssp_rk_step(order, [&](const Eigen::VectorXd& v) { return op.apply(v); }, state.pack(), dt);
  return unpack(op.discretization(), x, state.time + dt);
}

struct RunOptions {
  SpaceFamily vector_family = SpaceFamily::VectorCurlOptimal;
  int degree = 1;
  FluxFamily flux = FluxFamily::Godunov;
  /// Defaults to TimeIntegrator::for_degree(degree).
  std::optional<TimeIntegrator> integrator;
  /// Defaults to divergence-free for cases with a potential on dB^curl.
  std::optional<InitMode> init;
  /// Diagnostics every `stride` steps (the last step is always recorded).
  int stride = 1;
  /// Defaults to the case's final time.
  std::optional<double> t_final;
  /// Zero entries select the degree defaults.
  QuadratureOrder quadrature{};
  bool compute_drift = true;
  bool compute_errors = true;
};

struct RunResult {
  std::vector<double> times;
  std::vector<double> drift;
  /// Energy normalized by its initial value.
  std::vector<double> energy;
  DriftKind drift_kind = DriftKind::AdjointDiv;
  /// Norm of the initial adjoint image (e.g. the initial divergence).
  double initial_constraint = 0.0;
  std::vector<std::pair<std::string, double>> errors;
  SolverState initial;
  SolverState final_state;
  int steps = 0;
  double dt = 0.0;
  InitMode init = InitMode::Projection;

  double max_drift() const {
    double m = 0.0;
    for (double v : drift) m = std::max(m, v);
    return m;
  }
  double error(const std::string& name) const {
    for (const auto& [k, v] : errors)
      if (k == name) return v;
    throw std::out_of_range("no error named '" + name + "'");
  }
};

inline DriftKind drift_kind_for(SystemKind k) { return k == SystemKind::Wave ? DriftKind::AdjointCurl : DriftKind::AdjointDiv; }

/// Names of the scalar and vector unknowns of a system.
inline std::pair<std::string, std::string> unknown_names(SystemKind k) {
  switch (k) {
    case SystemKind::Wave: return {"p", "u"};
    case SystemKind::Maxwell: return {"b", "e"};
    case SystemKind::Induction: return {"", "u"};
  }
  return {"", "u"};
}

/// Initial state of a case in a discretization.
inline SolverState initial_state(const TestCase& tc, const Discretization& d, InitMode mode) {
  SolverState s;
  if (d.scalar_space()) s.scalar = l2_project(*d.scalar_mass(), tc.scalar_initial());
  if (mode == InitMode::DivergenceFree) {
    if (!tc.potential) throw std::invalid_argument("divergence-free initialization needs a potential");
    if (d.vector_space()->family() != SpaceFamily::VectorCurlOptimal) {
      throw std::invalid_argument("divergence-free initialization needs the dB^curl space");
    }
    const SpacePtr cf = build_space(d.vector_space()->mesh_ptr(), SpaceFamily::CellFace, d.vector_space()->degree(),
                                    d.vector_space()->quadrature_order());
    s.vector = divfree_init(tc.potential, d.vector_mass(), MassOperator(cf));
  } else {
    s.vector = l2_project(d.vector_mass(), tc.vector_initial());
  }
  return s;
}

/// Total energy: 1/2 |u|^2 plus c^2/2 s^2 for the scalar unknown.
inline double total_energy(const Discretization& d, const Eigen::VectorXd& x) {
  const Eigen::VectorXd xv = x.tail(d.vector_dim());
  double e = 0.5 * d.vector_mass().inner(xv, xv);
  if (d.scalar_space()) {
    const Eigen::VectorXd xs = x.head(d.scalar_dim());
    e += 0.5 * d.system().c * d.system().c * d.scalar_mass()->inner(xs, xs);
  }
  return e;
}

/// Runs a case: initialization, time loop with strided diagnostics and
/// final errors against the exact solution.
inline RunResult run_case(const TestCase& tc, std::shared_ptr<const Mesh> mesh, const RunOptions& opt) {
  if (opt.stride < 1) throw std::invalid_argument("run_case: stride must be at least 1");
  const SpacePtr vs = build_space(mesh, opt.vector_family, opt.degree, opt.quadrature);
  if (!vs->is_vector()) throw std::invalid_argument("run_case: the vector unknown needs a vector space family");
  auto disc = std::make_shared<const Discretization>(tc.system, opt.flux, vs);
  const SemiDiscreteOperator op(disc);
  const TimeIntegrator integ = opt.integrator.value_or(TimeIntegrator::for_degree(opt.degree));
  const double t_final = opt.t_final.value_or(tc.t_final);

  RunResult res;
  res.init = opt.init.value_or(tc.potential && opt.vector_family == SpaceFamily::VectorCurlOptimal ? InitMode::DivergenceFree
                                                                                                 : InitMode::Projection);
  res.drift_kind = drift_kind_for(tc.system.kind);
  res.initial = initial_state(tc, *disc, res.init);
  res.dt = compute_dt(*mesh, tc.system, integ, vs->quadrature_order());

  std::optional<DriftMeter> meter;
  if (opt.compute_drift) meter.emplace(vs, res.drift_kind);
  const Eigen::VectorXd u0 = res.initial.vector.coeffs;
  if (meter) res.initial_constraint = meter->norm(u0);

  Eigen::VectorXd x = res.initial.pack();
  const double e0 = total_energy(*disc, x);
  auto record = [&](double t) {
    res.times.push_back(t);
    if (meter) res.drift.push_back(meter->drift(x.tail(disc->vector_dim()), u0));
    res.energy.push_back(e0 > 0.0 ? total_energy(*disc, x) / e0 : 0.0);
  };
  record(0.0);

  const std::vector<double> steps = time_steps(t_final, res.dt);
  auto rhs = [&](const Eigen::VectorXd& v) { return op.apply(v); };
  for (std::size_t n = 0; n < steps.size(); ++n) {
    x = ssp_rk_step(integ.order, rhs, x, steps[n]);
    if (!x.allFinite()) throw std::runtime_error("non-finite state at step " + std::to_string(n + 1));
    const double t = n + 1 == steps.size() ? t_final : (n + 1) * res.dt;
    if ((n + 1) % static_cast<std::size_t>(opt.stride) == 0 || n + 1 == steps.size()) record(t);
  }
  res.steps = static_cast<int>(steps.size());
  res.final_state = unpack(*disc, x, t_final);

  if (opt.compute_errors && tc.has_exact) {
    const auto [sname, vname] = unknown_names(tc.system.kind);
    if (disc->scalar_space()) res.errors.emplace_back(sname, l2_error(res.final_state.scalar, tc.scalar_exact, t_final));
    res.errors.emplace_back(vname + "_x", l2_error_component(res.final_state.vector, 0, tc.vector_exact, t_final));
    res.errors.emplace_back(vname + "_y", l2_error_component(res.final_state.vector, 1, tc.vector_exact, t_final));
    res.errors.emplace_back(vname, l2_error(res.final_state.vector, tc.vector_exact, t_final));
  }
  return res;
}

}  // namespace dgrham
