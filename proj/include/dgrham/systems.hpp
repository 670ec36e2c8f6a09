#pragma once

/// @file systems.hpp
/// @brief Wave, Maxwell and induction systems, their numerical fluxes and
/// the analytic test cases.
///
/// Conventions:
///   wave       dt p + div u = 0,        dt u + c^2 grad p = 0
///   Maxwell    dt b + curl e = 0,       dt e + c^2 grad^perp b = 0
///   induction  dt u + grad^perp(b . u^perp) + b div u = 0
/// with curl e = dx e_y - dy e_x and grad^perp f = (-dy f, dx f).

#include "dgrham/spaces.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgrham {

enum class SystemKind { Wave, Maxwell, Induction };
enum class FluxFamily { Godunov, LaxFriedrich, LFNormalDiffusion, LFTangentialDiffusion };
enum class FluxDirection { Normal, Tangential };

inline std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::Wave: return "wave";
    case SystemKind::Maxwell: return "maxwell";
    case SystemKind::Induction: return "induction";
  }
  return "?";
}

inline std::string to_string(FluxFamily f) {
  switch (f) {
    case FluxFamily::Godunov: return "godunov";
    case FluxFamily::LaxFriedrich: return "lax_friedrich";
    case FluxFamily::LFNormalDiffusion: return "lf_normal";
    case FluxFamily::LFTangentialDiffusion: return "lf_tangential";
  }
  return "?";
}

inline FluxFamily parse_flux_family(const std::string& s) {
  if (s == "godunov") return FluxFamily::Godunov;
  if (s == "lax_friedrich" || s == "lf") return FluxFamily::LaxFriedrich;
  if (s == "lf_normal") return FluxFamily::LFNormalDiffusion;
  if (s == "lf_tangential") return FluxFamily::LFTangentialDiffusion;
  throw std::invalid_argument("unknown flux family '" + s + "'");
}

struct FluxSpec {
  FluxFamily family = FluxFamily::Godunov;
  /// Wave speed of the diffusion term.
  double lambda = 1.0;
};

struct SystemDef {
  SystemKind kind = SystemKind::Wave;
  double c = 1.0;
  /// Advecting field of the induction equation.
  VectorFunction b;

  bool has_scalar() const { return kind != SystemKind::Induction; }

  /// Wave preserves the adjoint curl (normal diffusion); Maxwell and
  /// induction preserve the adjoint divergence (tangential diffusion).
  FluxDirection direction() const { return kind == SystemKind::Wave ? FluxDirection::Normal : FluxDirection::Tangential; }

  /// Scalar flux potential g: c^2 p, c^2 b or b . u^perp.
  double flux_potential(double scalar, const Vec2& u, const Vec2& x) const {
    if (kind == SystemKind::Induction) return b(x).dot(perp(u));
    return c * c * scalar;
  }

  /// Largest wave speed: c, or max |b| over the cell quadrature points.
  double lambda_max(const Mesh& mesh, const QuadratureOrder& order) const {
    if (kind != SystemKind::Induction) return c;
    double m = 0.0;
    for (const Cell& cell : mesh.cells) {
      const QuadratureRule rule = reference_cell_rule(cell.shape, order);
      for (const Vec2& r : rule.points) m = std::max(m, b(mesh.wrap(map_cell(cell, r).x)).norm());
    }
    return m;
  }
};

inline SystemDef make_wave(double c) { return {SystemKind::Wave, c, {}}; }
inline SystemDef make_maxwell(double c) { return {SystemKind::Maxwell, c, {}}; }
inline SystemDef make_induction(VectorFunction b) { return {SystemKind::Induction, 1.0, std::move(b)}; }

/// Flux parameters for a system: lambda = c for wave and Maxwell. Induction
/// overrides lambda per side with the local max |b|.
inline FluxSpec make_flux_spec(FluxFamily family, const SystemDef& system) { return {family, system.c}; }

namespace detail {
inline void require_unit(const Vec2& n) {
  if (std::abs(n.norm() - 1.0) > 1e-12) throw std::invalid_argument("numerical flux: normal is not a unit vector");
}
}  // namespace detail

/// Vector flux G: central part (g_L + g_R)/2 along n (normal) or n^perp
/// (tangential) plus a Lax-Friedrich diffusion restricted to n n^T,
/// I - n n^T, or unrestricted. Godunov uses the restriction matching the
/// direction.
inline Vec2 vector_numerical_flux(const FluxSpec& spec, double g_l, double g_r, const Vec2& u_l, const Vec2& u_r, const Vec2& n,
                                  FluxDirection direction) {
  detail::require_unit(n);
  const Vec2 t = direction == FluxDirection::Normal ? n : perp(n);
  const Vec2 central = 0.5 * (g_l + g_r) * t;
  const Vec2 du = u_l - u_r;
  const Mat2 nn = n * n.transpose();
  FluxFamily family = spec.family;
  if (family == FluxFamily::Godunov) {
    family = direction == FluxDirection::Normal ? FluxFamily::LFNormalDiffusion : FluxFamily::LFTangentialDiffusion;
  }
  switch (family) {
    case FluxFamily::LFNormalDiffusion: return central + 0.5 * spec.lambda * (nn * du);
    case FluxFamily::LFTangentialDiffusion: return central + 0.5 * spec.lambda * ((Mat2::Identity() - nn) * du);
    case FluxFamily::LaxFriedrich: return central + 0.5 * spec.lambda * du;
    case FluxFamily::Godunov: break;
  }
  return central;
}

/// Upwind flux of the scalar unknown: u.n for wave, e.n^perp for Maxwell.
/// The same formula is used for every flux family.
inline double scalar_numerical_flux(const SystemDef& system, const FluxSpec& /*spec*/, double s_l, double s_r, const Vec2& u_l,
                                    const Vec2& u_r, const Vec2& n) {
  if (system.kind == SystemKind::Induction) throw std::invalid_argument("scalar_numerical_flux: induction has no scalar unknown");
  detail::require_unit(n);
  const Vec2 t = system.kind == SystemKind::Wave ? n : perp(n);
  return 0.5 * (u_l + u_r).dot(t) + 0.5 * system.c * (s_l - s_r);
}

/// Analytic data of one benchmark.
struct TestCase {
  std::string name;
  SystemDef system;
  /// Exact solutions (x, t); the scalar one is empty for induction.
  ScalarFieldT scalar_exact;
  VectorFieldT vector_exact;
  bool has_exact = true;
  /// Potential f0 with u0 = grad^perp f0 (induction cases only).
  ScalarFunction potential;
  double t_final = 1.0;
  std::map<std::string, double> params;

  ScalarFunction scalar_initial() const {
    const ScalarFieldT f = scalar_exact;
    return [f](const Vec2& x) { return f(x, 0.0); };
  }
  VectorFunction vector_initial() const {
    const VectorFieldT f = vector_exact;
    return [f](const Vec2& x) { return f(x, 0.0); };
  }
};

inline const std::vector<std::string>& case_names() {
  static const std::vector<std::string> names = {"maxwell_stationary",        "maxwell_wavetrain",
                                                 "maxwell_wavetrain_plus_vortex", "wave_stationary",
                                                 "wave_wavetrain",            "wave_wavetrain_plus_vortex",
                                                 "induction_rotating_loop",   "induction_discontinuous_loop"};
  return names;
}

inline std::map<std::string, double> default_case_params(const std::string& name) {
  using std::numbers::pi;
  if (name == "maxwell_stationary" || name == "wave_stationary") return {{"c", 1.0}, {"r0", 0.15}, {"xc", 0.5}, {"yc", 0.5}, {"t_final", 3.0}};
  if (name == "maxwell_wavetrain" || name == "wave_wavetrain") return {{"c", 1.0}, {"k_par", 2.0}, {"k_perp", 2.0}, {"t_final", 1.0}};
  if (name == "maxwell_wavetrain_plus_vortex" || name == "wave_wavetrain_plus_vortex") {
    return {{"c", 1.0}, {"k_par", 2.0}, {"k_perp", 2.0}, {"K0", 100.0}, {"r0", 0.35}, {"alpha", 4.0}, {"xc", 0.5}, {"yc", 0.5}, {"t_final", 1.0}};
  }
  if (name == "induction_rotating_loop") return {{"K0", 2.0}, {"alpha", 4.0}, {"xc", 0.5}, {"yc", 0.75}, {"r0", 0.125}, {"t_final", pi}};
  if (name == "induction_discontinuous_loop") {
    return {{"K0", 0.01}, {"r0", 0.3}, {"xc", 0.5}, {"yc", 0.5}, {"bx", 1.0}, {"by", 1.0}, {"t_final", 2.0}};
  }
  throw std::invalid_argument("unknown case '" + name + "'");
}

namespace detail {

/// Smooth bump factor 2 K0 alpha exp(-alpha/(1-s)) / (1-s)^2 with s = rbar^2,
/// zero outside the unit disc.
inline double bump_factor(double k0, double alpha, double s) {
  if (s >= 1.0) return 0.0;
  const double q = 1.0 - s;
  return 2.0 * k0 * alpha * std::exp(-alpha / q) / (q * q);
}

/// Rotation of angle t around (0.5, 0.5).
inline Vec2 rotate_about_center(const Vec2& x, double t) {
  const Vec2 c(0.5, 0.5);
  const Vec2 d = x - c;
  return c + Vec2(std::cos(t) * d.x() - std::sin(t) * d.y(), std::sin(t) * d.x() + std::cos(t) * d.y());
}

}  // namespace detail

/// Builds a named case; overrides replace default parameters. Setting
/// "omega" checks omega^2 = pi^2 c^2 (k_par^2 + k_perp^2).
inline TestCase make_test_case(const std::string& name, const std::map<std::string, double>& overrides = {}) {
  using std::numbers::pi;
  std::map<std::string, double> p = default_case_params(name);
  for (const auto& [key, value] : overrides) {
    if (key == "omega") continue;
    if (!p.count(key)) throw std::invalid_argument("case '" + name + "' has no parameter '" + key + "'");
    p[key] = value;
  }
  TestCase tc;
  tc.name = name;
  tc.t_final = p["t_final"];
  const bool wavetrain = p.count("k_par") > 0;
  if (wavetrain) {
    const double c = p["c"];
    const double omega = pi * c * std::sqrt(p["k_par"] * p["k_par"] + p["k_perp"] * p["k_perp"]);
    if (overrides.count("omega")) {
      const double w = overrides.at("omega");
      if (std::abs(w * w - omega * omega) > 1e-9 * omega * omega) {
        throw std::invalid_argument("case '" + name + "': omega^2 must equal pi^2 c^2 (k_par^2 + k_perp^2)");
      }
    }
    p["omega"] = omega;
  }
  tc.params = p;
  const double c = p.count("c") ? p["c"] : 1.0;

  if (name == "maxwell_stationary" || name == "wave_stationary") {
    const double r0 = p["r0"];
    const Vec2 center(p["xc"], p["yc"]);
    const bool maxwell = name == "maxwell_stationary";
    tc.system = maxwell ? make_maxwell(c) : make_wave(c);
    tc.scalar_exact = [](const Vec2&, double) { return 0.0; };
    tc.vector_exact = [r0, center, maxwell](const Vec2& x, double) {
      const Vec2 xb = (x - center) / r0;
      const double g = std::exp(-0.5 * xb.squaredNorm());
      return maxwell ? Vec2(g * xb) : Vec2(g * perp(xb));
    };
    return tc;
  }

  if (wavetrain) {
    const double kp = p["k_par"] * pi;
    const double kt = p["k_perp"] * pi;
    const double w = p["omega"];
    const bool maxwell = name.rfind("maxwell", 0) == 0;
    const bool vortex = p.count("K0") > 0;
    const double k0 = vortex ? p["K0"] : 0.0;
    const double alpha = vortex ? p["alpha"] : 1.0;
    const double r0 = vortex ? p["r0"] : 1.0;
    const Vec2 center = vortex ? Vec2(p["xc"], p["yc"]) : Vec2(0.5, 0.5);
    tc.system = maxwell ? make_maxwell(c) : make_wave(c);
    if (maxwell) {
      tc.scalar_exact = [=](const Vec2& x, double t) { return w / (c * c) * std::cos(kt * x.y()) * std::sin(kp * x.x() - w * t); };
    } else {
      tc.scalar_exact = [=](const Vec2& x, double t) { return w / (c * c) * std::sin(kt * x.y() - w * t) * std::cos(kp * x.x()); };
    }
    tc.vector_exact = [=](const Vec2& x, double t) {
      Vec2 u;
      if (maxwell) {
        u = Vec2(-kt * std::sin(kt * x.y()) * std::cos(kp * x.x() - w * t), kp * std::cos(kt * x.y()) * std::sin(kp * x.x() - w * t));
      } else {
        u = Vec2(kp * std::cos(kt * x.y() - w * t) * std::sin(kp * x.x()), kt * std::sin(kt * x.y() - w * t) * std::cos(kp * x.x()));
      }
      if (vortex) {
        const Vec2 xb = (x - center) / r0;
        const double f = detail::bump_factor(k0, alpha, xb.squaredNorm());
        u += maxwell ? Vec2(f * xb) : Vec2(f * perp(xb));
      }
      return u;
    };
    return tc;
  }

  if (name == "induction_rotating_loop") {
    const double k0 = p["K0"];
    const double alpha = p["alpha"];
    const double r0 = p["r0"];
    const Vec2 center(p["xc"], p["yc"]);
    // Rigid rotation about (0.5, 0.5) whose flow carries u0 to R(-t) u0(R(t) x).
    tc.system = make_induction([](const Vec2& x) { return Vec2(0.5 - x.y(), x.x() - 0.5); });
    const auto u0 = [=](const Vec2& x) {
      const Vec2 xb = (x - center) / r0;
      return Vec2(detail::bump_factor(k0, alpha, xb.squaredNorm()) * perp(xb));
    };
    tc.potential = [=](const Vec2& x) {
      const double s = ((x - center) / r0).squaredNorm();
      return s < 1.0 ? -k0 * r0 * std::exp(-alpha / (1.0 - s)) : 0.0;
    };
    tc.vector_exact = [u0](const Vec2& x, double t) {
      const Vec2 v = u0(detail::rotate_about_center(x, t));
      return Vec2(std::cos(t) * v.x() + std::sin(t) * v.y(), -std::sin(t) * v.x() + std::cos(t) * v.y());
    };
    return tc;
  }

  if (name == "induction_discontinuous_loop") {
    const double k0 = p["K0"];
    const double r0 = p["r0"];
    const Vec2 center(p["xc"], p["yc"]);
    const Vec2 vel(p["bx"], p["by"]);
    tc.system = make_induction([vel](const Vec2&) { return vel; });
    const auto u0 = [=](const Vec2& x) {
      const Vec2 xb = (x - center) / r0;
      return xb.squaredNorm() < 1.0 ? Vec2(k0 * perp(xb)) : Vec2(0.0, 0.0);
    };
    tc.potential = [=](const Vec2& x) {
      const double s = ((x - center) / r0).squaredNorm();
      return 0.5 * k0 * r0 * (std::min(s, 1.0) - 1.0);
    };
    // The potential is transported with velocity -b.
    tc.vector_exact = [u0, vel](const Vec2& x, double t) {
      Vec2 y = x + t * vel;
      y.x() -= std::floor(y.x());
      y.y() -= std::floor(y.y());
      return u0(y);
    };
    return tc;
  }
  throw std::invalid_argument("unknown case '" + name + "'");
}

}  // namespace dgrham
