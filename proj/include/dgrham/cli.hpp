#pragma once

/// @file cli.hpp
/// @brief Key=value run configuration, the four subcommands and their
/// CSV/VTK/JSON artifacts.

#include "dgrham/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgrham::cli {

inline constexpr const char* kVersion = "dgrham 1.0.0";

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MeshConfig {
  /// cartesian, perturbed, triangles or file.
  std::string kind = "cartesian";
  int nx = 10;
  int ny = 10;
  std::string file;
  double perturb = 0.2;
  std::uint64_t seed = 42;
  /// nx values of a convergence ladder (ny = nx on every level).
  std::vector<int> ladder;
};

struct RunConfig {
  std::string case_id;
  MeshConfig mesh;
  SpaceFamily space = SpaceFamily::VectorCurlOptimal;
  int degree = 1;
  FluxFamily flux = FluxFamily::Godunov;
  int rk_order = 2;
  double cfl = 0.33;
  std::optional<double> t_final;
  int stride = 1;
  std::string out = ".";
  std::optional<InitMode> init;
  /// Physically wrong pairings that are still run.
  std::vector<std::string> warnings;
  /// Parsed key=value pairs in input order.
  std::vector<std::pair<std::string, std::string>> entries;
};

inline SpaceFamily parse_space(const std::string& s) {
  if (s == "dBdiv") return SpaceFamily::VectorDivOptimal;
  if (s == "dBcurl") return SpaceFamily::VectorCurlOptimal;
  if (s == "dQ") return SpaceFamily::VectorTensor;
  throw ConfigError("unknown space '" + s + "' (expected dBdiv, dBcurl or dQ)");
}

inline std::string space_name(SpaceFamily f) {
  switch (f) {
    case SpaceFamily::VectorDivOptimal: return "dBdiv";
    case SpaceFamily::VectorCurlOptimal: return "dBcurl";
    case SpaceFamily::VectorTensor: return "dQ";
    default: return to_string(f);
  }
}

inline InitMode parse_init(const std::string& s) {
  if (s == "divfree") return InitMode::DivergenceFree;
  if (s == "projection") return InitMode::Projection;
  throw ConfigError("unknown init '" + s + "' (expected divfree or projection)");
}

inline std::string init_name(InitMode m) { return m == InitMode::DivergenceFree ? "divfree" : "projection"; }

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int p = 15; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline int parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int x = 0;
  try {
    x = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(x)) throw ConfigError(key + ": expected a real number, got '" + v + "'");
  return x;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {"case",      "mesh.kind", "mesh.nx", "mesh.ny", "mesh.file", "mesh.perturb",
                                                "mesh.seed", "mesh.ladder", "space", "degree",  "flux",      "rk_order",
                                                "cfl",       "t_final",   "stride",  "out",     "init"};
  return keys;
}

/// Preserved quantity of a system and the diffusion direction that keeps it.
inline void direction_warnings(RunConfig& cfg, SystemKind kind) {
  const bool wave = kind == SystemKind::Wave;
  const std::string what = wave ? "curl" : "divergence";
  const std::string sys = to_string(kind);
  if (cfg.flux == FluxFamily::LaxFriedrich) {
    cfg.warnings.push_back("flux lax_friedrich diffuses in both directions and does not preserve the " + what + " for " + sys);
  }
  if (wave && cfg.flux == FluxFamily::LFTangentialDiffusion) {
    cfg.warnings.push_back("flux lf_tangential has tangential diffusion and does not preserve the curl for wave");
  }
  if (!wave && cfg.flux == FluxFamily::LFNormalDiffusion) {
    cfg.warnings.push_back("flux lf_normal has normal diffusion and does not preserve the divergence for " + sys);
  }
  const SpaceFamily natural = wave ? SpaceFamily::VectorDivOptimal : SpaceFamily::VectorCurlOptimal;
  if (cfg.space != natural) {
    cfg.warnings.push_back("space " + space_name(cfg.space) + " does not preserve the " + what + " for " + sys + " (use " +
                           space_name(natural) + ")");
  }
}

}  // namespace detail

/// Parses key=value lines ('#' starts a comment) and applies defaults.
/// `case` is required unless `require_case` is false (mesh-gen).
inline RunConfig parse_config(const std::string& text, bool require_case = true) {
  RunConfig cfg;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& keys = detail::known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    kv[key] = value;
    cfg.entries.emplace_back(key, value);
  }
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };

  if (const auto* v = get("mesh.kind")) cfg.mesh.kind = *v;
  if (cfg.mesh.kind != "cartesian" && cfg.mesh.kind != "perturbed" && cfg.mesh.kind != "triangles" && cfg.mesh.kind != "file") {
    throw ConfigError("mesh.kind: unknown value '" + cfg.mesh.kind + "' (expected cartesian, perturbed, triangles or file)");
  }
  if (cfg.mesh.kind == "file") {
    const auto* f = get("mesh.file");
    if (!f) throw ConfigError("missing required key 'mesh.file' for mesh.kind=file");
    cfg.mesh.file = *f;
  }
  if (const auto* v = get("mesh.nx")) cfg.mesh.nx = detail::parse_int("mesh.nx", *v);
  cfg.mesh.ny = cfg.mesh.nx;
  if (const auto* v = get("mesh.ny")) cfg.mesh.ny = detail::parse_int("mesh.ny", *v);
  if (cfg.mesh.nx < 1 || cfg.mesh.ny < 1) throw ConfigError("mesh.nx and mesh.ny must be positive");
  if (cfg.mesh.kind == "cartesian") cfg.mesh.perturb = 0.0;
  if (const auto* v = get("mesh.perturb")) {
    if (cfg.mesh.kind == "cartesian" || cfg.mesh.kind == "file") throw ConfigError("mesh.perturb applies to perturbed and triangles meshes only");
    cfg.mesh.perturb = detail::parse_real("mesh.perturb", *v);
  }
  if (cfg.mesh.perturb < 0.0 || cfg.mesh.perturb >= 0.5) throw ConfigError("mesh.perturb must lie in [0, 0.5)");
  if (const auto* v = get("mesh.seed")) {
    const int s = detail::parse_int("mesh.seed", *v);
    if (s < 0) throw ConfigError("mesh.seed must be non-negative");
    cfg.mesh.seed = static_cast<std::uint64_t>(s);
  }
  if (const auto* v = get("mesh.ladder")) {
    cfg.mesh.ladder = detail::parse_int_list("mesh.ladder", *v);
    for (std::size_t i = 0; i < cfg.mesh.ladder.size(); ++i) {
      if (cfg.mesh.ladder[i] < 1) throw ConfigError("mesh.ladder entries must be positive");
      if (i > 0 && cfg.mesh.ladder[i] <= cfg.mesh.ladder[i - 1]) throw ConfigError("mesh.ladder must be strictly increasing");
    }
  }

  std::optional<SystemKind> kind;
  if (const auto* v = get("case")) {
    cfg.case_id = *v;
    try {
      kind = make_test_case(cfg.case_id).system.kind;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("case: ") + e.what());
    }
  } else if (require_case) {
    throw ConfigError("missing required key 'case'");
  }

  cfg.space = kind == SystemKind::Wave ? SpaceFamily::VectorDivOptimal : SpaceFamily::VectorCurlOptimal;
  if (const auto* v = get("space")) cfg.space = parse_space(*v);
  if (const auto* v = get("degree")) cfg.degree = detail::parse_int("degree", *v);
  if (cfg.degree < 0 || cfg.degree > 2) throw ConfigError("degree: unsupported value " + std::to_string(cfg.degree) + " (0, 1 or 2)");
  if (const auto* v = get("flux")) {
    try {
      cfg.flux = parse_flux_family(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("flux: ") + e.what());
    }
  }
  const TimeIntegrator def = TimeIntegrator::for_degree(cfg.degree);
  cfg.rk_order = def.order;
  cfg.cfl = def.cfl;
  if (const auto* v = get("rk_order")) cfg.rk_order = detail::parse_int("rk_order", *v);
  if (cfg.rk_order < 1 || cfg.rk_order > 3) throw ConfigError("rk_order must be 1, 2 or 3");
  if (const auto* v = get("cfl")) cfg.cfl = detail::parse_real("cfl", *v);
  if (!(cfg.cfl > 0.0)) throw ConfigError("cfl must be positive");
  if (const auto* v = get("t_final")) {
    cfg.t_final = detail::parse_real("t_final", *v);
    if (!(*cfg.t_final > 0.0)) throw ConfigError("t_final must be positive");
  }
  if (const auto* v = get("stride")) cfg.stride = detail::parse_int("stride", *v);
  if (cfg.stride < 1) throw ConfigError("stride must be at least 1");
  if (const auto* v = get("out")) cfg.out = *v;
  if (const auto* v = get("init")) cfg.init = parse_init(*v);
  if (cfg.init == InitMode::DivergenceFree && kind != SystemKind::Induction) {
    throw ConfigError("init=divfree needs an induction case");
  }

  if (kind) detail::direction_warnings(cfg, *kind);
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, bool require_case = true) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), require_case);
}

/// Mesh of the configuration; `nx` overrides mesh.nx = mesh.ny (ladders).
inline std::shared_ptr<const Mesh> make_mesh(const MeshConfig& mc, std::optional<int> nx = std::nullopt) {
  const int x = nx.value_or(mc.nx);
  const int y = nx.value_or(mc.ny);
  if (mc.kind == "cartesian") return std::make_shared<const Mesh>(generate_cartesian(x, y));
  if (mc.kind == "perturbed") return std::make_shared<const Mesh>(generate_perturbed_quad(x, y, mc.perturb, mc.seed));
  if (mc.kind == "triangles") {
    return std::make_shared<const Mesh>(split_into_triangles(generate_perturbed_quad(x, y, mc.perturb, mc.seed), mc.seed));
  }
  if (nx) throw ConfigError("mesh ladders need a generated mesh kind");
  std::ifstream f(mc.file);
  if (!f) throw std::runtime_error("cannot open mesh file '" + mc.file + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return std::make_shared<const Mesh>(load_mesh(ss.str()));
}

inline RunOptions run_options(const RunConfig& cfg) {
  RunOptions opt;
  opt.vector_family = cfg.space;
  opt.degree = cfg.degree;
  opt.flux = cfg.flux;
  opt.integrator = TimeIntegrator{cfg.rk_order, cfg.cfl};
  opt.init = cfg.init;
  opt.stride = cfg.stride;
  opt.t_final = cfg.t_final;
  return opt;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

inline std::string manifest_text(const RunConfig& cfg, const std::string& command, const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ostringstream m;
  m << "version=" << kVersion << "\n";
  m << "command=" << command << "\n";
  for (const auto& [k, v] : cfg.entries) m << "config." << k << "=" << v << "\n";
  m << "case=" << cfg.case_id << "\n";
  m << "mesh.kind=" << cfg.mesh.kind << "\n";
  m << "mesh.nx=" << cfg.mesh.nx << "\n";
  m << "mesh.ny=" << cfg.mesh.ny << "\n";
  m << "mesh.perturb=" << format_double(cfg.mesh.perturb) << "\n";
  m << "mesh.seed=" << cfg.mesh.seed << "\n";
  if (!cfg.mesh.file.empty()) m << "mesh.file=" << cfg.mesh.file << "\n";
  m << "space=" << space_name(cfg.space) << "\n";
  m << "degree=" << cfg.degree << "\n";
  m << "flux=" << to_string(cfg.flux) << "\n";
  m << "rk_order=" << cfg.rk_order << "\n";
  m << "cfl=" << format_double(cfg.cfl) << "\n";
  m << "stride=" << cfg.stride << "\n";
  for (const auto& [k, v] : extra) m << k << "=" << v << "\n";
  for (const auto& w : cfg.warnings) m << "warning=" << w << "\n";
  return m.str();
}

}  // namespace detail

/// VTK legacy ASCII: one vertex per cell quadrature point, carrying the
/// fields evaluated there and the owning cell index.
inline std::string vtk_text(const SolverState& state, SystemKind kind) {
  const FiniteElementSpace& vs = *state.vector.space;
  const Mesh& mesh = vs.mesh();
  const auto [sname, vname] = unknown_names(kind);
  const bool has_scalar = state.scalar.space != nullptr;
  std::vector<Vec2> pts, vvals;
  std::vector<double> svals;
  std::vector<std::size_t> owner;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const QuadratureRule& rule = vs.cell_rule(c);
    const Eigen::VectorXd lv = gather(vs, state.vector.coeffs, c);
    Eigen::VectorXd ls;
    if (has_scalar) ls = gather(*state.scalar.space, state.scalar.coeffs, c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const BasisEval ev = vs.evaluate(c, rule.points[q], false);
      pts.push_back(ev.x);
      vvals.push_back(vector_value(ev, lv));
      if (has_scalar) svals.push_back(scalar_value(state.scalar.space->evaluate(c, rule.points[q], false), ls));
      owner.push_back(c);
    }
  }
  const std::size_t n = pts.size();
  std::ostringstream o;
  o << "# vtk DataFile Version 3.0\n";
  o << kVersion << " t=" << format_double(state.time) << "\n";
  o << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  o << "POINTS " << n << " double\n";
  for (const Vec2& p : pts) o << format_double(p.x()) << " " << format_double(p.y()) << " 0\n";
  o << "CELLS " << n << " " << 2 * n << "\n";
  for (std::size_t i = 0; i < n; ++i) o << "1 " << i << "\n";
  o << "CELL_TYPES " << n << "\n";
  for (std::size_t i = 0; i < n; ++i) o << "1\n";
  o << "POINT_DATA " << n << "\n";
  o << "SCALARS cell int 1\nLOOKUP_TABLE default\n";
  for (std::size_t c : owner) o << c << "\n";
  if (has_scalar) {
    o << "SCALARS " << sname << " double 1\nLOOKUP_TABLE default\n";
    for (double v : svals) o << format_double(v) << "\n";
  }
  o << "VECTORS " << vname << " double\n";
  for (const Vec2& v : vvals) o << format_double(v.x()) << " " << format_double(v.y()) << " 0\n";
  return o.str();
}

/// Generates the configured mesh and writes it as <out>/mesh.txt.
inline std::filesystem::path cmd_mesh_gen(const RunConfig& cfg, const std::string& out_dir) {
  if (cfg.mesh.kind == "file") throw ConfigError("mesh-gen needs a generated mesh kind");
  const auto mesh = make_mesh(cfg.mesh);
  const ValidationReport rep = validate(*mesh);
  if (!rep.ok()) throw std::runtime_error("generated mesh is invalid: " + rep.failures.front());
  const auto dir = detail::prepare_out(out_dir);
  detail::write_file(dir / "mesh.txt", write_mesh(*mesh));
  detail::write_file(dir / "manifest.txt",
                     detail::manifest_text(cfg, "mesh-gen", {{"cells", std::to_string(mesh->num_cells())},
                                                             {"h_min", format_double(mesh->h_min())}}));
  return dir / "mesh.txt";
}

/// Runs one case and writes drift.csv, energy.csv, errors.csv, fields.vtk
/// and manifest.txt.
inline RunResult cmd_run(const RunConfig& cfg, const std::string& out_dir) {
  const TestCase tc = make_test_case(cfg.case_id);
  const auto mesh = make_mesh(cfg.mesh);
  const RunResult r = run_case(tc, mesh, run_options(cfg));
  const auto dir = detail::prepare_out(out_dir);

  std::ostringstream drift, energy, errors;
  drift << "t,drift\n";
  energy << "t,energy\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    drift << format_double(r.times[i]) << "," << format_double(r.drift[i]) << "\n";
    energy << format_double(r.times[i]) << "," << format_double(r.energy[i]) << "\n";
  }
  errors << "variable,error\n";
  for (const auto& [name, e] : r.errors) errors << name << "," << format_double(e) << "\n";
  detail::write_file(dir / "drift.csv", drift.str());
  detail::write_file(dir / "energy.csv", energy.str());
  detail::write_file(dir / "errors.csv", errors.str());
  detail::write_file(dir / "fields.vtk", vtk_text(r.final_state, tc.system.kind));
  detail::write_file(dir / "manifest.txt",
                     detail::manifest_text(cfg, "run", {{"t_final", format_double(r.times.back())},
                                                        {"dt", format_double(r.dt)},
                                                        {"steps", std::to_string(r.steps)},
                                                        {"init", init_name(r.init)},
                                                        {"drift_kind", to_string(r.drift_kind)},
                                                        {"initial_constraint", format_double(r.initial_constraint)}}));
  return r;
}

/// Runs the case on every ladder level and writes table.csv: one row per h
/// with errors and pairwise rates, then a row of least-squares slopes.
inline ConvergenceTable cmd_convergence(const RunConfig& cfg, const std::string& out_dir) {
  if (cfg.mesh.ladder.size() < 2) throw ConfigError("convergence needs mesh.ladder with at least two levels");
  const TestCase tc = make_test_case(cfg.case_id);
  if (!tc.has_exact) throw ConfigError("case '" + cfg.case_id + "' has no exact solution");
  RunOptions opt = run_options(cfg);
  opt.compute_drift = false;
  opt.stride = std::numeric_limits<int>::max();
  std::vector<std::string> names;
  std::vector<std::vector<double>> errs;
  std::vector<double> hs;
  for (int n : cfg.mesh.ladder) {
    const auto mesh = make_mesh(cfg.mesh, n);
    const RunResult r = run_case(tc, mesh, opt);
    std::vector<double> row;
    if (names.empty())
      for (const auto& e : r.errors) names.push_back(e.first);
    for (const auto& e : r.errors) row.push_back(e.second);
    errs.push_back(row);
    hs.push_back(mesh->lx / n);
  }
  const ConvergenceTable t = convergence_table(errs, hs, names);
  const auto dir = detail::prepare_out(out_dir);
  std::ostringstream o;
  o << "h";
  for (const auto& v : t.variables) o << "," << v << "," << v << "_rate";
  o << "\n";
  for (std::size_t i = 0; i < t.h.size(); ++i) {
    o << format_double(t.h[i]);
    for (std::size_t v = 0; v < t.variables.size(); ++v) {
      o << "," << format_double(t.errors[i][v]) << ",";
      if (i > 0) o << format_double(t.rates[i][v]);
    }
    o << "\n";
  }
  o << "slope";
  for (std::size_t v = 0; v < t.variables.size(); ++v) o << "," << format_double(t.slopes[v]) << ",";
  o << "\n";
  detail::write_file(dir / "table.csv", o.str());
  std::string ladder;
  for (int n : cfg.mesh.ladder) ladder += (ladder.empty() ? "" : ",") + std::to_string(n);
  detail::write_file(dir / "manifest.txt", detail::manifest_text(cfg, "convergence", {{"ladder", ladder}}));
  return t;
}

struct PropertyCheck {
  std::string name;
  std::string mesh;
  int degree = 0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline Eigen::VectorXd random_coeffs(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// L2 product of two vector fields by direct quadrature, independent of the
/// mass operator.
inline double quadrature_inner(const Field& a, const Field& b) {
  const FiniteElementSpace& sp = *a.space;
  double s = 0.0;
  for (std::size_t c = 0; c < sp.mesh().num_cells(); ++c) {
    const QuadratureRule& r = sp.cell_rule(c);
    const Eigen::VectorXd la = gather(sp, a.coeffs, c), lb = gather(*b.space, b.coeffs, c);
    for (std::size_t q = 0; q < r.size(); ++q) {
      const BasisEval ea = sp.evaluate(c, r.points[q], false);
      const BasisEval eb = b.space->evaluate(c, r.points[q], false);
      s += r.weights[q] * ea.det_j * vector_value(ea, la).dot(vector_value(eb, lb));
    }
  }
  return s;
}

/// The vector DG field equal to grad f (or grad^perp f) for f in A_{k+1}.
inline Field gradient_field(const SpacePtr& as, const SpacePtr& vs, const Eigen::VectorXd& f, GradientKind kind) {
  const SparseMatrix g = coupling_matrix(*as, *vs, kind);
  return Field(vs, MassOperator(vs).solve(g.transpose() * f));
}

inline void add_check(std::vector<PropertyCheck>& out, std::string name, const std::string& mesh, int k, double residual, double tol) {
  out.push_back({std::move(name), mesh, k, residual, tol, std::isfinite(residual) && residual <= tol});
}

}  // namespace detail

/// Adjoint transposes, complex identities and the kernel chain on one mesh.
inline std::vector<PropertyCheck> mesh_property_checks(const std::shared_ptr<const Mesh>& mesh, const std::string& label,
                                                       const std::vector<int>& degrees, std::uint64_t seed) {
  using detail::max_abs;
  std::vector<PropertyCheck> out;
  std::mt19937_64 rng(seed);
  for (int k : degrees) {
    const SpacePtr as = build_space(mesh, SpaceFamily::ContinuousScalar, k);
    const SpacePtr bd = build_space(mesh, SpaceFamily::VectorDivOptimal, k);
    const SpacePtr bc = build_space(mesh, SpaceFamily::VectorCurlOptimal, k);
    const SpacePtr cs = build_space(mesh, SpaceFamily::CellFace, k);
    const MassOperator ma(as), mb(bc), md(bd), mc(cs);
    const Eigen::VectorXd f = detail::random_coeffs(as->dim(), rng);
    const Field u(bc, detail::random_coeffs(bc->dim(), rng));
    const Field w(bd, detail::random_coeffs(bd->dim(), rng));
    const Field g(cs, detail::random_coeffs(cs->dim(), rng));

    const Field grad_f = detail::gradient_field(as, bc, f, GradientKind::Grad);
    const Field perp_f = detail::gradient_field(as, bd, f, GradientKind::Perp);
    const double tg = std::abs(ma.inner(adjoint_grad(u).coeffs, f) - detail::quadrature_inner(u, grad_f)) / (u.coeffs.norm() * f.norm());
    const double tp = std::abs(ma.inner(adjoint_perp(w).coeffs, f) - detail::quadrature_inner(w, perp_f)) / (w.coeffs.norm() * f.norm());
    const double tc = std::abs(mb.inner(adjoint_dist_curl(g, mb).coeffs, u.coeffs) - mc.inner(g.coeffs, dist_curl(u, mc).coeffs)) /
                      (g.coeffs.norm() * u.coeffs.norm());
    const double td = std::abs(md.inner(adjoint_dist_div(g, md).coeffs, w.coeffs) - mc.inner(g.coeffs, dist_div(w, mc).coeffs)) /
                      (g.coeffs.norm() * w.coeffs.norm());
    detail::add_check(out, "adjoint_transpose_grad", label, k, tg, 1e-12);
    detail::add_check(out, "adjoint_transpose_perp", label, k, tp, 1e-12);
    detail::add_check(out, "adjoint_transpose_dist_curl", label, k, tc, 1e-12);
    detail::add_check(out, "adjoint_transpose_dist_div", label, k, td, 1e-12);

    detail::add_check(out, "complex_dist_curl_of_grad", label, k, max_abs(dist_curl(grad_f, mc).coeffs) / (1 + max_abs(grad_f.coeffs)), 1e-12);
    detail::add_check(out, "complex_dist_div_of_perp", label, k, max_abs(dist_div(perp_f, mc).coeffs) / (1 + max_abs(perp_f.coeffs)), 1e-12);

    const Field uc = adjoint_dist_curl(g, mb);
    const Field ud = adjoint_dist_div(g, md);
    detail::add_check(out, "kernel_chain_grad_dist_curl", label, k, max_abs(adjoint_grad(uc).coeffs) / (1 + max_abs(uc.coeffs)), 1e-11);
    detail::add_check(out, "kernel_chain_perp_dist_div", label, k, max_abs(adjoint_perp(ud).coeffs) / (1 + max_abs(ud.coeffs)), 1e-11);
  }
  return out;
}

/// Commutation of the adjoint distributional operators with projection:
/// adjoint_dist_div(P_C g) = P(-grad g) and adjoint_dist_curl(P_C g) = P(-grad^perp g).
inline std::vector<PropertyCheck> commutation_checks(const std::shared_ptr<const Mesh>& mesh, const std::string& label,
                                                     const std::vector<int>& degrees, const ScalarFunction& g,
                                                     const VectorFunction& grad_g, double tol) {
  std::vector<PropertyCheck> out;
  for (int k : degrees) {
    const SpacePtr cs = build_space(mesh, SpaceFamily::CellFace, k);
    const SpacePtr bd = build_space(mesh, SpaceFamily::VectorDivOptimal, k);
    const SpacePtr bc = build_space(mesh, SpaceFamily::VectorCurlOptimal, k);
    const Field f = cellface_project(cs, g);
    const Field rd = l2_project(bd, [&](const Vec2& x) { return Vec2(-grad_g(x)); });
    const Field rc = l2_project(bc, [&](const Vec2& x) { return Vec2(-perp(grad_g(x))); });
    detail::add_check(out, "commutation_div", label, k, detail::max_abs(adjoint_dist_div(f, bd).coeffs - rd.coeffs), tol);
    detail::add_check(out, "commutation_curl", label, k, detail::max_abs(adjoint_dist_curl(f, bc).coeffs - rc.coeffs), tol);
  }
  return out;
}

/// Betti numbers b0 = 1 and b1 = 2 of the torus by dense ranks.
inline std::vector<PropertyCheck> betti_checks(const std::shared_ptr<const Mesh>& mesh, const std::string& label, const std::vector<int>& degrees) {
  std::vector<PropertyCheck> out;
  for (int k : degrees) {
    const CohomologyReport r = cohomology_report(mesh, k);
    detail::add_check(out, "betti_b0", label, k, std::abs(static_cast<double>(r.b0) - 1.0), 0.0);
    detail::add_check(out, "betti_b1", label, k, std::abs(static_cast<double>(r.b1) - 2.0), 0.0);
  }
  return out;
}

/// Full suite: identities on the configured mesh, polynomial commutation on
/// affine cells, smooth commutation on bilinear quads and the 2x2 Betti check.
inline std::vector<PropertyCheck> run_property_suite(const std::shared_ptr<const Mesh>& mesh, const std::string& label, std::uint64_t seed) {
  const std::vector<int> all = {0, 1, 2};
  std::vector<PropertyCheck> out = mesh_property_checks(mesh, label, all, seed);
  auto append = [&](std::vector<PropertyCheck> v) { out.insert(out.end(), v.begin(), v.end()); };

  const ScalarFunction poly = [](const Vec2& x) { return x.x() * (1 - x.x()) * x.y() * (1 - x.y()); };
  const VectorFunction grad_poly = [](const Vec2& x) {
    return Vec2((1 - 2 * x.x()) * x.y() * (1 - x.y()), x.x() * (1 - x.x()) * (1 - 2 * x.y()));
  };
  append(commutation_checks(std::make_shared<const Mesh>(generate_cartesian(4, 4)), "cartesian 4x4", all, poly, grad_poly, 1e-12));

  const ScalarFunction trig = [](const Vec2& x) { return std::sin(2 * M_PI * x.x()) * std::cos(2 * M_PI * x.y()); };
  const VectorFunction grad_trig = [](const Vec2& x) {
    return Vec2(2 * M_PI * std::cos(2 * M_PI * x.x()) * std::cos(2 * M_PI * x.y()),
                -2 * M_PI * std::sin(2 * M_PI * x.x()) * std::sin(2 * M_PI * x.y()));
  };
  append(commutation_checks(std::make_shared<const Mesh>(generate_perturbed_quad(32, 32, 0.2, 42)), "perturbed 32x32", {1, 2}, trig,
                            grad_trig, 1e-8));

  append(betti_checks(std::make_shared<const Mesh>(generate_cartesian(2, 2)), "cartesian 2x2", all));
  return out;
}

inline nlohmann::json properties_json(const std::vector<PropertyCheck>& checks) {
  nlohmann::json j;
  j["version"] = kVersion;
  bool all = true;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"mesh", c.mesh}, {"degree", c.degree}, {"residual", c.residual},
                           {"tolerance", c.tolerance}, {"pass", c.pass}});
    all = all && c.pass;
  }
  j["pass"] = all;
  return j;
}

/// Runs the property suite on the configured mesh and writes properties.json.
inline nlohmann::json cmd_properties(const RunConfig& cfg, const std::string& out_dir) {
  const auto mesh = make_mesh(cfg.mesh);
  const std::string label = cfg.mesh.kind + " " + std::to_string(cfg.mesh.nx) + "x" + std::to_string(cfg.mesh.ny);
  const nlohmann::json j = properties_json(run_property_suite(mesh, label, cfg.mesh.seed));
  const auto dir = detail::prepare_out(out_dir);
  detail::write_file(dir / "properties.json", j.dump(2) + "\n");
  detail::write_file(dir / "manifest.txt", detail::manifest_text(cfg, "properties", {{"pass", j["pass"].get<bool>() ? "true" : "false"}}));
  return j;
}

}  // namespace dgrham::cli
