#pragma once

/// @file mesh.hpp
/// @brief Periodic torus meshes of triangles and convex quads with globally
/// oriented sides.
///
/// Every cell stores its vertex coordinates unwrapped into one frame, so
/// geometry never sees the seam. A side is identified by its two vertices
/// plus the lattice offset between them; the left cell is the incident cell
/// with the smaller index and the side normal points out of it.

#include "dgrham/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgrham {

enum class CellShape { Triangle, Quad };

/// Thrown for malformed mesh input; carries the offending line when known.
class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Cell {
  CellShape shape = CellShape::Quad;
  std::array<int, 4> vertices{-1, -1, -1, -1};
  /// Counterclockwise vertex coordinates in the cell's own unwrapped frame.
  std::array<Vec2, 4> coords{};

  int num_vertices() const { return shape == CellShape::Triangle ? 3 : 4; }
};

struct Side {
  /// Endpoints in the left cell's counterclockwise order.
  std::array<int, 2> vertices{-1, -1};
  /// Torus wraps crossed from the left cell frame to the right cell frame,
  /// in units of (Lx, Ly).
  std::array<int, 2> shift{0, 0};
  int left_cell = -1;
  int right_cell = -1;
  int left_local = -1;
  int right_local = -1;
  /// Endpoint coordinates in the left cell frame.
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  /// Right cell frame minus left cell frame.
  Vec2 offset = Vec2::Zero();
  /// Unit normal pointing out of the left cell.
  Vec2 normal = Vec2::Zero();
  double length = 0.0;

  Vec2 point(double t) const { return a + t * (b - a); }
};

struct Mesh {
  double lx = 1.0;
  double ly = 1.0;
  std::vector<Vec2> vertices;
  std::vector<Cell> cells;
  std::vector<Side> sides;
  /// Side index of each local edge; -1 past the cell's vertex count.
  std::vector<std::array<int, 4>> cell_sides;
  /// +1 when the cell is the side's left cell, -1 when it is the right cell.
  std::vector<std::array<int, 4>> cell_side_signs;
  /// Number of cell edges matched to each side (2 on a valid torus mesh).
  std::vector<int> side_incidence;

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_sides() const { return sides.size(); }
  std::size_t num_vertices() const { return vertices.size(); }

  /// Periodic image of p in [0,Lx) x [0,Ly).
  Vec2 wrap(const Vec2& p) const {
    Vec2 q(p.x() - lx * std::floor(p.x() / lx), p.y() - ly * std::floor(p.y() / ly));
    if (q.x() >= lx) q.x() = 0.0;
    if (q.y() >= ly) q.y() = 0.0;
    return q;
  }

  double cell_area(std::size_t c) const {
    const Cell& cell = cells[c];
    const int nv = cell.num_vertices();
    double twice = 0.0;
    for (int i = 0; i < nv; ++i) twice += cross(cell.coords[i], cell.coords[(i + 1) % nv]);
    return 0.5 * twice;
  }

  Vec2 cell_centroid(std::size_t c) const {
    const Cell& cell = cells[c];
    const int nv = cell.num_vertices();
    double twice = 0.0;
    Vec2 acc = Vec2::Zero();
    for (int i = 0; i < nv; ++i) {
      const Vec2& p = cell.coords[i];
      const Vec2& q = cell.coords[(i + 1) % nv];
      const double w = cross(p, q);
      twice += w;
      acc += w * (p + q);
    }
    return acc / (3.0 * twice);
  }

  double cell_diameter(std::size_t c) const {
    const Cell& cell = cells[c];
    double d = 0.0;
    for (int i = 0; i < cell.num_vertices(); ++i)
      for (int j = i + 1; j < cell.num_vertices(); ++j) d = std::max(d, (cell.coords[i] - cell.coords[j]).norm());
    return d;
  }

  /// sqrt of the smallest cell area.
  double h_min() const {
    double a = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cells.size(); ++c) a = std::min(a, cell_area(c));
    return std::sqrt(a);
  }

  bool all_triangles() const {
    for (const Cell& c : cells)
      if (c.shape != CellShape::Triangle) return false;
    return true;
  }
  bool all_quads() const {
    for (const Cell& c : cells)
      if (c.shape != CellShape::Quad) return false;
    return true;
  }
};

inline bool operator==(const Cell& x, const Cell& y) {
  if (x.shape != y.shape || x.vertices != y.vertices) return false;
  for (int i = 0; i < x.num_vertices(); ++i)
    if (x.coords[i] != y.coords[i]) return false;
  return true;
}

inline bool operator==(const Side& x, const Side& y) {
  return x.vertices == y.vertices && x.shift == y.shift && x.left_cell == y.left_cell &&
         x.right_cell == y.right_cell && x.left_local == y.left_local && x.right_local == y.right_local &&
         x.a == y.a && x.b == y.b && x.normal == y.normal && x.length == y.length;
}

inline bool operator==(const Mesh& x, const Mesh& y) {
  return x.lx == y.lx && x.ly == y.ly && x.vertices == y.vertices && x.cells == y.cells && x.sides == y.sides &&
         x.cell_sides == y.cell_sides && x.cell_side_signs == y.cell_side_signs;
}

namespace detail {

inline bool cell_is_convex(const Cell& cell) {
  const int nv = cell.num_vertices();
  for (int i = 0; i < nv; ++i) {
    const Vec2 e0 = cell.coords[(i + 1) % nv] - cell.coords[i];
    const Vec2 e1 = cell.coords[(i + 2) % nv] - cell.coords[(i + 1) % nv];
    if (cross(e0, e1) <= 0.0) return false;
  }
  return true;
}

inline double signed_area(const Cell& cell) {
  const int nv = cell.num_vertices();
  double twice = 0.0;
  for (int i = 0; i < nv; ++i) twice += cross(cell.coords[i], cell.coords[(i + 1) % nv]);
  return 0.5 * twice;
}

}  // namespace detail

/// Derives sides and adjacency from cells whose coordinates are already
/// unwrapped. With strict = true any inverted cell or side without exactly
/// two incident cells throws; otherwise defects are kept for validate().
inline Mesh build_mesh(double lx, double ly, std::vector<Vec2> vertices, std::vector<Cell> cells, bool strict = true) {
  if (!(lx > 0.0) || !(ly > 0.0)) throw MeshError("torus lengths must be positive");
  Mesh mesh;
  mesh.lx = lx;
  mesh.ly = ly;
  mesh.vertices = std::move(vertices);
  mesh.cells = std::move(cells);
  const std::size_t nc = mesh.cells.size();
  for (std::size_t c = 0; c < nc; ++c) {
    const Cell& cell = mesh.cells[c];
    for (int i = 0; i < cell.num_vertices(); ++i) {
      const int v = cell.vertices[i];
      if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
        throw MeshError("cell " + std::to_string(c) + " references missing vertex " + std::to_string(v));
    }
    if (strict && !(detail::signed_area(cell) > 0.0)) throw MeshError("inverted cell " + std::to_string(c));
  }

  struct Incidence {
    int cell;
    int local;
  };
  std::map<std::array<std::int64_t, 4>, int> key_to_side;
  std::vector<std::vector<Incidence>> incidences;
  mesh.cell_sides.assign(nc, {-1, -1, -1, -1});
  mesh.cell_side_signs.assign(nc, {0, 0, 0, 0});

  for (std::size_t c = 0; c < nc; ++c) {
    const Cell& cell = mesh.cells[c];
    const int nv = cell.num_vertices();
    for (int i = 0; i < nv; ++i) {
      const int va = cell.vertices[i];
      const int vb = cell.vertices[(i + 1) % nv];
      const Vec2 d = cell.coords[(i + 1) % nv] - cell.coords[i];
      const Vec2 raw = mesh.vertices[vb] - mesh.vertices[va];
      std::int64_t mx = std::llround((d.x() - raw.x()) / lx);
      std::int64_t my = std::llround((d.y() - raw.y()) / ly);
      std::array<std::int64_t, 4> key;
      if (va < vb) {
        key = {va, vb, mx, my};
      } else if (va > vb) {
        key = {vb, va, -mx, -my};
      } else {
        key = {va, vb, std::max(mx, -mx), mx >= 0 ? my : -my};
      }
      auto [it, inserted] = key_to_side.emplace(key, static_cast<int>(incidences.size()));
      if (inserted) incidences.emplace_back();
      incidences[it->second].push_back({static_cast<int>(c), i});
      mesh.cell_sides[c][i] = it->second;
    }
  }

  const std::size_t ns = incidences.size();
  mesh.sides.resize(ns);
  mesh.side_incidence.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto& inc = incidences[s];
    mesh.side_incidence[s] = static_cast<int>(inc.size());
    if (inc.size() != 2 || inc[0].cell == inc[1].cell) {
      if (strict) {
        throw MeshError("topology error: side " + std::to_string(s) + " has " + std::to_string(inc.size()) +
                        " incident cell edges (expected 2 distinct cells)");
      }
    }
    Side& side = mesh.sides[s];
    const Incidence left = inc[0];
    const Cell& lc = mesh.cells[left.cell];
    const int nvl = lc.num_vertices();
    side.left_cell = left.cell;
    side.left_local = left.local;
    side.vertices = {lc.vertices[left.local], lc.vertices[(left.local + 1) % nvl]};
    side.a = lc.coords[left.local];
    side.b = lc.coords[(left.local + 1) % nvl];
    const Vec2 t = side.b - side.a;
    side.length = t.norm();
    side.normal = Vec2(t.y(), -t.x()) / side.length;
    mesh.cell_side_signs[left.cell][left.local] = 1;
    if (inc.size() >= 2) {
      const Incidence right = inc[1];
      const Cell& rc = mesh.cells[right.cell];
      const int nvr = rc.num_vertices();
      side.right_cell = right.cell;
      side.right_local = right.local;
      side.offset = rc.coords[(right.local + 1) % nvr] - side.a;
      side.shift = {static_cast<int>(std::llround(side.offset.x() / lx)),
                    static_cast<int>(std::llround(side.offset.y() / ly))};
      side.offset = Vec2(side.shift[0] * lx, side.shift[1] * ly);
      mesh.cell_side_signs[right.cell][right.local] = -1;
    }
  }
  return mesh;
}

struct ValidationReport {
  int euler_characteristic = 0;
  std::vector<int> side_incidence;
  bool incidence_ok = true;
  bool orientation_ok = true;
  bool normals_ok = true;
  bool area_ok = true;
  double min_area = 0.0;
  double max_area = 0.0;
  double total_area = 0.0;
  double h_min = 0.0;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// Checks the torus invariants; never throws, failures are listed.
inline ValidationReport validate(const Mesh& mesh) {
  ValidationReport r;
  r.euler_characteristic = static_cast<int>(mesh.num_vertices()) - static_cast<int>(mesh.num_sides()) +
                           static_cast<int>(mesh.num_cells());
  if (r.euler_characteristic != 0) {
    r.failures.push_back("Euler characteristic " + std::to_string(r.euler_characteristic) + " (expected 0)");
  }
  r.side_incidence = mesh.side_incidence;
  for (std::size_t s = 0; s < mesh.num_sides(); ++s) {
    const Side& side = mesh.sides[s];
    const int count = s < mesh.side_incidence.size() ? mesh.side_incidence[s] : 0;
    if (count != 2 || side.right_cell < 0 || side.right_cell == side.left_cell) {
      r.incidence_ok = false;
      r.failures.push_back("side " + std::to_string(s) + " has " + std::to_string(count) + " incident cell edges");
      continue;
    }
    const Vec2 t = side.b - side.a;
    if (std::abs(side.normal.norm() - 1.0) > 1e-14 || std::abs(side.normal.dot(t)) > 1e-14 * side.length) {
      r.normals_ok = false;
      r.failures.push_back("side " + std::to_string(s) + " normal is not a unit normal");
    }
    const Vec2 cl = mesh.cell_centroid(side.left_cell);
    const Vec2 cr = mesh.cell_centroid(side.right_cell) - side.offset;
    if (!(side.normal.dot(cr - cl) > 0.0)) {
      r.normals_ok = false;
      r.failures.push_back("side " + std::to_string(s) + " normal does not point from left to right cell");
    }
  }
  r.min_area = std::numeric_limits<double>::infinity();
  r.max_area = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double a = mesh.cell_area(c);
    r.min_area = std::min(r.min_area, a);
    r.max_area = std::max(r.max_area, a);
    r.total_area += a;
    if (!(a > 0.0) || !detail::cell_is_convex(mesh.cells[c])) {
      r.orientation_ok = false;
      r.failures.push_back("cell " + std::to_string(c) + " is inverted or not convex");
    }
  }
  if (mesh.num_cells() == 0) r.min_area = r.max_area = 0.0;
  r.h_min = std::sqrt(std::max(0.0, r.min_area));
  if (std::abs(r.total_area - mesh.lx * mesh.ly) > 1e-12 * std::max(1.0, mesh.lx * mesh.ly)) {
    r.area_ok = false;
    r.failures.push_back("cell areas do not sum to the torus area");
  }
  return r;
}

namespace detail {

/// Cell whose vertex j sits at vertices[v_j] + lattice[j] * (Lx, Ly).
inline Cell make_cell(const std::vector<Vec2>& vertices, double lx, double ly, const std::vector<int>& ids,
                      const std::vector<std::array<int, 2>>& lattice) {
  Cell cell;
  cell.shape = ids.size() == 3 ? CellShape::Triangle : CellShape::Quad;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    cell.vertices[j] = ids[j];
    cell.coords[j] = vertices[ids[j]] + Vec2(lattice[j][0] * lx, lattice[j][1] * ly);
  }
  return cell;
}

inline Mesh structured_quads(int nx, int ny, double lx, double ly, const std::vector<Vec2>& displacement) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("mesh generators need nx, ny >= 2");
  const double hx = lx / nx;
  const double hy = ly / ny;
  auto vid = [nx, ny](int i, int j) { return ((j % ny + ny) % ny) * nx + ((i % nx) + nx) % nx; };
  std::vector<Vec2> raw(static_cast<std::size_t>(nx) * ny);
  std::vector<Vec2> vertices(raw.size());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v = vid(i, j);
      raw[v] = Vec2(i * hx, j * hy) + displacement[v];
      Vec2 w = raw[v];
      w.x() -= lx * std::floor(w.x() / lx);
      w.y() -= ly * std::floor(w.y() / ly);
      if (w.x() >= lx) w.x() = 0.0;
      if (w.y() >= ly) w.y() = 0.0;
      vertices[v] = w;
    }
  }
  std::vector<Cell> cells;
  cells.reserve(raw.size());
  const std::array<std::array<int, 2>, 4> corner{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      std::vector<int> ids(4);
      std::vector<std::array<int, 2>> lattice(4);
      const int v0 = vid(i, j);
      // Geometric position of the first corner relative to its stored image.
      const Vec2 anchor = vertices[v0] - raw[v0];
      for (int k = 0; k < 4; ++k) {
        const int ii = i + corner[k][0];
        const int jj = j + corner[k][1];
        const int v = vid(ii, jj);
        ids[k] = v;
        const Vec2 target = Vec2(ii * hx, jj * hy) + displacement[v] + anchor;
        lattice[k] = {static_cast<int>(std::llround((target.x() - vertices[v].x()) / lx)),
                      static_cast<int>(std::llround((target.y() - vertices[v].y()) / ly))};
      }
      cells.push_back(make_cell(vertices, lx, ly, ids, lattice));
    }
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!(signed_area(cells[c]) > 0.0) || !cell_is_convex(cells[c]))
      throw MeshError("generated cell " + std::to_string(c) + " is inverted or not convex");
  }
  return build_mesh(lx, ly, std::move(vertices), std::move(cells));
}

}  // namespace detail

/// nx x ny axis-aligned quads on [0,Lx) x [0,Ly), cells numbered row by row.
inline Mesh generate_cartesian(int nx, int ny, double lx = 1.0, double ly = 1.0) {
  return detail::structured_quads(nx, ny, lx, ly,
                                  std::vector<Vec2>(static_cast<std::size_t>(std::max(nx, 0) * std::max(ny, 0)),
                                                    Vec2::Zero()));
}

/// Cartesian vertices displaced by amplitude * h * U(-1,1) per coordinate,
/// drawn from a 64-bit Mersenne twister seeded with seed.
inline Mesh generate_perturbed_quad(int nx, int ny, double amplitude, std::uint64_t seed, double lx = 1.0,
                                    double ly = 1.0) {
  if (!(amplitude >= 0.0) || !(amplitude < 0.5)) throw std::invalid_argument("perturbation amplitude must lie in [0, 0.5)");
  if (nx < 2 || ny < 2) throw std::invalid_argument("mesh generators need nx, ny >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec2> displacement(static_cast<std::size_t>(nx) * ny);
  for (auto& d : displacement) {
    const double dx = unit(rng);
    const double dy = unit(rng);
    d = Vec2(amplitude * (lx / nx) * dx, amplitude * (ly / ny) * dy);
  }
  return detail::structured_quads(nx, ny, lx, ly, displacement);
}

/// Splits every quad along one diagonal chosen by a seeded coin flip.
inline Mesh split_into_triangles(const Mesh& quads, std::uint64_t seed) {
  if (!quads.all_quads()) throw std::invalid_argument("split_into_triangles expects a quad mesh");
  std::mt19937_64 rng(seed);
  std::vector<Cell> cells;
  cells.reserve(2 * quads.num_cells());
  auto tri = [&](const Cell& q, int i, int j, int k) {
    Cell t;
    t.shape = CellShape::Triangle;
    const int idx[3] = {i, j, k};
    const Vec2 shift = quads.vertices[q.vertices[i]] - q.coords[i];
    for (int m = 0; m < 3; ++m) {
      t.vertices[m] = q.vertices[idx[m]];
      const Vec2 p = q.coords[idx[m]] + shift;
      // Keep the exact stored coordinate plus a lattice multiple.
      const Vec2& v = quads.vertices[t.vertices[m]];
      t.coords[m] = v + Vec2(std::round((p.x() - v.x()) / quads.lx) * quads.lx,
                             std::round((p.y() - v.y()) / quads.ly) * quads.ly);
    }
    cells.push_back(t);
  };
  for (const Cell& q : quads.cells) {
    if (rng() & 1ULL) {
      tri(q, 0, 1, 3);
      tri(q, 1, 2, 3);
    } else {
      tri(q, 0, 1, 2);
      tri(q, 0, 2, 3);
    }
  }
  return build_mesh(quads.lx, quads.ly, quads.vertices, std::move(cells));
}

namespace detail {

/// Unwraps a cell given only vertex indices: each later vertex takes the
/// periodic image within half a period of the first vertex; exact ties are
/// resolved by the first combination that gives a positively oriented
/// convex cell. Returns false when no combination does.
inline bool unwrap_cell(const std::vector<Vec2>& vertices, double lx, double ly, const std::vector<int>& ids,
                        Cell& out) {
  const int nv = static_cast<int>(ids.size());
  const Vec2 p0 = vertices[ids[0]];
  std::vector<std::vector<int>> choices;  // per (vertex, axis) candidate lattice offsets
  for (int j = 1; j < nv; ++j) {
    for (int axis = 0; axis < 2; ++axis) {
      const double period = axis == 0 ? lx : ly;
      std::vector<std::pair<double, int>> cand;
      for (int m = -1; m <= 1; ++m) {
        const double diff = vertices[ids[j]][axis] + m * period - p0[axis];
        if (std::abs(diff) <= 0.5 * period * (1.0 + 1e-12)) cand.emplace_back(std::abs(diff), m);
      }
      std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
        if (std::abs(x.first - y.first) > 1e-12) return x.first < y.first;
        return x.second > y.second;
      });
      std::vector<int> ms;
      for (const auto& c : cand) ms.push_back(c.second);
      if (ms.empty()) ms.push_back(0);
      choices.push_back(ms);
    }
  }
  std::size_t combos = 1;
  for (const auto& c : choices) combos *= c.size();
  for (std::size_t code = 0; code < combos; ++code) {
    // Mixed-radix decoding, last choice varying fastest.
    std::vector<std::size_t> pick(choices.size(), 0);
    std::size_t rest = code;
    for (std::size_t d = choices.size(); d-- > 0;) {
      pick[d] = rest % choices[d].size();
      rest /= choices[d].size();
    }
    std::vector<std::array<int, 2>> lattice(nv, {0, 0});
    for (int j = 1; j < nv; ++j) {
      lattice[j] = {choices[2 * (j - 1)][pick[2 * (j - 1)]], choices[2 * (j - 1) + 1][pick[2 * (j - 1) + 1]]};
    }
    Cell cell = make_cell(vertices, lx, ly, ids, lattice);
    if (signed_area(cell) > 0.0 && cell_is_convex(cell)) {
      out = cell;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Parses the line-oriented mesh format and builds a strict mesh.
inline Mesh load_mesh(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::vector<std::pair<int, std::string>> lines;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.emplace_back(lineno, raw);
  }
  std::size_t pos = 0;
  auto next = [&](const char* what) -> std::pair<int, std::istringstream> {
    if (pos >= lines.size()) throw MeshError(std::string("unexpected end of file, expected ") + what, lineno);
    const auto& l = lines[pos++];
    return {l.first, std::istringstream(l.second)};
  };
  auto expect_end = [](std::istringstream& s, int line) {
    std::string extra;
    if (s >> extra) throw MeshError("unexpected trailing token '" + extra + "'", line);
  };

  {
    auto [ln, s] = next("meshformat header");
    std::string tag;
    int version = 0;
    if (!(s >> tag >> version) || tag != "meshformat") throw MeshError("expected 'meshformat 1'", ln);
    if (version != 1) throw MeshError("unsupported mesh format version " + std::to_string(version), ln);
    expect_end(s, ln);
  }
  double lx = 0.0;
  double ly = 0.0;
  {
    auto [ln, s] = next("torus line");
    std::string tag;
    if (!(s >> tag >> lx >> ly) || tag != "torus") throw MeshError("expected 'torus <Lx> <Ly>'", ln);
    if (!(lx > 0.0) || !(ly > 0.0)) throw MeshError("torus lengths must be positive", ln);
    expect_end(s, ln);
  }
  std::vector<Vec2> vertices;
  {
    auto [ln, s] = next("vertices line");
    std::string tag;
    long n = -1;
    if (!(s >> tag >> n) || tag != "vertices" || n < 0) throw MeshError("expected 'vertices <N>'", ln);
    expect_end(s, ln);
    for (long i = 0; i < n; ++i) {
      auto [vl, vs] = next("vertex coordinates");
      double x = 0.0;
      double y = 0.0;
      if (!(vs >> x >> y)) throw MeshError("expected '<x> <y>' (dimension mismatch with vertex count?)", vl);
      expect_end(vs, vl);
      if (x < 0.0 || x >= lx || y < 0.0 || y >= ly) throw MeshError("vertex outside [0,Lx) x [0,Ly)", vl);
      vertices.emplace_back(x, y);
    }
  }
  std::vector<Cell> cells;
  {
    auto [ln, s] = next("cells line");
    std::string tag;
    long n = -1;
    if (!(s >> tag >> n) || tag != "cells" || n < 0) throw MeshError("expected 'cells <M>' (dimension mismatch with vertex count?)", ln);
    expect_end(s, ln);
    for (long i = 0; i < n; ++i) {
      auto [cl, cs] = next("cell line");
      std::string kind;
      if (!(cs >> kind) || (kind != "tri" && kind != "quad")) throw MeshError("expected 'tri' or 'quad'", cl);
      const int nv = kind == "tri" ? 3 : 4;
      std::vector<int> ids(nv);
      for (int j = 0; j < nv; ++j) {
        long v = -1;
        if (!(cs >> v)) throw MeshError("expected " + std::to_string(nv) + " vertex indices", cl);
        if (v < 0 || v >= static_cast<long>(vertices.size())) throw MeshError("vertex index out of range", cl);
        ids[j] = static_cast<int>(v);
      }
      expect_end(cs, cl);
      Cell cell;
      if (!detail::unwrap_cell(vertices, lx, ly, ids, cell)) throw MeshError("inverted cell (vertices must be counterclockwise)", cl);
      cells.push_back(cell);
    }
  }
  if (pos != lines.size()) throw MeshError("trailing content after cells (dimension mismatch)", lines[pos].first);
  return build_mesh(lx, ly, std::move(vertices), std::move(cells));
}

/// Serializes a mesh; doubles are written with round-trip precision.
inline std::string write_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "meshformat 1\n";
  out << "torus " << mesh.lx << ' ' << mesh.ly << '\n';
  out << "vertices " << mesh.vertices.size() << '\n';
  for (const Vec2& v : mesh.vertices) out << v.x() << ' ' << v.y() << '\n';
  out << "cells " << mesh.cells.size() << '\n';
  for (const Cell& c : mesh.cells) {
    out << (c.shape == CellShape::Triangle ? "tri" : "quad");
    for (int j = 0; j < c.num_vertices(); ++j) out << ' ' << c.vertices[j];
    out << '\n';
  }
  return out.str();
}

}  // namespace dgrham
