#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace maxwave {

/// Square-in-square decomposition of the unit box, refined dyadically.
///
/// The outer box [0,1]^2 carries the finite difference lattice, the inner
/// box [0.25,0.75]^2 the triangulated finite element region. At refinement
/// level l the single grid spacing everywhere is 0.5 / 2^l, so both box side
/// lengths contain an integer number of cells and every finite element node
/// sits exactly on a lattice point.
struct DomainSpec {
  int level = 3;

  static constexpr double outer_min = 0.0;
  static constexpr double outer_max = 1.0;
  static constexpr double inner_min = 0.25;
  static constexpr double inner_max = 0.75;

  double spacing() const { return 0.5 / static_cast<double>(1 << level); }
  int fd_cells() const { return 1 << (level + 1); }     // cells per side, outer box
  int fe_cells() const { return 1 << level; }           // cells per side, inner box
  int inner_offset() const { return 1 << (level - 1); }  // lattice index of inner_min

  void validate() const {
    if (level < 1) throw std::invalid_argument("DomainSpec: refinement level must be >= 1");
    if (level > 24) throw std::invalid_argument("DomainSpec: refinement level too large");
  }
};

/// Role of a lattice node in the decomposed grid.
enum class NodeClass : std::uint8_t {
  Interior,   ///< advanced by the stencil (includes the ring on the inner-box boundary)
  Outer,      ///< on the unit-box boundary, held at the outer Dirichlet value
  Interface,  ///< inner Dirichlet ring, fed from the finite element solution
  Hole,       ///< strictly inside the interface ring; never read nor written
};

/// Structured lattice over the unit box with node classification.
struct FdGrid {
  int level = 0;
  int n = 0;      ///< cells per side
  double h = 0.0;  ///< spacing
  bool has_hole = true;

  std::vector<NodeClass> cls;        ///< (n+1)^2 entries, scan order
  std::vector<int> interior_nodes;   ///< flat indices, scan order
  std::vector<int> outer_nodes;
  std::vector<int> interface_nodes;

  int points() const { return n + 1; }
  int node_count() const { return points() * points(); }
  int index(int i, int j) const { return j * points() + i; }
  int ix(int idx) const { return idx % points(); }
  int iy(int idx) const { return idx / points(); }
  double x(int i) const { return i * h; }
  double y(int j) const { return j * h; }
  NodeClass node_class(int i, int j) const { return cls[index(i, j)]; }
};

namespace detail {

inline FdGrid classify_lattice(const DomainSpec& spec, bool with_hole) {
  FdGrid g;
  g.level = spec.level;
  g.n = spec.fd_cells();
  g.h = spec.spacing();
  g.has_hole = with_hole;
  g.cls.assign(static_cast<std::size_t>(g.node_count()), NodeClass::Interior);

  // Inner box spans lattice indices [a, b]; the interface ring sits one cell
  // inside it and the hole is whatever the ring encloses.
  const int a = spec.inner_offset();
  const int b = 3 * a;
  for (int j = 0; j <= g.n; ++j) {
    for (int i = 0; i <= g.n; ++i) {
      NodeClass c = NodeClass::Interior;
      if (i == 0 || j == 0 || i == g.n || j == g.n) {
        c = NodeClass::Outer;
      } else if (with_hole && i > a && i < b && j > a && j < b) {
        const bool on_ring = (i == a + 1 || i == b - 1 || j == a + 1 || j == b - 1);
        c = on_ring ? NodeClass::Interface : NodeClass::Hole;
      }
      g.cls[g.index(i, j)] = c;
    }
  }
  for (int j = 0; j <= g.n; ++j) {
    for (int i = 0; i <= g.n; ++i) {
      switch (g.node_class(i, j)) {
        case NodeClass::Interior: g.interior_nodes.push_back(g.index(i, j)); break;
        case NodeClass::Outer: g.outer_nodes.push_back(g.index(i, j)); break;
        case NodeClass::Interface: g.interface_nodes.push_back(g.index(i, j)); break;
        case NodeClass::Hole: break;
      }
    }
  }
  return g;
}

}  // namespace detail

/// Builds the decomposed lattice: outer Dirichlet ring, stencil-active
/// region, interface ring one cell inside the inner box, and the inactive
/// hole the finite element mesh covers.
inline FdGrid build_fd_grid(const DomainSpec& spec) {
  spec.validate();
  if (spec.level < 2) {
    throw std::invalid_argument(
        "build_fd_grid: level >= 2 required for a two-layer overlap (got level " +
        std::to_string(spec.level) + ")");
  }
  return detail::classify_lattice(spec, /*with_hole=*/true);
}

/// Lattice over the whole box with no hole: every non-outer node is active.
/// Used as the single-solver reference configuration.
inline FdGrid build_fd_grid_whole(const DomainSpec& spec) {
  spec.validate();
  return detail::classify_lattice(spec, /*with_hole=*/false);
}

/// Structured right-isoceles triangulation of the inner box.
///
/// Every lattice square is split along the same (+1,+1) diagonal. Node
/// coordinates are computed with the identical index-times-spacing product
/// as the lattice, so shared points coincide bit-exactly.
struct FeMesh {
  int level = 0;
  double h = 0.0;
  int cells = 0;  ///< per side

  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> triangles;  ///< counter-clockwise
  std::vector<int> boundary_nodes;            ///< scan order on the inner-box boundary
  std::vector<std::uint8_t> on_boundary;
  double triangle_area = 0.0;  ///< all elements equal: h^2 / 2

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int node_id(int i, int j) const { return j * (cells + 1) + i; }
  double min_x() const { return nodes.front()[0]; }
  double min_y() const { return nodes.front()[1]; }
  double max_x() const { return nodes.back()[0]; }
  double max_y() const { return nodes.back()[1]; }
};

inline FeMesh build_fe_mesh(const DomainSpec& spec) {
  spec.validate();
  FeMesh m;
  m.level = spec.level;
  m.h = spec.spacing();
  m.cells = spec.fe_cells();
  m.triangle_area = 0.5 * m.h * m.h;

  const int a = spec.inner_offset();
  const int np = m.cells + 1;
  m.nodes.reserve(static_cast<std::size_t>(np) * np);
  m.on_boundary.assign(static_cast<std::size_t>(np) * np, 0);
  for (int j = 0; j < np; ++j) {
    for (int i = 0; i < np; ++i) {
      m.nodes.push_back({(a + i) * m.h, (a + j) * m.h});
      if (i == 0 || j == 0 || i == m.cells || j == m.cells) {
        m.on_boundary[m.node_id(i, j)] = 1;
        m.boundary_nodes.push_back(m.node_id(i, j));
      }
    }
  }

  m.triangles.reserve(2u * m.cells * m.cells);
  for (int j = 0; j < m.cells; ++j) {
    for (int i = 0; i < m.cells; ++i) {
      const int v00 = m.node_id(i, j);
      const int v10 = m.node_id(i + 1, j);
      const int v11 = m.node_id(i + 1, j + 1);
      const int v01 = m.node_id(i, j + 1);
      m.triangles.push_back({v00, v10, v11});
      m.triangles.push_back({v00, v11, v01});
    }
  }
  return m;
}

/// Index correspondences between coincident lattice and mesh nodes.
///
/// fe_boundary pairs feed FD values onto the mesh boundary ring;
/// fd_interface pairs feed FE values onto the lattice interface ring.
struct OverlapMap {
  std::vector<std::pair<int, int>> fe_boundary;   ///< (fe node, fd index), mesh boundary order
  std::vector<std::pair<int, int>> fd_interface;  ///< (fd index, fe node), grid interface order
};

inline OverlapMap build_overlap_maps(const FdGrid& grid, const FeMesh& mesh) {
  if (grid.level != mesh.level) {
    throw std::invalid_argument("build_overlap_maps: grid and mesh built from different levels");
  }
  const double tol = 1e-12 * grid.h;
  OverlapMap map;
  map.fe_boundary.reserve(mesh.boundary_nodes.size());
  for (int node : mesh.boundary_nodes) {
    const double px = mesh.nodes[node][0];
    const double py = mesh.nodes[node][1];
    const int i = static_cast<int>(std::lround(px / grid.h));
    const int j = static_cast<int>(std::lround(py / grid.h));
    if (i < 0 || i > grid.n || j < 0 || j > grid.n ||
        std::abs(grid.x(i) - px) > tol || std::abs(grid.y(j) - py) > tol) {
      throw std::runtime_error("build_overlap_maps: mesh boundary node " + std::to_string(node) +
                               " at (" + std::to_string(px) + ", " + std::to_string(py) +
                               ") has no coincident lattice node");
    }
    if (grid.node_class(i, j) != NodeClass::Interior) {
      throw std::runtime_error("build_overlap_maps: lattice node paired with mesh boundary node " +
                               std::to_string(node) + " is not stencil-active");
    }
    map.fe_boundary.emplace_back(node, grid.index(i, j));
  }

  map.fd_interface.reserve(grid.interface_nodes.size());
  const int np = mesh.cells + 1;
  for (int idx : grid.interface_nodes) {
    const double px = grid.x(grid.ix(idx));
    const double py = grid.y(grid.iy(idx));
    const int i = static_cast<int>(std::lround((px - mesh.min_x()) / mesh.h));
    const int j = static_cast<int>(std::lround((py - mesh.min_y()) / mesh.h));
    if (i < 0 || i >= np || j < 0 || j >= np) {
      throw std::runtime_error("build_overlap_maps: interface lattice node " +
                               std::to_string(idx) + " lies outside the mesh");
    }
    const int node = mesh.node_id(i, j);
    if (std::abs(mesh.nodes[node][0] - px) > tol || std::abs(mesh.nodes[node][1] - py) > tol) {
      throw std::runtime_error("build_overlap_maps: interface lattice node " +
                               std::to_string(idx) + " has no coincident mesh node");
    }
    if (mesh.on_boundary[node]) {
      throw std::runtime_error("build_overlap_maps: interface ring touches the mesh boundary");
    }
    map.fd_interface.emplace_back(idx, node);
  }
  return map;
}

/// Plain-text mesh dump: "id x y" per node and "id n0 n1 n2" per triangle.
inline void write_mesh_dump(const FeMesh& mesh, std::ostream& node_out, std::ostream& tri_out) {
  node_out.precision(17);
  for (int i = 0; i < mesh.node_count(); ++i) {
    node_out << i << ' ' << mesh.nodes[i][0] << ' ' << mesh.nodes[i][1] << '\n';
  }
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    tri_out << t << ' ' << mesh.triangles[t][0] << ' ' << mesh.triangles[t][1] << ' '
            << mesh.triangles[t][2] << '\n';
  }
}

}  // namespace maxwave
