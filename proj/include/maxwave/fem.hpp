#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "maxwave/geometry.hpp"
#include "maxwave/material.hpp"
#include "maxwave/sparse.hpp"

namespace maxwave {

/// Values prescribed on an exchange ring, one entry per ring node in the
/// ring's canonical (scan) order.
struct RingValues {
  std::vector<double> comp0;
  std::vector<double> comp1;

  static RingValues zeros(std::size_t count) {
    return {std::vector<double>(count, 0.0), std::vector<double>(count, 0.0)};
  }
};

/// Local operators of one triangle for the vector P1 discretization.
///
/// Degrees of freedom are (node, component); rows are test functions,
/// columns trial functions. The blocks below are stored as scalar 3x3
/// matrices, with g2/g3 carrying one 3x3 block per component pair (a, b) =
/// (test, trial):
///   mass[i][j]       = int_K phi_i phi_j                          (per component)
///   g1[i][j]         = (1/eps(x_i)) int_K grad phi_j . grad phi_i (per component)
///   g3[a][b][i][j]   = (1/eps(x_i)) int_K d_b phi_j d_a phi_i
///   g2[a][b][i][j]   = (1/eps(x_i)) int_K (d_b eps phi_j + eps d_b phi_j) d_a phi_i
/// The permittivity sits inside the divergence of the trial function (the
/// weak form pairs div(eps E) with div v), while the outer 1/eps weight is
/// collocated at the test node: combined with the plainly lumped mass this
/// is the nodal equation of the eps-weighted mass system divided by
/// eps(x_i). Evaluating 1/eps inside the quadrature instead would discretize
/// the divergence-form operator -div((1/eps) grad E), which differs from the
/// wave operator -(1/eps) Lap E by a grad(1/eps) . grad E term wherever the
/// coefficient varies; that scheme does not converge to the solutions this
/// solver is verified against. Trial-side integrals with eps use the
/// edge-midpoint rule (degree-2 exact); the mass matrix uses its closed
/// form.
struct ElementBlocks {
  std::array<std::array<double, 3>, 3> mass{};
  std::array<double, 3> lumped{};
  std::array<std::array<double, 3>, 3> g1{};
  std::array<std::array<std::array<std::array<double, 3>, 3>, 2>, 2> g2{};
  std::array<std::array<std::array<std::array<double, 3>, 3>, 2>, 2> g3{};
  std::array<std::array<double, 2>, 3> grad{};  ///< basis gradients
  double area = 0.0;
};

inline ElementBlocks element_matrices(const std::array<double, 2>& p0,
                                      const std::array<double, 2>& p1,
                                      const std::array<double, 2>& p2, const EpsModel& eps) {
  ElementBlocks e;
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  e.area = 0.5 * det;
  if (!(e.area > 1e-300)) {
    throw std::invalid_argument("element_matrices: degenerate or negatively oriented triangle");
  }

  const std::array<std::array<double, 2>, 3> p{p0, p1, p2};
  for (int i = 0; i < 3; ++i) {
    const auto& pn = p[(i + 1) % 3];
    const auto& pp = p[(i + 2) % 3];
    e.grad[i] = {(pn[1] - pp[1]) / det, (pp[0] - pn[0]) / det};
  }

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) e.mass[i][j] = (i == j ? 2.0 : 1.0) * e.area / 12.0;
    e.lumped[i] = e.area / 3.0;
  }

  // Edge midpoints; phi values there follow the (1/2, 1/2, 0) pattern.
  const std::array<std::array<double, 2>, 3> mid{{
      {0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1])},
      {0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1])},
      {0.5 * (p2[0] + p0[0]), 0.5 * (p2[1] + p0[1])},
  }};
  static constexpr double kPhiAtMid[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

  double eps_int = 0.0;                      // int_K eps
  std::array<std::array<double, 3>, 2> w{};  // w[b][j] = int_K d_b eps phi_j
  const double qw = e.area / 3.0;
  for (int q = 0; q < 3; ++q) {
    eps_int += qw * eps_eval(mid[q][0], mid[q][1], eps);
    const auto ge = grad_eps(mid[q][0], mid[q][1], eps);
    for (int j = 0; j < 3; ++j) {
      const double phi = kPhiAtMid[q][j];
      w[0][j] += qw * ge[0] * phi;
      w[1][j] += qw * ge[1] * phi;
    }
  }

  std::array<double, 3> inv_eps_node;  // test-node collocation of the 1/eps weight
  for (int i = 0; i < 3; ++i) inv_eps_node[i] = 1.0 / eps_eval(p[i][0], p[i][1], eps);

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      e.g1[i][j] = inv_eps_node[i] *
                   (e.grad[i][0] * e.grad[j][0] + e.grad[i][1] * e.grad[j][1]) * e.area;
      for (int a = 0; a < 2; ++a) {
        const double gia = inv_eps_node[i] * e.grad[i][a];
        for (int b = 0; b < 2; ++b) {
          e.g3[a][b][i][j] = gia * (e.area * e.grad[j][b]);
          e.g2[a][b][i][j] = gia * (w[b][j] + eps_int * e.grad[j][b]);
        }
      }
    }
  }
  return e;
}

/// Oriented boundary edge of the mesh with its outward normal.
struct BoundaryEdge {
  int tri = 0;
  int local_u = 0, local_v = 0;  ///< local vertex indices of the edge within the triangle
  int u = 0, v = 0;              ///< global node ids
  std::array<double, 2> normal{};
  double length = 0.0;
};

inline std::vector<BoundaryEdge> boundary_edges(const FeMesh& mesh) {
  std::vector<BoundaryEdge> edges;
  const double x0 = mesh.min_x(), x1 = mesh.max_x();
  const double y0 = mesh.min_y(), y1 = mesh.max_y();
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int u = tri[k];
      const int v = tri[(k + 1) % 3];
      if (!mesh.on_boundary[u] || !mesh.on_boundary[v]) continue;
      const auto& pu = mesh.nodes[u];
      const auto& pv = mesh.nodes[v];
      BoundaryEdge e;
      // Node coordinates are exact dyadics, so side membership is an exact test.
      if (pu[0] == pv[0] && pu[0] == x0) e.normal = {-1.0, 0.0};
      else if (pu[0] == pv[0] && pu[0] == x1) e.normal = {1.0, 0.0};
      else if (pu[1] == pv[1] && pu[1] == y0) e.normal = {0.0, -1.0};
      else if (pu[1] == pv[1] && pu[1] == y1) e.normal = {0.0, 1.0};
      else continue;  // diagonal between two boundary nodes, not a boundary edge
      e.tri = t;
      e.local_u = k;
      e.local_v = (k + 1) % 3;
      e.u = u;
      e.v = v;
      e.length = std::hypot(pv[0] - pu[0], pv[1] - pu[1]);
      edges.push_back(e);
    }
  }
  return edges;
}

/// Assembled operators of the lumped explicit scheme. The logical dimension
/// is 2 * nno with component-major dof layout; component-diagonal blocks
/// (mass, g1) are stored once as scalar matrices.
struct GlobalOperators {
  int nno = 0;
  CsrMatrix mass;
  std::vector<double> lumped;  ///< diagonal of the lumped mass, per scalar component
  CsrMatrix g1;
  std::array<std::array<CsrMatrix, 2>, 2> g2;
  std::array<std::array<CsrMatrix, 2>, 2> g3;
  CsrMatrix boundary_mass;  ///< <(1/eps) dn phi_i, phi_j> rows on the boundary ring
  std::vector<int> boundary_nodes;

  int dim() const { return 2 * nno; }
  int dof(int node, int comp) const { return comp * nno + node; }

  /// out = (G1 + G2 - G3) in, both spans of length 2 * nno.
  void apply_stiffness(std::span<const double> in, std::span<double> out) const {
    if (in.size() != static_cast<std::size_t>(dim()) || out.size() != in.size()) {
      throw std::invalid_argument("apply_stiffness: operand size mismatch");
    }
    for (int a = 0; a < 2; ++a) {
      auto out_a = out.subspan(static_cast<std::size_t>(a) * nno, nno);
      auto in_a = in.subspan(static_cast<std::size_t>(a) * nno, nno);
      g1.multiply(in_a, out_a);
      for (int b = 0; b < 2; ++b) {
        auto in_b = in.subspan(static_cast<std::size_t>(b) * nno, nno);
        g2[a][b].multiply_add(1.0, in_b, out_a);
        g3[a][b].multiply_add(-1.0, in_b, out_a);
      }
    }
  }
};

inline GlobalOperators assemble(const FeMesh& mesh, const EpsModel& eps) {
  const int nno = mesh.node_count();
  GlobalOperators ops;
  ops.nno = nno;
  ops.boundary_nodes = mesh.boundary_nodes;
  ops.lumped.assign(static_cast<std::size_t>(nno), 0.0);

  std::vector<Triplet> mass_t, g1_t;
  std::array<std::array<std::vector<Triplet>, 2>, 2> g2_t, g3_t;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const ElementBlocks e =
        element_matrices(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]], eps);
    for (int i = 0; i < 3; ++i) {
      ops.lumped[tri[i]] += e.lumped[i];
      for (int j = 0; j < 3; ++j) {
        mass_t.push_back({tri[i], tri[j], e.mass[i][j]});
        g1_t.push_back({tri[i], tri[j], e.g1[i][j]});
        for (int a = 0; a < 2; ++a) {
          for (int b = 0; b < 2; ++b) {
            g2_t[a][b].push_back({tri[i], tri[j], e.g2[a][b][i][j]});
            g3_t[a][b].push_back({tri[i], tri[j], e.g3[a][b][i][j]});
          }
        }
      }
    }
  }
  ops.mass = CsrMatrix::from_triplets(nno, nno, std::move(mass_t));
  ops.g1 = CsrMatrix::from_triplets(nno, nno, std::move(g1_t));
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      ops.g2[a][b] = CsrMatrix::from_triplets(nno, nno, std::move(g2_t[a][b]));
      ops.g3[a][b] = CsrMatrix::from_triplets(nno, nno, std::move(g3_t[a][b]));
    }
  }

  // Boundary mass rows, 2-point Gauss per edge.
  static constexpr double kGauss = 0.28867513459481287;  // 1 / (2 sqrt(3))
  const std::array<double, 2> gs{0.5 - kGauss, 0.5 + kGauss};
  std::vector<Triplet> bm_t;
  for (const BoundaryEdge& edge : boundary_edges(mesh)) {
    const auto& tri = mesh.triangles[edge.tri];
    const ElementBlocks e =
        element_matrices(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]], eps);
    const auto& pu = mesh.nodes[edge.u];
    const auto& pv = mesh.nodes[edge.v];
    for (const double s : gs) {
      const double qx = pu[0] + s * (pv[0] - pu[0]);
      const double qy = pu[1] + s * (pv[1] - pu[1]);
      const double wq = 0.5 * edge.length / eps_eval(qx, qy, eps);
      for (int i = 0; i < 3; ++i) {
        const double dn = e.grad[i][0] * edge.normal[0] + e.grad[i][1] * edge.normal[1];
        bm_t.push_back({tri[i], edge.u, dn * wq * (1.0 - s)});
        bm_t.push_back({tri[i], edge.v, dn * wq * s});
      }
    }
  }
  ops.boundary_mass = CsrMatrix::from_triplets(nno, nno, std::move(bm_t));
  return ops;
}

/// Two consecutive time levels of the FE coefficient vector,
/// component-major: entry (comp * nno + node).
struct FeState {
  std::vector<double> cur;   ///< level `step`
  std::vector<double> prev;  ///< level `step` - 1
  int step = 0;
  double tau = 0.0;

  double time() const { return step * tau; }
};

namespace detail {

/// Leapfrog update of every dof; ring values are overwritten afterwards by
/// the caller (Dirichlet mode) or left to evolve (weak boundary-load mode).
inline void fe_advance(FeState& st, const GlobalOperators& ops, std::span<const double> source,
                       const double* boundary_load, double tau) {
  if (st.cur.size() != static_cast<std::size_t>(ops.dim()) || st.prev.size() != st.cur.size()) {
    throw std::invalid_argument("fe_advance: state size mismatch");
  }
  if (source.size() != st.cur.size()) {
    throw std::invalid_argument("fe_advance: source size mismatch");
  }
  std::vector<double> stiff(st.cur.size());
  ops.apply_stiffness(st.cur, stiff);
  const double t2 = tau * tau;
  for (int a = 0; a < 2; ++a) {
    for (int node = 0; node < ops.nno; ++node) {
      const int d = ops.dof(node, a);
      double next = 2.0 * st.cur[d] - st.prev[d] - t2 * stiff[d] / ops.lumped[node] +
                    t2 * source[d];
      if (boundary_load != nullptr) next += t2 * boundary_load[d] / ops.lumped[node];
      st.prev[d] = next;
    }
  }
  std::swap(st.cur, st.prev);
  ++st.step;
}

}  // namespace detail

/// One explicit step: E^{k+1} = 2E^k - E^{k-1} - tau^2 (M^L)^{-1}(G1+G2-G3)E^k
/// + tau^2 source, then the boundary ring is overwritten with `bc` and the
/// levels are rotated. `source` already carries the 1/eps nodal weight.
inline void fe_step(FeState& st, const GlobalOperators& ops, std::span<const double> source,
                    const RingValues& bc, double tau) {
  if (bc.comp0.size() != ops.boundary_nodes.size() ||
      bc.comp1.size() != ops.boundary_nodes.size()) {
    throw std::invalid_argument("fe_step: boundary value count does not match the boundary ring");
  }
  detail::fe_advance(st, ops, source, nullptr, tau);
  for (std::size_t k = 0; k < ops.boundary_nodes.size(); ++k) {
    st.cur[ops.dof(ops.boundary_nodes[k], 0)] = bc.comp0[k];
    st.cur[ops.dof(ops.boundary_nodes[k], 1)] = bc.comp1[k];
  }
}

/// Weak variant: boundary dofs evolve by the same leapfrog formula with the
/// assembled boundary load added; no Dirichlet overwrite.
inline void fe_step_weak(FeState& st, const GlobalOperators& ops, std::span<const double> source,
                         std::span<const double> load, double tau) {
  if (load.size() != static_cast<std::size_t>(ops.dim())) {
    throw std::invalid_argument("fe_step_weak: load size mismatch");
  }
  detail::fe_advance(st, ops, source, load.data(), tau);
}

/// Boundary load S_j = sum over boundary edges of int (g_h / eps) phi_j,
/// with g_h the nodal interpolant of `g` on the ring; 2-point Gauss per edge.
inline std::vector<double> boundary_load(const RingValues& g, const FeMesh& mesh,
                                         const EpsModel& eps) {
  if (g.comp0.size() != mesh.boundary_nodes.size() ||
      g.comp1.size() != mesh.boundary_nodes.size()) {
    throw std::invalid_argument("boundary_load: value count does not match the boundary ring");
  }
  const int nno = mesh.node_count();
  std::vector<double> g_nodal0(nno, 0.0), g_nodal1(nno, 0.0);
  for (std::size_t k = 0; k < mesh.boundary_nodes.size(); ++k) {
    g_nodal0[mesh.boundary_nodes[k]] = g.comp0[k];
    g_nodal1[mesh.boundary_nodes[k]] = g.comp1[k];
  }

  std::vector<double> load(2u * nno, 0.0);
  static constexpr double kGauss = 0.28867513459481287;
  const std::array<double, 2> gs{0.5 - kGauss, 0.5 + kGauss};
  for (const BoundaryEdge& edge : boundary_edges(mesh)) {
    const auto& pu = mesh.nodes[edge.u];
    const auto& pv = mesh.nodes[edge.v];
    for (const double s : gs) {
      const double qx = pu[0] + s * (pv[0] - pu[0]);
      const double qy = pu[1] + s * (pv[1] - pu[1]);
      const double wq = 0.5 * edge.length / eps_eval(qx, qy, eps);
      const double gq0 = (1.0 - s) * g_nodal0[edge.u] + s * g_nodal0[edge.v];
      const double gq1 = (1.0 - s) * g_nodal1[edge.u] + s * g_nodal1[edge.v];
      load[edge.u] += wq * gq0 * (1.0 - s);
      load[edge.v] += wq * gq0 * s;
      load[nno + edge.u] += wq * gq1 * (1.0 - s);
      load[nno + edge.v] += wq * gq1 * s;
    }
  }
  return load;
}

/// Nodal interpolant of a time-dependent vector field, component-major.
inline std::vector<double> interpolate(
    const std::function<std::array<double, 2>(double, double, double)>& fn, const FeMesh& mesh,
    double t) {
  const int nno = mesh.node_count();
  std::vector<double> v(2u * nno);
  for (int i = 0; i < nno; ++i) {
    const auto val = fn(mesh.nodes[i][0], mesh.nodes[i][1], t);
    v[i] = val[0];
    v[nno + i] = val[1];
  }
  return v;
}

}  // namespace maxwave
