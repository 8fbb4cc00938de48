#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "maxwave/fem.hpp"
#include "maxwave/geometry.hpp"

namespace maxwave {

/// Both components of a lattice field, full (n+1)^2 storage each.
/// Hole entries are present but never read by the stencil.
struct LatticeField {
  std::array<std::vector<double>, 2> comp;

  static LatticeField zeros(int count) {
    LatticeField f;
    f.comp[0].assign(static_cast<std::size_t>(count), 0.0);
    f.comp[1].assign(static_cast<std::size_t>(count), 0.0);
    return f;
  }
};

/// Two consecutive time levels of the lattice solution.
struct FdState {
  LatticeField cur;   ///< level `step`
  LatticeField prev;  ///< level `step` - 1
  int step = 0;
  double tau = 0.0;

  double time() const { return step * tau; }
};

/// Five-point Laplacian (E + W + N + S - 4C) / h^2 at a stencil-active node.
/// Evaluation next to a hole node indicates a classification bug and throws.
inline double discrete_laplacian(std::span<const double> field, const FdGrid& grid, int i,
                                 int j) {
  if (grid.node_class(i, j) != NodeClass::Interior) {
    throw std::logic_error("discrete_laplacian: node (" + std::to_string(i) + ", " +
                           std::to_string(j) + ") is not stencil-active");
  }
  const int e = grid.index(i + 1, j), w = grid.index(i - 1, j);
  const int n = grid.index(i, j + 1), s = grid.index(i, j - 1);
  for (int nb : {e, w, n, s}) {
    if (grid.cls[nb] == NodeClass::Hole) {
      throw std::logic_error("discrete_laplacian: stencil at (" + std::to_string(i) + ", " +
                             std::to_string(j) + ") reaches an inactive hole node");
    }
  }
  const int c = grid.index(i, j);
  return (field[e] + field[w] + field[n] + field[s] - 4.0 * field[c]) / (grid.h * grid.h);
}

inline void enforce_outer_zero(FdState& st, const FdGrid& grid) {
  for (int idx : grid.outer_nodes) {
    st.cur.comp[0][idx] = 0.0;
    st.cur.comp[1][idx] = 0.0;
  }
}

namespace detail {

/// Leapfrog update at stencil-active nodes plus the outer zero condition,
/// then level rotation. Interface-ring entries of the new level keep stale
/// values until the caller writes boundary data.
inline void fd_advance(FdState& st, const FdGrid& grid, const LatticeField& source, double tau) {
  for (int c = 0; c < 2; ++c) {
    if (st.cur.comp[c].size() != static_cast<std::size_t>(grid.node_count()) ||
        st.prev.comp[c].size() != st.cur.comp[c].size() ||
        source.comp[c].size() != st.cur.comp[c].size()) {
      throw std::invalid_argument("fd_advance: field size mismatch");
    }
  }
  const double t2 = tau * tau;
  for (int c = 0; c < 2; ++c) {
    std::span<const double> cur(st.cur.comp[c]);
    std::vector<double>& next = st.prev.comp[c];  // overwritten in place, then swapped
    for (int idx : grid.interior_nodes) {
      const double lap = discrete_laplacian(cur, grid, grid.ix(idx), grid.iy(idx));
      next[idx] = t2 * lap + 2.0 * cur[idx] - next[idx] + t2 * source.comp[c][idx];
    }
    for (int idx : grid.outer_nodes) next[idx] = 0.0;
  }
  std::swap(st.cur, st.prev);
  ++st.step;
}

}  // namespace detail

/// One explicit step: E^{k+1} = tau^2 Lap_h E^k + 2E^k - E^{k-1} + tau^2
/// source at active nodes, zero on the outer boundary, `bc` written on the
/// interface ring, levels rotated.
inline void fd_step(FdState& st, const FdGrid& grid, const LatticeField& source,
                    const RingValues& bc, double tau) {
  if (bc.comp0.size() != grid.interface_nodes.size() ||
      bc.comp1.size() != grid.interface_nodes.size()) {
    throw std::invalid_argument("fd_step: boundary value count does not match the interface ring");
  }
  detail::fd_advance(st, grid, source, tau);
  for (std::size_t k = 0; k < grid.interface_nodes.size(); ++k) {
    st.cur.comp[0][grid.interface_nodes[k]] = bc.comp0[k];
    st.cur.comp[1][grid.interface_nodes[k]] = bc.comp1[k];
  }
}

/// Discrete energy monitor for the two consecutive levels held by `st`:
/// sum over non-hole nodes of ((E^k - E^{k-1})/tau)^2 h^2 plus, for every
/// lattice edge with both endpoints readable, |d_h E^k . d_h E^{k-1}| h^2
/// with forward-difference gradients. Bounded under the CFL condition,
/// explodes past it.
inline double fd_energy(const FdState& st, const FdGrid& grid) {
  const double h2 = grid.h * grid.h;
  const double inv_tau = 1.0 / st.tau;
  double energy = 0.0;
  const int np = grid.points();
  for (int c = 0; c < 2; ++c) {
    const auto& cur = st.cur.comp[c];
    const auto& prv = st.prev.comp[c];
    for (int j = 0; j < np; ++j) {
      for (int i = 0; i < np; ++i) {
        const int idx = grid.index(i, j);
        if (grid.cls[idx] == NodeClass::Hole) continue;
        const double dt = (cur[idx] - prv[idx]) * inv_tau;
        energy += dt * dt * h2;
        if (i + 1 < np && grid.cls[grid.index(i + 1, j)] != NodeClass::Hole) {
          const int r = grid.index(i + 1, j);
          energy += std::abs((cur[r] - cur[idx]) * (prv[r] - prv[idx])) / (grid.h * grid.h) * h2;
        }
        if (j + 1 < np && grid.cls[grid.index(i, j + 1)] != NodeClass::Hole) {
          const int u = grid.index(i, j + 1);
          energy += std::abs((cur[u] - cur[idx]) * (prv[u] - prv[idx])) / (grid.h * grid.h) * h2;
        }
      }
    }
  }
  return energy;
}

}  // namespace maxwave
