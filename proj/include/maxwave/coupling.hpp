#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "maxwave/fdm.hpp"
#include "maxwave/fem.hpp"
#include "maxwave/geometry.hpp"
#include "maxwave/material.hpp"

namespace maxwave {

/// How boundary data reaches the FE subdomain each step.
enum class ExchangeMode {
  DirichletCopy,     ///< lattice values copied onto the mesh boundary ring
  WeakBoundaryLoad,  ///< assembled boundary load, ring dofs evolve freely
};

/// Right-hand side of the runs. When quadratic_in_time is set the driver
/// caches the two nodal profiles F(., 0) and F(., 1) and reconstructs
/// F(., t) = F(., 0) + t^2 (F(., 1) - F(., 0)) instead of re-evaluating.
struct SourceTerm {
  std::function<std::array<double, 2>(double, double, double)> eval;
  bool quadratic_in_time = false;
};

struct InitialData {
  std::function<std::array<double, 2>(double, double)> f0;  ///< null means zero
  std::function<std::array<double, 2>(double, double)> f1;
};

/// tau upper bound h / (c sqrt(1 + 3 max|eps - 1|)) of the explicit schemes.
inline double cfl_limit(double h, const EpsModel& eps, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("cfl_limit: constant must be positive");
  return h / (c * std::sqrt(1.0 + 3.0 * eps.max_deviation()));
}

struct RunConfig {
  int level = 3;
  double final_time = 0.25;
  double tau = 0.0;  ///< 0 selects the default rule 0.025 * 2^-level
  EpsModel eps = EpsModel::sine(2);
  ExchangeMode mode = ExchangeMode::DirichletCopy;
  SourceTerm source;
  InitialData initial;
  int snapshot_stride = 0;  ///< 0 records the final step only
  bool allow_unstable = false;
  double cfl_constant = 1.0;

  double effective_tau() const {
    return tau > 0.0 ? tau : 0.025 / static_cast<double>(1 << level);
  }

  int step_count() const {
    const double ratio = final_time / effective_tau();
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
      throw std::invalid_argument("RunConfig: final time is not an integer number of steps");
    }
    return static_cast<int>(rounded);
  }

  void validate() const {
    DomainSpec{level}.validate();
    eps.validate();
    if (!(final_time > 0.0)) throw std::invalid_argument("RunConfig: final time must be positive");
    if (snapshot_stride < 0) throw std::invalid_argument("RunConfig: negative snapshot stride");
    step_count();
  }
};

/// CFL gate verdict for a configuration.
struct CflGate {
  double tau = 0.0;
  double limit = 0.0;
  double ratio = 0.0;
  bool ok = false;    ///< ratio <= 1
  bool warn = false;  ///< 0.5 < ratio <= 1
};

inline CflGate check_cfl(const RunConfig& config) {
  CflGate gate;
  gate.tau = config.effective_tau();
  gate.limit = cfl_limit(DomainSpec{config.level}.spacing(), config.eps, config.cfl_constant);
  gate.ratio = gate.tau / gate.limit;
  gate.ok = gate.ratio <= 1.0;
  gate.warn = gate.ok && gate.ratio > 0.5;
  return gate;
}

/// Copies the FE solution at the interface-paired mesh nodes onto the
/// lattice interface ring. Bitwise copy of the current level.
inline void exchange_fe_to_fd(const FeState& fe, const OverlapMap& map, FdState& fd) {
  if (fe.step != fd.step) {
    throw std::invalid_argument("exchange_fe_to_fd: states are at different steps");
  }
  const int nno = static_cast<int>(fe.cur.size()) / 2;
  for (const auto& [fd_idx, fe_node] : map.fd_interface) {
    fd.cur.comp[0][fd_idx] = fe.cur[fe_node];
    fd.cur.comp[1][fd_idx] = fe.cur[nno + fe_node];
  }
}

/// Mirror image: copies lattice values onto the mesh boundary ring.
inline void exchange_fd_to_fe(const FdState& fd, const OverlapMap& map, FeState& fe) {
  if (fe.step != fd.step) {
    throw std::invalid_argument("exchange_fd_to_fe: states are at different steps");
  }
  const int nno = static_cast<int>(fe.cur.size()) / 2;
  for (const auto& [fe_node, fd_idx] : map.fe_boundary) {
    fe.cur[fe_node] = fd.cur.comp[0][fd_idx];
    fe.cur[nno + fe_node] = fd.cur.comp[1][fd_idx];
  }
}

struct Snapshot {
  int step = 0;
  double time = 0.0;
  std::vector<double> fe;
  LatticeField fd;
};

struct SolutionHistory {
  std::vector<Snapshot> snapshots;
};

/// Aborts a run when a non-finite value appears; also serves as the blow-up
/// detector for CFL-violating time steps.
struct NumericalFailure : std::runtime_error {
  NumericalFailure(int step_, std::string location_)
      : std::runtime_error("non-finite value at step " + std::to_string(step_) + " (" +
                           location_ + ")"),
        step(step_),
        location(std::move(location_)) {}
  int step;
  std::string location;
};

/// Everything a hybrid run needs, built deterministically from the config.
struct HybridSetup {
  DomainSpec spec;
  FdGrid grid;
  FeMesh mesh;
  OverlapMap map;
  GlobalOperators ops;
};

inline HybridSetup build_setup(const RunConfig& config) {
  config.validate();
  HybridSetup s;
  s.spec = DomainSpec{config.level};
  s.grid = build_fd_grid(s.spec);
  s.mesh = build_fe_mesh(s.spec);
  s.map = build_overlap_maps(s.grid, s.mesh);
  s.ops = assemble(s.mesh, config.eps);
  return s;
}

/// View of the completed step handed to observers (both states are at the
/// same level; exchanges have already been applied).
struct StepView {
  int step = 0;
  double time = 0.0;
  const FeState& fe;
  const FdState& fd;
};

using StepObserver = std::function<void(const StepView&)>;

namespace detail {

inline void check_finite(const FeState& fe, const FdState& fd, const FdGrid& grid) {
  for (std::size_t i = 0; i < fe.cur.size(); ++i) {
    if (!std::isfinite(fe.cur[i])) {
      throw NumericalFailure(fe.step, "fe dof " + std::to_string(i));
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (int idx = 0; idx < grid.node_count(); ++idx) {
      if (grid.cls[idx] == NodeClass::Hole) continue;
      if (!std::isfinite(fd.cur.comp[c][idx])) {
        throw NumericalFailure(fd.step, "fd node (" + std::to_string(grid.ix(idx)) + ", " +
                                            std::to_string(grid.iy(idx)) + ") component " +
                                            std::to_string(c));
      }
    }
  }
}

/// Per-step nodal sources for both subdomains, with the quadratic-in-time
/// fast path. FE entries carry the 1/eps weight of the lumped scheme.
class SourceEvaluator {
 public:
  SourceEvaluator(const RunConfig& config, const HybridSetup& setup)
      : config_(config), setup_(setup) {
    const int nno = setup.mesh.node_count();
    fe_scratch_.assign(2u * nno, 0.0);
    fd_scratch_ = LatticeField::zeros(setup.grid.node_count());
    fe_inv_eps_.resize(nno);
    for (int i = 0; i < nno; ++i) {
      fe_inv_eps_[i] = 1.0 / eps_eval(setup.mesh.nodes[i][0], setup.mesh.nodes[i][1], config.eps);
    }
    if (config.source.eval && config.source.quadratic_in_time) {
      fe_base_ = evaluate_fe(0.0);
      fe_slope_ = evaluate_fe(1.0);
      for (std::size_t i = 0; i < fe_slope_.size(); ++i) fe_slope_[i] -= fe_base_[i];
      fd_base_ = evaluate_fd(0.0);
      fd_slope_ = evaluate_fd(1.0);
      for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < fd_slope_.comp[c].size(); ++i) {
          fd_slope_.comp[c][i] -= fd_base_.comp[c][i];
        }
      }
    }
  }

  const std::vector<double>& fe_at(double t) {
    if (!config_.source.eval) return fe_scratch_;  // stays zero
    if (config_.source.quadratic_in_time) {
      const double t2 = t * t;
      for (std::size_t i = 0; i < fe_scratch_.size(); ++i) {
        fe_scratch_[i] = fe_base_[i] + t2 * fe_slope_[i];
      }
      return fe_scratch_;
    }
    fe_scratch_ = evaluate_fe(t);
    return fe_scratch_;
  }

  const LatticeField& fd_at(double t) {
    if (!config_.source.eval) return fd_scratch_;
    if (config_.source.quadratic_in_time) {
      const double t2 = t * t;
      for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < fd_scratch_.comp[c].size(); ++i) {
          fd_scratch_.comp[c][i] = fd_base_.comp[c][i] + t2 * fd_slope_.comp[c][i];
        }
      }
      return fd_scratch_;
    }
    fd_scratch_ = evaluate_fd(t);
    return fd_scratch_;
  }

 private:
  std::vector<double> evaluate_fe(double t) const {
    const int nno = setup_.mesh.node_count();
    std::vector<double> v(2u * nno, 0.0);
    for (int i = 0; i < nno; ++i) {
      const auto f = config_.source.eval(setup_.mesh.nodes[i][0], setup_.mesh.nodes[i][1], t);
      v[i] = f[0] * fe_inv_eps_[i];
      v[nno + i] = f[1] * fe_inv_eps_[i];
    }
    return v;
  }

  LatticeField evaluate_fd(double t) const {
    LatticeField f = LatticeField::zeros(setup_.grid.node_count());
    for (int idx : setup_.grid.interior_nodes) {
      const auto v =
          config_.source.eval(setup_.grid.x(setup_.grid.ix(idx)), setup_.grid.y(setup_.grid.iy(idx)), t);
      f.comp[0][idx] = v[0];
      f.comp[1][idx] = v[1];
    }
    return f;
  }

  const RunConfig& config_;
  const HybridSetup& setup_;
  std::vector<double> fe_inv_eps_;
  std::vector<double> fe_scratch_, fe_base_, fe_slope_;
  LatticeField fd_scratch_, fd_base_, fd_slope_;
};

inline std::array<double, 2> eval_or_zero(
    const std::function<std::array<double, 2>(double, double)>& fn, double x, double y) {
  return fn ? fn(x, y) : std::array<double, 2>{0.0, 0.0};
}

}  // namespace detail

/// Runs the interleaved hybrid loop on a prepared setup. Per step: lattice
/// update, mesh update, FE values copied onto the interface ring, outer zero
/// condition, lattice values copied onto the mesh boundary (Dirichlet mode),
/// then the level swap carried inside the update routines.
///
/// Initial data: E^0 = f0 and E^1 = E^0 + tau f1 + (tau^2/2) a0 on both
/// subdomains, with a0 the discrete initial acceleration (spatial operator
/// plus source at t = 0). Dropping the tau^2 term would leave the discrete
/// initial velocity wrong by O(tau); the leapfrog carries that defect
/// undamped and the whole run degrades to first order in tau.
inline SolutionHistory run(const RunConfig& config, const HybridSetup& setup,
                           const StepObserver& observer = {}) {
  const CflGate gate = check_cfl(config);
  if (!gate.ok && !config.allow_unstable) {
    throw std::invalid_argument("run: time step violates the CFL bound (ratio " +
                                std::to_string(gate.ratio) + "); pass allow_unstable to force");
  }
  const double tau = config.effective_tau();
  const int steps = config.step_count();

  const int nno = setup.mesh.node_count();
  FeState fe;
  fe.tau = tau;
  fe.step = 1;
  fe.prev.assign(2u * nno, 0.0);
  fe.cur.assign(2u * nno, 0.0);
  for (int i = 0; i < nno; ++i) {
    const auto f0 = detail::eval_or_zero(config.initial.f0, setup.mesh.nodes[i][0],
                                         setup.mesh.nodes[i][1]);
    const auto f1 = detail::eval_or_zero(config.initial.f1, setup.mesh.nodes[i][0],
                                         setup.mesh.nodes[i][1]);
    fe.prev[i] = f0[0];
    fe.prev[nno + i] = f0[1];
    fe.cur[i] = f0[0] + tau * f1[0];
    fe.cur[nno + i] = f0[1] + tau * f1[1];
  }

  FdState fd;
  fd.tau = tau;
  fd.step = 1;
  fd.prev = LatticeField::zeros(setup.grid.node_count());
  fd.cur = LatticeField::zeros(setup.grid.node_count());
  for (int idx = 0; idx < setup.grid.node_count(); ++idx) {
    const double px = setup.grid.x(setup.grid.ix(idx));
    const double py = setup.grid.y(setup.grid.iy(idx));
    const auto f0 = detail::eval_or_zero(config.initial.f0, px, py);
    const auto f1 = detail::eval_or_zero(config.initial.f1, px, py);
    for (int c = 0; c < 2; ++c) {
      fd.prev.comp[c][idx] = f0[c];
      fd.cur.comp[c][idx] = f0[c] + tau * f1[c];
    }
  }
  enforce_outer_zero(fd, setup.grid);

  detail::SourceEvaluator sources(config, setup);
  SolutionHistory history;
  const auto record = [&](int k) {
    if ((config.snapshot_stride > 0 && k % config.snapshot_stride == 0) || k == steps) {
      history.snapshots.push_back({k, k * tau, fe.cur, fd.cur});
    }
  };

  if (observer) observer({1, tau, fe, fd});
  record(1);

  for (int k = 1; k < steps; ++k) {
    const double tk = k * tau;

    RingValues g;  // lattice values on the mesh boundary at level k (weak mode only)
    if (config.mode == ExchangeMode::WeakBoundaryLoad) {
      g.comp0.resize(setup.map.fe_boundary.size());
      g.comp1.resize(setup.map.fe_boundary.size());
      for (std::size_t p = 0; p < setup.map.fe_boundary.size(); ++p) {
        const int fd_idx = setup.map.fe_boundary[p].second;
        g.comp0[p] = fd.cur.comp[0][fd_idx];
        g.comp1[p] = fd.cur.comp[1][fd_idx];
      }
    }

    detail::fd_advance(fd, setup.grid, sources.fd_at(tk), tau);

    if (config.mode == ExchangeMode::DirichletCopy) {
      detail::fe_advance(fe, setup.ops, sources.fe_at(tk), nullptr, tau);
    } else {
      const std::vector<double> load = boundary_load(g, setup.mesh, config.eps);
      detail::fe_advance(fe, setup.ops, sources.fe_at(tk), load.data(), tau);
    }

    exchange_fe_to_fd(fe, setup.map, fd);
    enforce_outer_zero(fd, setup.grid);
    if (config.mode == ExchangeMode::DirichletCopy) {
      exchange_fd_to_fe(fd, setup.map, fe);
    }

    detail::check_finite(fe, fd, setup.grid);
    if (observer) observer({k + 1, (k + 1) * tau, fe, fd});
    record(k + 1);
  }
  return history;
}

inline SolutionHistory run(const RunConfig& config, const StepObserver& observer = {}) {
  const HybridSetup setup = build_setup(config);
  return run(config, setup, observer);
}

}  // namespace maxwave
