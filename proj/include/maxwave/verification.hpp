#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "maxwave/coupling.hpp"
#include "maxwave/fem.hpp"
#include "maxwave/geometry.hpp"
#include "maxwave/material.hpp"

namespace maxwave {

namespace detail {

/// Value and derivatives up to second order of a scalar function of (x, y).
struct Jet2 {
  double v = 0.0, dx = 0.0, dy = 0.0, dxx = 0.0, dxy = 0.0, dyy = 0.0;
};

inline Jet2 jet_mul(const Jet2& f, const Jet2& g) {
  Jet2 r;
  r.v = f.v * g.v;
  r.dx = f.dx * g.v + f.v * g.dx;
  r.dy = f.dy * g.v + f.v * g.dy;
  r.dxx = f.dxx * g.v + 2.0 * f.dx * g.dx + f.v * g.dxx;
  r.dyy = f.dyy * g.v + 2.0 * f.dy * g.dy + f.v * g.dyy;
  r.dxy = f.dxy * g.v + f.dx * g.dy + f.dy * g.dx + f.v * g.dxy;
  return r;
}

inline Jet2 jet_reciprocal(const Jet2& f) {
  Jet2 r;
  const double iv = 1.0 / f.v;
  const double iv2 = iv * iv;
  const double iv3 = iv2 * iv;
  r.v = iv;
  r.dx = -f.dx * iv2;
  r.dy = -f.dy * iv2;
  r.dxx = -f.dxx * iv2 + 2.0 * f.dx * f.dx * iv3;
  r.dyy = -f.dyy * iv2 + 2.0 * f.dy * f.dy * iv3;
  r.dxy = -f.dxy * iv2 + 2.0 * f.dx * f.dy * iv3;
  return r;
}

/// Jet of the permittivity; the sine branch applies strictly inside the
/// inner box (value and gradient are continuous across its boundary, the
/// second derivatives are not for exponent 2). `inner_limit` selects the
/// one-sided limit taken on the box edge itself.
inline Jet2 eps_jet(double x, double y, const EpsModel& model, bool inner_limit = false) {
  Jet2 e;
  e.v = 1.0;
  const bool inside = inner_limit
                          ? (x >= DomainSpec::inner_min && x <= DomainSpec::inner_max &&
                             y >= DomainSpec::inner_min && y <= DomainSpec::inner_max)
                          : (x > DomainSpec::inner_min && x < DomainSpec::inner_max &&
                             y > DomainSpec::inner_min && y < DomainSpec::inner_max);
  if (model.kind == EpsModel::Kind::ConstantOne || !inside) return e;

  const double pi = std::numbers::pi;
  const double m = model.exponent;
  const auto bump = [&](double u) {
    const double s = std::sin(pi * (2.0 * u - 0.5));
    const double c = std::cos(pi * (2.0 * u - 0.5));
    const double twopi = 2.0 * pi;
    std::array<double, 3> out;
    out[0] = std::pow(s, m);
    out[1] = twopi * m * std::pow(s, m - 1) * c;
    out[2] = twopi * twopi * m * ((m - 1.0) * std::pow(s, m - 2) * c * c - std::pow(s, m));
    return out;
  };
  const auto sx = bump(x);
  const auto sy = bump(y);
  e.v = 1.0 + sx[0] * sy[0];
  e.dx = sx[1] * sy[0];
  e.dy = sx[0] * sy[1];
  e.dxx = sx[2] * sy[0];
  e.dyy = sx[0] * sy[2];
  e.dxy = sx[1] * sy[1];
  return e;
}

/// Jets of the divergence-compensated stream profiles
///   a(x, y) =  pi sin^2(pi x) sin(2 pi y)
///   b(x, y) = -pi sin^2(pi y) sin(2 pi x)
/// for which d_x a + d_y b = 0 identically.
inline std::pair<Jet2, Jet2> stream_jets(double x, double y) {
  const double pi = std::numbers::pi;
  const auto sq = [&](double u) {  // sin^2(pi u) with derivatives
    std::array<double, 3> out;
    out[0] = std::sin(pi * u) * std::sin(pi * u);
    out[1] = pi * std::sin(2.0 * pi * u);
    out[2] = 2.0 * pi * pi * std::cos(2.0 * pi * u);
    return out;
  };
  const auto dbl = [&](double u) {  // sin(2 pi u) with derivatives
    std::array<double, 3> out;
    out[0] = std::sin(2.0 * pi * u);
    out[1] = 2.0 * pi * std::cos(2.0 * pi * u);
    out[2] = -4.0 * pi * pi * std::sin(2.0 * pi * u);
    return out;
  };
  const auto px = sq(x), py = sq(y);
  const auto qx = dbl(x), qy = dbl(y);
  Jet2 a, b;
  a.v = pi * px[0] * qy[0];
  a.dx = pi * px[1] * qy[0];
  a.dy = pi * px[0] * qy[1];
  a.dxx = pi * px[2] * qy[0];
  a.dxy = pi * px[1] * qy[1];
  a.dyy = pi * px[0] * qy[2];
  b.v = -pi * py[0] * qx[0];
  b.dx = -pi * py[0] * qx[1];
  b.dy = -pi * py[1] * qx[0];
  b.dxx = -pi * py[0] * qx[2];
  b.dxy = -pi * py[1] * qx[1];
  b.dyy = -pi * py[2] * qx[0];
  return {a, b};
}

}  // namespace detail

/// Spatial profile of the manufactured field at one point: the solution is
/// E(x, y, t) = (u1, u2) t^2 / 2 with u = (a / eps, b / eps).
struct FieldJet {
  detail::Jet2 u1, u2;
  double eps = 1.0;
};

/// Closed-form solution/source pair used by the convergence studies.
///
/// E is built so that eps * E is divergence free for every permittivity of
/// the family, vanishes on the outer boundary for all times, and has zero
/// initial data together with its time derivative. The matching source is
/// F = eps d_tt E + grad(div E) - Lap E, obtained analytically from the
/// second-order jets of the profiles.
struct ManufacturedCase {
  EpsModel eps;

  FieldJet profile(double x, double y, bool inner_limit = false) const {
    auto [a, b] = detail::stream_jets(x, y);
    const detail::Jet2 e = detail::eps_jet(x, y, eps, inner_limit);
    const detail::Jet2 g = detail::jet_reciprocal(e);
    FieldJet f;
    f.u1 = detail::jet_mul(a, g);
    f.u2 = detail::jet_mul(b, g);
    f.eps = e.v;
    return f;
  }

  /// True when (x, y) sits on the inner-box edge, where the source of the
  /// low-exponent models jumps (the coefficient is only C^1 there).
  static bool on_inner_edge(double x, double y) {
    const bool in_x = x >= DomainSpec::inner_min && x <= DomainSpec::inner_max;
    const bool in_y = y >= DomainSpec::inner_min && y <= DomainSpec::inner_max;
    const bool edge_x = x == DomainSpec::inner_min || x == DomainSpec::inner_max;
    const bool edge_y = y == DomainSpec::inner_min || y == DomainSpec::inner_max;
    return (edge_x && in_y) || (edge_y && in_x);
  }

  std::array<double, 2> field(double x, double y, double t) const {
    const FieldJet f = profile(x, y);
    const double s = 0.5 * t * t;
    return {s * f.u1.v, s * f.u2.v};
  }

  /// Spatial gradient [component][derivative direction].
  std::array<std::array<double, 2>, 2> field_gradient(double x, double y, double t) const {
    const FieldJet f = profile(x, y);
    const double s = 0.5 * t * t;
    return {{{s * f.u1.dx, s * f.u1.dy}, {s * f.u2.dx, s * f.u2.dy}}};
  }

  std::array<double, 2> source(double x, double y, double t) const {
    const double s = 0.5 * t * t;
    const FieldJet f = profile(x, y);
    double f1 = f.eps * f.u1.v + s * (f.u2.dxy - f.u1.dyy);
    double f2 = f.eps * f.u2.v + s * (f.u1.dxy - f.u2.dxx);
    if (on_inner_edge(x, y)) {
      // Nodes on the edge see both one-sided Laplacians through a centred
      // stencil; consistency there needs the mean of the two source limits.
      const FieldJet fi = profile(x, y, /*inner_limit=*/true);
      f1 = 0.5 * (f1 + fi.eps * fi.u1.v + s * (fi.u2.dxy - fi.u1.dyy));
      f2 = 0.5 * (f2 + fi.eps * fi.u2.v + s * (fi.u1.dxy - fi.u2.dxx));
    }
    return {f1, f2};
  }

  SourceTerm source_term() const {
    return {[c = *this](double x, double y, double t) { return c.source(x, y, t); },
            /*quadratic_in_time=*/true};
  }
};

inline ManufacturedCase manufactured_case(const EpsModel& eps) {
  eps.validate();
  return {eps};
}
inline ManufacturedCase manufactured_case(int m) { return {EpsModel::sine(m)}; }

inline std::array<double, 2> exact_field(double x, double y, double t, int m) {
  return manufactured_case(m).field(x, y, t);
}

inline std::array<double, 2> exact_source(double x, double y, double t, int m) {
  return manufactured_case(m).source(x, y, t);
}

/// Central-difference check of div(eps E) at random interior points,
/// t = 0.25 by default. Returns the largest magnitude observed.
inline double divergence_check(int m, int samples, double t = 0.25, double step = 1e-5,
                               unsigned seed = 12345u) {
  const ManufacturedCase mc = manufactured_case(m);
  const auto eps_e = [&](double x, double y) {
    const double e = eps_eval(x, y, mc.eps);
    const auto f = mc.field(x, y, t);
    return std::array<double, 2>{e * f[0], e * f[1]};
  };
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(2.0 * step, 1.0 - 2.0 * step);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double x = dist(rng);
    const double y = dist(rng);
    const double div = (eps_e(x + step, y)[0] - eps_e(x - step, y)[0]) / (2.0 * step) +
                       (eps_e(x, y + step)[1] - eps_e(x, y - step)[1]) / (2.0 * step);
    worst = std::max(worst, std::abs(div));
  }
  return worst;
}

/// Streaming evaluation of the relative errors
///   e1 = max_k ||E^k - E_h^k|| / max_k ||E^k||          (L2 over the mesh)
///   e2 = the same with the gradient seminorm
/// by the degree-2 edge-midpoint rule per triangle. The exact profile at the
/// quadrature points is cached once; per step only the t^2/2 scaling and the
/// P1 representation of the numerical solution are evaluated.
class ErrorAccumulator {
 public:
  ErrorAccumulator(const FeMesh& mesh, const ManufacturedCase& mc) : mesh_(&mesh) {
    const int nt = mesh.triangle_count();
    cache_.resize(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
      const auto& tri = mesh.triangles[t];
      const auto& p0 = mesh.nodes[tri[0]];
      const auto& p1 = mesh.nodes[tri[1]];
      const auto& p2 = mesh.nodes[tri[2]];
      TriCache& c = cache_[t];
      const double det =
          (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
      c.area = 0.5 * det;
      const std::array<std::array<double, 2>, 3> p{p0, p1, p2};
      for (int i = 0; i < 3; ++i) {
        const auto& pn = p[(i + 1) % 3];
        const auto& pp = p[(i + 2) % 3];
        c.grad[i] = {(pn[1] - pp[1]) / det, (pp[0] - pn[0]) / det};
      }
      for (int q = 0; q < 3; ++q) {
        const auto& pa = p[q];
        const auto& pb = p[(q + 1) % 3];
        const double qx = 0.5 * (pa[0] + pb[0]);
        const double qy = 0.5 * (pa[1] + pb[1]);
        const FieldJet f = mc.profile(qx, qy);
        c.q[q] = {f.u1.v, f.u2.v, f.u1.dx, f.u1.dy, f.u2.dx, f.u2.dy};
      }
    }
  }

  void accumulate(std::span<const double> fe_coeffs, double time) {
    const int nno = mesh_->node_count();
    const double s = 0.5 * time * time;
    double num_l2 = 0.0, den_l2 = 0.0, num_h1 = 0.0, den_h1 = 0.0;
    for (std::size_t t = 0; t < cache_.size(); ++t) {
      const TriCache& c = cache_[t];
      const auto& tri = mesh_->triangles[t];
      const std::array<double, 3> e0{fe_coeffs[tri[0]], fe_coeffs[tri[1]], fe_coeffs[tri[2]]};
      const std::array<double, 3> e1{fe_coeffs[nno + tri[0]], fe_coeffs[nno + tri[1]],
                                     fe_coeffs[nno + tri[2]]};
      double gh[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (int i = 0; i < 3; ++i) {
        gh[0][0] += e0[i] * c.grad[i][0];
        gh[0][1] += e0[i] * c.grad[i][1];
        gh[1][0] += e1[i] * c.grad[i][0];
        gh[1][1] += e1[i] * c.grad[i][1];
      }
      const double w = c.area / 3.0;
      for (int q = 0; q < 3; ++q) {
        const double eh0 = 0.5 * (e0[q] + e0[(q + 1) % 3]);
        const double eh1 = 0.5 * (e1[q] + e1[(q + 1) % 3]);
        const double ex0 = s * c.q[q].u1;
        const double ex1 = s * c.q[q].u2;
        num_l2 += w * ((ex0 - eh0) * (ex0 - eh0) + (ex1 - eh1) * (ex1 - eh1));
        den_l2 += w * (ex0 * ex0 + ex1 * ex1);
        const double d00 = s * c.q[q].g11 - gh[0][0];
        const double d01 = s * c.q[q].g12 - gh[0][1];
        const double d10 = s * c.q[q].g21 - gh[1][0];
        const double d11 = s * c.q[q].g22 - gh[1][1];
        num_h1 += w * (d00 * d00 + d01 * d01 + d10 * d10 + d11 * d11);
        den_h1 += w * (s * c.q[q].g11 * s * c.q[q].g11 + s * c.q[q].g12 * s * c.q[q].g12 +
                       s * c.q[q].g21 * s * c.q[q].g21 + s * c.q[q].g22 * s * c.q[q].g22);
      }
    }
    max_num_l2_ = std::max(max_num_l2_, num_l2);
    max_den_l2_ = std::max(max_den_l2_, den_l2);
    max_num_h1_ = std::max(max_num_h1_, num_h1);
    max_den_h1_ = std::max(max_den_h1_, den_h1);
    ++steps_;
  }

  void accumulate(const FeState& state) { accumulate(state.cur, state.time()); }

  int steps() const { return steps_; }

  double rel_l2() const {
    require_data();
    return std::sqrt(max_num_l2_ / max_den_l2_);
  }
  double rel_h1() const {
    require_data();
    return std::sqrt(max_num_h1_ / max_den_h1_);
  }

 private:
  void require_data() const {
    if (steps_ == 0 || max_den_l2_ <= 0.0) {
      throw std::logic_error("ErrorAccumulator: no steps accumulated");
    }
  }

  struct QpCache {
    double u1, u2, g11, g12, g21, g22;
  };
  struct TriCache {
    std::array<std::array<double, 2>, 3> grad;
    std::array<QpCache, 3> q;
    double area;
  };

  const FeMesh* mesh_;
  std::vector<TriCache> cache_;
  double max_num_l2_ = 0.0, max_den_l2_ = 0.0;
  double max_num_h1_ = 0.0, max_den_h1_ = 0.0;
  int steps_ = 0;
};

/// Relative errors from a stride-1 history (steps 1..N).
inline std::pair<double, double> relative_errors(const SolutionHistory& history,
                                                 const ManufacturedCase& mc, const FeMesh& mesh) {
  if (history.snapshots.empty()) {
    throw std::invalid_argument("relative_errors: empty history");
  }
  for (std::size_t i = 0; i < history.snapshots.size(); ++i) {
    if (history.snapshots[i].step != static_cast<int>(i) + 1) {
      throw std::invalid_argument("relative_errors: history is not a stride-1 record of steps 1..N");
    }
  }
  ErrorAccumulator acc(mesh, mc);
  for (const Snapshot& s : history.snapshots) acc.accumulate(s.fe, s.time);
  return {acc.rel_l2(), acc.rel_h1()};
}

/// Diagnostic max-norm of the lattice error against the exact field over the
/// readable (non-hole) nodes.
inline double fd_max_error(const FdState& st, const FdGrid& grid, const ManufacturedCase& mc) {
  double worst = 0.0;
  for (int idx = 0; idx < grid.node_count(); ++idx) {
    if (grid.cls[idx] == NodeClass::Hole) continue;
    const auto exact = mc.field(grid.x(grid.ix(idx)), grid.y(grid.iy(idx)), st.time());
    worst = std::max(worst, std::abs(exact[0] - st.cur.comp[0][idx]));
    worst = std::max(worst, std::abs(exact[1] - st.cur.comp[1][idx]));
  }
  return worst;
}

/// Observed order between a coarse-mesh error and the next refinement:
/// r = |log(e_h / e_2h)| / |log 0.5|. Absent when either error vanishes.
inline std::optional<double> convergence_rate(double e_coarse, double e_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0)) return std::nullopt;
  return std::abs(std::log(e_fine / e_coarse)) / std::abs(std::log(0.5));
}

/// One line of a convergence table.
struct ConvergenceRow {
  int level = 0;
  int elements = 0;
  int nodes = 0;
  double e1 = 0.0;
  std::optional<double> ratio1;
  std::optional<double> rate1;
  double e2 = 0.0;
  std::optional<double> ratio2;
  std::optional<double> rate2;
};

/// Combined weighted energy norm (squared) of the FE state pair:
///   ||dt u||^2_eps + ||grad u||^2 + ||u||^2_{|grad eps|}
///   + ||div u||^2_{|grad eps| + eps - 1}
/// with dt u = (E^k - E^{k-1}) / tau, all integrals by the degree-2
/// edge-midpoint rule.
inline double energy_norm(const FeState& state, const FeMesh& mesh, const EpsModel& eps) {
  const int nno = mesh.node_count();
  if (state.cur.size() != static_cast<std::size_t>(2 * nno)) {
    throw std::invalid_argument("energy_norm: state does not match the mesh");
  }
  const double inv_tau = 1.0 / state.tau;
  double total = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& p0 = mesh.nodes[tri[0]];
    const auto& p1 = mesh.nodes[tri[1]];
    const auto& p2 = mesh.nodes[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double area = 0.5 * det;
    const std::array<std::array<double, 2>, 3> p{p0, p1, p2};
    std::array<std::array<double, 2>, 3> grad;
    for (int i = 0; i < 3; ++i) {
      const auto& pn = p[(i + 1) % 3];
      const auto& pp = p[(i + 2) % 3];
      grad[i] = {(pn[1] - pp[1]) / det, (pp[0] - pn[0]) / det};
    }
    std::array<double, 3> u0, u1, ut0, ut1;
    for (int i = 0; i < 3; ++i) {
      u0[i] = state.cur[tri[i]];
      u1[i] = state.cur[nno + tri[i]];
      ut0[i] = (state.cur[tri[i]] - state.prev[tri[i]]) * inv_tau;
      ut1[i] = (state.cur[nno + tri[i]] - state.prev[nno + tri[i]]) * inv_tau;
    }
    double g[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int i = 0; i < 3; ++i) {
      g[0][0] += u0[i] * grad[i][0];
      g[0][1] += u0[i] * grad[i][1];
      g[1][0] += u1[i] * grad[i][0];
      g[1][1] += u1[i] * grad[i][1];
    }
    const double grad_sq = g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] +
                           g[1][1] * g[1][1];
    const double div = g[0][0] + g[1][1];
    const double w = area / 3.0;
    for (int q = 0; q < 3; ++q) {
      const auto& pa = p[q];
      const auto& pb = p[(q + 1) % 3];
      const double qx = 0.5 * (pa[0] + pb[0]);
      const double qy = 0.5 * (pa[1] + pb[1]);
      const double ev = eps_eval(qx, qy, eps);
      const auto ge = grad_eps(qx, qy, eps);
      const double gnorm = std::hypot(ge[0], ge[1]);
      const double uq0 = 0.5 * (u0[q] + u0[(q + 1) % 3]);
      const double uq1 = 0.5 * (u1[q] + u1[(q + 1) % 3]);
      const double utq0 = 0.5 * (ut0[q] + ut0[(q + 1) % 3]);
      const double utq1 = 0.5 * (ut1[q] + ut1[(q + 1) % 3]);
      total += w * (ev * (utq0 * utq0 + utq1 * utq1) + grad_sq + gnorm * (uq0 * uq0 + uq1 * uq1) +
                    (gnorm + ev - 1.0) * div * div);
    }
  }
  return total;
}

}  // namespace maxwave
