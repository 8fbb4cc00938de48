#include <cmath>
#include <numbers>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "maxwave/fdm.hpp"
#include "maxwave/geometry.hpp"
#include "oracles.hpp"

using namespace maxwave;

namespace {

FdState zero_state(const FdGrid& g, double tau) {
  FdState st;
  st.cur = LatticeField::zeros(g.node_count());
  st.prev = LatticeField::zeros(g.node_count());
  st.step = 1;
  st.tau = tau;
  return st;
}

std::vector<double> sampled(const FdGrid& g, const std::function<double(double, double)>& f) {
  std::vector<double> v(static_cast<std::size_t>(g.node_count()));
  for (int idx = 0; idx < g.node_count(); ++idx) v[idx] = f(g.x(g.ix(idx)), g.y(g.iy(idx)));
  return v;
}

}  // namespace

TEST_CASE("five-point laplacian on polynomial fields") {
  const FdGrid g = build_fd_grid_whole(DomainSpec{3});
  const auto constant = sampled(g, [](double, double) { return 3.25; });
  const auto xsq = sampled(g, [](double x, double) { return x * x; });
  const auto xy = sampled(g, [](double x, double y) { return x * y; });
  for (int idx : g.interior_nodes) {
    const int i = g.ix(idx), j = g.iy(idx);
    CHECK(discrete_laplacian(constant, g, i, j) == 0.0);
    CHECK(discrete_laplacian(xsq, g, i, j) == 2.0);  // exact on quadratics, dyadic arithmetic
    CHECK(discrete_laplacian(xy, g, i, j) == 0.0);   // mixed term absent from the stencil
  }
}

TEST_CASE("laplacian guards its preconditions") {
  FdGrid g = build_fd_grid(DomainSpec{3});
  const auto field = sampled(g, [](double x, double y) { return x + y; });
  CHECK_THROWS_AS(discrete_laplacian(field, g, 0, 5), std::logic_error);  // outer node
  // Force a misclassification: promote a mid-edge interface node (its inward
  // neighbour is a hole node) to active; the stencil must refuse to read it.
  int ring = -1;
  for (int idx : g.interface_nodes) {
    const int i = g.ix(idx), j = g.iy(idx);
    for (int nb : {g.index(i + 1, j), g.index(i - 1, j), g.index(i, j + 1), g.index(i, j - 1)}) {
      if (g.cls[nb] == NodeClass::Hole) ring = idx;
    }
    if (ring >= 0) break;
  }
  REQUIRE(ring >= 0);
  g.cls[ring] = NodeClass::Interior;
  bool threw = false;
  try {
    (void)discrete_laplacian(field, g, g.ix(ring), g.iy(ring));
  } catch (const std::logic_error&) {
    threw = true;
  }
  CHECK(threw);
}

TEST_CASE("zero state with zero data stays zero") {
  const FdGrid g = build_fd_grid(DomainSpec{3});
  FdState st = zero_state(g, 0.003125);
  fd_step(st, g, LatticeField::zeros(g.node_count()),
          RingValues::zeros(g.interface_nodes.size()), st.tau);
  CHECK(st.step == 2);
  for (int c = 0; c < 2; ++c) {
    for (double v : st.cur.comp[c]) CHECK(v == 0.0);
  }
}

TEST_CASE("point source injects tau^2 at a single node") {
  const FdGrid g = build_fd_grid(DomainSpec{3});
  const double tau = 0.003125;
  FdState st = zero_state(g, tau);
  LatticeField src = LatticeField::zeros(g.node_count());
  const int target = g.index(2, 3);
  src.comp[0][target] = 1.0;
  fd_step(st, g, src, RingValues::zeros(g.interface_nodes.size()), tau);
  for (int idx = 0; idx < g.node_count(); ++idx) {
    if (g.cls[idx] == NodeClass::Hole) continue;
    CHECK(st.cur.comp[0][idx] == (idx == target ? tau * tau : 0.0));
    CHECK(st.cur.comp[1][idx] == 0.0);
  }
}

TEST_CASE("one step against the standing-wave Taylor identity") {
  // u(x, y, t) = sin(pi x) sin(pi y) cos(omega t), omega = pi sqrt(2),
  // solves the wave equation; for this separable solution
  //   E^{k+1} - u(t_{k+1}) = tau^2 Lap_h u^k + 2 u^k (1 - cos(omega tau))
  // holds exactly, which pins the local truncation error to O(tau^2 h^2 +
  // tau^4).
  const double pi = std::numbers::pi;
  const double omega = pi * std::sqrt(2.0);
  const FdGrid g = build_fd_grid_whole(DomainSpec{3});
  const double tau = g.h / 2.0;
  const double tk = 0.3;
  const auto wave = [&](double x, double y, double t) {
    return std::sin(pi * x) * std::sin(pi * y) * std::cos(omega * t);
  };
  FdState st = zero_state(g, tau);
  st.step = 3;
  for (int idx = 0; idx < g.node_count(); ++idx) {
    const double x = g.x(g.ix(idx)), y = g.y(g.iy(idx));
    st.prev.comp[0][idx] = wave(x, y, tk - tau);
    st.cur.comp[0][idx] = wave(x, y, tk);
  }
  const std::vector<double> level_k = st.cur.comp[0];
  fd_step(st, g, LatticeField::zeros(g.node_count()), RingValues::zeros(0), tau);

  const int i = 5, j = 7;
  const int idx = g.index(i, j);
  const double err = st.cur.comp[0][idx] - wave(g.x(i), g.y(j), tk + tau);
  const double predicted = tau * tau * discrete_laplacian(level_k, g, i, j) +
                           2.0 * level_k[idx] * (1.0 - std::cos(omega * tau));
  CHECK(std::abs(err - predicted) <= 1e-13);
  CHECK(std::abs(err) <= 40.0 * tau * tau * (tau * tau + g.h * g.h));
}

TEST_CASE("the step is linear in state and source") {
  const FdGrid g = build_fd_grid(DomainSpec{3});
  const double tau = 0.003125;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto random_field = [&] {
    LatticeField f = LatticeField::zeros(g.node_count());
    for (int c = 0; c < 2; ++c) {
      for (double& v : f.comp[c]) v = dist(rng);
    }
    return f;
  };
  const LatticeField s1 = random_field(), s2 = random_field();
  const LatticeField u1 = random_field(), u2 = random_field();
  const double a = 0.6, b = -1.4;

  const auto advance = [&](const LatticeField& init_prev, const LatticeField& init_cur,
                           const LatticeField& src) {
    FdState st = zero_state(g, tau);
    st.prev = init_prev;
    st.cur = init_cur;
    fd_step(st, g, src, RingValues::zeros(g.interface_nodes.size()), tau);
    return st.cur;
  };

  LatticeField combo_prev = LatticeField::zeros(g.node_count());
  LatticeField combo_cur = LatticeField::zeros(g.node_count());
  LatticeField combo_src = LatticeField::zeros(g.node_count());
  for (int c = 0; c < 2; ++c) {
    for (int idx = 0; idx < g.node_count(); ++idx) {
      combo_prev.comp[c][idx] = a * u1.comp[c][idx] + b * u2.comp[c][idx];
      combo_cur.comp[c][idx] = a * u2.comp[c][idx] + b * u1.comp[c][idx];
      combo_src.comp[c][idx] = a * s1.comp[c][idx] + b * s2.comp[c][idx];
    }
  }
  const LatticeField r1 = advance(u1, u2, s1);
  const LatticeField r2 = advance(u2, u1, s2);
  const LatticeField rc = advance(combo_prev, combo_cur, combo_src);
  for (int c = 0; c < 2; ++c) {
    for (int idx = 0; idx < g.node_count(); ++idx) {
      if (g.cls[idx] == NodeClass::Hole) continue;
      const double expect = a * r1.comp[c][idx] + b * r2.comp[c][idx];
      CHECK(std::abs(rc.comp[c][idx] - expect) <=
            1e-13 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("discrete energy stays bounded under the CFL time step") {
  const int level = 3;
  const FdGrid g = build_fd_grid(DomainSpec{level});
  const double tau = 0.025 / (1 << level);
  FdState st = zero_state(g, tau);
  const double pi = std::numbers::pi;
  for (int idx = 0; idx < g.node_count(); ++idx) {
    if (g.cls[idx] != NodeClass::Interior) continue;
    const double v = std::sin(2.0 * pi * g.x(g.ix(idx))) * std::sin(2.0 * pi * g.y(g.iy(idx)));
    st.cur.comp[0][idx] = v;
    st.prev.comp[0][idx] = v;
    st.cur.comp[1][idx] = -0.5 * v;
    st.prev.comp[1][idx] = -0.5 * v;
  }
  const double initial = fd_energy(st, g);
  REQUIRE(initial > 0.0);
  double worst = initial;
  const LatticeField no_source = LatticeField::zeros(g.node_count());
  const RingValues no_bc = RingValues::zeros(g.interface_nodes.size());
  for (int k = 0; k < 10 * (1 << level); ++k) {
    fd_step(st, g, no_source, no_bc, tau);
    worst = std::max(worst, fd_energy(st, g));
  }
  CHECK(worst <= 1e3 * initial);
}

TEST_CASE("a CFL-violating step blows up within 200 steps") {
  const int level = 3;
  const FdGrid g = build_fd_grid(DomainSpec{level});
  const double tau = 4.0 * g.h;
  FdState st = zero_state(g, tau);
  const double pi = std::numbers::pi;
  for (int idx = 0; idx < g.node_count(); ++idx) {
    if (g.cls[idx] != NodeClass::Interior) continue;
    st.cur.comp[0][idx] = std::sin(2.0 * pi * g.x(g.ix(idx))) * std::sin(pi * g.y(g.iy(idx)));
    st.prev.comp[0][idx] = st.cur.comp[0][idx];
  }
  const double initial = fd_energy(st, g);
  REQUIRE(initial > 0.0);
  const LatticeField no_source = LatticeField::zeros(g.node_count());
  const RingValues no_bc = RingValues::zeros(g.interface_nodes.size());
  bool exploded = false;
  for (int k = 0; k < 200 && !exploded; ++k) {
    fd_step(st, g, no_source, no_bc, tau);
    exploded = fd_energy(st, g) > 1e6 * initial;
  }
  CHECK(exploded);
}

TEST_CASE("boundary data coverage is checked") {
  const FdGrid g = build_fd_grid(DomainSpec{3});
  FdState st = zero_state(g, 0.01);
  CHECK_THROWS_AS(fd_step(st, g, LatticeField::zeros(g.node_count()), RingValues::zeros(5), 0.01),
                  std::invalid_argument);
}
