#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "maxwave/coupling.hpp"
#include "maxwave/verification.hpp"
#include "oracles.hpp"

using namespace maxwave;

TEST_CASE("cfl limit") {
  CHECK(cfl_limit(0.0625, EpsModel::constant_one(), 1.0) == 0.0625);
  for (int m : {2, 4, 6, 8}) {
    CHECK(std::abs(cfl_limit(0.0625, EpsModel::sine(m), 1.0) - 0.03125) <= 1e-15);
  }
  CHECK_THROWS_AS(cfl_limit(0.1, EpsModel::sine(2), 0.0), std::invalid_argument);

  // Shipped defaults sit at a tenth of the bound.
  RunConfig config;
  config.level = 5;
  const CflGate gate = check_cfl(config);
  CHECK(std::abs(gate.ratio - 0.1) <= 1e-12);
  CHECK(gate.ok);
  CHECK(!gate.warn);
}

TEST_CASE("run config validation") {
  RunConfig config;
  config.final_time = 0.25;
  config.tau = 0.03;  // not an integer divisor
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.tau = 0.0;
  CHECK_NOTHROW(config.validate());
  CHECK(config.step_count() == 80);  // 0.25 / (0.025 / 8)
}

namespace {

struct ExchangeFixture {
  DomainSpec spec{3};
  FdGrid grid = build_fd_grid(spec);
  FeMesh mesh = build_fe_mesh(spec);
  OverlapMap map = build_overlap_maps(grid, mesh);

  FeState fe_state(int step = 4) const {
    FeState fe;
    fe.cur.assign(2u * mesh.node_count(), 0.0);
    fe.prev.assign(2u * mesh.node_count(), 0.0);
    fe.step = step;
    fe.tau = 0.01;
    return fe;
  }
  FdState fd_state(int step = 4) const {
    FdState fd;
    fd.cur = LatticeField::zeros(grid.node_count());
    fd.prev = LatticeField::zeros(grid.node_count());
    fd.step = step;
    fd.tau = 0.01;
    return fd;
  }
};

}  // namespace

TEST_CASE("exchanges copy ring values bitwise") {
  ExchangeFixture fx;

  SECTION("constant FE field paints the interface ring") {
    FeState fe = fx.fe_state();
    FdState fd = fx.fd_state();
    for (int i = 0; i < fx.mesh.node_count(); ++i) {
      fe.cur[i] = 0.7;
      fe.cur[fx.mesh.node_count() + i] = -1.25;
    }
    exchange_fe_to_fd(fe, fx.map, fd);
    for (int idx : fx.grid.interface_nodes) {
      CHECK(fd.cur.comp[0][idx] == 0.7);
      CHECK(fd.cur.comp[1][idx] == -1.25);
    }
  }

  SECTION("randomized values match an independent coordinate gather") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    FeState fe = fx.fe_state();
    FdState fd = fx.fd_state();
    for (double& v : fe.cur) v = dist(rng);
    for (int c = 0; c < 2; ++c) {
      for (double& v : fd.cur.comp[c]) v = dist(rng);
    }
    const FeState fe_before = fe;
    exchange_fe_to_fd(fe, fx.map, fd);
    exchange_fd_to_fe(fd, fx.map, fe);

    // Reference gather: locate coincident nodes by coordinate comparison,
    // independent of the overlap map.
    for (int idx : fx.grid.interface_nodes) {
      const double x = fx.grid.x(fx.grid.ix(idx));
      const double y = fx.grid.y(fx.grid.iy(idx));
      int found = -1;
      for (int i = 0; i < fx.mesh.node_count(); ++i) {
        if (fx.mesh.nodes[i][0] == x && fx.mesh.nodes[i][1] == y) {
          found = i;
          break;
        }
      }
      REQUIRE(found >= 0);
      CHECK(fd.cur.comp[0][idx] == fe_before.cur[found]);
      CHECK(fd.cur.comp[1][idx] == fe_before.cur[fx.mesh.node_count() + found]);
    }
    for (int node : fx.mesh.boundary_nodes) {
      const double x = fx.mesh.nodes[node][0];
      const double y = fx.mesh.nodes[node][1];
      const int i = static_cast<int>(std::lround(x / fx.grid.h));
      const int j = static_cast<int>(std::lround(y / fx.grid.h));
      CHECK(fe.cur[node] == fd.cur.comp[0][fx.grid.index(i, j)]);
    }

    // Copy idempotence: repeating the exchange changes nothing.
    const FdState fd_snapshot = fd;
    exchange_fe_to_fd(fe, fx.map, fd);
    for (int idx : fx.grid.interface_nodes) {
      CHECK(fd.cur.comp[0][idx] == fd_snapshot.cur.comp[0][idx]);
      CHECK(fd.cur.comp[1][idx] == fd_snapshot.cur.comp[1][idx]);
    }
  }

  SECTION("step mismatch is rejected") {
    FeState fe = fx.fe_state(3);
    FdState fd = fx.fd_state(4);
    CHECK_THROWS_AS(exchange_fe_to_fd(fe, fx.map, fd), std::invalid_argument);
    CHECK_THROWS_AS(exchange_fd_to_fe(fd, fx.map, fe), std::invalid_argument);
  }
}

TEST_CASE("zero data and zero source stay identically zero") {
  RunConfig config;
  config.level = 3;
  config.snapshot_stride = 7;
  const SolutionHistory history = run(config);
  REQUIRE(!history.snapshots.empty());
  CHECK(history.snapshots.back().step == config.step_count());
  for (const Snapshot& s : history.snapshots) {
    for (double v : s.fe) CHECK(v == 0.0);
    for (int c = 0; c < 2; ++c) {
      for (int idx = 0; idx < static_cast<int>(s.fd.comp[c].size()); ++idx) {
        CHECK(s.fd.comp[c][idx] == 0.0);
      }
    }
  }
}

TEST_CASE("snapshot stride records strictly increasing stamps") {
  RunConfig config;
  config.level = 3;
  config.snapshot_stride = 10;
  const SolutionHistory history = run(config);
  REQUIRE(history.snapshots.size() >= 2);
  for (std::size_t i = 0; i + 1 < history.snapshots.size(); ++i) {
    CHECK(history.snapshots[i + 1].time > history.snapshots[i].time);
    if (i + 2 < history.snapshots.size()) {
      CHECK(history.snapshots[i + 1].step - history.snapshots[i].step == 10);
    }
  }
}

TEST_CASE("identical configurations reproduce bitwise identical runs") {
  RunConfig config;
  config.level = 3;
  config.eps = EpsModel::sine(4);
  config.source = manufactured_case(4).source_term();
  config.snapshot_stride = 20;
  const SolutionHistory a = run(config);
  const SolutionHistory b = run(config);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    CHECK(a.snapshots[s].fe == b.snapshots[s].fe);
    CHECK(a.snapshots[s].fd.comp[0] == b.snapshots[s].fd.comp[0]);
    CHECK(a.snapshots[s].fd.comp[1] == b.snapshots[s].fd.comp[1]);
  }
}

TEST_CASE("hybrid run with unit permittivity equals the whole-lattice solver") {
  const int level = 3;
  const ManufacturedCase mc = manufactured_case(EpsModel::constant_one());

  RunConfig config;
  config.level = level;
  config.eps = EpsModel::constant_one();
  config.source = mc.source_term();

  std::vector<LatticeField> whole;
  oracle::whole_lattice_run(DomainSpec{level}, config.source, config.effective_tau(),
                            config.step_count(),
                            [&](const FdState& st) { whole.push_back(st.cur); });

  const HybridSetup setup = build_setup(config);
  const int a = setup.spec.inner_offset();
  double worst = 0.0;
  run(config, setup, [&](const StepView& view) {
    const LatticeField& ref = whole.at(static_cast<std::size_t>(view.step) - 1);
    for (int c = 0; c < 2; ++c) {
      for (int idx = 0; idx < setup.grid.node_count(); ++idx) {
        if (setup.grid.cls[idx] == NodeClass::Hole) continue;
        worst = std::max(worst, std::abs(view.fd.cur.comp[c][idx] - ref.comp[c][idx]));
      }
      for (int j = 0; j <= setup.mesh.cells; ++j) {
        for (int i = 0; i <= setup.mesh.cells; ++i) {
          const int node = setup.mesh.node_id(i, j);
          const int lattice = setup.grid.index(a + i, a + j);
          worst = std::max(worst, std::abs(view.fe.cur[c * setup.mesh.node_count() + node] -
                                           ref.comp[c][lattice]));
        }
      }
    }
  });
  CHECK(worst <= 1e-12);
}

TEST_CASE("CFL-violating configurations are gated, then detected at runtime") {
  RunConfig config;
  config.level = 3;
  config.tau = 4.0 * DomainSpec{3}.spacing();  // 0.25
  config.final_time = 200.0 * config.tau;
  config.source = manufactured_case(2).source_term();

  SECTION("rejected without the override") {
    CHECK_THROWS_AS(run(config), std::invalid_argument);
  }

  SECTION("with the override the blow-up detector fires") {
    config.allow_unstable = true;
    bool detected = false;
    int failed_step = -1;
    try {
      run(config);
    } catch (const NumericalFailure& e) {
      detected = true;
      failed_step = e.step;
    }
    CHECK(detected);
    CHECK(failed_step > 1);
    CHECK(failed_step <= 200);
  }
}

TEST_CASE("weak boundary-load mode runs and stays finite") {
  RunConfig config;
  config.level = 3;
  config.mode = ExchangeMode::WeakBoundaryLoad;
  config.eps = EpsModel::sine(2);
  config.source = manufactured_case(2).source_term();
  config.final_time = 0.025;  // a short horizon; mode is exercised, not calibrated
  const SolutionHistory history = run(config);
  REQUIRE(!history.snapshots.empty());
  for (double v : history.snapshots.back().fe) CHECK(std::isfinite(v));
}
