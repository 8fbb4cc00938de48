#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxwave/coupling.hpp"
#include "maxwave/verification.hpp"

#ifndef MAXWAVE_BUILD_ID
#define MAXWAVE_BUILD_ID "untracked"
#endif

namespace maxwave {

/// Full convergence-study request: the cross product of refinement levels
/// and permittivity exponents, one run each.
struct StudySpec {
  std::vector<int> levels{3, 4, 5, 6};
  std::vector<int> m_values{2, 4, 6, 8};
  double final_time = 0.25;
  double tau_coefficient = 0.025;  ///< tau_l = coefficient * 2^-l
  std::string out_dir = "out";
  bool dump_fields = false;
  bool dump_mesh = false;
  bool allow_unstable = false;
  ExchangeMode mode = ExchangeMode::DirichletCopy;

  double tau_for(int level) const { return tau_coefficient / static_cast<double>(1 << level); }

  RunConfig run_config(int m, int level) const {
    RunConfig config;
    config.level = level;
    config.final_time = final_time;
    config.tau = tau_for(level);
    config.eps = EpsModel::sine(m);
    config.mode = mode;
    config.allow_unstable = allow_unstable;
    config.source = manufactured_case(m).source_term();
    return config;
  }

  void validate() const {
    if (levels.empty()) throw std::invalid_argument("study: no levels given");
    if (m_values.empty()) throw std::invalid_argument("study: no permittivity exponents given");
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
      if (levels[i] >= levels[i + 1]) {
        throw std::invalid_argument("study: levels must be strictly ascending");
      }
    }
    if (!(final_time > 0.0)) throw std::invalid_argument("study: final time must be positive");
    if (!(tau_coefficient > 0.0)) throw std::invalid_argument("study: tau rule must be positive");
    for (int level : levels) {
      if (level < 2) throw std::invalid_argument("study: levels below 2 have no overlap layer");
      for (int m : m_values) {
        const RunConfig config = run_config(m, level);
        config.validate();
        const CflGate gate = check_cfl(config);
        if (!gate.ok && !allow_unstable) {
          throw std::invalid_argument(
              "study: tau rule violates the CFL bound at level " + std::to_string(level) +
              " (ratio " + std::to_string(gate.ratio) + "); pass allow_unstable to force");
        }
      }
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed " + what + " entry '" + item + "'");
    }
    if (used != item.size()) {
      throw std::invalid_argument("malformed " + what + " entry '" + item + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) throw std::invalid_argument("empty " + what + " list");
  return out;
}

inline double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed " + what + " value '" + text + "'");
  }
  if (used != text.size()) {
    throw std::invalid_argument("malformed " + what + " value '" + text + "'");
  }
  return value;
}

inline bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw std::invalid_argument("malformed " + what + " value '" + text + "'");
}

inline ExchangeMode parse_mode(const std::string& text) {
  if (text == "dirichlet-copy") return ExchangeMode::DirichletCopy;
  if (text == "weak-neumann") return ExchangeMode::WeakBoundaryLoad;
  throw std::invalid_argument("unknown mode '" + text +
                              "' (expected dirichlet-copy or weak-neumann)");
}

inline std::string mode_name(ExchangeMode mode) {
  return mode == ExchangeMode::DirichletCopy ? "dirichlet-copy" : "weak-neumann";
}

/// Six significant digits, matching the table serialization contract.
inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string fmt6(const std::optional<double>& v) { return v ? fmt6(*v) : ""; }

}  // namespace detail

/// Applies one key=value setting. Unknown keys are rejected by name.
inline void apply_config_key(StudySpec& spec, const std::string& key, const std::string& value) {
  if (key == "levels") {
    spec.levels = detail::parse_int_list(value, "levels");
  } else if (key == "m_values") {
    spec.m_values = detail::parse_int_list(value, "m_values");
  } else if (key == "final_time") {
    spec.final_time = detail::parse_double(value, "final_time");
  } else if (key == "tau_rule") {
    spec.tau_coefficient = detail::parse_double(value, "tau_rule");
  } else if (key == "out") {
    spec.out_dir = value;
  } else if (key == "dump_fields") {
    spec.dump_fields = detail::parse_bool(value, "dump_fields");
  } else if (key == "dump_mesh") {
    spec.dump_mesh = detail::parse_bool(value, "dump_mesh");
  } else if (key == "allow_unstable") {
    spec.allow_unstable = detail::parse_bool(value, "allow_unstable");
  } else if (key == "mode") {
    spec.mode = detail::parse_mode(value);
  } else {
    throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
}

/// Flat key=value configuration file; blank lines and #-comments ignored.
inline StudySpec parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open configuration file '" + path + "'");
  StudySpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto pos = line.find('=');
    if (pos == std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(lineno) + " of '" + path +
                                  "' is not a key=value setting");
    }
    apply_config_key(spec, detail::trim(line.substr(0, pos)), detail::trim(line.substr(pos + 1)));
  }
  return spec;
}

inline void write_table_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "l,nel,nno,e1,ratio1,r1,e2,ratio2,r2\n";
  for (const ConvergenceRow& r : rows) {
    out << r.level << ',' << r.elements << ',' << r.nodes << ',' << detail::fmt6(r.e1) << ','
        << detail::fmt6(r.ratio1) << ',' << detail::fmt6(r.rate1) << ',' << detail::fmt6(r.e2)
        << ',' << detail::fmt6(r.ratio2) << ',' << detail::fmt6(r.rate2) << '\n';
  }
}

/// Final-time field table: numerical and exact values side by side, one
/// record per lattice node (hole excluded) and per mesh node.
inline void dump_fields(const Snapshot& snap, const FdGrid& grid, const FeMesh& mesh,
                        const ManufacturedCase& mc, std::ostream& out) {
  out << "# x y abs_eh eh1 eh2 region abs_e e1 e2\n";
  out.precision(9);
  const auto emit = [&](double x, double y, double v0, double v1, const char* region) {
    const auto exact = mc.field(x, y, snap.time);
    out << x << ' ' << y << ' ' << std::hypot(v0, v1) << ' ' << v0 << ' ' << v1 << ' ' << region
        << ' ' << std::hypot(exact[0], exact[1]) << ' ' << exact[0] << ' ' << exact[1] << '\n';
  };
  for (int idx = 0; idx < grid.node_count(); ++idx) {
    if (grid.cls[idx] == NodeClass::Hole) continue;
    emit(grid.x(grid.ix(idx)), grid.y(grid.iy(idx)), snap.fd.comp[0][idx], snap.fd.comp[1][idx],
         "FD");
  }
  const int nno = mesh.node_count();
  for (int i = 0; i < nno; ++i) {
    emit(mesh.nodes[i][0], mesh.nodes[i][1], snap.fe[i], snap.fe[nno + i], "FE");
  }
}

struct RunRecord {
  int m = 0;
  int level = 0;
  int steps = 0;
  double tau = 0.0;
  double cfl_ratio = 0.0;
  double wall_seconds = 0.0;
  double fd_max_err = 0.0;
};

struct StudyResult {
  std::map<int, std::vector<ConvergenceRow>> tables;  ///< keyed by m
  std::vector<RunRecord> runs;
  double wall_seconds = 0.0;
};

namespace detail {

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, path);
}

}  // namespace detail

/// Runs the full study, writes one CSV table per exponent plus a metadata
/// file (and optional dumps) into spec.out_dir, and returns the tables.
inline StudyResult run_study(const StudySpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  const auto t_begin = std::chrono::steady_clock::now();

  StudyResult result;
  for (int m : spec.m_values) {
    const ManufacturedCase mc = manufactured_case(m);
    std::vector<ConvergenceRow> rows;
    for (int level : spec.levels) {
      const RunConfig config = spec.run_config(m, level);
      const HybridSetup setup = build_setup(config);
      ErrorAccumulator acc(setup.mesh, mc);
      const auto t0 = std::chrono::steady_clock::now();
      SolutionHistory history;
      try {
        history = run(config, setup, [&](const StepView& view) {
          acc.accumulate(view.fe.cur, view.time);
        });
      } catch (const NumericalFailure& e) {
        throw NumericalFailure(e.step, "m=" + std::to_string(m) + ", l=" +
                                           std::to_string(level) + ": " + e.location);
      }
      const auto t1 = std::chrono::steady_clock::now();

      ConvergenceRow row;
      row.level = level;
      row.elements = setup.mesh.triangle_count();
      row.nodes = setup.mesh.node_count();
      row.e1 = acc.rel_l2();
      row.e2 = acc.rel_h1();
      if (!rows.empty()) {
        row.ratio1 = rows.back().e1 / row.e1;
        row.rate1 = convergence_rate(rows.back().e1, row.e1);
        row.ratio2 = rows.back().e2 / row.e2;
        row.rate2 = convergence_rate(rows.back().e2, row.e2);
      }
      rows.push_back(row);

      RunRecord rec;
      rec.m = m;
      rec.level = level;
      rec.steps = config.step_count();
      rec.tau = config.effective_tau();
      rec.cfl_ratio = check_cfl(config).ratio;
      rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
      {
        FdState final_fd;
        final_fd.cur = history.snapshots.back().fd;
        final_fd.step = history.snapshots.back().step;
        final_fd.tau = rec.tau;
        rec.fd_max_err = fd_max_error(final_fd, setup.grid, mc);
      }
      result.runs.push_back(rec);

      if (spec.dump_fields) {
        std::ostringstream os;
        dump_fields(history.snapshots.back(), setup.grid, setup.mesh, mc, os);
        detail::write_atomically(fs::path(spec.out_dir) / ("fields_m" + std::to_string(m) + "_l" +
                                                           std::to_string(level) + ".txt"),
                                 os.str());
      }
      if (spec.dump_mesh && m == spec.m_values.front()) {
        std::ostringstream nodes_os, tris_os;
        write_mesh_dump(setup.mesh, nodes_os, tris_os);
        detail::write_atomically(
            fs::path(spec.out_dir) / ("mesh_l" + std::to_string(level) + "_nodes.txt"),
            nodes_os.str());
        detail::write_atomically(
            fs::path(spec.out_dir) / ("mesh_l" + std::to_string(level) + "_triangles.txt"),
            tris_os.str());
      }
    }
    std::ostringstream os;
    write_table_csv(os, rows);
    detail::write_atomically(fs::path(spec.out_dir) / ("table_m" + std::to_string(m) + ".csv"),
                             os.str());
    result.tables.emplace(m, std::move(rows));
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

  std::ostringstream meta;
  meta << "build_id: " << MAXWAVE_BUILD_ID << '\n';
  meta << "mode: " << detail::mode_name(spec.mode) << '\n';
  meta << "final_time: " << detail::fmt6(spec.final_time) << '\n';
  meta << "tau_rule: tau_l = " << detail::fmt6(spec.tau_coefficient) << " * 2^-l\n";
  meta << "levels:";
  for (int level : spec.levels) meta << ' ' << level;
  meta << '\n';
  meta << "m_values:";
  for (int m : spec.m_values) meta << ' ' << m;
  meta << '\n';
  meta << "allow_unstable: " << (spec.allow_unstable ? "true" : "false") << '\n';
  for (int level : spec.levels) {
    meta << "tau[" << level << "]: " << detail::fmt6(spec.tau_for(level)) << '\n';
  }
  for (const RunRecord& rec : result.runs) {
    meta << "run[m=" << rec.m << ",l=" << rec.level << "]: steps=" << rec.steps
         << " cfl_ratio=" << detail::fmt6(rec.cfl_ratio)
         << (rec.cfl_ratio > 1.0 ? " UNSTABLE" : "")
         << " fd_max_err=" << detail::fmt6(rec.fd_max_err)
         << " wall_s=" << detail::fmt6(rec.wall_seconds) << '\n';
  }
  meta << "wall_total_s: " << detail::fmt6(result.wall_seconds) << '\n';
  detail::write_atomically(fs::path(spec.out_dir) / "metadata.txt", meta.str());

  return result;
}

}  // namespace maxwave
