#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maxwave/study.hpp"

namespace maxwave {

/// Exit codes of the batch front-end.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitNumericalFailure = 3,
};

/// Parses flags (optionally on top of a configuration file), runs the study,
/// and echoes the tables. Kept out of main() so tests can drive it directly.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"maxwave: hybrid FE/FD solver for the time-domain Maxwell system"};
  std::string config_path, levels_str, m_str, mode_str, out_dir;
  double final_time = 0.0, tau_rule = 0.0;
  bool dump_fields_flag = false, dump_mesh_flag = false, allow_unstable = false;

  app.add_option("--config", config_path, "flat key=value configuration file");
  app.add_option("--levels", levels_str, "comma-separated refinement levels, ascending");
  app.add_option("--m-values", m_str, "comma-separated permittivity exponents");
  app.add_option("--final-time", final_time, "simulation end time");
  app.add_option("--tau-rule", tau_rule, "coefficient c in tau_l = c * 2^-l");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--dump-fields", dump_fields_flag, "write final-time field tables");
  app.add_flag("--dump-mesh", dump_mesh_flag, "write mesh node/triangle lists");
  app.add_flag("--allow-unstable", allow_unstable, "run past the CFL gate");
  app.add_option("--mode", mode_str, "exchange mode: dirichlet-copy | weak-neumann");

  std::vector<const char*> argv;
  argv.push_back("maxwave");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    StudySpec spec;
    if (app.count("--config") > 0) spec = parse_config(config_path);
    if (app.count("--levels") > 0) apply_config_key(spec, "levels", levels_str);
    if (app.count("--m-values") > 0) apply_config_key(spec, "m_values", m_str);
    if (app.count("--final-time") > 0) spec.final_time = final_time;
    if (app.count("--tau-rule") > 0) spec.tau_coefficient = tau_rule;
    if (app.count("--out") > 0) spec.out_dir = out_dir;
    if (app.count("--dump-fields") > 0) spec.dump_fields = dump_fields_flag;
    if (app.count("--dump-mesh") > 0) spec.dump_mesh = dump_mesh_flag;
    if (app.count("--allow-unstable") > 0) spec.allow_unstable = allow_unstable;
    if (app.count("--mode") > 0) spec.mode = detail::parse_mode(mode_str);
    spec.validate();

    for (int level : spec.levels) {
      const CflGate gate = check_cfl(spec.run_config(spec.m_values.front(), level));
      if (!gate.ok) {
        err << "warning: level " << level << " runs past the CFL bound (ratio "
            << detail::fmt6(gate.ratio) << ")\n";
      } else if (gate.warn) {
        err << "warning: level " << level << " is close to the CFL bound (ratio "
            << detail::fmt6(gate.ratio) << ")\n";
      }
    }

    const StudyResult result = run_study(spec);
    for (const auto& [m, rows] : result.tables) {
      out << "# m = " << m << '\n';
      write_table_csv(out, rows);
    }
    out << "# outputs in " << spec.out_dir << " (" << detail::fmt6(result.wall_seconds)
        << " s)\n";
    return kExitOk;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace maxwave
