// plaque: command-line driver for the multiscale plaque-growth simulator.
//
//   plaque run      --config base.cfg [--out DIR]
//   plaque direct   --config base.cfg [--horizon T] [--out DIR]
//   plaque study    --config base.cfg --axis dT --values 8000,4000,2000,1000 [--out DIR] [--threads N]
//   plaque snapshot --config base.cfg [--times 16000,32000,48000] [--out DIR]
//
// Exit codes: 0 success, 1 simulation error, 2 usage or configuration error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "plaque/config.hpp"
#include "plaque/errors.hpp"
#include "plaque/growth.hpp"
#include "plaque/study.hpp"
#include "plaque/vtk.hpp"

namespace fs = std::filesystem;
using namespace plaque;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value config file (defaults when omitted)");
  cmd->add_option("--set", c.overrides, "override one config key, KEY=VALUE (repeatable)");
  cmd->add_option("--out", c.out, "output directory (default: output_dir from the config)");
  cmd->add_flag("-q,--quiet", c.quiet, "no progress lines on stderr");
}

SimConfig resolve_config(const Common& c) {
  SimConfig config;
  try {
    if (!c.config_path.empty()) {
      if (!fs::exists(c.config_path)) throw UsageError("config file not found: " + c.config_path);
      config = load_config(c.config_path);
    }
    for (const auto& item : c.overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + item + "'");
      set_config_value(config, item.substr(0, eq), item.substr(eq + 1));
    }
    if (!c.out.empty()) config.output_dir = c.out;
    config.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("configuration: ") + e.what());
  }
  return config;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto slash = item.find('/');
    try {
      if (slash == std::string::npos) {
        values.push_back(std::stod(item));
      } else {
        values.push_back(std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1)));
      }
    } catch (const std::exception&) {
      throw UsageError("bad value '" + item + "' in list");
    }
  }
  if (values.empty()) throw UsageError("empty value list");
  return values;
}

RunHooks progress_hooks(bool quiet) {
  RunHooks hooks;
  hooks.on_warning = [](const std::string& w) { std::cerr << "warning: " << w << '\n'; };
  if (!quiet) {
    hooks.on_step = [](const MacroRecord& r) {
      std::fprintf(stderr, "m=%d T=%g U=%.10g R_avg=%.6g cycles=%d residual=%.2e %.2fs\n", r.m, r.T, r.U, r.R_avg,
                   r.cycles, r.residual, r.seconds);
    };
  }
  return hooks;
}

void save_config(const SimConfig& config, const fs::path& dir) {
  auto out = open_out(dir / "config.cfg");
  write_config(config, out);
}

int cmd_run(const Common& c) {
  const SimConfig config = resolve_config(c);
  const auto dir = prepare_dir(config.output_dir);
  save_config(config, dir);
  const auto result = run_multiscale(config, progress_hooks(c.quiet));
  auto out = open_out(dir / "history.csv");
  write_history_csv(result.state.history, out);
  std::cout << "U(T) = " << result.state.U << " after " << result.state.m << " macro steps; history in "
            << (dir / "history.csv").string() << '\n';
  return 0;
}

int cmd_direct(const Common& c, double horizon) {
  const SimConfig config = resolve_config(c);
  const double t_end = horizon > 0.0 ? horizon : config.horizon;
  const auto dir = prepare_dir(config.output_dir);
  save_config(config, dir);
  RunHooks hooks = progress_hooks(true);
  const auto result = run_direct(config, t_end, hooks);
  auto out = open_out(dir / "direct.csv");
  write_direct_csv(result.samples, out);
  std::cout << "u(" << t_end << ") = " << result.samples.back().u << "; samples in " << (dir / "direct.csv").string()
            << '\n';
  return 0;
}

int cmd_study(const Common& c, const std::string& axis_text, const std::string& values_text, double ref_dt,
              double ref_macro_dt, int threads) {
  const SimConfig base = resolve_config(c);
  StudyAxis axis;
  try {
    axis = parse_study_axis(axis_text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto values = parse_values(values_text);
  double smallest = values.front();
  for (double v : values) smallest = std::min(smallest, v);

  SimConfig reference = base;
  switch (axis) {
    case StudyAxis::dt: reference.dt = ref_dt > 0.0 ? ref_dt : smallest / 4.0; break;
    case StudyAxis::macro_dt: reference.macro_dt = ref_macro_dt > 0.0 ? ref_macro_dt : smallest / 4.0; break;
    case StudyAxis::epsilon:
      if (ref_dt > 0.0) reference.dt = ref_dt;
      reference.macro_dt = ref_macro_dt > 0.0 ? ref_macro_dt : base.macro_dt / 4.0;
      break;
  }
  if (ref_dt > 0.0 && axis == StudyAxis::macro_dt) reference.dt = ref_dt;
  if (ref_macro_dt > 0.0 && axis == StudyAxis::dt) reference.macro_dt = ref_macro_dt;
  try {
    reference.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("reference configuration: ") + e.what());
  }

  const auto dir = prepare_dir(base.output_dir);
  save_config(base, dir);
  std::mutex io;
  auto on_cell = [&](const std::string& label, const MultiscaleResult& r) {
    std::string name = label;
    for (char& ch : name) {
      if (ch == ' ' || ch == '=' || ch == '/') ch = '_';
    }
    std::lock_guard lock(io);
    auto out = open_out(dir / ("history_" + name + ".csv"));
    write_history_csv(r.state.history, out);
    if (!c.quiet) std::cerr << "finished " << label << ": U(T) = " << r.state.U << '\n';
  };
  const auto report = convergence_study(base, axis, values, reference, threads, on_cell);
  {
    auto out = open_out(dir / "report.csv");
    write_report_csv(report, out);
  }
  {
    auto out = open_out(dir / "report.txt");
    write_report_table(report, out);
  }
  write_report_table(report, std::cout);
  return 0;
}

int cmd_snapshot(const Common& c, const std::string& times_text) {
  SimConfig config = resolve_config(c);
  if (!times_text.empty()) config.snapshot_times = parse_values(times_text);
  if (config.snapshot_times.empty()) config.snapshot_times = {config.horizon};
  try {
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto dir = prepare_dir(config.output_dir);
  const auto snap_dir = prepare_dir((dir / "snapshots").string());
  save_config(config, dir);

  // snap requested times to the macro grid T_m = m dT
  std::vector<double> wanted;
  for (double t : config.snapshot_times) {
    const double m = std::min<double>(std::round(t / config.macro_dt), config.macro_steps());
    const double grid = std::min(m * config.macro_dt, config.horizon);
    if (std::abs(grid - t) > 1e-9 * std::max(1.0, t)) {
      std::cerr << "note: snapshot time " << t << " moved to macro time " << grid << '\n';
    }
    wanted.push_back(grid);
  }
  auto is_wanted = [&](double T) {
    for (double w : wanted) {
      if (std::abs(w - T) <= 1e-9 * std::max(1.0, T)) return true;
    }
    return false;
  };
  const int steps = config.steps_per_period();
  const int phase_index = static_cast<int>(std::lround(config.snapshot_phase * steps));
  auto write = [&](double T, double U, const PeriodicTrajectory& traj) {
    char name[64];
    std::snprintf(name, sizeof name, "field_T%.0f.vtk", T);
    auto out = open_out(snap_dir / name);
    write_field_vtk(traj.fields[phase_index], out);
    std::cout << "T = " << T << " U = " << U << " -> " << (snap_dir / name).string() << '\n';
  };

  RunHooks hooks = progress_hooks(c.quiet);
  hooks.on_trajectory = [&](double T, double U, const PeriodicTrajectory& traj) {
    if (is_wanted(T)) write(T, U, traj);
  };
  const auto result = run_multiscale(config, hooks);
  {
    auto out = open_out(dir / "history.csv");
    write_history_csv(result.state.history, out);
  }
  if (is_wanted(result.state.T)) {
    const auto traj = periodic_flow_at(config, result.state.U);
    write(result.state.T, result.state.U, traj);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal multiscale plaque-growth simulator"};
  app.require_subcommand(1);

  Common run_opts, direct_opts, study_opts, snap_opts;
  auto* run = app.add_subcommand("run", "multiscale run, writes history.csv");
  add_common(run, run_opts);

  auto* direct = app.add_subcommand("direct", "resolved direct simulation, writes direct.csv");
  add_common(direct, direct_opts);
  double horizon = 0.0;
  direct->add_option("--horizon", horizon, "simulated periods (default: T from the config)");

  auto* study = app.add_subcommand("study", "convergence study, writes report.csv and report.txt");
  add_common(study, study_opts);
  std::string axis, values;
  double ref_dt = 0.0, ref_macro_dt = 0.0;
  int threads = 1;
  study->add_option("--axis", axis, "dt, dT or eps")->required();
  study->add_option("--values", values, "comma-separated values, e.g. 8000,4000,2000,1000 or 1/8,1/16")->required();
  study->add_option("--ref-dt", ref_dt, "reference micro step (default: smallest value / 4 on the dt axis)");
  study->add_option("--ref-dT", ref_macro_dt, "reference macro step (default: smallest value / 4, or dT / 4)");
  study->add_option("--threads", threads, "concurrent study cells")->check(CLI::PositiveNumber);

  auto* snapshot = app.add_subcommand("snapshot", "field VTK files at macro times");
  add_common(snapshot, snap_opts);
  std::string times;
  snapshot->add_option("--times", times, "comma-separated macro times (default: snapshots key, else T)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*direct) return cmd_direct(direct_opts, horizon);
    if (*study) return cmd_study(study_opts, axis, values, ref_dt, ref_macro_dt, threads);
    if (*snapshot) return cmd_snapshot(snap_opts, times);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
