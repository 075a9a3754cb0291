#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "plaque/fem.hpp"
#include "plaque/mesh.hpp"
#include "plaque/stepper.hpp"

namespace plaque {

/// What drives the flow in a run.
enum class FlowModel {
  /// Periodic parabolic inflow amplitude * (1 - y^2/b^2) * sin^2(pi t).
  pulsatile,
  /// Flow replaced by v = 0 (no solve); R reduces to 1 / (1 + u).
  zero,
};

/// Every physical and numerical parameter of a run. Defaults reproduce the
/// channel experiment: a = 5, b = 2, rho = 1, nu = 0.04, sigma0 = 30, u0 = 0,
/// inflow amplitude 20, eps = 2e-4, T = 4.8e4, dT = 2000, dt = 1/32.
struct SimConfig {
  // geometry
  double half_length = 5.0;
  double half_height = 2.0;
  int nx = 71;
  int ny = 3;
  std::string shape = "gaussian";

  // flow
  double density = 1.0;
  double viscosity = 0.04;
  double inflow_amplitude = 20.0;
  FlowModel flow = FlowModel::pulsatile;

  // growth
  double epsilon = 2e-4;
  double sigma0 = 30.0;
  double u0 = 0.0;
  double macro_dt = 2000.0;
  double dt = 1.0 / 32.0;
  double horizon = 4.8e4;

  // tolerances
  double periodic_tolerance = 1e-6;
  int max_cycles = 200;
  double picard_tolerance = 1e-9;
  int max_picard_iterations = 50;
  double picard_refresh_ratio = 0.5;
  /// March one extra period after each periodic solve and record how far the
  /// end field moves.
  bool verify_periodicity = false;

  // output
  std::string output_dir = "out";
  /// Macro times at which `snapshot` writes fields.
  std::vector<double> snapshot_times;
  /// Period phase in [0, 1] of the written snapshot field.
  double snapshot_phase = 0.5;

  /// N = 1 / dt.
  int steps_per_period() const;
  /// Number of macro steps, counting a final partial step.
  int macro_steps() const;
  /// Macro step length of step m (1-based); the last may be a remainder.
  double macro_step_length(int m) const;

  ShapeFunction shape_function() const;
  FlowParams flow_params() const;
  SolverOptions solver_options() const;

  /// Throws InvariantViolation naming the first broken invariant.
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

/// Parses `key = value` lines; '#' starts a comment. Missing keys keep their
/// defaults, the result is validated.
SimConfig parse_config(std::istream& in);
SimConfig load_config(const std::string& path);
/// Applies one assignment (same keys and value syntax as the file format).
void set_config_value(SimConfig& config, const std::string& key, const std::string& value);
/// Serializes every key; parse_config(write_config(c)) == c.
void write_config(const SimConfig& config, std::ostream& out);

/// Keys accepted by the config format, in serialization order.
const std::vector<std::string>& config_keys();

}  // namespace plaque
