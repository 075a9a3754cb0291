#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "plaque/fem.hpp"
#include "plaque/stepper.hpp"

namespace plaque {

/// Solver effort accumulated over a run of micro steps.
struct SolveStats {
  long steps = 0;
  long picard_iterations = 0;
  long factorizations = 0;
  int max_picard_iterations = 0;
  double max_divergence_residual = 0.0;

  void record(const StepStats& s);
  void merge(const SolveStats& other);
};

/// One period of micro steps, fields[n] at t_n = n / N.
struct PeriodicTrajectory {
  std::vector<FlowField> fields;
  /// H1 distance between fields[N] and fields[0].
  double periodicity_residual = 0.0;
  int cycles_used = 0;
  /// residual of every cycle marched, the last one equals periodicity_residual
  std::vector<double> cycle_residuals;
  SolveStats stats;

  int steps() const { return static_cast<int>(fields.size()) - 1; }
  const FlowField& start() const { return fields.front(); }
  const FlowField& end() const { return fields.back(); }
};

/// March N implicit Euler steps over [0, 1] from `start` (time 0). When
/// `guess` holds a trajectory with the same N, its fields seed the Picard
/// iterations at the matching phase. Solver errors carry the failing step.
PeriodicTrajectory run_one_period(NavierStokesStepper& stepper, const FlowField& start, int steps,
                                  const PeriodicTrajectory* guess = nullptr);
PeriodicTrajectory run_one_period(const FlowField& start, int steps, const FlowParams& params,
                                  BoundaryMode mode, SolverOptions options = {});

struct PeriodicOptions {
  double tolerance = 1e-6;
  int max_cycles = 200;
  /// Called after each cycle with (cycle index from 1, residual).
  std::function<void(int, double)> on_cycle;
};

/// Cycle marching: repeat run_one_period from the previous end field until
/// the H1 distance between a cycle's end and start is at most the tolerance.
/// `guess` optionally seeds the first cycle's Picard iterations (typically
/// the converged trajectory of the previous macro step).
PeriodicTrajectory find_periodic_solution(NavierStokesStepper& stepper, const FlowField& initial_guess,
                                          int steps, const PeriodicOptions& options,
                                          const PeriodicTrajectory* guess = nullptr);
PeriodicTrajectory find_periodic_solution(const FlowField& initial_guess, int steps, const PeriodicOptions& options,
                                          const FlowParams& params, BoundaryMode mode,
                                          SolverOptions solver = {});

/// Initial field of `previous` with its coefficients re-bound to a mesh of the
/// same connectivity.
FlowField warm_start(const PeriodicTrajectory& previous, std::shared_ptr<const FunctionSpace> new_space);
FlowField warm_start(const PeriodicTrajectory& previous, const Mesh& new_mesh);

/// Writes "cycle,residual" rows.
void write_cycle_log(const PeriodicTrajectory& trajectory, std::ostream& out);

}  // namespace plaque
