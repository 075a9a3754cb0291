#include "plaque/periodic.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "plaque/errors.hpp"

namespace plaque {

void SolveStats::record(const StepStats& s) {
  ++steps;
  picard_iterations += s.picard_iterations;
  factorizations += s.factorizations;
  max_picard_iterations = std::max(max_picard_iterations, s.picard_iterations);
  max_divergence_residual = std::max(max_divergence_residual, s.divergence_residual);
}

void SolveStats::merge(const SolveStats& other) {
  steps += other.steps;
  picard_iterations += other.picard_iterations;
  factorizations += other.factorizations;
  max_picard_iterations = std::max(max_picard_iterations, other.max_picard_iterations);
  max_divergence_residual = std::max(max_divergence_residual, other.max_divergence_residual);
}

PeriodicTrajectory run_one_period(NavierStokesStepper& stepper, const FlowField& start, int steps,
                                  const PeriodicTrajectory* guess) {
  if (steps < 1) throw InvariantViolation("period: steps per period must be at least 1");
  if (start.time != 0.0) throw InvariantViolation("period: start field must sit at t = 0");
  if (guess && guess->steps() != steps) guess = nullptr;

  PeriodicTrajectory out;
  out.fields.reserve(static_cast<std::size_t>(steps) + 1);
  out.fields.push_back(start);
  out.fields.front().space = stepper.space();
  const double dt = 1.0 / steps;
  for (int n = 1; n <= steps; ++n) {
    const double t = (n == steps) ? 1.0 : static_cast<double>(n) / steps;
    StepStats s;
    try {
      out.fields.push_back(stepper.step(out.fields.back(), t, dt, guess ? &guess->fields[n] : nullptr, &s));
    } catch (Error& e) {
      e.add_context("micro step " + std::to_string(n) + "/" + std::to_string(steps));
      throw;
    }
    out.stats.record(s);
  }
  out.periodicity_residual = field_difference_norm(out.fields.back(), out.fields.front(), NormKind::h1);
  out.cycles_used = 1;
  out.cycle_residuals = {out.periodicity_residual};
  return out;
}

PeriodicTrajectory run_one_period(const FlowField& start, int steps, const FlowParams& params, BoundaryMode mode,
                                  SolverOptions options) {
  NavierStokesStepper stepper(start.space, params, mode, options);
  return run_one_period(stepper, start, steps);
}

PeriodicTrajectory find_periodic_solution(NavierStokesStepper& stepper, const FlowField& initial_guess, int steps,
                                          const PeriodicOptions& options, const PeriodicTrajectory* guess) {
  if (!(options.tolerance >= 0.0)) throw InvariantViolation("periodic solve: tolerance must be nonnegative");
  if (options.max_cycles < 1) throw InvariantViolation("periodic solve: max_cycles must be at least 1");

  FlowField start = initial_guess;
  start.time = 0.0;
  SolveStats total;
  std::vector<double> residuals;
  PeriodicTrajectory previous;
  bool have_previous = false;
  for (int cycle = 1; cycle <= options.max_cycles; ++cycle) {
    PeriodicTrajectory current;
    try {
      current = run_one_period(stepper, start, steps, have_previous ? &previous : guess);
    } catch (Error& e) {
      e.add_context("cycle " + std::to_string(cycle));
      throw;
    }
    total.merge(current.stats);
    residuals.push_back(current.periodicity_residual);
    if (options.on_cycle) options.on_cycle(cycle, current.periodicity_residual);
    if (current.periodicity_residual <= options.tolerance) {
      current.cycles_used = cycle;
      current.cycle_residuals = std::move(residuals);
      current.stats = total;
      return current;
    }
    start = current.fields.back();
    start.time = 0.0;
    previous = std::move(current);
    have_previous = true;
  }
  throw PeriodicityNotReached(residuals.back(), options.max_cycles);
}

PeriodicTrajectory find_periodic_solution(const FlowField& initial_guess, int steps, const PeriodicOptions& options,
                                          const FlowParams& params, BoundaryMode mode, SolverOptions solver) {
  NavierStokesStepper stepper(initial_guess.space, params, mode, solver);
  return find_periodic_solution(stepper, initial_guess, steps, options);
}

FlowField warm_start(const PeriodicTrajectory& previous, std::shared_ptr<const FunctionSpace> new_space) {
  if (previous.fields.empty()) throw InvariantViolation("warm start: empty trajectory");
  const FlowField& old = previous.fields.front();
  if (!new_space->same_connectivity(*old.space)) {
    throw ConnectivityMismatch("warm start: mesh connectivity changed");
  }
  FlowField out = old;
  out.space = std::move(new_space);
  out.time = 0.0;
  return out;
}

FlowField warm_start(const PeriodicTrajectory& previous, const Mesh& new_mesh) {
  if (previous.fields.empty()) throw InvariantViolation("warm start: empty trajectory");
  const auto& topology = previous.fields.front().space->shared_topology();
  return warm_start(previous, std::make_shared<const FunctionSpace>(new_mesh, topology));
}

void write_cycle_log(const PeriodicTrajectory& trajectory, std::ostream& out) {
  out << "cycle,residual\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < trajectory.cycle_residuals.size(); ++i) {
    out << i + 1 << ',' << trajectory.cycle_residuals[i] << '\n';
  }
  out.precision(old);
}

}  // namespace plaque
