#include "plaque/growth.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>

#include "plaque/errors.hpp"
#include "plaque/mesh.hpp"

namespace plaque {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Neumaier compensated sum
double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0, c = 0.0;
  for (double v : values) {
    const double t = sum + v;
    c += (std::abs(sum) >= std::abs(v)) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + c;
}

PeriodicTrajectory zero_trajectory(std::shared_ptr<const FunctionSpace> space, int steps) {
  PeriodicTrajectory traj;
  for (int n = 0; n <= steps; ++n) {
    traj.fields.push_back(FlowField::zero(space, n == steps ? 1.0 : static_cast<double>(n) / steps));
  }
  return traj;
}

void check_open(const Mesh& reference, double u, const ShapeFunction& shape) {
  const double peak = shape.peak(u, reference);
  if (peak >= reference.half_height) throw DomainCollapse(peak, reference.half_height);
}

}  // namespace

Vec2 wall_shear_stress(const FlowField& v, const FlowParams& params, double sigma0) {
  const Mesh& mesh = v.space->mesh();
  const double g = 0.5 / std::sqrt(3.0);
  const double gauss[2] = {0.5 - g, 0.5 + g};
  const double scale = params.density * params.viscosity / sigma0;
  Vec2 total;
  for (const auto& edge : wall_edges(mesh)) {
    const auto& tri = mesh.triangles[edge.triangle];
    const Vec2 n = edge.normal;
    for (double s : gauss) {
      Barycentric bary{};
      for (int k = 0; k < 3; ++k) {
        if (tri[k] == edge.v[0]) bary[k] = 1.0 - s;
        if (tri[k] == edge.v[1]) bary[k] = s;
      }
      const Grad2 d = v.velocity_gradient(edge.triangle, bary);
      // (grad v + grad v^T) n
      const double sxx = 2.0 * d[0][0], syy = 2.0 * d[1][1], sxy = d[0][1] + d[1][0];
      const double tx = sxx * n.x + sxy * n.y;
      const double ty = sxy * n.x + syy * n.y;
      const double tn = tx * n.x + ty * n.y;
      const double w = 0.5 * edge.length;
      total.x += w * (tx - tn * n.x);
      total.y += w * (ty - tn * n.y);
    }
  }
  return {scale * total.x, scale * total.y};
}

double reaction(const Vec2& sigma, double u) {
  if (u < 0.0) throw NegativeConcentration(u);
  return (1.0 / (1.0 + u)) * (1.0 / (1.0 + (sigma.x * sigma.x + sigma.y * sigma.y)));
}

double period_averaged_reaction(const PeriodicTrajectory& trajectory, double u, const FlowParams& params,
                                double sigma0) {
  const int steps = trajectory.steps();
  if (steps < 1) throw InvariantViolation("reaction average: trajectory has no steps");
  std::vector<double> r(static_cast<std::size_t>(steps));
  for (int n = 1; n <= steps; ++n) {
    r[n - 1] = reaction(wall_shear_stress(trajectory.fields[n], params, sigma0), u);
  }
  return compensated_sum(r) / steps;
}

MacroState MacroState::initial(double u0) {
  if (u0 < 0.0) throw NegativeConcentration(u0);
  MacroState s;
  s.U = u0;
  return s;
}

MacroState macro_step(const MacroState& state, double r_avg, double macro_dt, double epsilon) {
  if (!(r_avg > 0.0 && r_avg <= 1.0)) {
    throw InvariantViolation("macro step: reaction average " + std::to_string(r_avg) + " outside (0, 1]");
  }
  MacroState next = state;
  next.m = state.m + 1;
  next.T = state.T + macro_dt;
  next.U = state.U + macro_dt * epsilon * r_avg;
  MacroRecord rec;
  rec.m = next.m;
  rec.T = next.T;
  rec.U = next.U;
  rec.R_avg = r_avg;
  next.history.push_back(rec);
  return next;
}

MultiscaleResult run_multiscale(const SimConfig& config, const RunHooks& hooks) {
  config.validate();
  const Mesh reference = build_reference_mesh(config.half_length, config.half_height, config.nx, config.ny);
  const ShapeFunction shape = config.shape_function();
  const FlowParams params = config.flow_params();
  const int steps = config.steps_per_period();
  const bool zero_flow = config.flow == FlowModel::zero;
  const auto topology = Topology::build(reference);

  PeriodicOptions periodic;
  periodic.tolerance = config.periodic_tolerance;
  periodic.max_cycles = config.max_cycles;

  MultiscaleResult result;
  result.state = MacroState::initial(config.u0);
  auto warn = [&](const std::string& message) {
    result.warnings.push_back(message);
    if (hooks.on_warning) hooks.on_warning(message);
  };

  std::unique_ptr<NavierStokesStepper> stepper;
  PeriodicTrajectory last;
  bool have_last = false;
  bool warned_pinch = false;
  const int total = config.macro_steps();
  for (int m = 1; m <= total; ++m) {
    const auto start = Clock::now();
    const double u = result.state.U;
    try {
      const Mesh mesh = deform_mesh(reference, u, shape);
      if (!warned_pinch && near_pinch(reference, u, shape)) {
        warned_pinch = true;
        warn("macro step " + std::to_string(m) + ": wall displacement above " +
             std::to_string(kPinchWarningFraction) + " of the half-height at U = " + std::to_string(u));
      }
      auto space = std::make_shared<const FunctionSpace>(mesh, topology);

      PeriodicTrajectory traj;
      double change = -1.0;
      if (zero_flow) {
        traj = zero_trajectory(space, steps);
        traj.cycle_residuals = {0.0};
      } else {
        if (!stepper) {
          stepper = std::make_unique<NavierStokesStepper>(space, params, BoundaryMode::channel,
                                                          config.solver_options());
        } else {
          stepper->rebind(space);
        }
        const FlowField initial = have_last ? warm_start(last, space) : FlowField::zero(space);
        traj = find_periodic_solution(*stepper, initial, steps, periodic, have_last ? &last : nullptr);
        if (config.verify_periodicity) {
          FlowField end = traj.end();
          end.time = 0.0;
          const auto extra = run_one_period(*stepper, end, steps, &traj);
          change = field_difference_norm(extra.end(), traj.end(), NormKind::h1);
          traj.stats.merge(extra.stats);
        }
      }
      if (hooks.on_trajectory) hooks.on_trajectory(result.state.T, u, traj);

      const double r_avg = period_averaged_reaction(traj, u, params, config.sigma0);
      result.state = macro_step(result.state, r_avg, config.macro_step_length(m), config.epsilon);
      check_open(reference, result.state.U, shape);

      MacroRecord& rec = result.state.history.back();
      rec.residual = traj.periodicity_residual;
      rec.cycles = traj.cycles_used;
      rec.verification_change = change;
      rec.stats = traj.stats;
      rec.seconds = seconds_since(start);
      result.stats.merge(traj.stats);
      if (hooks.on_step) hooks.on_step(rec);

      last = std::move(traj);
      have_last = !zero_flow;
    } catch (Error& e) {
      e.add_context("macro step " + std::to_string(m) + " (U = " + std::to_string(u) + ")");
      throw;
    }
  }
  return result;
}

PeriodicTrajectory periodic_flow_at(const SimConfig& config, double U, const PeriodicTrajectory* warm) {
  config.validate();
  const Mesh reference = build_reference_mesh(config.half_length, config.half_height, config.nx, config.ny);
  const int steps = config.steps_per_period();
  auto topology = warm ? warm->start().space->shared_topology() : Topology::build(reference);
  auto space = std::make_shared<const FunctionSpace>(deform_mesh(reference, U, config.shape_function()), topology);
  if (config.flow == FlowModel::zero) return zero_trajectory(space, steps);
  NavierStokesStepper stepper(space, config.flow_params(), BoundaryMode::channel, config.solver_options());
  PeriodicOptions periodic;
  periodic.tolerance = config.periodic_tolerance;
  periodic.max_cycles = config.max_cycles;
  const FlowField initial = warm ? warm_start(*warm, space) : FlowField::zero(space);
  return find_periodic_solution(stepper, initial, steps, periodic, warm);
}

DirectResult run_direct(const SimConfig& config, double horizon, const RunHooks& hooks) {
  config.validate();
  const int steps = config.steps_per_period();
  const double dt = 1.0 / steps;
  const double exact_count = horizon * steps;
  const long count = std::lround(exact_count);
  if (!(horizon > 0.0) || std::abs(exact_count - static_cast<double>(count)) > 1e-9 * std::max(1.0, exact_count)) {
    throw InvariantViolation("direct run: horizon must be a positive multiple of dt");
  }

  const Mesh reference = build_reference_mesh(config.half_length, config.half_height, config.nx, config.ny);
  const ShapeFunction shape = config.shape_function();
  const FlowParams params = config.flow_params();
  const bool zero_flow = config.flow == FlowModel::zero;
  const auto topology = Topology::build(reference);

  DirectResult result;
  double u = config.u0;
  if (u < 0.0) throw NegativeConcentration(u);
  auto space = std::make_shared<const FunctionSpace>(deform_mesh(reference, u, shape), topology);
  FlowField v = FlowField::zero(space);
  std::unique_ptr<NavierStokesStepper> stepper;
  if (!zero_flow) {
    stepper = std::make_unique<NavierStokesStepper>(space, params, BoundaryMode::channel, config.solver_options());
  }
  bool warned_pinch = false;
  result.samples.push_back({0.0, u});
  for (long k = 1; k <= count; ++k) {
    const double t = static_cast<double>(k) / steps;
    try {
      if (!zero_flow) {
        StepStats s;
        v = stepper->step(v, t, dt, nullptr, &s);
        result.stats.record(s);
      } else {
        v.time = t;
      }
      const double next = u + dt * config.epsilon * reaction(wall_shear_stress(v, params, config.sigma0), u);
      if (next != u) {
        space = std::make_shared<const FunctionSpace>(deform_mesh(reference, next, shape), topology);
        if (stepper) stepper->rebind(space);
        v.space = space;
      }
      u = next;
      if (!warned_pinch && near_pinch(reference, u, shape)) {
        warned_pinch = true;
        const std::string message = "direct run t = " + std::to_string(t) + ": wall displacement above " +
                                    std::to_string(kPinchWarningFraction) + " of the half-height";
        result.warnings.push_back(message);
        if (hooks.on_warning) hooks.on_warning(message);
      }
    } catch (Error& e) {
      e.add_context("direct step " + std::to_string(k) + " (t = " + std::to_string(t) + ")");
      throw;
    }
    if (k % steps == 0 || k == count) result.samples.push_back({t, u});
  }
  return result;
}

void write_history_csv(const std::vector<MacroRecord>& history, std::ostream& out) {
  out << "m,T,U,R_avg,residual,cycles,seconds\n";
  const auto old = out.precision(17);
  for (const auto& r : history) {
    out << r.m << ',' << r.T << ',' << r.U << ',' << r.R_avg << ',' << r.residual << ',' << r.cycles << ','
        << r.seconds << '\n';
  }
  out.precision(old);
}

void write_direct_csv(const std::vector<DirectSample>& samples, std::ostream& out) {
  out << "t,u\n";
  const auto old = out.precision(17);
  for (const auto& s : samples) out << s.t << ',' << s.u << '\n';
  out.precision(old);
}

}  // namespace plaque
