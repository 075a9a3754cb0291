#include "plaque/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plaque/errors.hpp"

namespace plaque {

NavierStokesStepper::NavierStokesStepper(std::shared_ptr<const FunctionSpace> space, FlowParams params,
                                         BoundaryMode mode, SolverOptions options)
    : space_(std::move(space)), params_(std::move(params)), mode_(mode), options_(options) {
  if (!(params_.density > 0.0) || !(params_.viscosity > 0.0)) {
    throw InvariantViolation("flow parameters: density and viscosity must be positive");
  }
  build_layout();
}

void NavierStokesStepper::rebind(std::shared_ptr<const FunctionSpace> space) {
  if (!space->same_connectivity(*space_)) {
    throw ConnectivityMismatch("stepper rebind: mesh connectivity changed");
  }
  space_ = std::move(space);
  if (space_->shared_topology() != layout_topology_) build_layout();
  constant_valid_ = false;
  // a factorization from the previous mesh stays usable as the lagged operator
  if (!options_.lagged_operator) lu_valid_ = false;
}

void NavierStokesStepper::build_layout() {
  const auto& topo = space_->topology();
  layout_topology_ = space_->shared_topology();
  const int nn = topo.num_nodes();
  const int nv = topo.num_vertices;
  const int n = 2 * nn + nv;

  const auto& sp = topo.scalar_pattern;
  const auto& dp = topo.divergence_pattern;
  Triplets t(n, n);
  t.entries.reserve(2 * sp.values().size() + 2 * dp.values().size() + nv);
  const bool newton = options_.linearization == Linearization::newton;
  for (int r = 0; r < sp.rows(); ++r) {
    for (int k = sp.offsets()[r]; k < sp.offsets()[r + 1]; ++k) {
      const int c = sp.col_indices()[k];
      t.add(r, c, 0.0);
      t.add(nn + r, nn + c, 0.0);
      if (newton) {
        t.add(r, nn + c, 0.0);
        t.add(nn + r, c, 0.0);
      }
    }
  }
  for (int q = 0; q < dp.rows(); ++q) {
    for (int k = dp.offsets()[q]; k < dp.offsets()[q + 1]; ++k) {
      const int c = dp.col_indices()[k];
      t.add(2 * nn + q, c, 0.0);
      t.add(c, 2 * nn + q, 0.0);
    }
  }
  for (int q = 0; q < nv; ++q) t.add(2 * nn + q, 2 * nn + q, 0.0);
  system_ = to_csr(t);

  scalar_to_system_.resize(sp.values().size());
  for (int r = 0; r < sp.rows(); ++r) {
    for (int k = sp.offsets()[r]; k < sp.offsets()[r + 1]; ++k) {
      const int c = sp.col_indices()[k];
      scalar_to_system_[k] = {system_.slot(r, c), system_.slot(nn + r, nn + c)};
    }
  }
  coupling_to_system_.clear();
  if (newton) {
    coupling_to_system_.resize(sp.values().size());
    for (int r = 0; r < sp.rows(); ++r) {
      for (int k = sp.offsets()[r]; k < sp.offsets()[r + 1]; ++k) {
        const int c = sp.col_indices()[k];
        coupling_to_system_[k] = {system_.slot(r, nn + c), system_.slot(nn + r, c)};
      }
    }
  }
  divergence_to_system_.resize(dp.values().size());
  for (int q = 0; q < dp.rows(); ++q) {
    for (int k = dp.offsets()[q]; k < dp.offsets()[q + 1]; ++k) {
      const int c = dp.col_indices()[k];
      divergence_to_system_[k] = {system_.slot(2 * nn + q, c), system_.slot(c, 2 * nn + q)};
    }
  }
  diagonal_slot_.resize(n);
  for (int r = 0; r < n; ++r) diagonal_slot_[r] = system_.slot(r, r);

  std::vector<char> fixed(static_cast<std::size_t>(2 * nn), 0);
  auto mark = [&](BoundaryTag tag) {
    for (int node : space_->boundary_nodes(tag)) fixed[node] = fixed[nn + node] = 1;
  };
  mark(BoundaryTag::wall_top);
  mark(BoundaryTag::wall_bottom);
  mark(BoundaryTag::inflow);
  if (mode_ == BoundaryMode::enclosed) mark(BoundaryTag::outflow);
  dirichlet_dofs_.clear();
  for (int i = 0; i < 2 * nn; ++i)
    if (fixed[i]) dirichlet_dofs_.push_back(i);
  pinned_pressure_row_ = (mode_ == BoundaryMode::enclosed) ? 2 * nn : -1;

  convection_values_.assign(sp.values().size(), 0.0);
  backflow_values_.assign(sp.values().size(), 0.0);
  for (auto& j : jacobian_values_) j.assign(newton ? sp.values().size() : 0, 0.0);
  constant_valid_ = false;
  lu_valid_ = false;
}

void NavierStokesStepper::build_constant_values(double dt) {
  if (constant_valid_ && constant_dt_ == dt) return;
  const auto& mass = space_->mass().values();
  const auto& stiff = space_->stiffness().values();
  const auto& div = space_->divergence().values();
  constant_values_.assign(system_.values().size(), 0.0);
  const double m_scale = params_.density / dt;
  const double k_scale = params_.viscosity;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    const double v = m_scale * mass[k] + k_scale * stiff[k];
    constant_values_[scalar_to_system_[k][0]] += v;
    constant_values_[scalar_to_system_[k][1]] += v;
  }
  for (std::size_t k = 0; k < div.size(); ++k) {
    constant_values_[divergence_to_system_[k][0]] += div[k];
    constant_values_[divergence_to_system_[k][1]] += div[k];
  }
  if (constant_dt_ != dt) lu_valid_ = false;
  constant_dt_ = dt;
  constant_valid_ = true;
}

std::vector<std::pair<int, double>> NavierStokesStepper::dirichlet_data(double t) const {
  const int nn = space_->num_nodes();
  std::vector<double> value(static_cast<std::size_t>(2 * nn), 0.0);
  if (mode_ == BoundaryMode::channel && params_.inflow) {
    for (int node : space_->boundary_nodes(BoundaryTag::inflow)) {
      value[node] = params_.inflow(t, space_->node_position(node).y);
    }
  }
  // no-slip wins at the inflow corners
  for (auto tag : {BoundaryTag::wall_top, BoundaryTag::wall_bottom}) {
    for (int node : space_->boundary_nodes(tag)) value[node] = value[nn + node] = 0.0;
  }
  std::vector<std::pair<int, double>> out;
  out.reserve(dirichlet_dofs_.size());
  for (int dof : dirichlet_dofs_) out.emplace_back(dof, value[dof]);
  return out;
}

FlowField NavierStokesStepper::with_boundary_data(FlowField field, double t) const {
  for (const auto& [dof, v] : dirichlet_data(t)) field.velocity[dof] = v;
  field.time = t;
  return field;
}

FlowField NavierStokesStepper::step(const FlowField& prev, double t_n, double dt, const FlowField* guess,
                                    StepStats* stats) {
  if (!(dt > 0.0)) throw InvariantViolation("micro step: dt must be positive");
  if (prev.velocity.size() != static_cast<std::size_t>(space_->num_velocity_dofs()) ||
      prev.pressure.size() != static_cast<std::size_t>(space_->num_pressure_dofs())) {
    throw DimensionMismatch("micro step: previous field does not match the space");
  }
  build_constant_values(dt);

  const int nn = space_->num_nodes();
  const int nu = 2 * nn;
  const int n = system_.rows();
  const double rho = params_.density;

  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  {
    const auto& m = space_->mass();
    const double s = rho / dt;
    for (int c = 0; c < 2; ++c) {
      std::span<const double> vc(prev.velocity.data() + c * nn, static_cast<std::size_t>(nn));
      std::span<double> rc(rhs.data() + c * nn, static_cast<std::size_t>(nn));
      m.multiply(vc, rc);
      for (double& r : rc) r *= s;
    }
    if (params_.body_force) {
      const auto f = assemble_body_force(*space_, params_, t_n);
      for (int i = 0; i < nu; ++i) rhs[i] += f[i];
    }
  }
  const auto bc = dirichlet_data(t_n);
  for (const auto& [dof, v] : bc) rhs[dof] = v;
  if (pinned_pressure_row_ >= 0) rhs[pinned_pressure_row_] = 0.0;

  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  {
    const FlowField& seed = guess ? *guess : prev;
    if (seed.velocity.size() != static_cast<std::size_t>(nu) ||
        seed.pressure.size() != static_cast<std::size_t>(n - nu)) {
      throw DimensionMismatch("micro step: guess size");
    }
    std::copy(seed.velocity.begin(), seed.velocity.end(), x.begin());
    std::copy(seed.pressure.begin(), seed.pressure.end(), x.begin() + nu);
  }
  for (const auto& [dof, v] : bc) x[dof] = v;

  constexpr int kMaxHalvings = 8;
  auto values = system_.values();
  const auto offsets = system_.offsets();
  auto replace_row = [&](int row) {
    for (int k = offsets[row]; k < offsets[row + 1]; ++k) values[k] = 0.0;
    values[diagonal_slot_[row]] = 1.0;
  };

  const bool backflow = mode_ == BoundaryMode::channel && options_.backflow_stabilization;
  // A(x) into values, residual rhs - A(x) x; returns the residual 2-norm
  auto evaluate = [&](const std::vector<double>& state, std::vector<double>& res) {
    const std::span<const double> vel(state.data(), nu);
    assemble_convection_values(*space_, vel, convection_values_);
    std::copy(constant_values_.begin(), constant_values_.end(), values.begin());
    if (backflow) assemble_backflow_values(*space_, vel, backflow_values_);
    for (std::size_t k = 0; k < convection_values_.size(); ++k) {
      double v = rho * convection_values_[k];
      if (backflow) v -= 0.5 * rho * backflow_values_[k];
      values[scalar_to_system_[k][0]] += v;
      values[scalar_to_system_[k][1]] += v;
    }
    for (const auto& [dof, v] : bc) replace_row(dof);
    if (pinned_pressure_row_ >= 0) replace_row(pinned_pressure_row_);
    system_.multiply(state, res);
    for (int i = 0; i < n; ++i) res[i] = rhs[i] - res[i];
    return norm2(res);
  };

  std::vector<double> residual(static_cast<std::size_t>(n));
  std::vector<double> trial(static_cast<std::size_t>(n));
  std::vector<double> trial_residual(static_cast<std::size_t>(n));
  double residual_norm = evaluate(x, residual);
  double increment = std::numeric_limits<double>::infinity();
  double previous_increment = std::numeric_limits<double>::infinity();
  bool refresh = !options_.lagged_operator || !lu_valid_;
  int iterations = 0;
  int factorizations = 0;
  while (iterations < options_.max_picard_iterations) {
    if (refresh) {
      if (options_.linearization == Linearization::newton) {
        assemble_convection_jacobian_values(
            *space_, std::span<const double>(x.data(), nu),
            {jacobian_values_[0], jacobian_values_[1], jacobian_values_[2], jacobian_values_[3]});
        auto add_blocks = [&](const std::array<std::vector<double>, 4>& blocks, double scale) {
          for (std::size_t k = 0; k < convection_values_.size(); ++k) {
            values[scalar_to_system_[k][0]] += scale * blocks[0][k];
            values[coupling_to_system_[k][0]] += scale * blocks[1][k];
            values[coupling_to_system_[k][1]] += scale * blocks[2][k];
            values[scalar_to_system_[k][1]] += scale * blocks[3][k];
          }
        };
        add_blocks(jacobian_values_, rho);
        if (backflow) {
          const std::array<std::span<double>, 4> spans{jacobian_values_[0], jacobian_values_[1],
                                                       jacobian_values_[2], jacobian_values_[3]};
          assemble_backflow_values(*space_, std::span<const double>(x.data(), nu), backflow_values_, &spans);
          add_blocks(jacobian_values_, -0.5 * rho);
        }
        for (const auto& [dof, v] : bc) replace_row(dof);
      }
      lu_valid_ = false;
      lu_.factorize(system_);
      lu_valid_ = true;
      ++factorizations;
    }
    const auto correction = lu_.solve(residual);
    ++iterations;

    double full = 0.0;
    for (int i = 0; i < nu; ++i) full = std::max(full, std::abs(correction[i]));
    if (full <= options_.picard_tolerance) {
      for (int i = 0; i < n; ++i) x[i] += correction[i];
      increment = full;
      break;
    }

    // backtracking on the residual norm; the full step is always tried first
    double lambda = 1.0;
    double trial_norm = 0.0;
    for (int halvings = 0;; ++halvings) {
      for (int i = 0; i < n; ++i) trial[i] = x[i] + lambda * correction[i];
      trial_norm = evaluate(trial, trial_residual);
      if (!options_.line_search || trial_norm <= (1.0 - 1e-4 * lambda) * residual_norm ||
          halvings == kMaxHalvings) {
        break;
      }
      lambda *= 0.5;
    }
    increment = 0.0;
    for (int i = 0; i < nu; ++i) increment = std::max(increment, std::abs(lambda * correction[i]));
    x.swap(trial);
    residual.swap(trial_residual);
    residual_norm = trial_norm;

    refresh = !options_.lagged_operator || lambda < 1.0 || increment > options_.refresh_ratio * previous_increment;
    previous_increment = increment;
  }
  if (!(increment <= options_.picard_tolerance)) throw NonlinearDivergence(iterations, increment);
  // the corrections carry round-off into the Dirichlet rows
  for (const auto& [dof, v] : bc) x[dof] = v;

  FlowField out;
  out.space = space_;
  out.time = t_n;
  out.velocity.assign(x.begin(), x.begin() + nu);
  out.pressure.assign(x.begin() + nu, x.end());

  if (stats) {
    stats->picard_iterations = iterations;
    stats->factorizations = factorizations;
    stats->last_increment = increment;
    stats->divergence_residual = norm2(space_->divergence().multiply(out.velocity));
  }
  return out;
}

FlowField micro_step(const FlowField& prev, double t_n, double dt, const FlowParams& params, BoundaryMode mode,
                     StepStats* stats, SolverOptions options) {
  NavierStokesStepper stepper(prev.space, params, mode, options);
  return stepper.step(prev, t_n, dt, nullptr, stats);
}

}  // namespace plaque
