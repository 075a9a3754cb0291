#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "plaque/fem.hpp"
#include "plaque/sparse.hpp"

namespace plaque {

/// Operator used for the nonlinear corrections.
enum class Linearization {
  /// Oseen operator A(w) with the convection frozen at the iterate.
  picard,
  /// A(w) plus the derivative of the convection in the advecting field.
  newton,
};

struct SolverOptions {
  /// Picard stops when the velocity increment (max norm) drops to this value.
  double picard_tolerance = 1e-9;
  Linearization linearization = Linearization::newton;
  int max_picard_iterations = 50;
  /// Reuse the factorized Picard operator across iterations and steps, and
  /// refactorize with the current iterate only when the increment ratio
  /// exceeds `refresh_ratio`. With false every iteration refactorizes.
  bool lagged_operator = true;
  /// Channel mode: add (rho/2) min(v.n, 0) v to the outflow traction, which
  /// vanishes unless fluid re-enters through the outflow. Without it the
  /// outflow is plain do-nothing.
  bool backflow_stabilization = true;
  /// Backtracking on the residual norm when a full correction does not reduce it.
  bool line_search = true;
  double refresh_ratio = 0.5;
};

struct StepStats {
  int picard_iterations = 0;
  int factorizations = 0;
  double last_increment = 0.0;
  /// ||B v_n||_2 of the returned velocity.
  double divergence_residual = 0.0;
};

/// Implicit Euler step of the incompressible Navier-Stokes equations,
///
///   rho (v_n - v_{n-1}) / dt + rho (v_n . grad) v_n - nu lap v_n + grad p_n = f_n,  div v_n = 0,
///
/// with the convection resolved by Picard iteration on the saddle-point system
/// [rho/dt M + rho N(w) + nu K, B^T; B, 0]. Each iteration applies
///
///   x_{k+1} = x_k + A(w_j)^{-1} (rhs - A(w_k) x_k),   j <= k,
///
/// where A(w_j) is the Oseen operator (Picard) or the Jacobian (Newton) at an
/// earlier iterate; with a lagged operator the last factorization is kept while
/// the increments contract fast enough. A correction that does not reduce the
/// residual norm is halved (up to eight times). The fixed point is the implicit
/// Euler solution either way. The system pattern, the
/// constant blocks and the factorization are cached; meshes with the same
/// topology can be swapped in with rebind().
class NavierStokesStepper {
 public:
  NavierStokesStepper(std::shared_ptr<const FunctionSpace> space, FlowParams params, BoundaryMode mode,
                      SolverOptions options = {});

  const std::shared_ptr<const FunctionSpace>& space() const { return space_; }
  const FlowParams& params() const { return params_; }
  BoundaryMode mode() const { return mode_; }
  const SolverOptions& options() const { return options_; }

  /// Move to a deformed mesh with the same connectivity. With a lagged
  /// operator the current factorization is kept as the first Picard operator.
  void rebind(std::shared_ptr<const FunctionSpace> space);

  /// One implicit Euler step from `prev` to time t_n. `guess` seeds the
  /// Picard iteration (defaults to `prev`).
  FlowField step(const FlowField& prev, double t_n, double dt, const FlowField* guess = nullptr,
                 StepStats* stats = nullptr);

  /// Velocity DOFs carrying Dirichlet data and their values at time t.
  std::vector<std::pair<int, double>> dirichlet_data(double t) const;
  /// Copy of `field` with its Dirichlet entries overwritten by the data at time t.
  FlowField with_boundary_data(FlowField field, double t) const;

 private:
  void build_layout();
  void build_constant_values(double dt);

  std::shared_ptr<const FunctionSpace> space_;
  FlowParams params_;
  BoundaryMode mode_;
  SolverOptions options_;

  // layout, valid for one topology
  std::shared_ptr<const Topology> layout_topology_;
  CsrMatrix system_;
  std::vector<std::array<int, 2>> scalar_to_system_;
  std::vector<std::array<int, 2>> divergence_to_system_;
  // (x-row, y-col) and (y-row, x-col) slots, Newton layout only
  std::vector<std::array<int, 2>> coupling_to_system_;
  std::vector<int> diagonal_slot_;
  std::vector<int> dirichlet_dofs_;
  int pinned_pressure_row_ = -1;

  // rho/dt M + nu K, B and B^T for the current space and dt
  std::vector<double> constant_values_;
  double constant_dt_ = -1.0;
  bool constant_valid_ = false;

  std::vector<double> convection_values_;
  std::vector<double> backflow_values_;
  std::array<std::vector<double>, 4> jacobian_values_;
  SparseLu lu_;
  bool lu_valid_ = false;
};

/// Convenience one-off step (builds a stepper per call).
FlowField micro_step(const FlowField& prev, double t_n, double dt, const FlowParams& params, BoundaryMode mode,
                     StepStats* stats = nullptr, SolverOptions options = {});

}  // namespace plaque
