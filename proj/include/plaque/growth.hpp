#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "plaque/config.hpp"
#include "plaque/fem.hpp"
#include "plaque/periodic.hpp"

namespace plaque {

/// Normalized wall shear stress
///
///   sigma0^{-1} sum over wall edges of int rho nu (I - n n^T)(grad v + grad v^T) n ds,
///
/// with the gradient taken from the triangle owning each edge and two-point
/// Gauss quadrature per edge. Both walls of v's mesh are included.
Vec2 wall_shear_stress(const FlowField& v, const FlowParams& params, double sigma0);

/// R = (1 + u)^{-1} (1 + |sigma|^2)^{-1}. Throws NegativeConcentration for u < 0.
double reaction(const Vec2& sigma, double u);

/// dt * sum_{n=1..N} R(sigma(fields[n]), u), evaluated as a compensated sum
/// divided by N.
double period_averaged_reaction(const PeriodicTrajectory& trajectory, double u, const FlowParams& params,
                                double sigma0);

struct MacroRecord {
  int m = 0;
  double T = 0.0;
  double U = 0.0;
  /// reaction average that produced U (evaluated at U_{m-1})
  double R_avg = 0.0;
  /// periodic solve on Omega(U_{m-1})
  double residual = 0.0;
  int cycles = 0;
  double seconds = 0.0;
  /// H1 change of the end field over one extra period; negative when not checked
  double verification_change = -1.0;
  SolveStats stats;
};

struct MacroState {
  int m = 0;
  double T = 0.0;
  double U = 0.0;
  std::vector<MacroRecord> history;

  static MacroState initial(double u0);
};

/// U_m = U_{m-1} + dT * eps * R_avg, T_m = T_{m-1} + dT; appends a record.
MacroState macro_step(const MacroState& state, double r_avg, double macro_dt, double epsilon);

struct RunHooks {
  std::function<void(const MacroRecord&)> on_step;
  std::function<void(const std::string&)> on_warning;
  /// Periodic solution on Omega(U) used by the step leaving macro time T.
  std::function<void(double T, double U, const PeriodicTrajectory&)> on_trajectory;
};

struct MultiscaleResult {
  MacroState state;
  SolveStats stats;
  std::vector<std::string> warnings;
};

/// The multiscale loop: for m = 1..M deform the reference mesh to Omega(U_{m-1}),
/// find the periodic flow (warm-started from the previous macro step), average
/// the reaction over the period and take the explicit macro step.
MultiscaleResult run_multiscale(const SimConfig& config, const RunHooks& hooks = {});

/// Periodic flow on Omega(U) for the config's flow model and tolerances,
/// optionally warm-started from a trajectory on a mesh of the same topology.
PeriodicTrajectory periodic_flow_at(const SimConfig& config, double U, const PeriodicTrajectory* warm = nullptr);

struct DirectSample {
  double t = 0.0;
  double u = 0.0;
};

struct DirectResult {
  std::vector<DirectSample> samples;
  SolveStats stats;
  std::vector<std::string> warnings;
};

/// Resolved coupling over [0, horizon] with micro step config.dt, starting
/// from v = 0: per step advance v on Omega(u_k), update
/// u_{k+1} = u_k + dt eps R(sigma(v_{k+1}), u_k) and move the mesh to
/// Omega(u_{k+1}). Samples u at every whole period and at the end.
DirectResult run_direct(const SimConfig& config, double horizon, const RunHooks& hooks = {});

/// history.csv layout: m,T,U,R_avg,residual,cycles,seconds
void write_history_csv(const std::vector<MacroRecord>& history, std::ostream& out);
void write_direct_csv(const std::vector<DirectSample>& samples, std::ostream& out);

}  // namespace plaque
