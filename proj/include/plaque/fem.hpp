#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "plaque/mesh.hpp"
#include "plaque/sparse.hpp"

namespace plaque {

using Vec2 = Point;
/// Velocity gradient, g[i][j] = d v_i / d x_j.
using Grad2 = std::array<std::array<double, 2>, 2>;
using Barycentric = std::array<double, 3>;

/// Quadratic (P2) node layout shared by every mesh deformed from one reference.
/// Element nodes are the three vertices followed by the edge nodes (01), (12), (20);
/// edge e has global node index num_vertices + e.
struct Topology {
  int num_vertices = 0;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 6>> element_nodes;
  std::array<std::vector<int>, 4> boundary_nodes;  // indexed by BoundaryTag

  /// node x node pattern of every scalar P2 bilinear form, with per-element slots
  CsrMatrix scalar_pattern;
  std::vector<std::array<int, 36>> scalar_slots;
  /// vertex x (2 * nodes) pattern of the divergence form, with per-element slots
  /// laid out as [vertex a][component c][node b] -> a*12 + c*6 + b
  CsrMatrix divergence_pattern;
  std::vector<std::array<int, 36>> divergence_slots;

  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_nodes() const { return num_vertices + num_edges(); }

  static std::shared_ptr<const Topology> build(const Mesh& mesh);
};

/// Taylor-Hood space on one mesh: P2 velocity (two components), P1 pressure.
/// Velocity DOF (node, c) is c * num_nodes + node. Unit-parameter scalar mass
/// and stiffness and the divergence operator are assembled on construction.
class FunctionSpace {
 public:
  explicit FunctionSpace(Mesh mesh);
  /// Throws ConnectivityMismatch if `mesh` does not share the topology's triangles.
  FunctionSpace(Mesh mesh, std::shared_ptr<const Topology> topology);

  const Mesh& mesh() const { return mesh_; }
  const Topology& topology() const { return *topology_; }
  const std::shared_ptr<const Topology>& shared_topology() const { return topology_; }

  int num_nodes() const { return topology_->num_nodes(); }
  int num_velocity_dofs() const { return 2 * num_nodes(); }
  int num_pressure_dofs() const { return topology_->num_vertices; }

  Point node_position(int node) const;
  const std::vector<int>& boundary_nodes(BoundaryTag tag) const {
    return topology_->boundary_nodes[static_cast<int>(tag)];
  }

  const CsrMatrix& mass() const { return mass_; }
  const CsrMatrix& stiffness() const { return stiffness_; }
  /// B[q][(c, j)] = -int psi_q d(phi_j)/dx_c
  const CsrMatrix& divergence() const { return divergence_; }

  /// Gradients of the barycentric coordinates and area of a triangle.
  std::array<Vec2, 3> barycentric_gradients(int triangle) const;

  bool same_connectivity(const FunctionSpace& other) const {
    return topology_ == other.topology_ || topology_->triangles == other.topology_->triangles;
  }

 private:
  void assemble();

  Mesh mesh_;
  std::shared_ptr<const Topology> topology_;
  CsrMatrix mass_;
  CsrMatrix stiffness_;
  CsrMatrix divergence_;
};

/// Flow coefficients on one space; immutable once built by a solver.
struct FlowField {
  std::shared_ptr<const FunctionSpace> space;
  std::vector<double> velocity;  // [vx at nodes..., vy at nodes...]
  std::vector<double> pressure;  // at vertices
  double time = 0.0;

  static FlowField zero(std::shared_ptr<const FunctionSpace> space, double time = 0.0);

  Vec2 node_velocity(int node) const;
  Vec2 velocity_at(int triangle, const Barycentric& bary) const;
  Grad2 velocity_gradient(int triangle, const Barycentric& bary) const;
};

/// Interpolate a vector field at the P2 nodes.
FlowField interpolate(std::shared_ptr<const FunctionSpace> space,
                      const std::function<Vec2(double x, double y)>& v,
                      const std::function<double(double x, double y)>& p = {}, double time = 0.0);

struct FlowParams {
  double density = 1.0;
  double viscosity = 0.04;
  /// Period-1 body force; empty means f = 0.
  std::function<Vec2(double t, double x, double y)> body_force;
  /// Period-1 axial inflow velocity at height y; empty means no inflow.
  std::function<double(double t, double y)> inflow;
};

/// amplitude * (1 - y^2 / b^2) * sin^2(pi t)
std::function<double(double, double)> pulsatile_inflow(double amplitude, double half_height);
/// amplitude * (1 - y^2 / b^2), constant in time
std::function<double(double, double)> steady_inflow(double amplitude, double half_height);

enum class BoundaryMode {
  /// Dirichlet inflow, no-slip walls, do-nothing outflow.
  channel,
  /// Homogeneous Dirichlet on the whole boundary, one pressure DOF pinned to zero.
  enclosed,
};

/// Unit-parameter vector operators: M and K are block-diagonal over the two
/// velocity components, B maps velocity to the pressure test space.
struct ConstantOperators {
  CsrMatrix mass;
  CsrMatrix stiffness;
  CsrMatrix divergence;
};
ConstantOperators assemble_constant_operators(const FunctionSpace& space);

/// Scalar convection form N(w)[i][j] = int phi_i (w . grad phi_j), written into
/// `values` laid out on topology().scalar_pattern.
void assemble_convection_values(const FunctionSpace& space, std::span<const double> w_velocity,
                                std::span<double> values);
/// Derivative of the convection term in the advecting field: block (c, d),
/// stored at values[2c + d] on topology().scalar_pattern, is
/// int phi_i phi_j d(x_c)/d(x_d). N(x) + this is the Jacobian of N(x) x.
void assemble_convection_jacobian_values(const FunctionSpace& space, std::span<const double> x,
                                         const std::array<std::span<double>, 4>& values);
/// Outflow backflow form int_{outflow} min(w . n, 0) phi_i phi_j ds on
/// topology().scalar_pattern (zero wherever the flow leaves the domain).
/// `jacobian` optionally receives the derivative of min(w . n, 0) w in w:
/// block (c, d) at index 2c + d is int_{w.n<0} w_c n_d phi_i phi_j ds.
void assemble_backflow_values(const FunctionSpace& space, std::span<const double> w, std::span<double> values,
                              const std::array<std::span<double>, 4>* jacobian = nullptr);
/// Vector (block-diagonal) convection operator N(w).
CsrMatrix assemble_convection(const FunctionSpace& space, const FlowField& w);

/// int f(t, .) . phi_i for each velocity DOF.
std::vector<double> assemble_body_force(const FunctionSpace& space, const FlowParams& params, double t);

enum class NormKind { l2, h1 };
/// L2 = sqrt(e^T M e), H1 = sqrt(e^T (M + K) e) on the velocity difference.
double field_difference_norm(const FlowField& u, const FlowField& v, NormKind which);

/// Coordinates of the P2 nodes in a triangle, one entry per element node.
const std::array<Barycentric, 6>& p2_node_barycentrics();

}  // namespace plaque
