#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace plaque {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryTag { inflow, outflow, wall_top, wall_bottom };

const char* to_string(BoundaryTag tag);
inline bool is_wall(BoundaryTag tag) {
  return tag == BoundaryTag::wall_top || tag == BoundaryTag::wall_bottom;
}

/// Boundary edge stored counterclockwise around the domain, so the outward
/// normal is the edge direction rotated by -90 degrees.
struct BoundaryEdge {
  std::array<int, 2> v{};
  BoundaryTag tag = BoundaryTag::inflow;
  int triangle = -1;
};

/// Triangulated channel [-a, a] x [-(b - gamma), b - gamma].
/// Triangles are counterclockwise.
struct Mesh {
  double half_length = 0.0;
  double half_height = 0.0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;

  double signed_area(int triangle) const;
  double area() const;
  Point centroid(int triangle) const;
};

/// Wall height reduction gamma(u, x). The default is the Gaussian bump u * exp(-x^2).
class ShapeFunction {
 public:
  using Rule = std::function<double(double u, double x)>;

  ShapeFunction(std::string name, Rule rule);
  static ShapeFunction gaussian();

  double operator()(double u, double x) const { return rule_(u, x); }
  const std::string& name() const { return name_; }
  /// Largest height reduction over the wall vertices of `reference`.
  double peak(double u, const Mesh& reference) const;

 private:
  std::string name_;
  Rule rule_;
};

/// Structured triangulation of [-a,a]x[-b,b]: nx*ny quads,
/// each split along its (lower-left, upper-right) diagonal.
Mesh build_reference_mesh(double a, double b, int nx, int ny);

/// Front tracking: (x, y) -> (x, y * (b - gamma(U, x)) / b).
/// Throws DomainCollapse when the peak reduction reaches b.
Mesh deform_mesh(const Mesh& reference, double u, const ShapeFunction& shape);

/// Fraction of the half-height above which the channel counts as nearly pinched.
inline constexpr double kPinchWarningFraction = 0.95;
bool near_pinch(const Mesh& reference, double u, const ShapeFunction& shape);

struct WallEdge {
  std::array<int, 2> v{};
  BoundaryTag tag = BoundaryTag::wall_top;
  int triangle = -1;
  Point normal;
  double length = 0.0;
};

std::vector<WallEdge> wall_edges(const Mesh& mesh);

/// Legacy VTK ASCII unstructured grid.
void write_vtk(const Mesh& mesh, std::ostream& out);

}  // namespace plaque
