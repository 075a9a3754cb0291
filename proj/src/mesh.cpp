#include "plaque/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "plaque/errors.hpp"

namespace plaque {

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::inflow: return "inflow";
    case BoundaryTag::outflow: return "outflow";
    case BoundaryTag::wall_top: return "wall_top";
    case BoundaryTag::wall_bottom: return "wall_bottom";
  }
  return "unknown";
}

double Mesh::signed_area(int triangle) const {
  const auto& t = triangles[triangle];
  const Point& p0 = vertices[t[0]];
  const Point& p1 = vertices[t[1]];
  const Point& p2 = vertices[t[2]];
  return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

double Mesh::area() const {
  double total = 0.0;
  for (int k = 0; k < static_cast<int>(triangles.size()); ++k) total += signed_area(k);
  return total;
}

Point Mesh::centroid(int triangle) const {
  const auto& t = triangles[triangle];
  Point c;
  for (int v : t) {
    c.x += vertices[v].x / 3.0;
    c.y += vertices[v].y / 3.0;
  }
  return c;
}

ShapeFunction::ShapeFunction(std::string name, Rule rule)
    : name_(std::move(name)), rule_(std::move(rule)) {}

ShapeFunction ShapeFunction::gaussian() {
  return ShapeFunction("gaussian", [](double u, double x) { return u * std::exp(-x * x); });
}

double ShapeFunction::peak(double u, const Mesh& reference) const {
  double peak = 0.0;
  for (const auto& e : reference.boundary_edges) {
    if (!is_wall(e.tag)) continue;
    for (int v : e.v) peak = std::max(peak, rule_(u, reference.vertices[v].x));
  }
  return peak;
}

Mesh build_reference_mesh(double a, double b, int nx, int ny) {
  if (nx < 1 || ny < 1 || !(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("build_reference_mesh: need nx, ny >= 1 and a, b > 0");
  }
  Mesh mesh;
  mesh.half_length = a;
  mesh.half_height = b;
  const int stride = nx + 1;
  auto vid = [stride](int i, int j) { return j * stride + i; };

  mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    const double y = (j == 0) ? -b : (j == ny) ? b : -b + 2.0 * b * j / ny;
    for (int i = 0; i <= nx; ++i) {
      const double x = (i == 0) ? -a : (i == nx) ? a : -a + 2.0 * a * i / nx;
      mesh.vertices.push_back({x, y});
    }
  }

  // quad (i, j) owns triangles 2*(j*nx+i) (lower) and 2*(j*nx+i)+1 (upper)
  mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  }
  auto lower = [nx](int i, int j) { return 2 * (j * nx + i); };
  auto upper = [nx](int i, int j) { return 2 * (j * nx + i) + 1; };

  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({{vid(i, 0), vid(i + 1, 0)}, BoundaryTag::wall_bottom, lower(i, 0)});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({{vid(nx, j), vid(nx, j + 1)}, BoundaryTag::outflow, lower(nx - 1, j)});
  }
  for (int i = nx - 1; i >= 0; --i) {
    mesh.boundary_edges.push_back({{vid(i + 1, ny), vid(i, ny)}, BoundaryTag::wall_top, upper(i, ny - 1)});
  }
  for (int j = ny - 1; j >= 0; --j) {
    mesh.boundary_edges.push_back({{vid(0, j + 1), vid(0, j)}, BoundaryTag::inflow, upper(0, j)});
  }
  return mesh;
}

Mesh deform_mesh(const Mesh& reference, double u, const ShapeFunction& shape) {
  if (u < 0.0) throw NegativeConcentration(u);
  const double b = reference.half_height;
  const double peak = shape.peak(u, reference);
  if (peak >= b) throw DomainCollapse(peak, b);

  Mesh out = reference;
  for (auto& p : out.vertices) {
    const double gap = b - shape(u, p.x);
    p.y = (p.y / b) * gap;
  }
  return out;
}

bool near_pinch(const Mesh& reference, double u, const ShapeFunction& shape) {
  return shape.peak(u, reference) >= kPinchWarningFraction * reference.half_height;
}

std::vector<WallEdge> wall_edges(const Mesh& mesh) {
  std::vector<WallEdge> out;
  for (const auto& e : mesh.boundary_edges) {
    if (!is_wall(e.tag)) continue;
    const Point& p0 = mesh.vertices[e.v[0]];
    const Point& p1 = mesh.vertices[e.v[1]];
    const double dx = p1.x - p0.x, dy = p1.y - p0.y;
    const double len = std::hypot(dx, dy);
    out.push_back({e.v, e.tag, e.triangle, {dy / len, -dx / len}, len});
  }
  return out;
}

void write_vtk(const Mesh& mesh, std::ostream& out) {
  out << "# vtk DataFile Version 3.0\nplaque channel mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out.precision(17);
  out << "POINTS " << mesh.vertices.size() << " double\n";
  for (const auto& p : mesh.vertices) out << p.x << ' ' << p.y << " 0\n";
  out << "CELLS " << mesh.triangles.size() << ' ' << 4 * mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.triangles.size() << '\n';
  for (std::size_t k = 0; k < mesh.triangles.size(); ++k) out << "5\n";
}

}  // namespace plaque
