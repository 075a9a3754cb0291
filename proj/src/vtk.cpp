#include "plaque/vtk.hpp"

#include <ostream>

namespace plaque {

void write_field_vtk(const FlowField& field, std::ostream& out) {
  const Mesh& mesh = field.space->mesh();
  write_vtk(mesh, out);
  const auto nv = mesh.vertices.size();
  out << "POINT_DATA " << nv << '\n';
  out << "VECTORS velocity double\n";
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec2 v = field.node_velocity(static_cast<int>(i));
    out << v.x << ' ' << v.y << " 0\n";
  }
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < nv; ++i) out << field.pressure[i] << '\n';
}

void write_dofs_csv(const FlowField& field, std::ostream& out) {
  const auto old = out.precision(17);
  const int nn = field.space->num_nodes();
  out << "kind,index,x,y,value\n";
  for (int c = 0; c < 2; ++c) {
    for (int node = 0; node < nn; ++node) {
      const Point p = field.space->node_position(node);
      out << (c == 0 ? "vx" : "vy") << ',' << node << ',' << p.x << ',' << p.y << ','
          << field.velocity[c * nn + node] << '\n';
    }
  }
  for (std::size_t q = 0; q < field.pressure.size(); ++q) {
    const Point p = field.space->node_position(static_cast<int>(q));
    out << "p," << q << ',' << p.x << ',' << p.y << ',' << field.pressure[q] << '\n';
  }
  out.precision(old);
}

}  // namespace plaque
