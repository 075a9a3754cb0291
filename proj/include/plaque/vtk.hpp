#pragma once

#include <iosfwd>

#include "plaque/fem.hpp"

namespace plaque {

/// Legacy VTK ASCII grid of the field's mesh with point data "velocity"
/// (vector) and "pressure" (scalar) at the vertices.
void write_field_vtk(const FlowField& field, std::ostream& out);

/// One row per velocity DOF and per pressure DOF:
/// kind,index,x,y,value with kind in {vx, vy, p}.
void write_dofs_csv(const FlowField& field, std::ostream& out);

}  // namespace plaque
