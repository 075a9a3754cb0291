#include <doctest.h>

#include <cmath>
#include <sstream>

#include "plaque/errors.hpp"
#include "plaque/fem.hpp"
#include "plaque/vtk.hpp"

using namespace plaque;

namespace {

std::shared_ptr<const FunctionSpace> channel_space(int nx = 10, int ny = 4) {
  return std::make_shared<const FunctionSpace>(build_reference_mesh(5, 2, nx, ny));
}

Mesh single_triangle() {
  Mesh m;
  m.half_length = 1;
  m.half_height = 1;
  m.vertices = {{0.0, 0.0}, {2.0, 0.5}, {0.5, 1.5}};
  m.triangles = {{0, 1, 2}};
  m.boundary_edges = {{{0, 1}, BoundaryTag::wall_bottom, 0},
                      {{1, 2}, BoundaryTag::outflow, 0},
                      {{2, 0}, BoundaryTag::inflow, 0}};
  return m;
}

}  // namespace

TEST_CASE("space dimensions") {
  const auto space = channel_space(3, 2);
  const Mesh& m = space->mesh();
  const int nv = static_cast<int>(m.vertices.size());
  const int ne = space->topology().num_edges();
  // Euler: V - E + F = 1 for a disc
  CHECK(nv - ne + static_cast<int>(m.triangles.size()) == 1);
  CHECK(space->num_velocity_dofs() == 2 * (nv + ne));
  CHECK(space->num_pressure_dofs() == nv);
}

TEST_CASE("P2 mass matrix on one triangle matches the closed-form integrals") {
  const FunctionSpace space(single_triangle());
  const double area = space.mesh().signed_area(0);
  const auto& nodes = space.topology().element_nodes[0];
  // local order: vertices 0,1,2 then edges (01), (12), (20); vertex k is opposite edge (k+1, k+2)
  const double exact[6][6] = {
      {6, -1, -1, 0, -4, 0}, {-1, 6, -1, 0, 0, -4}, {-1, -1, 6, -4, 0, 0},
      {0, 0, -4, 32, 16, 16}, {-4, 0, 0, 16, 32, 16}, {0, -4, 0, 16, 16, 32},
  };
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      CHECK(space.mass().coeff(nodes[i], nodes[j]) == doctest::Approx(exact[i][j] * area / 180.0).epsilon(1e-13));
    }
  }
  CHECK(exact[0][0] * area / 180.0 == doctest::Approx(area / 30.0));
}

TEST_CASE("stiffness annihilates constants and mass integrates to the area") {
  const auto space = channel_space();
  const int nn = space->num_nodes();
  const std::vector<double> ones(static_cast<std::size_t>(nn), 1.0);
  for (double v : space->stiffness().multiply(ones)) CHECK(std::abs(v) < 1e-12);
  CHECK(space->mass().bilinear(ones, ones) == doctest::Approx(40.0).epsilon(1e-13));
}

TEST_CASE("divergence of divergence-free quadratic interpolants vanishes") {
  const auto space = std::make_shared<const FunctionSpace>(
      deform_mesh(build_reference_mesh(5, 2, 12, 4), 0.8, ShapeFunction::gaussian()));
  for (const auto& field : {interpolate(space, [](double, double y) { return Vec2{y, 0.0}; }),
                            interpolate(space, [](double x, double y) { return Vec2{x * x - y, -2.0 * x * y}; })}) {
    for (double v : space->divergence().multiply(field.velocity)) CHECK(std::abs(v) < 1e-12);
  }
  const auto compressive = interpolate(space, [](double x, double) { return Vec2{x, 0.0}; });
  CHECK(norm2(space->divergence().multiply(compressive.velocity)) > 1.0);
}

TEST_CASE("velocity gradient of an interpolated quadratic is exact") {
  const auto space = std::make_shared<const FunctionSpace>(
      deform_mesh(build_reference_mesh(5, 2, 7, 3), 0.5, ShapeFunction::gaussian()));
  const auto f = interpolate(space, [](double x, double y) { return Vec2{x * y + y * y, 3.0 * x - x * x}; });
  const Barycentric b{0.2, 0.3, 0.5};
  for (int t = 0; t < static_cast<int>(space->mesh().triangles.size()); t += 5) {
    const auto& tri = space->mesh().triangles[t];
    double x = 0.0, y = 0.0;
    for (int k = 0; k < 3; ++k) {
      x += b[k] * space->mesh().vertices[tri[k]].x;
      y += b[k] * space->mesh().vertices[tri[k]].y;
    }
    const Grad2 g = f.velocity_gradient(t, b);
    CHECK(g[0][0] == doctest::Approx(y));
    CHECK(g[0][1] == doctest::Approx(x + 2.0 * y));
    CHECK(g[1][0] == doctest::Approx(3.0 - 2.0 * x));
    CHECK(std::abs(g[1][1]) < 1e-12);
    const Vec2 v = f.velocity_at(t, b);
    CHECK(v.x == doctest::Approx(x * y + y * y));
  }
}

TEST_CASE("convection operator") {
  const auto space = channel_space(6, 3);
  const int nn = space->num_nodes();
  CHECK(norm_inf(assemble_convection(*space, FlowField::zero(space)).values()) == 0.0);

  // w = (1, 0), v = (x, 0): (w . grad) v = (1, 0), so N(w) v is the mass-weighted constant
  const auto w = interpolate(space, [](double, double) { return Vec2{1.0, 0.0}; });
  const auto v = interpolate(space, [](double x, double) { return Vec2{x, 0.0}; });
  const auto nv = assemble_convection(*space, w).multiply(v.velocity);
  const std::vector<double> ones(static_cast<std::size_t>(nn), 1.0);
  const auto m1 = space->mass().multiply(ones);
  for (int i = 0; i < nn; ++i) {
    CHECK(nv[i] == doctest::Approx(m1[i]).epsilon(1e-12));
    CHECK(std::abs(nv[nn + i]) < 1e-12);
  }
}

TEST_CASE("convection is skew for divergence-free w and v vanishing on the boundary") {
  for (const auto& dims : {std::array<int, 2>{1, 1}, std::array<int, 2>{6, 3}}) {
    const auto space = std::make_shared<const FunctionSpace>(
        deform_mesh(build_reference_mesh(5, 2, dims[0], dims[1]), 0.6, ShapeFunction::gaussian()));
    const int nn = space->num_nodes();
    std::vector<char> boundary(static_cast<std::size_t>(nn), 0);
    for (int tag = 0; tag < 4; ++tag) {
      for (int node : space->boundary_nodes(static_cast<BoundaryTag>(tag))) boundary[node] = 1;
    }
    FlowField v = FlowField::zero(space);
    for (int i = 0; i < nn; ++i) {
      if (boundary[i]) continue;
      v.velocity[i] = std::sin(1.0 + 3.0 * i);
      v.velocity[nn + i] = std::cos(2.0 * i);
    }
    const double vv = norm2(v.velocity) * norm2(v.velocity);
    REQUIRE(vv > 0.0);
    for (const auto& w : {interpolate(space, [](double, double y) { return Vec2{y, 0.0}; }),
                          interpolate(space, [](double x, double y) { return Vec2{x, -y}; })}) {
      const auto nv = assemble_convection(*space, w).multiply(v.velocity);
      double form = 0.0;
      for (int i = 0; i < 2 * nn; ++i) form += nv[i] * v.velocity[i];
      CHECK(std::abs(form) <= 1e-10 * vv);
    }
  }
}

TEST_CASE("convection Jacobian matches a finite difference of N(x) x") {
  const auto space = std::make_shared<const FunctionSpace>(
      deform_mesh(build_reference_mesh(5, 2, 5, 2), 0.7, ShapeFunction::gaussian()));
  const auto x = interpolate(space, [](double a, double b) { return Vec2{std::sin(a) + b, a * b}; });
  const auto d = interpolate(space, [](double a, double b) { return Vec2{b * b, std::cos(a)}; });
  const int nn = space->num_nodes();
  const auto& pattern = space->topology().scalar_pattern;
  const std::size_t nz = pattern.values().size();
  std::array<std::vector<double>, 4> blocks;
  for (auto& b : blocks) b.assign(nz, 0.0);
  assemble_convection_jacobian_values(*space, x.velocity, {blocks[0], blocks[1], blocks[2], blocks[3]});
  std::vector<double> conv(nz);
  assemble_convection_values(*space, x.velocity, conv);

  // J d = N(x) d + dN[d] x
  std::vector<double> jd(static_cast<std::size_t>(2 * nn), 0.0);
  const auto off = pattern.offsets();
  const auto cols = pattern.col_indices();
  for (int r = 0; r < nn; ++r) {
    for (int k = off[r]; k < off[r + 1]; ++k) {
      const int c = cols[k];
      for (int comp = 0; comp < 2; ++comp) {
        jd[comp * nn + r] += conv[k] * d.velocity[comp * nn + c];
        for (int e = 0; e < 2; ++e) jd[comp * nn + r] += blocks[2 * comp + e][k] * d.velocity[e * nn + c];
      }
    }
  }
  auto apply = [&](double h) {
    FlowField s = x;
    for (int i = 0; i < 2 * nn; ++i) s.velocity[i] += h * d.velocity[i];
    return assemble_convection(*space, s).multiply(s.velocity);
  };
  const auto plus = apply(1e-6), minus = apply(-1e-6);
  for (int i = 0; i < 2 * nn; ++i) CHECK(jd[i] == doctest::Approx((plus[i] - minus[i]) / 2e-6).epsilon(1e-6));
}

TEST_CASE("backflow form vanishes for outgoing flow") {
  const auto space = channel_space(6, 3);
  const auto& pattern = space->topology().scalar_pattern;
  std::vector<double> values(pattern.values().size());
  const auto out = interpolate(space, [](double, double y) { return Vec2{4.0 - y * y, 0.0}; });
  assemble_backflow_values(*space, out.velocity, values);
  CHECK(norm_inf(values) == 0.0);

  const auto back = interpolate(space, [](double, double) { return Vec2{-1.0, 0.0}; });
  assemble_backflow_values(*space, back.velocity, values);
  const std::vector<double> ones(static_cast<std::size_t>(space->num_nodes()), 1.0);
  // int_outflow min(w.n, 0) ds = -1 * length 4
  CHECK(pattern.bilinear(ones, ones) == 0.0);
  double total = 0.0;
  for (double v : values) total += v;
  CHECK(total == doctest::Approx(-4.0).epsilon(1e-13));
}

TEST_CASE("difference norms") {
  const auto space = channel_space();
  const auto u = interpolate(space, [](double x, double y) { return Vec2{x * y, y}; });
  CHECK(field_difference_norm(u, u, NormKind::l2) == 0.0);
  CHECK(field_difference_norm(u, u, NormKind::h1) == 0.0);
  const auto e = interpolate(space, [](double, double) { return Vec2{1.0, 0.0}; });
  const auto z = FlowField::zero(space);
  CHECK(field_difference_norm(e, z, NormKind::l2) == doctest::Approx(std::sqrt(40.0)).epsilon(1e-13));
  CHECK(field_difference_norm(e, z, NormKind::h1) == doctest::Approx(std::sqrt(40.0)).epsilon(1e-13));
  // H1 adds |grad (y, 0)|^2 = 1 over the area
  const auto g = interpolate(space, [](double, double y) { return Vec2{y, 0.0}; });
  CHECK(field_difference_norm(g, z, NormKind::h1) ==
        doctest::Approx(std::sqrt(40.0 * 4.0 / 3.0 + 40.0)).epsilon(1e-12));

  const auto other = std::make_shared<const FunctionSpace>(build_reference_mesh(5, 2, 3, 3));
  CHECK_THROWS_AS(field_difference_norm(e, FlowField::zero(other), NormKind::l2), DimensionMismatch);
  CHECK(field_difference_norm(u, z, NormKind::h1) >= field_difference_norm(u, z, NormKind::l2));
}

TEST_CASE("shared topology is checked") {
  const Mesh ref = build_reference_mesh(5, 2, 6, 2);
  const auto topo = Topology::build(ref);
  CHECK_NOTHROW(FunctionSpace(deform_mesh(ref, 1.0, ShapeFunction::gaussian()), topo));
  CHECK_THROWS_AS(FunctionSpace(build_reference_mesh(5, 2, 5, 2), topo), ConnectivityMismatch);
}

TEST_CASE("field exports") {
  const auto space = channel_space(2, 1);
  const auto f = interpolate(space, [](double x, double y) { return Vec2{x, y}; },
                             [](double x, double) { return 2.0 * x; });
  std::ostringstream vtk, csv;
  write_field_vtk(f, vtk);
  write_dofs_csv(f, csv);
  CHECK(vtk.str().find("VECTORS velocity double") != std::string::npos);
  CHECK(vtk.str().find("SCALARS pressure double") != std::string::npos);
  CHECK(csv.str().rfind("kind,index,x,y,value\n", 0) == 0);
  int rows = 0;
  std::istringstream in(csv.str());
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 1 + space->num_velocity_dofs() + space->num_pressure_dofs());
}
