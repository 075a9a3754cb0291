#include "plaque/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "p2_basis.hpp"
#include "plaque/errors.hpp"

namespace plaque {

namespace {

CsrMatrix pattern_from(int rows, int cols, const std::vector<std::pair<int, int>>& pairs) {
  Triplets t(rows, cols);
  t.entries.reserve(pairs.size());
  for (const auto& [r, c] : pairs) t.add(r, c, 0.0);
  return to_csr(t);
}

}  // namespace

std::shared_ptr<const Topology> Topology::build(const Mesh& mesh) {
  auto topo = std::make_shared<Topology>();
  const int nv = static_cast<int>(mesh.vertices.size());
  topo->num_vertices = nv;
  topo->triangles = mesh.triangles;

  // unique edges, numbered in order of first appearance
  struct Key {
    int lo, hi, tri, local;
  };
  std::vector<Key> keys;
  keys.reserve(mesh.triangles.size() * 3);
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.triangles[t][p2::kEdgeVertices[e][0]];
      const int b = mesh.triangles[t][p2::kEdgeVertices[e][1]];
      keys.push_back({std::min(a, b), std::max(a, b), t, e});
    }
  }
  std::vector<int> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return std::pair(keys[i].lo, keys[i].hi) < std::pair(keys[j].lo, keys[j].hi);
  });
  std::vector<int> edge_of_key(keys.size(), -1);
  std::vector<int> first_key_of_group;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& cur = keys[order[k]];
    if (k == 0 || cur.lo != keys[order[k - 1]].lo || cur.hi != keys[order[k - 1]].hi) {
      first_key_of_group.push_back(order[k]);
    }
    edge_of_key[order[k]] = static_cast<int>(first_key_of_group.size()) - 1;
  }
  // renumber groups by first appearance for a stable, mesh-ordered numbering
  std::vector<int> group_rank(first_key_of_group.size());
  {
    std::vector<int> idx(first_key_of_group.size());
    for (std::size_t g = 0; g < idx.size(); ++g) idx[g] = static_cast<int>(g);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return first_key_of_group[a] < first_key_of_group[b]; });
    for (std::size_t r = 0; r < idx.size(); ++r) group_rank[idx[r]] = static_cast<int>(r);
  }
  topo->edges.resize(first_key_of_group.size());
  for (std::size_t g = 0; g < first_key_of_group.size(); ++g) {
    const auto& k = keys[first_key_of_group[g]];
    topo->edges[group_rank[g]] = {k.lo, k.hi};
  }
  topo->element_nodes.resize(mesh.triangles.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const auto& key = keys[k];
    auto& nodes = topo->element_nodes[key.tri];
    for (int i = 0; i < 3; ++i) nodes[i] = mesh.triangles[key.tri][i];
    nodes[3 + key.local] = nv + group_rank[edge_of_key[k]];
  }

  for (const auto& be : mesh.boundary_edges) {
    const auto key = std::pair(std::min(be.v[0], be.v[1]), std::max(be.v[0], be.v[1]));
    int node = -1;
    const auto& tri_nodes = topo->element_nodes[be.triangle];
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.triangles[be.triangle][p2::kEdgeVertices[e][0]];
      const int b = mesh.triangles[be.triangle][p2::kEdgeVertices[e][1]];
      if (std::pair(std::min(a, b), std::max(a, b)) == key) node = tri_nodes[3 + e];
    }
    if (node < 0) throw ConnectivityMismatch("boundary edge not found in its triangle");
    auto& list = topo->boundary_nodes[static_cast<int>(be.tag)];
    list.push_back(be.v[0]);
    list.push_back(be.v[1]);
    list.push_back(node);
  }
  for (auto& list : topo->boundary_nodes) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  const int nn = topo->num_nodes();
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(topo->element_nodes.size() * 36);
  for (const auto& nodes : topo->element_nodes) {
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) pairs.emplace_back(nodes[a], nodes[b]);
  }
  topo->scalar_pattern = pattern_from(nn, nn, pairs);
  pairs.clear();
  for (const auto& nodes : topo->element_nodes) {
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 6; ++b) pairs.emplace_back(nodes[a], c * nn + nodes[b]);
  }
  topo->divergence_pattern = pattern_from(nv, 2 * nn, pairs);

  topo->scalar_slots.resize(topo->element_nodes.size());
  topo->divergence_slots.resize(topo->element_nodes.size());
  for (std::size_t t = 0; t < topo->element_nodes.size(); ++t) {
    const auto& nodes = topo->element_nodes[t];
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) topo->scalar_slots[t][a * 6 + b] = topo->scalar_pattern.slot(nodes[a], nodes[b]);
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 6; ++b)
          topo->divergence_slots[t][a * 12 + c * 6 + b] =
              topo->divergence_pattern.slot(nodes[a], c * nn + nodes[b]);
  }
  return topo;
}

FunctionSpace::FunctionSpace(Mesh mesh) : mesh_(std::move(mesh)), topology_(Topology::build(mesh_)) {
  assemble();
}

FunctionSpace::FunctionSpace(Mesh mesh, std::shared_ptr<const Topology> topology)
    : mesh_(std::move(mesh)), topology_(std::move(topology)) {
  if (!topology_ || topology_->triangles != mesh_.triangles ||
      topology_->num_vertices != static_cast<int>(mesh_.vertices.size())) {
    throw ConnectivityMismatch("mesh connectivity differs from the shared topology");
  }
  assemble();
}

Point FunctionSpace::node_position(int node) const {
  const int nv = topology_->num_vertices;
  if (node < nv) return mesh_.vertices[node];
  const auto& e = topology_->edges[node - nv];
  const Point& p = mesh_.vertices[e[0]];
  const Point& q = mesh_.vertices[e[1]];
  return {0.5 * (p.x + q.x), 0.5 * (p.y + q.y)};
}

std::array<Vec2, 3> FunctionSpace::barycentric_gradients(int triangle) const {
  const auto& t = mesh_.triangles[triangle];
  const Point& p0 = mesh_.vertices[t[0]];
  const Point& p1 = mesh_.vertices[t[1]];
  const Point& p2 = mesh_.vertices[t[2]];
  const double two_area = 2.0 * mesh_.signed_area(triangle);
  return {Vec2{(p1.y - p2.y) / two_area, (p2.x - p1.x) / two_area},
          Vec2{(p2.y - p0.y) / two_area, (p0.x - p2.x) / two_area},
          Vec2{(p0.y - p1.y) / two_area, (p1.x - p0.x) / two_area}};
}

void FunctionSpace::assemble() {
  const auto& topo = *topology_;
  mass_ = topo.scalar_pattern;
  stiffness_ = topo.scalar_pattern;
  divergence_ = topo.divergence_pattern;
  auto m = mass_.values();
  auto k = stiffness_.values();
  auto d = divergence_.values();
  std::fill(m.begin(), m.end(), 0.0);
  std::fill(k.begin(), k.end(), 0.0);
  std::fill(d.begin(), d.end(), 0.0);

  const auto& quad = p2::quadrature();
  const auto& tab = p2::tabulation();
  for (int t = 0; t < static_cast<int>(mesh_.triangles.size()); ++t) {
    const double area = mesh_.signed_area(t);
    const auto gl = barycentric_gradients(t);
    const auto& ss = topo.scalar_slots[t];
    const auto& ds = topo.divergence_slots[t];
    for (int q = 0; q < p2::kQuadPoints; ++q) {
      const double w = quad[q].weight * area;
      const auto& phi = tab.phi[q];
      std::array<Vec2, 6> grad{};
      for (int a = 0; a < 6; ++a)
        for (int l = 0; l < 3; ++l) {
          grad[a].x += tab.dphi[q][a][l] * gl[l].x;
          grad[a].y += tab.dphi[q][a][l] * gl[l].y;
        }
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          m[ss[a * 6 + b]] += w * phi[a] * phi[b];
          k[ss[a * 6 + b]] += w * (grad[a].x * grad[b].x + grad[a].y * grad[b].y);
        }
      }
      const auto& lam = quad[q].bary;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 6; ++b) {
          d[ds[a * 12 + b]] -= w * lam[a] * grad[b].x;
          d[ds[a * 12 + 6 + b]] -= w * lam[a] * grad[b].y;
        }
      }
    }
  }
}

FlowField FlowField::zero(std::shared_ptr<const FunctionSpace> space, double time) {
  FlowField f;
  f.velocity.assign(static_cast<std::size_t>(space->num_velocity_dofs()), 0.0);
  f.pressure.assign(static_cast<std::size_t>(space->num_pressure_dofs()), 0.0);
  f.space = std::move(space);
  f.time = time;
  return f;
}

Vec2 FlowField::node_velocity(int node) const {
  const int nn = space->num_nodes();
  return {velocity[node], velocity[nn + node]};
}

Vec2 FlowField::velocity_at(int triangle, const Barycentric& bary) const {
  const auto& nodes = space->topology().element_nodes[triangle];
  const auto phi = p2::values(bary);
  const int nn = space->num_nodes();
  Vec2 v;
  for (int a = 0; a < 6; ++a) {
    v.x += phi[a] * velocity[nodes[a]];
    v.y += phi[a] * velocity[nn + nodes[a]];
  }
  return v;
}

Grad2 FlowField::velocity_gradient(int triangle, const Barycentric& bary) const {
  const auto& nodes = space->topology().element_nodes[triangle];
  const auto grad = p2::gradients(bary, space->barycentric_gradients(triangle));
  const int nn = space->num_nodes();
  Grad2 g{};
  for (int a = 0; a < 6; ++a) {
    const double vx = velocity[nodes[a]], vy = velocity[nn + nodes[a]];
    g[0][0] += vx * grad[a].x;
    g[0][1] += vx * grad[a].y;
    g[1][0] += vy * grad[a].x;
    g[1][1] += vy * grad[a].y;
  }
  return g;
}

FlowField interpolate(std::shared_ptr<const FunctionSpace> space,
                      const std::function<Vec2(double, double)>& v,
                      const std::function<double(double, double)>& p, double time) {
  FlowField f = FlowField::zero(space, time);
  const int nn = space->num_nodes();
  for (int node = 0; node < nn; ++node) {
    const Point x = space->node_position(node);
    const Vec2 val = v(x.x, x.y);
    f.velocity[node] = val.x;
    f.velocity[nn + node] = val.y;
  }
  if (p) {
    for (int i = 0; i < space->num_pressure_dofs(); ++i) {
      const Point x = space->mesh().vertices[i];
      f.pressure[i] = p(x.x, x.y);
    }
  }
  return f;
}

std::function<double(double, double)> pulsatile_inflow(double amplitude, double half_height) {
  return [amplitude, half_height](double t, double y) {
    const double s = std::sin(std::numbers::pi * t);
    return amplitude * (1.0 - (y * y) / (half_height * half_height)) * s * s;
  };
}

std::function<double(double, double)> steady_inflow(double amplitude, double half_height) {
  return [amplitude, half_height](double, double y) {
    return amplitude * (1.0 - (y * y) / (half_height * half_height));
  };
}

namespace {

CsrMatrix block_diagonal(const CsrMatrix& s) {
  const int n = s.rows();
  Triplets t(2 * n, 2 * n);
  const auto off = s.offsets();
  const auto col = s.col_indices();
  const auto val = s.values();
  t.entries.reserve(2 * val.size());
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < n; ++r)
      for (int k = off[r]; k < off[r + 1]; ++k) t.add(c * n + r, c * n + col[k], val[k]);
  return to_csr(t);
}

}  // namespace

ConstantOperators assemble_constant_operators(const FunctionSpace& space) {
  return {block_diagonal(space.mass()), block_diagonal(space.stiffness()), space.divergence()};
}

void assemble_convection_values(const FunctionSpace& space, std::span<const double> w,
                                std::span<double> values) {
  const auto& topo = space.topology();
  const int nn = topo.num_nodes();
  if (static_cast<int>(w.size()) != 2 * nn || values.size() != topo.scalar_pattern.values().size()) {
    throw DimensionMismatch("assemble_convection: size mismatch");
  }
  std::fill(values.begin(), values.end(), 0.0);
  const auto& mesh = space.mesh();
  const auto& quad = p2::quadrature();
  const auto& tab = p2::tabulation();
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& nodes = topo.element_nodes[t];
    const double area = mesh.signed_area(t);
    const auto gl = space.barycentric_gradients(t);
    const auto& ss = topo.scalar_slots[t];
    std::array<double, 6> wx, wy;
    for (int a = 0; a < 6; ++a) {
      wx[a] = w[nodes[a]];
      wy[a] = w[nn + nodes[a]];
    }
    std::array<double, 36> local{};
    for (int q = 0; q < p2::kQuadPoints; ++q) {
      const double weight = quad[q].weight * area;
      const auto& phi = tab.phi[q];
      double ux = 0.0, uy = 0.0;
      for (int a = 0; a < 6; ++a) {
        ux += phi[a] * wx[a];
        uy += phi[a] * wy[a];
      }
      // w . grad(lambda_l), then w . grad(phi_b) through the lambda derivatives
      std::array<double, 3> wl{};
      for (int l = 0; l < 3; ++l) wl[l] = ux * gl[l].x + uy * gl[l].y;
      std::array<double, 6> adv{};
      for (int b = 0; b < 6; ++b)
        adv[b] = tab.dphi[q][b][0] * wl[0] + tab.dphi[q][b][1] * wl[1] + tab.dphi[q][b][2] * wl[2];
      for (int a = 0; a < 6; ++a) {
        const double wa = weight * phi[a];
        for (int b = 0; b < 6; ++b) local[a * 6 + b] += wa * adv[b];
      }
    }
    for (int i = 0; i < 36; ++i) values[ss[i]] += local[i];
  }
}

void assemble_convection_jacobian_values(const FunctionSpace& space, std::span<const double> x,
                                         const std::array<std::span<double>, 4>& values) {
  const auto& topo = space.topology();
  const int nn = topo.num_nodes();
  const std::size_t nnz = topo.scalar_pattern.values().size();
  if (static_cast<int>(x.size()) != 2 * nn) throw DimensionMismatch("convection jacobian: size mismatch");
  for (const auto& v : values) {
    if (v.size() != nnz) throw DimensionMismatch("convection jacobian: size mismatch");
    std::fill(v.begin(), v.end(), 0.0);
  }
  const auto& mesh = space.mesh();
  const auto& quad = p2::quadrature();
  const auto& tab = p2::tabulation();
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& nodes = topo.element_nodes[t];
    const double area = mesh.signed_area(t);
    const auto gl = space.barycentric_gradients(t);
    const auto& ss = topo.scalar_slots[t];
    std::array<std::array<double, 36>, 4> local{};
    for (int q = 0; q < p2::kQuadPoints; ++q) {
      const double weight = quad[q].weight * area;
      const auto& phi = tab.phi[q];
      // g[c][d] = d x_c / d x_d at the quadrature point
      double g[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (int b = 0; b < 6; ++b) {
        const auto& dl = tab.dphi[q][b];
        const double dx = dl[0] * gl[0].x + dl[1] * gl[1].x + dl[2] * gl[2].x;
        const double dy = dl[0] * gl[0].y + dl[1] * gl[1].y + dl[2] * gl[2].y;
        for (int c = 0; c < 2; ++c) {
          const double xc = x[c * nn + nodes[b]];
          g[c][0] += xc * dx;
          g[c][1] += xc * dy;
        }
      }
      for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
          const double m = weight * phi[a] * phi[b];
          for (int k = 0; k < 4; ++k) local[k][a * 6 + b] += m * g[k / 2][k % 2];
        }
      }
    }
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 36; ++i) values[k][ss[i]] += local[k][i];
  }
}

void assemble_backflow_values(const FunctionSpace& space, std::span<const double> w, std::span<double> values,
                              const std::array<std::span<double>, 4>* jacobian) {
  const auto& topo = space.topology();
  const int nn = topo.num_nodes();
  if (static_cast<int>(w.size()) != 2 * nn || values.size() != topo.scalar_pattern.values().size()) {
    throw DimensionMismatch("assemble_backflow: size mismatch");
  }
  std::fill(values.begin(), values.end(), 0.0);
  if (jacobian) {
    for (const auto& v : *jacobian) {
      if (v.size() != values.size()) throw DimensionMismatch("assemble_backflow: size mismatch");
      std::fill(v.begin(), v.end(), 0.0);
    }
  }
  const auto& mesh = space.mesh();
  // 3-point Gauss on [0, 1]
  const double g = 0.5 * std::sqrt(0.6);
  const std::array<double, 3> gs{0.5 - g, 0.5, 0.5 + g};
  const std::array<double, 3> gw{5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0};
  for (const auto& edge : mesh.boundary_edges) {
    if (edge.tag != BoundaryTag::outflow) continue;
    const int t = edge.triangle;
    const auto& tri = mesh.triangles[t];
    const auto& nodes = topo.element_nodes[t];
    std::array<int, 3> local{-1, -1, -1};  // edge start, edge end, midpoint
    for (int k = 0; k < 3; ++k) {
      if (tri[k] == edge.v[0]) local[0] = k;
      if (tri[k] == edge.v[1]) local[1] = k;
    }
    for (int e = 0; e < 3; ++e) {
      const auto& ev = p2::kEdgeVertices[e];
      if ((ev[0] == local[0] && ev[1] == local[1]) || (ev[0] == local[1] && ev[1] == local[0])) local[2] = 3 + e;
    }
    const Point a = mesh.vertices[edge.v[0]], b = mesh.vertices[edge.v[1]];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const Vec2 n{(b.y - a.y) / len, -(b.x - a.x) / len};
    const auto& slots = topo.scalar_slots[t];
    for (int q = 0; q < 3; ++q) {
      const double s = gs[q];
      const std::array<double, 3> phi{(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
      double wx = 0.0, wy = 0.0;
      for (int i = 0; i < 3; ++i) {
        const int node = nodes[local[i]];
        wx += phi[i] * w[node];
        wy += phi[i] * w[nn + node];
      }
      const double wn = wx * n.x + wy * n.y;
      if (wn >= 0.0) continue;
      const double weight = gw[q] * len;
      const double wc[2] = {wx, wy}, nd[2] = {n.x, n.y};
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const int slot = slots[local[i] * 6 + local[j]];
          const double m = weight * phi[i] * phi[j];
          values[slot] += m * wn;
          if (jacobian) {
            for (int k = 0; k < 4; ++k) (*jacobian)[k][slot] += m * wc[k / 2] * nd[k % 2];
          }
        }
      }
    }
  }
}

CsrMatrix assemble_convection(const FunctionSpace& space, const FlowField& w) {
  CsrMatrix n = space.topology().scalar_pattern;
  assemble_convection_values(space, w.velocity, n.values());
  return block_diagonal(n);
}

std::vector<double> assemble_body_force(const FunctionSpace& space, const FlowParams& params, double t) {
  const int nn = space.num_nodes();
  std::vector<double> f(static_cast<std::size_t>(2 * nn), 0.0);
  if (!params.body_force) return f;
  const auto& mesh = space.mesh();
  const auto& quad = p2::quadrature();
  const auto& tab = p2::tabulation();
  for (int tri = 0; tri < static_cast<int>(mesh.triangles.size()); ++tri) {
    const auto& nodes = space.topology().element_nodes[tri];
    const auto& vtx = mesh.triangles[tri];
    const double area = mesh.signed_area(tri);
    for (int q = 0; q < p2::kQuadPoints; ++q) {
      const auto& l = quad[q].bary;
      double x = 0.0, y = 0.0;
      for (int i = 0; i < 3; ++i) {
        x += l[i] * mesh.vertices[vtx[i]].x;
        y += l[i] * mesh.vertices[vtx[i]].y;
      }
      const Vec2 fq = params.body_force(t, x, y);
      const double w = quad[q].weight * area;
      for (int a = 0; a < 6; ++a) {
        f[nodes[a]] += w * tab.phi[q][a] * fq.x;
        f[nn + nodes[a]] += w * tab.phi[q][a] * fq.y;
      }
    }
  }
  return f;
}

double field_difference_norm(const FlowField& u, const FlowField& v, NormKind which) {
  if (!u.space || !v.space || u.velocity.size() != v.velocity.size() ||
      !u.space->same_connectivity(*v.space)) {
    throw DimensionMismatch("field_difference_norm: fields live on different spaces");
  }
  const auto& space = *u.space;
  const int nn = space.num_nodes();
  std::vector<double> e(u.velocity.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = u.velocity[i] - v.velocity[i];
  double sq = 0.0;
  for (int c = 0; c < 2; ++c) {
    std::span<const double> ec(e.data() + c * nn, static_cast<std::size_t>(nn));
    sq += space.mass().bilinear(ec, ec);
    if (which == NormKind::h1) sq += space.stiffness().bilinear(ec, ec);
  }
  return std::sqrt(std::max(sq, 0.0));
}

const std::array<Barycentric, 6>& p2_node_barycentrics() {
  static const std::array<Barycentric, 6> nodes{{{1.0, 0.0, 0.0},
                                                 {0.0, 1.0, 0.0},
                                                 {0.0, 0.0, 1.0},
                                                 {0.5, 0.5, 0.0},
                                                 {0.0, 0.5, 0.5},
                                                 {0.5, 0.0, 0.5}}};
  return nodes;
}

}  // namespace plaque
