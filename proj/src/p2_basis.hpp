#pragma once

// Quadratic Lagrange basis on a triangle in barycentric coordinates and the
// 7-point degree-5 quadrature rule.

#include <array>
#include <cmath>

#include "plaque/fem.hpp"

namespace plaque::p2 {

inline constexpr int kNodes = 6;
inline constexpr int kQuadPoints = 7;

// local edge nodes 3, 4, 5 sit between vertex pairs (0,1), (1,2), (2,0)
inline constexpr std::array<std::array<int, 2>, 3> kEdgeVertices{{{0, 1}, {1, 2}, {2, 0}}};

inline std::array<double, kNodes> values(const Barycentric& l) {
  return {l[0] * (2.0 * l[0] - 1.0), l[1] * (2.0 * l[1] - 1.0), l[2] * (2.0 * l[2] - 1.0),
          4.0 * l[0] * l[1],         4.0 * l[1] * l[2],         4.0 * l[2] * l[0]};
}

/// d phi_a / d lambda_k
inline std::array<std::array<double, 3>, kNodes> lambda_derivatives(const Barycentric& l) {
  std::array<std::array<double, 3>, kNodes> d{};
  for (int i = 0; i < 3; ++i) d[i][i] = 4.0 * l[i] - 1.0;
  for (int e = 0; e < 3; ++e) {
    const int i = kEdgeVertices[e][0], j = kEdgeVertices[e][1];
    d[3 + e][i] = 4.0 * l[j];
    d[3 + e][j] = 4.0 * l[i];
  }
  return d;
}

inline std::array<Vec2, kNodes> gradients(const Barycentric& l, const std::array<Vec2, 3>& grad_lambda) {
  const auto d = lambda_derivatives(l);
  std::array<Vec2, kNodes> g{};
  for (int a = 0; a < kNodes; ++a) {
    for (int k = 0; k < 3; ++k) {
      g[a].x += d[a][k] * grad_lambda[k].x;
      g[a].y += d[a][k] * grad_lambda[k].y;
    }
  }
  return g;
}

struct QuadPoint {
  Barycentric bary;
  double weight;  // fraction of the triangle area
};

inline const std::array<QuadPoint, kQuadPoints>& quadrature() {
  static const std::array<QuadPoint, kQuadPoints> rule = [] {
    const double s = std::sqrt(15.0);
    const double a1 = (6.0 - s) / 21.0, b1 = 1.0 - 2.0 * a1;
    const double a2 = (6.0 + s) / 21.0, b2 = 1.0 - 2.0 * a2;
    const double w1 = (155.0 - s) / 1200.0, w2 = (155.0 + s) / 1200.0;
    return std::array<QuadPoint, kQuadPoints>{{
        {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
        {{a1, a1, b1}, w1},
        {{a1, b1, a1}, w1},
        {{b1, a1, a1}, w1},
        {{a2, a2, b2}, w2},
        {{a2, b2, a2}, w2},
        {{b2, a2, a2}, w2},
    }};
  }();
  return rule;
}

/// Basis values and lambda-derivatives at the quadrature points (geometry independent).
struct Tabulation {
  std::array<std::array<double, kNodes>, kQuadPoints> phi;
  std::array<std::array<std::array<double, 3>, kNodes>, kQuadPoints> dphi;
};

inline const Tabulation& tabulation() {
  static const Tabulation tab = [] {
    Tabulation t{};
    const auto& q = quadrature();
    for (int k = 0; k < kQuadPoints; ++k) {
      t.phi[k] = values(q[k].bary);
      t.dphi[k] = lambda_derivatives(q[k].bary);
    }
    return t;
  }();
  return tab;
}

}  // namespace plaque::p2
