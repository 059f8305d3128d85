#pragma once

#include "rigidflow/common.hpp"

namespace rigidflow::shape {

// 1D Lagrange basis on {-1, 0, 1}
inline void quad_line(double t, double n[3], double d[3]) {
  n[0] = 0.5 * t * (t - 1.0);
  n[1] = 1.0 - t * t;
  n[2] = 0.5 * t * (t + 1.0);
  d[0] = t - 0.5;
  d[1] = -2.0 * t;
  d[2] = t + 0.5;
}

// Biquadratic (9-node) basis; local index 3a+b with a along xi, b along eta.
inline void q2(const Vec2& xi, double n[9], Vec2 d[9]) {
  double na[3], da[3], nb[3], db[3];
  quad_line(xi.x(), na, da);
  quad_line(xi.y(), nb, db);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      n[3 * a + b] = na[a] * nb[b];
      d[3 * a + b] = Vec2(da[a] * nb[b], na[a] * db[b]);
    }
}

// Reference second derivatives of the biquadratic basis: (xx, xy, yy).
inline void q2_second(const Vec2& xi, Vec3 h[9]) {
  double na[3], da[3], nb[3], db[3];
  quad_line(xi.x(), na, da);
  quad_line(xi.y(), nb, db);
  const double sa[3] = {1.0, -2.0, 1.0};  // second derivative of quad_line
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      h[3 * a + b] = Vec3(sa[a] * nb[b], da[a] * db[b], na[a] * sa[b]);
}

// Bilinear (4-node) basis; local index 2A+B.
inline void q1(const Vec2& xi, double n[4], Vec2 d[4]) {
  const double ma[2] = {0.5 * (1.0 - xi.x()), 0.5 * (1.0 + xi.x())};
  const double mb[2] = {0.5 * (1.0 - xi.y()), 0.5 * (1.0 + xi.y())};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      n[2 * a + b] = ma[a] * mb[b];
      d[2 * a + b] = Vec2((a == 0 ? -0.5 : 0.5) * mb[b],
                          ma[a] * (b == 0 ? -0.5 : 0.5));
    }
}

// 3-point Gauss rule on [-1, 1], exact to degree 5.
inline constexpr double gauss_x[3] = {-0.7745966692414834, 0.0,
                                      0.7745966692414834};
inline constexpr double gauss_w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

}  // namespace rigidflow::shape
