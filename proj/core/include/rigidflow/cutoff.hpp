#pragma once

#include "rigidflow/common.hpp"
#include "rigidflow/geometry.hpp"

namespace rigidflow {

/// Scalar cutoff psi on the container disk: identically 1 at wall distance
/// >= safe_dist/2, identically 0 at wall distance <= safe_dist/4, a quintic
/// smoothstep (C^2) of the distance in between.
class Cutoff {
 public:
  Cutoff() = default;
  Cutoff(const DiskGeometry& geom, double safe_dist);

  double safe_dist() const { return safe_dist_; }
  double wall_distance(const Vec2& x) const {
    return outer_radius_ - x.norm();
  }

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  Mat2 hessian(const Vec2& x) const;
  /// third[k](i,j) = d^3 psi / dx_i dx_j dx_k (symmetric in all indices).
  std::array<Mat2, 2> third(const Vec2& x) const;

  /// True where the cutoff is locally constant (value 0 or 1, all
  /// derivatives zero); lets callers skip the transition-collar algebra.
  bool is_flat(const Vec2& x, double* value) const {
    double p[4];
    profile(wall_distance(x), p);
    if (value) *value = p[0];
    return p[1] == 0.0 && p[2] == 0.0 && p[3] == 0.0;
  }

 private:
  // smoothstep S(u) and derivatives on u in [0,1]
  static double step(double u);
  static double step1(double u);
  static double step2(double u);
  static double step3(double u);
  // profile value and d/d(dist) derivatives at wall distance d
  void profile(double d, double out[4]) const;

  double outer_radius_ = 1.0;
  double safe_dist_ = 0.25;
};

/// Builds the cutoff, enforcing the clearance precondition
/// dist(S0, wall) >= 2 * safe_dist.
Cutoff build_cutoff(const DiskGeometry& geom, double safe_dist);

}  // namespace rigidflow
