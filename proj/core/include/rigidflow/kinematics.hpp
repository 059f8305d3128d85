#pragma once

#include "rigidflow/common.hpp"
#include "rigidflow/geometry.hpp"

namespace rigidflow {

/// Rigid body state in coordinates centered at the initial center of mass.
/// `position` is the displacement of the center (zero at t = 0), `angle` the
/// accumulated rotation (zero at t = 0, kept unwrapped; the rotation matrix is
/// periodic in it).
struct RigidState {
  Vec2 position = Vec2::Zero();
  double angle = 0.0;
  Vec2 lin_vel = Vec2::Zero();
  double ang_vel = 0.0;

  Mat2 rotation() const;
};

struct MaterialParams {
  double solid_density = 1.0;
  double mass = 0.0;
  double inertia = 0.0;   // about the center of mass
  double friction = 0.0;  // slip coefficient alpha >= 0

  void validate() const {
    require(mass > 0.0, "body mass must be positive");
    require(inertia > 0.0, "body inertia must be positive");
    require(friction >= 0.0, "friction coefficient must be nonnegative");
  }
};

/// Counterclockwise rotation by `angle`; orthogonal with determinant one.
Mat2 rotation_matrix(double angle);

/// Velocity of the rigid motion at point x (body-centered coordinates):
/// lin_vel + ang_vel * (x - position)^perp.
Vec2 rigid_velocity(const RigidState& s, const Vec2& x);

/// Current position of the material point with reference position y:
/// position + Q(angle) * y. Distances between body points are preserved.
Vec2 body_point(const RigidState& s, const Vec2& y);

/// Trapezoidal update of (position, angle) from the endpoint velocities over
/// [t, t+dt]; velocities are replaced by the new values. Exact for constant
/// velocities and reversible under time-reversed velocities.
RigidState advance_rigid(const RigidState& s, const Vec2& lin_new,
                         double ang_new, double dt);

/// Mass and moment of inertia of a homogeneous disk body.
MaterialParams inertia_from_density(double body_radius, double solid_density,
                                    double friction = 0.0);

}  // namespace rigidflow
