#include "rigidflow/kinematics.hpp"

namespace rigidflow {

Mat2 RigidState::rotation() const { return rotation_matrix(angle); }

Mat2 rotation_matrix(double angle) {
  require(std::isfinite(angle), "rotation angle must be finite");
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 q;
  q << c, -s, s, c;
  return q;
}

Vec2 rigid_velocity(const RigidState& s, const Vec2& x) {
  return s.lin_vel + s.ang_vel * perp(x - s.position);
}

Vec2 body_point(const RigidState& s, const Vec2& y) {
  return s.position + s.rotation() * y;
}

RigidState advance_rigid(const RigidState& s, const Vec2& lin_new,
                         double ang_new, double dt) {
  require(dt > 0.0, "advance_rigid: dt must be positive");
  RigidState out = s;
  out.position += 0.5 * dt * (s.lin_vel + lin_new);
  out.angle += 0.5 * dt * (s.ang_vel + ang_new);
  out.lin_vel = lin_new;
  out.ang_vel = ang_new;
  return out;
}

MaterialParams inertia_from_density(double body_radius, double solid_density,
                                    double friction) {
  require(body_radius > 0.0, "body radius must be positive");
  MaterialParams p;
  p.solid_density = solid_density;
  p.friction = friction;
  p.mass = solid_density * M_PI * body_radius * body_radius;
  p.inertia = 0.5 * p.mass * body_radius * body_radius;
  p.validate();
  return p;
}

}  // namespace rigidflow
