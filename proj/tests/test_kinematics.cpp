#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "rigidflow/kinematics.hpp"

using namespace rigidflow;

TEST_CASE("rotation matrix basics") {
  CHECK((rotation_matrix(0.0) - Mat2::Identity()).norm() == 0.0);

  const Mat2 q = rotation_matrix(M_PI / 2.0);
  CHECK(q(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q(0, 1) == doctest::Approx(-1.0));
  CHECK(q(1, 0) == doctest::Approx(1.0));
  CHECK(q(1, 1) == doctest::Approx(0.0).epsilon(1e-15));

  const Mat2 prod = rotation_matrix(M_PI / 6.0) * rotation_matrix(-M_PI / 6.0);
  CHECK((prod - Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("rotation matrices are orthogonal with det 1 and form a group") {
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> ang(-20.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const double a = ang(gen), b = ang(gen);
    const Mat2 qa = rotation_matrix(a);
    CHECK((qa.transpose() * qa - Mat2::Identity()).cwiseAbs().maxCoeff() <=
          1e-14);
    CHECK(qa.determinant() == doctest::Approx(1.0).epsilon(1e-14));
    const Mat2 lhs = qa * rotation_matrix(b);
    const Mat2 rhs = rotation_matrix(a + b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("rigid velocity field") {
  RigidState s;
  s.lin_vel = Vec2(1.0, 0.0);
  CHECK((rigid_velocity(s, Vec2(3.0, -2.0)) - Vec2(1.0, 0.0)).norm() == 0.0);

  RigidState spin;
  spin.ang_vel = 2.0;
  CHECK((rigid_velocity(spin, Vec2(1.0, 0.0)) - Vec2(0.0, 2.0)).norm() == 0.0);

  RigidState both;
  both.lin_vel = Vec2(1.0, 1.0);
  both.ang_vel = 1.0;
  CHECK((rigid_velocity(both, Vec2(0.0, 1.0)) - Vec2(0.0, 1.0)).norm() == 0.0);
}

TEST_CASE("rigid velocity has zero symmetric gradient") {
  RigidState s;
  s.position = Vec2(0.2, -0.1);
  s.lin_vel = Vec2(0.4, 0.7);
  s.ang_vel = -1.3;
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Vec2 x(u(gen), u(gen));
    Mat2 g;
    for (int c = 0; c < 2; ++c) {
      const Vec2 dx = h * Vec2::Unit(c);
      const Vec2 d = (rigid_velocity(s, x + dx) - rigid_velocity(s, x - dx)) /
                     (2.0 * h);
      g(0, c) = d.x();
      g(1, c) = d.y();
    }
    CHECK((g + g.transpose()).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("body point transport") {
  RigidState s0;
  CHECK((body_point(s0, Vec2(0.3, 0.4)) - Vec2(0.3, 0.4)).norm() == 0.0);

  RigidState half;
  half.angle = M_PI;
  CHECK((body_point(half, Vec2(1.0, 0.0)) - Vec2(-1.0, 0.0)).norm() <= 2e-16);

  RigidState s;
  s.position = Vec2(0.1, 0.2);
  s.angle = 0.77;
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 a(u(gen), u(gen)), b(u(gen), u(gen));
    const double before = (a - b).norm();
    const double after = (body_point(s, a) - body_point(s, b)).norm();
    CHECK(std::abs(before - after) <= 1e-14);
  }
}

TEST_CASE("advance_rigid") {
  RigidState s;
  s.position = Vec2(0.5, 0.5);
  s.angle = 0.3;
  const RigidState rest = advance_rigid(s, Vec2::Zero(), 0.0, 0.1);
  CHECK((rest.position - s.position).norm() == 0.0);
  CHECK(rest.angle == s.angle);

  // constant velocities integrate exactly
  RigidState t;
  t.lin_vel = Vec2(1.0, 0.0);
  const int n = 17;
  const double dt = 0.05;
  for (int k = 0; k < n; ++k) t = advance_rigid(t, Vec2(1.0, 0.0), 0.0, dt);
  CHECK((t.position - Vec2(n * dt, 0.0)).norm() <= 1e-14);

  RigidState w;
  w.ang_vel = 1.0;
  const int m = 64;
  for (int k = 0; k < m; ++k) w = advance_rigid(w, Vec2::Zero(), 1.0, M_PI / m);
  CHECK(w.angle == doctest::Approx(M_PI).epsilon(1e-13));
}

TEST_CASE("advance_rigid reverses under time-reversed velocities") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RigidState s;
  s.lin_vel = Vec2(0.3, -0.2);
  s.ang_vel = 0.5;
  std::vector<RigidState> fwd{s};
  const double dt = 0.01;
  for (int k = 0; k < 30; ++k) {
    s = advance_rigid(s, Vec2(u(gen), u(gen)), u(gen), dt);
    fwd.push_back(s);
  }
  // play the velocity sequence backwards with flipped signs
  RigidState back = fwd.back();
  back.lin_vel = -back.lin_vel;
  back.ang_vel = -back.ang_vel;
  for (int k = static_cast<int>(fwd.size()) - 2; k >= 0; --k)
    back = advance_rigid(back, -fwd[k].lin_vel, -fwd[k].ang_vel, dt);
  CHECK((back.position - fwd.front().position).norm() <= 1e-12);
  CHECK(std::abs(back.angle - fwd.front().angle) <= 1e-12);
}

namespace {

// polar midpoint-rule oracle for the disk inertia integrals
std::pair<double, double> disk_inertia_quadrature(double radius, double rho) {
  const int nr = 2000, nt = 64;
  double mass = 0.0, inertia = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double r = (i + 0.5) * radius / nr;
    const double dr = radius / nr;
    for (int j = 0; j < nt; ++j) {
      const double da = 2.0 * M_PI / nt;
      mass += rho * r * dr * da;
      inertia += rho * r * r * r * dr * da;
    }
  }
  return {mass, inertia};
}

}  // namespace

TEST_CASE("disk inertia from density") {
  const MaterialParams p = inertia_from_density(0.2, 2.0);
  // frozen analytic values, cross-checked by the quadrature oracle
  CHECK(p.mass == doctest::Approx(0.25132741228718345).epsilon(1e-14));
  CHECK(p.inertia == doctest::Approx(0.0050265482457436691).epsilon(1e-14));
  const auto [mq, jq] = disk_inertia_quadrature(0.2, 2.0);
  CHECK(p.mass == doctest::Approx(mq).epsilon(1e-6));
  CHECK(p.inertia == doctest::Approx(jq).epsilon(1e-6));

  CHECK_THROWS_AS(inertia_from_density(0.2, 0.0), InvalidArgument);

  const MaterialParams dbl = inertia_from_density(0.2, 4.0);
  CHECK(dbl.mass == doctest::Approx(2.0 * p.mass).epsilon(1e-15));
  CHECK(dbl.inertia == doctest::Approx(2.0 * p.inertia).epsilon(1e-15));
}
