#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "rigidflow/flow_map.hpp"
#include "rigidflow/mesh.hpp"

using namespace rigidflow;

namespace {

DiskGeometry geom() {
  DiskGeometry g;
  g.outer_radius = 1.0;
  g.body_radius = 0.2;
  return g;
}

const double kSafe = 0.2;

Vec2 random_fluid_point(std::mt19937& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    const Vec2 x(u(gen), u(gen));
    const double r = x.norm();
    if (r < 0.995 && r > 0.205) return x;
  }
}

}  // namespace

TEST_CASE("cutoff profile") {
  const Cutoff cut = build_cutoff(geom(), kSafe);
  auto at_dist = [&](double d) { return cut.value(Vec2(1.0 - d, 0.0)); };
  CHECK(at_dist(kSafe) == 1.0);
  CHECK(at_dist(kSafe / 8.0) == 0.0);
  CHECK(at_dist(3.0 * kSafe / 8.0) == doctest::Approx(0.5).epsilon(1e-14));
  // monotone and bounded
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = at_dist(kSafe / 4.0 + i * (kSafe / 4.0) / 100.0);
    CHECK(v >= prev - 1e-15);
    CHECK(v <= 1.0);
    prev = v;
  }
  CHECK_THROWS_AS(build_cutoff(geom(), 0.5), InvalidArgument);
}

TEST_CASE("cutoff derivatives match finite differences") {
  const Cutoff cut = build_cutoff(geom(), kSafe);
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.9, 0.95);
  std::uniform_real_distribution<double> a(0.0, 2.0 * M_PI);
  const double h = 1e-5;
  for (int k = 0; k < 30; ++k) {
    const double ang = a(gen);
    const Vec2 x = u(gen) * Vec2(std::cos(ang), std::sin(ang));
    for (int c = 0; c < 2; ++c) {
      const Vec2 dx = h * Vec2::Unit(c);
      const double h1 = 1e-6;
      const Vec2 dx1 = h1 * Vec2::Unit(c);
      const double fd = (cut.value(x + dx1) - cut.value(x - dx1)) / (2.0 * h1);
      CHECK(cut.gradient(x)(c) == doctest::Approx(fd).epsilon(1e-6));
      const Vec2 gfd = (cut.gradient(x + dx) - cut.gradient(x - dx)) / (2.0 * h);
      CHECK((cut.hessian(x).col(c) - gfd).norm() <= 1e-4 * (1.0 + gfd.norm()));
      const Mat2 hfd = (cut.hessian(x + dx) - cut.hessian(x - dx)) / (2.0 * h);
      CHECK((cut.third(x)[c] - hfd).cwiseAbs().maxCoeff() <=
            1e-3 * (1.0 + hfd.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("extension field equals the rigid field where psi is one") {
  const Cutoff cut = build_cutoff(geom(), kSafe);
  RigidState rest;
  const ExtensionField zero = lambda_field(rest, cut);
  CHECK(zero.value(Vec2(0.5, 0.1)).norm() == 0.0);

  RigidState s;
  s.lin_vel = Vec2(1.0, 0.0);
  const ExtensionField f = lambda_field(s, cut);
  CHECK((f.value(Vec2(0.4, 0.3)) - Vec2(1.0, 0.0)).norm() <= 1e-15);
}

TEST_CASE("extension field componentwise formula and divergence") {
  const Cutoff cut = build_cutoff(geom(), kSafe);
  RigidState s;
  s.position = Vec2(0.05, -0.1);
  s.lin_vel = Vec2(0.6, -0.4);
  s.ang_vel = 1.1;
  const ExtensionField f = lambda_field(s, cut);
  std::mt19937 gen(17);
  double sup = 0.0;
  std::vector<Vec2> pts;
  for (int k = 0; k < 1000; ++k) pts.push_back(random_fluid_point(gen));
  for (const Vec2& x : pts) sup = std::max(sup, f.value(x).norm());
  for (const Vec2& x : pts) {
    // componentwise route: (-dpsi_2 w + psi uS_1, dpsi_1 w + psi uS_2)
    const Vec2 d = x - s.position;
    const double w = perp(d).dot(s.lin_vel) + 0.5 * d.squaredNorm() * s.ang_vel;
    const Vec2 us = rigid_velocity(s, x);
    const Vec2 dpsi = cut.gradient(x);
    const double psi = cut.value(x);
    const Vec2 alt(-dpsi.y() * w + psi * us.x(), dpsi.x() * w + psi * us.y());
    CHECK((f.value(x) - alt).norm() <= 1e-12);

    CHECK(std::abs(divergence_fd(f, x)) <= 1e-8 * sup);
    // the identity trace is exact
    CHECK(std::abs(f.full(x).jac.trace()) <= 1e-13 * (1.0 + sup));
  }
}

TEST_CASE("extension derivatives match finite differences") {
  const Cutoff cut = build_cutoff(geom(), kSafe);
  RigidState s;
  s.lin_vel = Vec2(-0.3, 0.8);
  s.ang_vel = 0.9;
  const ExtensionField f = lambda_field(s, cut);
  std::mt19937 gen(23);
  const double h = 1e-5;
  for (int k = 0; k < 40; ++k) {
    const Vec2 x = random_fluid_point(gen);
    const ExtensionField::Eval e = f.full(x);
    for (int c = 0; c < 2; ++c) {
      const Vec2 dx = h * Vec2::Unit(c);
      const Vec2 jfd = (f.value(x + dx) - f.value(x - dx)) / (2.0 * h);
      CHECK((e.jac.col(c) - jfd).norm() <= 1e-5 * (1.0 + jfd.norm()));
      const Mat2 hfd = (f.full(x + dx).jac - f.full(x - dx).jac) / (2.0 * h);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          CHECK(std::abs(e.hess[i](j, c) - hfd(i, j)) <=
                5e-4 * (1.0 + std::abs(hfd(i, j))));
    }
  }
}

namespace {

FlowMap flow_of_constant(const RigidState& s0, int steps, double dt,
                         const std::vector<Vec2>& pts) {
  std::vector<RigidState> path{s0};
  RigidState s = s0;
  for (int k = 0; k < steps; ++k) {
    s = advance_rigid(s, s0.lin_vel, s0.ang_vel, dt);
    path.push_back(s);
  }
  return integrate_flow(path, dt, pts, geom(), build_cutoff(geom(), kSafe), 4);
}

}  // namespace

TEST_CASE("resting body gives the identity map") {
  std::mt19937 gen(2);
  std::vector<Vec2> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(random_fluid_point(gen));
  const FlowMap map = flow_of_constant(RigidState{}, 10, 0.01, pts);
  for (int k = 0; k <= 10; ++k)
    for (size_t i = 0; i < pts.size(); ++i) {
      CHECK((map.frame(k).pts[i].x - pts[i]).norm() == 0.0);
      CHECK((map.frame(k).pts[i].grad - Mat2::Identity()).norm() == 0.0);
    }
}

TEST_CASE("pure rotation matches the analytic solution") {
  RigidState s0;
  s0.ang_vel = 1.0;
  std::mt19937 gen(9);
  std::vector<Vec2> pts;
  for (int i = 0; i < 30; ++i) {
    // stay inside the rigidly rotating zone
    Vec2 x = random_fluid_point(gen);
    while (x.norm() > 0.85) x = random_fluid_point(gen);
    pts.push_back(x);
  }
  const int steps = 500;
  const double dt = 1e-3;
  const FlowMap map = flow_of_constant(s0, steps, dt, pts);
  for (int k : {100, 250, 500}) {
    const double t = k * dt;
    const Mat2 q = rotation_matrix(t);
    for (size_t i = 0; i < pts.size(); ++i) {
      CHECK((map.frame(k).pts[i].x - q * pts[i]).norm() <= 1e-8);
      CHECK((map.frame(k).pts[i].grad - q).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("determinant stays one through the transition collar") {
  RigidState s0;
  s0.lin_vel = Vec2(0.08, -0.06);
  s0.ang_vel = 0.5;
  std::mt19937 gen(31);
  std::vector<Vec2> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(random_fluid_point(gen));
  // points in the collar where the map actually deforms
  for (int i = 0; i < 20; ++i) {
    const double a = 2.0 * M_PI * i / 20.0;
    pts.push_back(0.93 * Vec2(std::cos(a), std::sin(a)));
  }
  const int steps = 300;
  const FlowMap map = flow_of_constant(s0, steps, 1e-3, pts);
  double worst = 0.0;
  for (int k = 0; k <= steps; ++k)
    for (const auto& p : map.frame(k).pts)
      worst = std::max(worst, std::abs(p.det() - 1.0));
  CHECK(worst <= 1e-8);
}

TEST_CASE("flow preserves the area of a marked cell") {
  RigidState s0;
  s0.lin_vel = Vec2(0.1, 0.0);
  s0.ang_vel = -0.4;

  // (a) cell in the rigid zone: the image polygon is congruent
  {
    std::vector<Vec2> pts;
    const int m = 64;
    for (int i = 0; i < m; ++i) {
      const double a = 2.0 * M_PI * i / m;
      pts.push_back(Vec2(0.55, 0.0) + 0.05 * Vec2(std::cos(a), std::sin(a)));
    }
    const FlowMap map = flow_of_constant(s0, 200, 1e-3, pts);
    auto area = [&](int k) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) {
        const Vec2& a = map.frame(k).pts[i].x;
        const Vec2& b = map.frame(k).pts[(i + 1) % m].x;
        s += a.x() * b.y() - b.x() * a.y();
      }
      return 0.5 * s;
    };
    CHECK(std::abs(area(200) - area(0)) / area(0) <= 1e-9);
  }

  // (b) cell in the shearing collar: image area by the change-of-variables
  // integral of det grad X over the cell
  {
    std::vector<Vec2> pts;
    std::vector<double> wts;
    const Vec2 c(0.0, 0.915);
    const double half = 0.012;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        pts.push_back(c + half * Vec2(shape::gauss_x[a], shape::gauss_x[b]));
        wts.push_back(half * half * shape::gauss_w[a] * shape::gauss_w[b]);
      }
    const FlowMap map = flow_of_constant(s0, 200, 1e-3, pts);
    double image_area = 0.0, cell_area = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      image_area += wts[i] * map.frame(200).pts[i].det();
      cell_area += wts[i];
    }
    CHECK(std::abs(image_area - cell_area) / cell_area <= 1e-7);
  }
}

TEST_CASE("map inversion") {
  RigidState s0;
  s0.lin_vel = Vec2(0.05, 0.02);
  s0.ang_vel = 1.0;
  std::mt19937 gen(13);
  std::vector<Vec2> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(random_fluid_point(gen));
  const FlowMap map = flow_of_constant(s0, 100, 1e-3, pts);

  // identity frame
  CHECK((map.invert(0, pts[0]) - pts[0]).norm() <= 1e-12);

  int worst_rigid_iters = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    int iters = 0;
    const Vec2 y = map.invert(100, map.frame(100).pts[i].x, 1e-10, 30, &iters);
    CHECK((y - pts[i]).norm() <= 1e-9);
    if (pts[i].norm() <= 0.85)  // rigidly rotating zone
      worst_rigid_iters = std::max(worst_rigid_iters, iters);
  }
  CHECK(worst_rigid_iters <= 6);
}

TEST_CASE("metric and Christoffel symbols") {
  // identity map
  FlowSample ident;
  const SampleCoeffs ci = map_coefficients(ident);
  CHECK((ci.metric - Mat2::Identity()).norm() == 0.0);
  CHECK(ci.gamma[0].norm() == 0.0);
  CHECK(ci.gamma[1].norm() == 0.0);

  // rigid map: flat metric, vanishing symbols
  RigidState s0;
  s0.ang_vel = 0.8;
  s0.lin_vel = Vec2(0.02, 0.01);
  std::mt19937 gen(3);
  std::vector<Vec2> pts;
  for (int i = 0; i < 20; ++i) {
    Vec2 x = random_fluid_point(gen);
    while (x.norm() > 0.8) x = random_fluid_point(gen);
    pts.push_back(x);
  }
  // collar points where the map is genuinely deformed
  for (int i = 0; i < 10; ++i) {
    const double a = 2.0 * M_PI * i / 10.0;
    pts.push_back(0.92 * Vec2(std::cos(a), std::sin(a)));
  }
  const FlowMap map = flow_of_constant(s0, 150, 1e-3, pts);
  for (int i = 0; i < 20; ++i) {
    const SampleCoeffs sc = map_coefficients(map.frame(150).pts[i]);
    CHECK((sc.metric - Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(sc.gamma[0].cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(sc.gamma[1].cwiseAbs().maxCoeff() <= 1e-8);
  }
  for (size_t i = 20; i < pts.size(); ++i) {
    const SampleCoeffs sc = map_coefficients(map.frame(150).pts[i]);
    // relative to the metric scale; the collar shears strongly
    const double scale = 1.0 + sc.metric.cwiseAbs().maxCoeff();
    CHECK((sc.metric_inv * sc.metric - Mat2::Identity()).cwiseAbs().maxCoeff() <=
          1e-10 * scale);
    CHECK((sc.metric - sc.metric.transpose()).cwiseAbs().maxCoeff() <=
          1e-14 * scale);
    // symmetry in the lower indices
    for (int c = 0; c < 2; ++c)
      CHECK((sc.gamma[c] - sc.gamma[c].transpose()).cwiseAbs().maxCoeff() <=
            1e-12 * scale);
  }
}

TEST_CASE("grad X along the map times grad Y is constant in time") {
  RigidState s0;
  s0.lin_vel = Vec2(0.06, -0.03);
  s0.ang_vel = 0.6;
  std::mt19937 gen(41);
  std::vector<Vec2> pts;
  for (int i = 0; i < 12; ++i) pts.push_back(random_fluid_point(gen));
  const double dt = 1e-3;
  const FlowMap map = flow_of_constant(s0, 60, dt, pts);
  // fixed lab point x0; difference quotient of gradX(t, Y(t,x0)) gradY(t,x0)
  for (int i = 0; i < 6; ++i) {
    const int k0 = 30;
    const Vec2 x0 = map.frame(k0).pts[i].x;
    auto prod = [&](int k) {
      const Vec2 y = map.invert(k, x0, 1e-12);
      const FlowSample s = map.integrate_point(k, y);
      return Mat2(s.grad * map_coefficients(s).pull);
    };
    const Mat2 dfd = (prod(k0 + 1) - prod(k0 - 1)) / (2.0 * dt);
    CHECK(dfd.cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("flow restricted to the body matches the rigid transport") {
  RigidState s0;
  s0.lin_vel = Vec2(0.1, 0.05);
  s0.ang_vel = 0.7;
  std::vector<Vec2> pts;
  for (int i = 0; i < 16; ++i) {
    const double a = 2.0 * M_PI * i / 16.0;
    pts.push_back(0.2 * Vec2(std::cos(a), std::sin(a)));  // body boundary
  }
  const int steps = 200;
  const double dt = 1e-3;
  std::vector<RigidState> path{s0};
  RigidState s = s0;
  for (int k = 0; k < steps; ++k) {
    s = advance_rigid(s, s0.lin_vel, s0.ang_vel, dt);
    path.push_back(s);
  }
  const FlowMap map =
      integrate_flow(path, dt, pts, geom(), build_cutoff(geom(), kSafe), 4);
  for (int k : {50, 200}) {
    for (size_t i = 0; i < pts.size(); ++i) {
      const Vec2 want = body_point(path[k], pts[i]);
      CHECK((map.frame(k).pts[i].x - want).norm() <= 1e-8);
    }
  }
}

TEST_CASE("composition of two maps") {
  std::mt19937 gen(8);
  std::vector<Vec2> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(random_fluid_point(gen));
  for (int i = 0; i < 16; ++i) {
    const double a = 2.0 * M_PI * i / 16.0;
    pts.push_back(0.2 * Vec2(std::cos(a), std::sin(a)));
  }

  RigidState a0;
  a0.lin_vel = Vec2(0.05, 0.02);
  a0.ang_vel = 0.5;
  RigidState b0;
  b0.lin_vel = Vec2(-0.03, 0.06);
  b0.ang_vel = -0.9;
  const int steps = 100;
  const double dt = 1e-3;
  const FlowMap m1 = flow_of_constant(a0, steps, dt, pts);
  const FlowMap m2 = flow_of_constant(b0, steps, dt, pts);

  // identical maps compose to the identity
  const MapComposition self = compose_maps(m1, m1, steps);
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK((self.point[i] - m1.frame(steps).pts[i].x).norm() <= 1e-10);
    CHECK((self.grad[i] - Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
  }

  // markers on the body boundary of run 1 land on the body boundary of run 2
  const MapComposition comp = compose_maps(m1, m2, steps);
  const RigidState sa = m1.frame(steps).state;
  const RigidState sb = m2.frame(steps).state;
  for (size_t i = 30; i < pts.size(); ++i) {
    const double r2 = (comp.point[i] - sb.position).norm();
    CHECK(std::abs(r2 - 0.2) <= 1e-8);
    // gradient on the body is the relative rotation
    const Mat2 want = sb.rotation() * sa.rotation().transpose();
    CHECK((comp.grad[i] - want).cwiseAbs().maxCoeff() <= 1e-9);
  }
}
