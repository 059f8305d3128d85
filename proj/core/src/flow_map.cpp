#include "rigidflow/flow_map.hpp"

#include <limits>

#include "rigidflow/parallel.hpp"

namespace rigidflow {

namespace {

struct Deriv {
  Vec2 x;
  Mat2 g;
  Eigen::Matrix<double, 2, 3> h;
};

Deriv rhs(const ExtensionField& lam, const FlowSample& s) {
  const ExtensionField::Eval e = lam.full(s.x);
  Deriv d;
  d.x = e.value;
  d.g = e.jac * s.grad;
  static const int jk[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  for (int m = 0; m < 2; ++m) {
    for (int c = 0; c < 3; ++c) {
      const int j = jk[c][0], k = jk[c][1];
      double v = s.grad.col(j).dot(e.hess[m] * s.grad.col(k));
      for (int p = 0; p < 2; ++p) v += e.jac(m, p) * s.hess(p, c);
      d.h(m, c) = v;
    }
  }
  return d;
}

FlowSample axpy(const FlowSample& s, double a, const Deriv& d) {
  FlowSample out = s;
  out.x += a * d.x;
  out.grad += a * d.g;
  out.hess += a * d.h;
  return out;
}

}  // namespace

SampleCoeffs map_coefficients(const FlowSample& s) {
  SampleCoeffs c;
  c.push = s.grad;
  const double det = s.grad.determinant();
  check_numeric(det > 0.0, "flow map gradient is singular (det <= 0)");
  Mat2 adj;
  adj << s.grad(1, 1), -s.grad(0, 1), -s.grad(1, 0), s.grad(0, 0);
  c.pull = adj / det;
  c.metric = s.grad.transpose() * s.grad;
  c.metric_inv = c.pull * c.pull.transpose();
  static const int cc[2][2] = {{0, 1}, {1, 2}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        double v = 0.0;
        for (int m = 0; m < 2; ++m) v += c.pull(i, m) * s.hess(m, cc[j][k]);
        c.gamma[i](j, k) = v;
      }
  return c;
}

RigidState FlowMap::Segment::at(double sigma) const {
  const double f = (dt > 0.0) ? sigma / dt : 0.0;
  RigidState s;
  s.lin_vel = (1.0 - f) * s0.lin_vel + f * lin1;
  s.ang_vel = (1.0 - f) * s0.ang_vel + f * ang1;
  s.position = s0.position + sigma * s0.lin_vel +
               0.5 * sigma * f * (lin1 - s0.lin_vel);
  s.angle =
      s0.angle + sigma * s0.ang_vel + 0.5 * sigma * f * (ang1 - s0.ang_vel);
  return s;
}

FlowMap::FlowMap(std::vector<Vec2> ref_points, DiskGeometry geom,
                 Cutoff cutoff, int substeps)
    : ref_points_(std::move(ref_points)),
      geom_(geom),
      cutoff_(cutoff),
      substeps_(substeps) {
  require(substeps_ >= 1, "flow integration needs substeps >= 1");
}

void FlowMap::reset(const RigidState& initial, double t0) {
  frames_.clear();
  FlowFrame f;
  f.time = t0;
  f.state = initial;
  f.pts.resize(ref_points_.size());
  for (size_t i = 0; i < ref_points_.size(); ++i) f.pts[i].x = ref_points_[i];
  frames_.push_back(std::move(f));
}

FlowMap::Segment FlowMap::segment(int k) const {
  Segment s;
  s.s0 = frames_[k].state;
  s.lin1 = frames_[k + 1].state.lin_vel;
  s.ang1 = frames_[k + 1].state.ang_vel;
  s.dt = frames_[k + 1].time - frames_[k].time;
  return s;
}

int FlowMap::substeps_for(const Segment& seg) const {
  // the transition collar has velocity-gradient scale ~ S''_max w / L^2;
  // cap the RK4 substep at a fraction of that rate
  const double lmax = std::max(seg.s0.lin_vel.norm(), seg.lin1.norm());
  const double amax = std::max(std::abs(seg.s0.ang_vel), std::abs(seg.ang1));
  const double b = geom_.outer_radius;
  const double w_sup = b * lmax + 0.5 * b * b * amax;
  const double width = 0.25 * cutoff_.safe_dist();
  const double rate = 5.7735 * w_sup / (width * width);
  const int need = static_cast<int>(std::ceil(seg.dt * rate / 0.2));
  return std::max(substeps_, need);
}

void FlowMap::rk4(const Segment& seg, std::vector<FlowSample>& pts,
                  double t_offset, double length) const {
  const double total = (length < 0.0) ? seg.dt : length;
  const int nsub = substeps_for(seg);
  const double h = total / nsub;
  const double bound = geom_.outer_radius * (1.0 + 1e-9);

  // the point ODEs are uncoupled: stage fields per substep, then advance all
  // samples in parallel (disjoint writes, so results are thread-count free)
  std::vector<std::array<ExtensionField, 3>> stages(nsub);
  for (int k = 0; k < nsub; ++k) {
    const double t0 = t_offset + k * h;
    stages[k] = {lambda_field(seg.at(t0), cutoff_, geom_.body_center),
                 lambda_field(seg.at(t0 + 0.5 * h), cutoff_, geom_.body_center),
                 lambda_field(seg.at(t0 + h), cutoff_, geom_.body_center)};
  }
  std::vector<signed char> escaped(pts.size(), 0);
  parallel_for(static_cast<int>(pts.size()), [&](int i) {
    FlowSample s = pts[i];
    for (int k = 0; k < nsub; ++k) {
      const auto& [l0, lh, l1] = stages[k];
      const Deriv k1 = rhs(l0, s);
      const Deriv k2 = rhs(lh, axpy(s, 0.5 * h, k1));
      const Deriv k3 = rhs(lh, axpy(s, 0.5 * h, k2));
      const Deriv k4 = rhs(l1, axpy(s, h, k3));
      s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
      s.grad += (h / 6.0) * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g);
      s.hess += (h / 6.0) * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
    }
    if (!(s.x.norm() <= bound)) escaped[i] = 1;
    pts[i] = s;
  });
  for (size_t i = 0; i < pts.size(); ++i)
    check_numeric(!escaped[i],
                  "flow integration: node " + std::to_string(i) +
                      " left the container at t = " +
                      std::to_string(t_offset + total));
}

FlowFrame FlowMap::advanced(const Vec2& lin_new, double ang_new,
                            double dt) const {
  require(!frames_.empty(), "flow map has no initial frame");
  require(dt > 0.0, "flow advance needs dt > 0");
  const FlowFrame& last = frames_.back();
  Segment seg{last.state, lin_new, ang_new, dt};
  FlowFrame out;
  out.time = last.time + dt;
  out.state = advance_rigid(last.state, lin_new, ang_new, dt);
  out.pts = last.pts;
  rk4(seg, out.pts);
  return out;
}

FlowSample FlowMap::integrate_point(int frame_idx, const Vec2& y) const {
  FlowSample s;
  s.x = y;
  std::vector<FlowSample> one{s};
  for (int k = 0; k < frame_idx; ++k) rk4(segment(k), one);
  return one[0];
}

Vec2 FlowMap::invert(int frame_idx, const Vec2& x, double tol, int max_iter,
                     int* iters) const {
  const FlowFrame& fr = frames_.at(frame_idx);
  const Vec2 center = geom_.body_center;
  const Mat2 qt = fr.state.rotation().transpose();
  const Vec2 rigid_seed = center + qt * (x - center - fr.state.position);

  auto newton = [&](Vec2 y, int budget, int* used) -> std::pair<bool, Vec2> {
    FlowSample s = integrate_point(frame_idx, y);
    double res = (s.x - x).norm();
    for (int it = 0; it < budget; ++it) {
      if (used) *used = it;
      if (res <= tol) return {true, y};
      const Vec2 step = s.grad.partialPivLu().solve(x - s.x);
      double damp = 1.0;
      for (int half = 0; half < 8; ++half) {
        const Vec2 y_try = y + damp * step;
        if (y_try.norm() <= geom_.outer_radius * (1.0 + 1e-9)) {
          const FlowSample s_try = integrate_point(frame_idx, y_try);
          const double res_try = (s_try.x - x).norm();
          if (res_try < res) {
            y = y_try;
            s = s_try;
            res = res_try;
            break;
          }
        }
        damp *= 0.5;
        if (half == 7) return {false, y};
      }
    }
    if (used) *used = budget;
    return {res <= tol, y};
  };

  int used = 0;
  if (rigid_seed.norm() <= geom_.outer_radius) {
    auto [ok, y] = newton(rigid_seed, max_iter, &used);
    if (ok) {
      if (iters) *iters = used;
      return y;
    }
  }
  // fall back to nearest stored sample
  size_t best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (size_t i = 0; i < fr.pts.size(); ++i) {
    const double d = (fr.pts[i].x - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  auto [ok, y] = newton(ref_points_[best], max_iter, &used);
  check_numeric(ok, "invert_map: Newton did not converge");
  if (iters) *iters = used;
  return y;
}

FlowMap integrate_flow(const std::vector<RigidState>& states, double dt,
                       std::vector<Vec2> ref_points, const DiskGeometry& geom,
                       const Cutoff& cutoff, int substeps) {
  require(states.size() >= 1, "integrate_flow: empty trajectory");
  FlowMap map(std::move(ref_points), geom, cutoff, substeps);
  map.reset(states.front());
  for (size_t k = 1; k < states.size(); ++k)
    map.commit(map.advanced(states[k].lin_vel, states[k].ang_vel, dt));
  return map;
}

MapComposition compose_maps(const FlowMap& map1, const FlowMap& map2,
                            int frame_idx) {
  require(map1.ref_points().size() == map2.ref_points().size(),
          "compose_maps: sample sets differ");
  const FlowFrame& f1 = map1.frame(frame_idx);
  const FlowFrame& f2 = map2.frame(frame_idx);
  require(std::abs(f1.time - f2.time) < 1e-12,
          "compose_maps: maps do not share the time grid");
  MapComposition c;
  const size_t n = f1.pts.size();
  c.point.resize(n);
  c.grad.resize(n);
  for (size_t i = 0; i < n; ++i) {
    c.point[i] = f2.pts[i].x;
    c.grad[i] = f2.pts[i].grad * map_coefficients(f1.pts[i]).pull;
  }
  return c;
}

}  // namespace rigidflow
