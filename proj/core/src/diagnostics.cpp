#include "rigidflow/diagnostics.hpp"

#include <random>

namespace rigidflow {

namespace {

struct PointField {
  Vec2 val = Vec2::Zero();
  Mat2 ref_grad = Mat2::Zero();  // (i,k) = d_k v_i
};

PointField eval_cellpt(const ReferenceMesh& mesh, const VecX& dofs, int c,
                       int q) {
  const CellCache& cc = mesh.cache[c];
  PointField f;
  for (int a = 0; a < 9; ++a) {
    const int id = mesh.cells[c][a];
    const Vec2 va(dofs[2 * id], dofs[2 * id + 1]);
    f.val += cc.n[q][a] * va;
    f.ref_grad += va * cc.dn[q][a].transpose();
  }
  return f;
}

// Lab-frame gradient of the pushed-forward field at a quadrature point.
Mat2 lab_grad(const QuadCoeffs& co, const PointField& f) {
  Mat2 m = f.ref_grad;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) m(i, k) += co.gamma[i].row(k).dot(f.val);
  return co.push * m * co.pull;
}

Vec2 edge_vel(const VecX& dofs, const BoundaryEdge& e, const EdgeQP& qp) {
  Vec2 u = Vec2::Zero();
  for (int i = 0; i < 3; ++i)
    u += qp.shp[i] * Vec2(dofs[2 * e.nodes[i]], dofs[2 * e.nodes[i] + 1]);
  return u;
}

double interior_dissipation(const ReferenceMesh& mesh,
                            const std::vector<QuadCoeffs>& co,
                            const VecX& dofs) {
  double s = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int q = 0; q < 9; ++q) {
      const Mat2 g = lab_grad(co[9 * c + q], eval_cellpt(mesh, dofs, c, q));
      const Mat2 d = 0.5 * (g + g.transpose());
      s += 2.0 * mesh.cache[c].wq[q] * d.squaredNorm();
    }
  return s;
}

double wall_slip_rate(const ReferenceMesh& mesh, double alpha,
                      const VecX& dofs) {
  double s = 0.0;
  for (const auto& e : mesh.outer)
    for (const auto& qp : e.qp)
      s += 2.0 * alpha * qp.wds * edge_vel(dofs, e, qp).squaredNorm();
  return s;
}

double body_slip_rate(const ReferenceMesh& mesh, double alpha,
                      const VecX& dofs, const Vec2& lin_body, double ang) {
  const Vec2 c0 = mesh.geom.body_center;
  double s = 0.0;
  for (const auto& e : mesh.inner)
    for (const auto& qp : e.qp) {
      const Vec2 us = lin_body + ang * perp(qp.x - c0);
      s += 2.0 * alpha * qp.wds * (edge_vel(dofs, e, qp) - us).squaredNorm();
    }
  return s;
}

Vec2 body_frame_lin(const Trajectory& t, int k) {
  return t.states[k].rotation().transpose() * t.fields[k].lin_vel;
}

}  // namespace

double EnergyLedger::max_abs_residual() const {
  double m = 0.0;
  for (double r : residual) m = std::max(m, std::abs(r));
  return m;
}

EnergyLedger energy_audit(const Trajectory& traj) {
  const ReferenceMesh& mesh = *traj.mesh;
  const MaterialParams& mat = traj.material;
  const int n = static_cast<int>(traj.fields.size());
  EnergyLedger led;
  led.time.resize(n);
  led.fluid_kinetic.resize(n);
  led.solid_kinetic.resize(n);
  led.dissip_interior.assign(n, 0.0);
  led.dissip_wall.assign(n, 0.0);
  led.dissip_body.assign(n, 0.0);
  led.residual.resize(n);

  std::vector<double> rate_int(n), rate_wall(n), rate_body(n);
  for (int k = 0; k < n; ++k) {
    const auto co = frame_coefficients(mesh, traj.flow.frame(k), nullptr);
    const VecX& v = traj.fields[k].velocity;
    led.time[k] = traj.fields[k].time;
    const double fl = metric_l2(mesh, co, v);
    led.fluid_kinetic[k] = 0.5 * fl * fl;
    led.solid_kinetic[k] =
        0.5 * mat.mass * traj.fields[k].lin_vel.squaredNorm() +
        0.5 * mat.inertia * traj.fields[k].ang_vel * traj.fields[k].ang_vel;
    rate_int[k] = interior_dissipation(mesh, co, v);
    rate_wall[k] = wall_slip_rate(mesh, mat.friction, v);
    rate_body[k] = body_slip_rate(mesh, mat.friction, v, body_frame_lin(traj, k),
                                  traj.fields[k].ang_vel);
  }
  for (int k = 1; k < n; ++k) {
    const double hdt = 0.5 * (led.time[k] - led.time[k - 1]);
    led.dissip_interior[k] =
        led.dissip_interior[k - 1] + hdt * (rate_int[k] + rate_int[k - 1]);
    led.dissip_wall[k] =
        led.dissip_wall[k - 1] + hdt * (rate_wall[k] + rate_wall[k - 1]);
    led.dissip_body[k] =
        led.dissip_body[k - 1] + hdt * (rate_body[k] + rate_body[k - 1]);
  }
  const double e0 = led.fluid_kinetic[0] + led.solid_kinetic[0];
  for (int k = 0; k < n; ++k)
    led.residual[k] = led.fluid_kinetic[k] + led.solid_kinetic[k] +
                      led.dissip_interior[k] + led.dissip_wall[k] +
                      led.dissip_body[k] - e0;
  return led;
}

namespace {

ExtensionField test_field(const Trajectory& traj, const AdmissibleTest& test,
                          int k) {
  ExtensionField f;
  f.cutoff = &traj.cutoff;
  f.center = traj.mesh->geom.body_center + traj.states[k].position;
  f.lin_vel = test.lin(traj.fields[k].time);
  f.ang_vel = test.ang(traj.fields[k].time);
  return f;
}

void validate_test(const Trajectory& traj, const AdmissibleTest& test) {
  const double tf = traj.fields.back().time;
  require(test.lin(tf).norm() + std::abs(test.ang(tf)) < 1e-12,
          "weak_residual: test must vanish near the final time");
  // divergence-free and rigid-on-body checks of the extension construction
  const ExtensionField f = test_field(traj, test, 0);
  std::mt19937 gen(2026);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const DiskGeometry& g = traj.mesh->geom;
  int checked = 0;
  double sup = 1e-30, worst = 0.0;
  while (checked < 40) {
    const Vec2 x(g.outer_radius * u(gen), g.outer_radius * u(gen));
    const double rho = (x - g.body_center).norm();
    if (rho < g.body_radius + 1e-3 || x.norm() > g.outer_radius - 1e-3)
      continue;
    ++checked;
    sup = std::max(sup, f.value(x).norm());
    worst = std::max(worst, std::abs(divergence_fd(f, x)));
  }
  require(worst < 1e-7 * sup, "weak_residual: test is not divergence-free");
  // rigid on the body
  const Vec2 yb = g.body_center + Vec2(0.5 * g.body_radius, 0.0);
  const Vec2 want = test.lin(0.0) + test.ang(0.0) * perp(yb - f.center);
  require((f.value(yb) - want).norm() < 1e-10,
          "weak_residual: test is not rigid on the body");
}

}  // namespace

namespace {

// Nodal test data at one frame: the lab field pulled back to the reference
// mesh plus the body-frame rigid pair.
struct TestFrame {
  VecX dofs;
  Vec2 lin_body;
  double ang;
};

TestFrame interpolate_test(const Trajectory& traj, const AdmissibleTest& test,
                           int k) {
  const ReferenceMesh& mesh = *traj.mesh;
  const ExtensionField phi = test_field(traj, test, k);
  const FlowFrame& fr = traj.flow.frame(k);
  TestFrame tf;
  tf.dofs.resize(2 * mesh.n_vnodes);
  for (int i = 0; i < mesh.n_vnodes; ++i) {
    const Vec2 val =
        map_coefficients(fr.pts[i]).pull * phi.value(fr.pts[i].x);
    tf.dofs[2 * i] = val.x();
    tf.dofs[2 * i + 1] = val.y();
  }
  const double t = traj.fields[k].time;
  tf.lin_body = traj.states[k].rotation().transpose() * test.lin(t);
  tf.ang = test.ang(t);
  return tf;
}

// Spatial forms of the scheme (viscous + slip + skew transport + pressure)
// at one frame, paired with a discrete test triple.
double frame_form(const Trajectory& traj, int k,
                  const std::vector<QuadCoeffs>& co, const VecX& vtest,
                  const Vec2& lbtest, double angtest) {
  const ReferenceMesh& mesh = *traj.mesh;
  const MaterialParams& mat = traj.material;
  const Vec2 c0 = mesh.geom.body_center;
  const VecX& v = traj.fields[k].velocity;
  const FlowFrame& fr = traj.flow.frame(k);
  const ExtensionField grid =
      lambda_field(fr.state, traj.cutoff, mesh.geom.body_center);
  const Vec2 lb = body_frame_lin(traj, k);

  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      const QuadCoeffs& cq = co[9 * c + q];
      const int s = mesh.n_vnodes + 9 * c + q;
      const PointField f1 = eval_cellpt(mesh, v, c, q);
      const PointField ft = eval_cellpt(mesh, vtest, c, q);
      const Mat2 du = lab_grad(cq, f1), dphi = lab_grad(cq, ft);
      const Mat2 ds = 0.5 * (du + du.transpose());
      const Mat2 ps = 0.5 * (dphi + dphi.transpose());
      const Vec2 w = f1.val - cq.pull * grid.value(fr.pts[s].x);
      Vec2 conv_v, conv_t;
      for (int i = 0; i < 2; ++i) {
        conv_v(i) = w.dot(f1.ref_grad.row(i));
        conv_t(i) = w.dot(ft.ref_grad.row(i));
        for (int kk = 0; kk < 2; ++kk) {
          conv_v(i) += w(kk) * cq.gamma[i].row(kk).dot(f1.val);
          conv_t(i) += w(kk) * cq.gamma[i].row(kk).dot(ft.val);
        }
      }
      double p = 0.0;
      for (int pa = 0; pa < 4; ++pa)
        p += cc.np[q][pa] * traj.fields[k].pressure[mesh.pcells[c][pa]];
      acc += cc.wq[q] *
             (2.0 * ds.cwiseProduct(ps).sum() +
              0.5 * (conv_v.dot(cq.metric * ft.val) -
                     conv_t.dot(cq.metric * f1.val)) -
              p * (ft.ref_grad(0, 0) + ft.ref_grad(1, 1)));
    }
  }
  for (const auto& e : mesh.outer)
    for (const auto& qp : e.qp)
      acc += 2.0 * mat.friction * qp.wds *
             edge_vel(v, e, qp).dot(edge_vel(vtest, e, qp));
  for (const auto& e : mesh.inner)
    for (const auto& qp : e.qp) {
      const Vec2 pr = perp(qp.x - c0);
      const Vec2 ud = edge_vel(v, e, qp) - lb - traj.fields[k].ang_vel * pr;
      const Vec2 pd = edge_vel(vtest, e, qp) - lbtest - angtest * pr;
      acc += 2.0 * mat.friction * qp.wds * ud.dot(pd);
    }
  return acc;
}

}  // namespace

double weak_residual(const Trajectory& traj, const AdmissibleTest& test) {
  validate_test(traj, test);
  const ReferenceMesh& mesh = *traj.mesh;
  const MaterialParams& mat = traj.material;
  const int n = static_cast<int>(traj.fields.size());
  require(n >= 3, "weak_residual needs at least two steps");

  std::vector<TestFrame> tf(n);
  for (int k = 0; k < n; ++k) tf[k] = interpolate_test(traj, test, k);

  // time-centered quadrature of the transformed weak form; the gap to the
  // solved backward-Euler rows telescopes to first order in dt
  double acc = 0.0;
  std::vector<QuadCoeffs> co_prev =
      frame_coefficients(mesh, traj.flow.frame(0), nullptr);
  double form_prev =
      frame_form(traj, 0, co_prev, tf[0].dofs, tf[0].lin_body, tf[0].ang);
  for (int k = 1; k < n; ++k) {
    const double dt = traj.fields[k].time - traj.fields[k - 1].time;
    auto co = frame_coefficients(mesh, traj.flow.frame(k),
                                 &traj.flow.frame(k - 1));
    const double form_k =
        frame_form(traj, k, co, tf[k].dofs, tf[k].lin_body, tf[k].ang);

    // mass pairing against the time-centered test
    const VecX vmid = 0.5 * (tf[k].dofs + tf[k - 1].dofs);
    double mass = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const CellCache& cc = mesh.cache[c];
      for (int q = 0; q < 9; ++q) {
        const QuadCoeffs& cq = co[9 * c + q];
        const PointField f1 = eval_cellpt(mesh, traj.fields[k].velocity, c, q);
        const PointField f0 =
            eval_cellpt(mesh, traj.fields[k - 1].velocity, c, q);
        const PointField fm = eval_cellpt(mesh, vmid, c, q);
        mass += cc.wq[q] * (f1.val.dot(cq.metric * fm.val) -
                            (cq.mixed * f0.val).dot(fm.val));
      }
    }
    const Mat2 qT = traj.states[k].rotation().transpose();
    const Vec2 lb1 = body_frame_lin(traj, k);
    const Vec2 lb0 = qT * traj.fields[k - 1].lin_vel;
    const Vec2 lbt = 0.5 * (tf[k].lin_body + tf[k - 1].lin_body);
    const double angt = 0.5 * (tf[k].ang + tf[k - 1].ang);
    mass += mat.mass * (lb1 - lb0).dot(lbt) +
            mat.inertia *
                (traj.fields[k].ang_vel - traj.fields[k - 1].ang_vel) * angt;

    acc += mass + 0.5 * dt * (form_prev + form_k);
    form_prev = form_k;
  }
  return std::abs(acc);
}

double weak_residual_discrete(const Trajectory& traj, const VecX& vdofs,
                              const Vec2& lin_body, double ang) {
  const ReferenceMesh& mesh = *traj.mesh;
  const MaterialParams& mat = traj.material;
  const int n = static_cast<int>(traj.fields.size());
  const Vec2 c0 = mesh.geom.body_center;

  double acc = 0.0;
  for (int k = 1; k < n; ++k) {
    const double dt = traj.fields[k].time - traj.fields[k - 1].time;
    const FlowFrame& fr = traj.flow.frame(k);
    auto co = frame_coefficients(mesh, fr, &traj.flow.frame(k - 1));
    const ExtensionField grid =
        lambda_field(fr.state, traj.cutoff, mesh.geom.body_center);
    const VecX& v1 = traj.fields[k].velocity;
    const VecX& v0 = traj.fields[k - 1].velocity;

    double term = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const CellCache& cc = mesh.cache[c];
      for (int q = 0; q < 9; ++q) {
        QuadCoeffs& cq = co[9 * c + q];
        const int s = mesh.n_vnodes + 9 * c + q;
        const PointField f1 = eval_cellpt(mesh, v1, c, q);
        const PointField f0 = eval_cellpt(mesh, v0, c, q);
        const PointField ft = eval_cellpt(mesh, vdofs, c, q);
        cq.conv_w = f1.val - cq.pull * grid.value(fr.pts[s].x);
        const Mat2 du = lab_grad(cq, f1), dphi = lab_grad(cq, ft);
        const Mat2 ds = 0.5 * (du + du.transpose());
        const Mat2 ps = 0.5 * (dphi + dphi.transpose());
        // skew-symmetrized covariant transport at the converged state
        Vec2 conv_v, conv_t;
        for (int i = 0; i < 2; ++i) {
          conv_v(i) = cq.conv_w.dot(f1.ref_grad.row(i));
          conv_t(i) = cq.conv_w.dot(ft.ref_grad.row(i));
          for (int kk = 0; kk < 2; ++kk) {
            conv_v(i) += cq.conv_w(kk) * cq.gamma[i].row(kk).dot(f1.val);
            conv_t(i) += cq.conv_w(kk) * cq.gamma[i].row(kk).dot(ft.val);
          }
        }
        term += cc.wq[q] *
                ((f1.val.dot(cq.metric * ft.val) -
                  (cq.mixed * f0.val).dot(ft.val)) /
                     dt +
                 2.0 * ds.cwiseProduct(ps).sum() +
                 0.5 * (conv_v.dot(cq.metric * ft.val) -
                        conv_t.dot(cq.metric * f1.val)));
      }
    }
    for (const auto& e : mesh.outer)
      for (const auto& qp : e.qp)
        term += 2.0 * mat.friction * qp.wds *
                edge_vel(v1, e, qp).dot(edge_vel(vdofs, e, qp));
    const Vec2 lb1 = body_frame_lin(traj, k);
    for (const auto& e : mesh.inner)
      for (const auto& qp : e.qp) {
        const Vec2 pr = perp(qp.x - c0);
        const Vec2 ud = edge_vel(v1, e, qp) - lb1 - traj.fields[k].ang_vel * pr;
        const Vec2 pd = edge_vel(vdofs, e, qp) - lin_body - ang * pr;
        term += 2.0 * mat.friction * qp.wds * ud.dot(pd);
      }
    // rigid rows: previous body momentum rotated into the current frame
    const Mat2 qT = rotation_matrix(fr.state.angle).transpose();
    const Vec2 dl = lb1 - qT * traj.fields[k - 1].lin_vel;
    term += (mat.mass / dt) * dl.dot(lin_body) +
            (mat.inertia / dt) *
                (traj.fields[k].ang_vel - traj.fields[k - 1].ang_vel) * ang;
    acc += dt * term;
  }
  return std::abs(acc);
}

namespace {

double bump_cdf(double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double u3 = u * u * u, u5 = u3 * u * u, u7 = u5 * u * u;
  return (35.0 / 32.0) * (u - u3 + 0.6 * u5 - u7 / 7.0 + 16.0 / 35.0);
}

}  // namespace

Trajectory time_smooth(const Trajectory& traj, double eps) {
  require(eps > 0.0, "mollifier width must be positive");
  const int n = static_cast<int>(traj.fields.size());
  require(n >= 2, "time_smooth needs a run");
  const double span = traj.fields.back().time - traj.fields.front().time;
  require(eps < span, "mollifier width must be smaller than the run length");

  Trajectory out = traj;
  std::vector<double> bnd(n + 1);
  bnd[0] = -std::numeric_limits<double>::infinity();
  bnd[n] = std::numeric_limits<double>::infinity();
  for (int m = 1; m < n; ++m)
    bnd[m] = 0.5 * (traj.fields[m - 1].time + traj.fields[m].time);

  for (int k = 0; k < n; ++k) {
    const double t = traj.fields[k].time;
    VecX v = VecX::Zero(traj.fields[0].velocity.size());
    VecX p = VecX::Zero(traj.fields[0].pressure.size());
    Vec2 lb = Vec2::Zero();
    double r = 0.0;
    for (int m = 0; m < n; ++m) {
      // integral of the scaled bump over the slab of sample m
      const double w =
          bump_cdf((t - bnd[m]) / eps) - bump_cdf((t - bnd[m + 1]) / eps);
      if (w == 0.0) continue;
      v += w * traj.fields[m].velocity;
      p += w * traj.fields[m].pressure;
      lb += w * body_frame_lin(traj, m);
      r += w * traj.fields[m].ang_vel;
    }
    out.fields[k].velocity = v;
    out.fields[k].pressure = p;
    out.fields[k].lin_vel = traj.states[k].rotation() * lb;
    out.fields[k].ang_vel = r;
    out.states[k].lin_vel = out.fields[k].lin_vel;
    out.states[k].ang_vel = r;
  }
  return out;
}

double solution_norm_distance(const Trajectory& a, const Trajectory& b) {
  const ReferenceMesh& mesh = *a.mesh;
  require(a.fields.size() == b.fields.size(),
          "solution_norm_distance: trajectories differ in length");
  const int n = static_cast<int>(a.fields.size());
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto co = frame_coefficients(mesh, a.flow.frame(k), nullptr);
    const VecX dv = a.fields[k].velocity - b.fields[k].velocity;
    double h1 = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c)
      for (int q = 0; q < 9; ++q) {
        const PointField pf = eval_cellpt(mesh, dv, c, q);
        const QuadCoeffs& cq = co[9 * c + q];
        const Vec2 u = cq.push * pf.val;
        h1 += mesh.cache[c].wq[q] *
              (u.squaredNorm() + lab_grad(cq, pf).squaredNorm());
      }
    const Vec2 dl = body_frame_lin(a, k) - body_frame_lin(b, k);
    const double dr = a.fields[k].ang_vel - b.fields[k].ang_vel;
    const double val = h1 + a.material.mass * dl.squaredNorm() +
                       a.material.inertia * dr * dr;
    const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
    const double dt = (k == 0) ? a.fields[1].time - a.fields[0].time
                               : a.fields[k].time - a.fields[k - 1].time;
    acc += w * dt * val;
  }
  return std::sqrt(acc);
}

namespace {

// Index map of run b onto run a's grid: b must be a refinement (or equal).
std::vector<int> align_grids(const Trajectory& a, const Trajectory& b) {
  const int na = static_cast<int>(a.fields.size());
  const int nb = static_cast<int>(b.fields.size());
  require((nb - 1) % std::max(1, na - 1) == 0,
          "compare_runs: incompatible time grids");
  const int stride = (na > 1) ? (nb - 1) / (na - 1) : 1;
  std::vector<int> idx(na);
  for (int k = 0; k < na; ++k) {
    idx[k] = k * stride;
    require(std::abs(a.fields[k].time - b.fields[idx[k]].time) <
                1e-10 * std::max(1.0, a.fields.back().time),
            "compare_runs: time grids do not nest");
  }
  return idx;
}

double broken_lp(double p, std::vector<double>& vals,
                 std::vector<double>& weights) {
  double s = 0.0;
  for (size_t i = 0; i < vals.size(); ++i)
    s += weights[i] * std::pow(std::abs(vals[i]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

TransformedRun transform_between(const Trajectory& run2,
                                 const Trajectory& run1) {
  require(run1.mesh.get() == run2.mesh.get() ||
              (run1.mesh->nr == run2.mesh->nr && run1.mesh->nt == run2.mesh->nt),
          "transform_between: runs must share the reference domain");
  const std::vector<int> idx = align_grids(run1, run2);
  const ReferenceMesh& mesh = *run1.mesh;
  TransformedRun out;
  const int n = static_cast<int>(idx.size());
  out.velocity.resize(n);
  out.lin_vel.resize(n);
  out.ang_vel.resize(n);
  out.div_residual.resize(n);
  for (int k = 0; k < n; ++k) {
    const FlowFrame& f1 = run1.flow.frame(k);
    const FlowFrame& f2 = run2.flow.frame(idx[k]);
    VecX v(2 * mesh.n_vnodes);
    for (int i = 0; i < mesh.n_vnodes; ++i) {
      // grad(psi)(phi(x)) u2(phi(x)) pulled back through run 1's map:
      // the products of the stored gradients collapse to the reference dofs
      const Mat2 g1 = f1.pts[i].grad;
      const Mat2 g2 = f2.pts[i].grad;
      const Vec2 v2(run2.fields[idx[k]].velocity[2 * i],
                    run2.fields[idx[k]].velocity[2 * i + 1]);
      const Vec2 u2 = g2 * v2;                       // lab field of run 2
      const Mat2 dpsi = g1 * map_coefficients(f2.pts[i]).pull;
      const Vec2 vt = map_coefficients(f1.pts[i]).pull * (dpsi * u2);
      v[2 * i] = vt.x();
      v[2 * i + 1] = vt.y();
    }
    out.velocity[k] = v;
    const Mat2 q1 = run1.states[k].rotation();
    const Mat2 q2 = run2.states[idx[k]].rotation();
    out.lin_vel[k] = q1 * q2.transpose() * run2.fields[idx[k]].lin_vel;
    out.ang_vel[k] = run2.fields[idx[k]].ang_vel;
    out.div_residual[k] = divergence_residual(mesh, v);
  }
  return out;
}

ComparatorReport compare_runs(const Trajectory& run1, const Trajectory& run2) {
  const std::vector<int> idx = align_grids(run1, run2);
  const ReferenceMesh& mesh = *run1.mesh;
  const MaterialParams& mat = run1.material;
  const int n = static_cast<int>(idx.size());

  ComparatorReport rep;
  rep.time.resize(n);
  rep.ehat.resize(n);
  rep.bquant.resize(n);
  rep.bint.assign(n, 0.0);
  rep.lin2_transformed.resize(n);
  rep.ang2_transformed.resize(n);

  // sup of the L2 norm of the transformed second field (reference dofs)
  double sup_l2 = 0.0;
  std::vector<double> l2s(n), gradl2(n);
  for (int k = 0; k < n; ++k) {
    const auto co = frame_coefficients(mesh, run1.flow.frame(k), nullptr);
    const VecX& v2 = run2.fields[idx[k]].velocity;
    const double l2 = metric_l2(mesh, co, v2);
    l2s[k] = l2;
    sup_l2 = std::max(sup_l2, l2);
    double g2 = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c)
      for (int q = 0; q < 9; ++q)
        g2 += mesh.cache[c].wq[q] *
              lab_grad(co[9 * c + q], eval_cellpt(mesh, v2, c, q))
                  .squaredNorm();
    gradl2[k] = std::sqrt(g2);
  }

  for (int k = 0; k < n; ++k) {
    const double t = run1.fields[k].time;
    rep.time[k] = t;
    const auto co = frame_coefficients(mesh, run1.flow.frame(k), nullptr);
    const VecX dv = run1.fields[k].velocity - run2.fields[idx[k]].velocity;
    const double l2 = metric_l2(mesh, co, dv);
    const Vec2 dl = body_frame_lin(run1, k) -
                    run2.states[idx[k]].rotation().transpose() *
                        run2.fields[idx[k]].lin_vel;
    const double dr =
        run1.fields[k].ang_vel - run2.fields[idx[k]].ang_vel;
    rep.ehat[k] = l2 * l2 + mat.mass * dl.squaredNorm() +
                  mat.inertia * dr * dr;
    const Mat2 q1 = run1.states[k].rotation();
    const Mat2 q2 = run2.states[idx[k]].rotation();
    rep.lin2_transformed[k] =
        q1 * q2.transpose() * run2.fields[idx[k]].lin_vel;
    rep.ang2_transformed[k] = run2.fields[idx[k]].ang_vel;

    // Groenwall coefficient surrogate from broken norms of the second run
    const VecX& v2 = run2.fields[idx[k]].velocity;
    std::vector<double> vals, wts;
    std::vector<double> w2vals, w2wts, dpvals, dpwts, g4vals, g4wts;
    const int km = std::max(0, idx[k] - 1);
    const double dtb =
        std::max(run2.fields[idx[k]].time - run2.fields[km].time, 1e-30);
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const CellCache& cc = mesh.cache[c];
      for (int q = 0; q < 9; ++q) {
        const QuadCoeffs& cq = co[9 * c + q];
        const PointField pf = eval_cellpt(mesh, v2, c, q);
        const Mat2 gl = lab_grad(cq, pf);
        // time derivative surrogate by difference quotient of the dofs
        const PointField pm =
            eval_cellpt(mesh, run2.fields[km].velocity, c, q);
        vals.push_back((pf.val - pm.val).norm() / dtb * t);
        wts.push_back(cc.wq[q]);
        // broken second derivatives of the biquadratic field
        double h2 = 0.0;
        {
          Vec3 hess[9];
          const Vec2 xi(shape::gauss_x[q / 3], shape::gauss_x[q % 3]);
          shape::q2_second(xi, hess);
          Vec3 acc2[2] = {Vec3::Zero(), Vec3::Zero()};
          for (int a = 0; a < 9; ++a) {
            const int id = mesh.cells[c][a];
            const Mat2 ji = cc.jinv[q];
            // chain rule surrogate: reference Hessian scaled by J^-1 twice
            Mat2 href;
            href << hess[a](0), hess[a](1), hess[a](1), hess[a](2);
            const Mat2 hphys = ji.transpose() * href * ji;
            acc2[0] += Vec3(hphys(0, 0), hphys(0, 1), hphys(1, 1)) *
                       v2[2 * id];
            acc2[1] += Vec3(hphys(0, 0), hphys(0, 1), hphys(1, 1)) *
                       v2[2 * id + 1];
          }
          h2 = std::sqrt(acc2[0].squaredNorm() + acc2[1].squaredNorm());
        }
        w2vals.push_back(t * (pf.val.norm() + gl.norm() + h2));
        w2wts.push_back(cc.wq[q]);
        g4vals.push_back(t * gl.norm());
        g4wts.push_back(cc.wq[q]);
        // pressure gradient of run 2 (broken, bilinear in cells)
        Vec2 gp = Vec2::Zero();
        for (int pa = 0; pa < 4; ++pa)
          gp += cc.dnp[q][pa] *
                run2.fields[idx[k]].pressure[mesh.pcells[c][pa]];
        dpvals.push_back(t * gp.norm());
        dpwts.push_back(cc.wq[q]);
      }
    }
    const double p43 = 4.0 / 3.0;
    const double b1 = sup_l2 * (1.0 + gradl2[k]);
    const double b2 = std::sqrt(sup_l2) * std::sqrt(gradl2[k]) *
                      broken_lp(4.0, g4vals, g4wts);
    const double b3 = std::pow(broken_lp(p43, vals, wts) +
                                   broken_lp(p43, w2vals, w2wts) +
                                   broken_lp(p43, dpvals, dpwts),
                               p43);
    rep.bquant[k] = b1 + b2 + b3;
    if (k > 0)
      rep.bint[k] = rep.bint[k - 1] + 0.5 * (rep.time[k] - rep.time[k - 1]) *
                                          (rep.bquant[k] + rep.bquant[k - 1]);
  }
  return rep;
}

}  // namespace rigidflow
