#include "rigidflow/stokes_robin.hpp"

#include <Eigen/SparseLU>

namespace rigidflow {

namespace {

StrongNormalBc ring_bc(const ReferenceMesh& mesh, bool on_inner,
                       const std::function<double(const Vec2&)>& data) {
  StrongNormalBc bc;
  const auto& nodes = on_inner ? mesh.inner_nodes : mesh.outer_nodes;
  for (int id : nodes) {
    const Vec2 n = mesh.node_normal(id, on_inner);
    Mat2 f;
    f.col(0) = n;
    f.col(1) = perp(n);
    bc.nodes.push_back(id);
    bc.frame.push_back(f);
    bc.data.push_back(data ? data(mesh.vnode[id]) : 0.0);
  }
  return bc;
}

double net_flux(const ReferenceMesh& mesh,
                const std::function<double(const Vec2&)>& inner,
                const std::function<double(const Vec2&)>& outer) {
  double flux = 0.0;
  for (const auto& e : mesh.inner)
    for (const auto& qp : e.qp)
      if (inner) flux += inner(qp.x) * qp.wds;
  for (const auto& e : mesh.outer)
    for (const auto& qp : e.qp)
      if (outer) flux += outer(qp.x) * qp.wds;
  return flux;
}

}  // namespace

SteadySolution solve_steady_robin(const SteadyProblem& prob) {
  const ReferenceMesh& mesh = *prob.mesh;
  const double scale = mesh.geom.outer_radius;
  require(std::abs(net_flux(mesh, prob.normal_inner, prob.normal_outer)) <
              1e-8 * scale,
          "incompatible normal data: nonzero net flux through the boundary");

  SystemLayout layout;
  layout.n_vnodes = mesh.n_vnodes;
  layout.np = mesh.n_pnodes;
  layout.n_lam = 0;
  layout.rigid = false;

  Assembler asd(mesh, layout);
  asd.set_strong_bc({ring_bc(mesh, true, prob.normal_inner),
                     ring_bc(mesh, false, prob.normal_outer)});
  asd.add_viscous(nullptr);
  asd.add_slip_outer(prob.alpha);
  asd.add_slip_inner_data(prob.alpha, prob.robin_offset_inner);
  asd.add_divergence();
  asd.add_gauge();
  if (prob.force) asd.rhs_volume_force(prob.force);
  if (prob.tang_inner) asd.rhs_edge_tangential(true, prob.tang_inner);
  if (prob.tang_outer) asd.rhs_edge_tangential(false, prob.tang_outer);

  const LinearSolution ls = asd.solve();
  return SteadySolution{ls.velocity, ls.pressure, ls.gauge};
}

double steady_energy_gap(const SteadyProblem& prob,
                         const SteadySolution& sol) {
  const ReferenceMesh& mesh = *prob.mesh;
  const VecX& v = sol.velocity;

  auto edge_vel = [&](const BoundaryEdge& e, const EdgeQP& qp) {
    Vec2 u = Vec2::Zero();
    for (int i = 0; i < 3; ++i)
      u += qp.shp[i] * Vec2(v[2 * e.nodes[i]], v[2 * e.nodes[i] + 1]);
    return u;
  };

  // Full momentum residual action s_i (Cartesian, no constraints): zero on
  // solved rows, the normal-stress reaction on prescribed-trace rows.
  VecX s = VecX::Zero(2 * mesh.n_vnodes);
  double dissip = 0.0, work = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      Vec2 u = Vec2::Zero();
      Mat2 g = Mat2::Zero();
      for (int a = 0; a < 9; ++a) {
        const Vec2 ua(v[2 * mesh.cells[c][a]], v[2 * mesh.cells[c][a] + 1]);
        u += cc.n[q][a] * ua;
        g += ua * cc.dn[q][a].transpose();
      }
      const Mat2 d = 0.5 * (g + g.transpose());
      double p = 0.0;
      for (int pa = 0; pa < 4; ++pa)
        p += cc.np[q][pa] * sol.pressure[mesh.pcells[c][pa]];
      dissip += 2.0 * cc.wq[q] * d.squaredNorm();
      const Vec2 f = prob.force ? prob.force(cc.xq[q]) : Vec2::Zero();
      work += cc.wq[q] * f.dot(u);
      for (int a = 0; a < 9; ++a) {
        const Vec2& dn = cc.dn[q][a];
        for (int comp = 0; comp < 2; ++comp) {
          // 2 D(u):D(phi) - p div phi - f.phi
          const double val = 2.0 * d.row(comp).dot(dn) - p * dn(comp) -
                             f(comp) * cc.n[q][a];
          s[2 * mesh.cells[c][a] + comp] += cc.wq[q] * val;
        }
      }
    }
  }
  for (const auto& e : mesh.outer)
    for (const auto& qp : e.qp) {
      const Vec2 u = edge_vel(e, qp);
      dissip += 2.0 * prob.alpha * qp.wds * u.squaredNorm();
      const Vec2 h = prob.tang_outer ? prob.tang_outer(qp.x) : Vec2::Zero();
      work += 2.0 * qp.wds * h.dot(qp.tau) * u.dot(qp.tau);
      for (int i = 0; i < 3; ++i) {
        const Vec2 row = 2.0 * prob.alpha * u - 2.0 * h.dot(qp.tau) * qp.tau;
        s.segment<2>(2 * e.nodes[i]) += qp.wds * qp.shp[i] * row;
      }
    }
  for (const auto& e : mesh.inner)
    for (const auto& qp : e.qp) {
      const Vec2 u = edge_vel(e, qp);
      const Vec2 us = prob.robin_offset_inner ? prob.robin_offset_inner(qp.x)
                                              : Vec2::Zero();
      dissip += 2.0 * prob.alpha * qp.wds * (u - us).squaredNorm();
      const Vec2 h = prob.tang_inner ? prob.tang_inner(qp.x) : Vec2::Zero();
      work += 2.0 * qp.wds * h.dot(qp.tau) * u.dot(qp.tau);
      work -= 2.0 * prob.alpha * qp.wds * us.dot(u - us);
      for (int i = 0; i < 3; ++i) {
        const Vec2 row = 2.0 * prob.alpha * (u - us) -
                         2.0 * h.dot(qp.tau) * qp.tau;
        s.segment<2>(2 * e.nodes[i]) += qp.wds * qp.shp[i] * row;
      }
    }
  // residual work: interior rows vanish to solver tolerance, boundary rows
  // carry the reaction of the prescribed normal trace
  work += v.dot(s);
  return std::abs(dissip - work) / std::max(dissip, 1e-30);
}

std::array<VecX, 3> kirchhoff_potentials(const ReferenceMesh& mesh) {
  const Vec2 c0 = mesh.geom.body_center;
  std::array<std::function<Vec2(const Vec2&)>, 3> data = {
      [](const Vec2&) { return Vec2(1.0, 0.0); },
      [](const Vec2&) { return Vec2(0.0, 1.0); },
      [c0](const Vec2& x) { return perp(x - c0); }};

  const int nn = mesh.n_vnodes;
  std::vector<Triplet> trips;
  VecX gauge = VecX::Zero(nn);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q)
      for (int a = 0; a < 9; ++a) {
        gauge[mesh.cells[c][a]] += cc.wq[q] * cc.n[q][a];
        for (int b = 0; b < 9; ++b)
          trips.emplace_back(mesh.cells[c][a], mesh.cells[c][b],
                             cc.wq[q] * cc.dn[q][a].dot(cc.dn[q][b]));
      }
  }
  for (int i = 0; i < nn; ++i) {
    trips.emplace_back(nn, i, gauge[i]);
    trips.emplace_back(i, nn, gauge[i]);
  }
  SpMat a(nn + 1, nn + 1);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  check_numeric(lu.info() == Eigen::Success, "Kirchhoff system is singular");

  std::array<VecX, 3> out;
  for (int k = 0; k < 3; ++k) {
    VecX rhs = VecX::Zero(nn + 1);
    double compat = 0.0;
    for (const auto& e : mesh.inner)
      for (const auto& qp : e.qp) {
        const double kn = data[k](qp.x).dot(qp.nds);
        compat += kn;
        for (int i = 0; i < 3; ++i) rhs[e.nodes[i]] += qp.shp[i] * kn;
      }
    check_numeric(std::abs(compat) < 1e-10,
                  "Kirchhoff Neumann datum violates solvability");
    const VecX sol = lu.solve(rhs);
    check_numeric(sol.allFinite(), "Kirchhoff solve produced NaN");
    out[k] = sol.head(nn);
  }
  return out;
}

Mat3 added_mass(const ReferenceMesh& mesh, const std::array<VecX, 3>& phi) {
  Mat3 a = Mat3::Zero();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      Vec2 g[3] = {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
      for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 9; ++s)
          g[k] += cc.dn[q][s] * phi[k][mesh.cells[c][s]];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) += cc.wq[q] * g[i].dot(g[j]);
    }
  }
  return a;
}

LiftingOperators build_lifting(const ReferenceMesh& mesh,
                               const MaterialParams& mat) {
  mat.validate();
  LiftingOperators ops;
  ops.potentials = kirchhoff_potentials(mesh);
  ops.added = added_mass(mesh, ops.potentials);
  ops.kmat = ops.added;
  ops.kmat(0, 0) += mat.mass;
  ops.kmat(1, 1) += mat.mass;
  ops.kmat(2, 2) += mat.inertia;
  return ops;
}

SteadySolution lifting(const ReferenceMesh& mesh, const Vec2& l, double r,
                       double alpha) {
  const Vec2 c0 = mesh.geom.body_center;
  auto rigid = [l, r, c0](const Vec2& x) -> Vec2 {
    return l + r * perp(x - c0);
  };
  SteadyProblem prob;
  prob.mesh = &mesh;
  prob.alpha = alpha;
  prob.normal_inner = [&mesh, rigid](const Vec2& x) {
    return rigid(x).dot(-(x - mesh.geom.body_center).normalized());
  };
  prob.robin_offset_inner = rigid;
  return solve_steady_robin(prob);
}

double dirichlet_energy(const ReferenceMesh& mesh, const VecX& phi) {
  double e = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      Vec2 g = Vec2::Zero();
      for (int s = 0; s < 9; ++s) g += cc.dn[q][s] * phi[mesh.cells[c][s]];
      e += cc.wq[q] * g.squaredNorm();
    }
  }
  return e;
}

double scalar_mean(const ReferenceMesh& mesh, const VecX& phi) {
  double m = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      double v = 0.0;
      for (int s = 0; s < 9; ++s) v += cc.n[q][s] * phi[mesh.cells[c][s]];
      m += cc.wq[q] * v;
    }
  }
  return m / mesh.area;
}

// stream function sin(1.1 x + 0.2) cos(0.7 y - 0.3), pressure sin(0.9 x) y
Vec2 mms_velocity(const Vec2& x) {
  const double s = std::sin(1.1 * x.x() + 0.2), c = std::cos(1.1 * x.x() + 0.2);
  const double s2 = std::sin(0.7 * x.y() - 0.3), c2 = std::cos(0.7 * x.y() - 0.3);
  return Vec2(0.7 * s * s2, 1.1 * c * c2);
}

Mat2 mms_velocity_grad(const Vec2& x) {
  const double s = std::sin(1.1 * x.x() + 0.2), c = std::cos(1.1 * x.x() + 0.2);
  const double s2 = std::sin(0.7 * x.y() - 0.3), c2 = std::cos(0.7 * x.y() - 0.3);
  Mat2 g;
  g(0, 0) = 0.77 * c * s2;
  g(0, 1) = 0.49 * s * c2;
  g(1, 0) = -1.21 * s * c2;
  g(1, 1) = -0.77 * c * s2;
  return g;
}

double mms_pressure(const Vec2& x) { return std::sin(0.9 * x.x()) * x.y(); }

Vec2 mms_force(const Vec2& x) {
  // -Laplace(v) + grad(p) with Laplace(v) = -(1.1^2 + 0.7^2) v
  const double k = 1.1 * 1.1 + 0.7 * 0.7;
  return k * mms_velocity(x) +
         Vec2(0.9 * std::cos(0.9 * x.x()) * x.y(), std::sin(0.9 * x.x()));
}

double slip_condition_residual(const ReferenceMesh& mesh, const VecX& vdofs,
                               double alpha,
                               const std::function<Vec2(const Vec2&)>& h_inner,
                               const std::function<Vec2(const Vec2&)>& h_outer) {
  double res = 0.0;
  double nvals[9];
  Vec2 nder[9];
  auto accumulate = [&](const std::vector<BoundaryEdge>& edges, double xi_side,
                        const std::function<Vec2(const Vec2&)>& h) {
    for (size_t je = 0; je < edges.size(); ++je) {
      const BoundaryEdge& e = edges[je];
      for (int q = 0; q < 3; ++q) {
        const EdgeQP& qp = e.qp[q];
        const Vec2 xi(xi_side, shape::gauss_x[q]);
        shape::q2(xi, nvals, nder);
        Mat2 jac = Mat2::Zero(), gref = Mat2::Zero();
        Vec2 u = Vec2::Zero();
        for (int a = 0; a < 9; ++a) {
          const int id = mesh.cells[e.cell][a];
          const Vec2& node = mesh.vnode[id];
          jac += node * nder[a].transpose();
          const Vec2 va(vdofs[2 * id], vdofs[2 * id + 1]);
          u += nvals[a] * va;
          gref += va * nder[a].transpose();
        }
        const Mat2 grad = gref * jac.inverse();
        const Mat2 d = 0.5 * (grad + grad.transpose());
        const double got = (d * qp.n).dot(qp.tau) + alpha * u.dot(qp.tau);
        const double want = h ? h(qp.x).dot(qp.tau) : 0.0;
        res += qp.wds * std::abs(got - want);
      }
    }
  };
  accumulate(mesh.inner, -1.0, h_inner);
  accumulate(mesh.outer, 1.0, h_outer);
  return res;
}

MmsResult manufactured_convergence(const DiskGeometry& geom, int n_levels,
                                   int nr0, int nt0, double alpha) {
  MmsResult out;
  for (int lev = 0; lev < n_levels; ++lev) {
    const int nr = nr0 << lev, nt = nt0 << lev;
    const ReferenceMesh mesh =
        build_annular_mesh(geom, nr, nt, 0.25 * geom.gap());

    auto h_of = [alpha](const Vec2& x, const Vec2& n) {
      const Mat2 g = mms_velocity_grad(x);
      const Mat2 d = 0.5 * (g + g.transpose());
      return Vec2(d * n + alpha * mms_velocity(x));
    };
    const Vec2 c0 = geom.body_center;
    auto inner_n = [c0](const Vec2& x) { return Vec2(-(x - c0).normalized()); };
    auto outer_n = [](const Vec2& x) { return Vec2(x.normalized()); };

    SteadyProblem prob;
    prob.mesh = &mesh;
    prob.alpha = alpha;
    prob.force = mms_force;
    prob.normal_inner = [&](const Vec2& x) {
      return mms_velocity(x).dot(inner_n(x));
    };
    prob.normal_outer = [&](const Vec2& x) {
      return mms_velocity(x).dot(outer_n(x));
    };
    prob.tang_inner = [&](const Vec2& x) { return h_of(x, inner_n(x)); };
    prob.tang_outer = [&](const Vec2& x) { return h_of(x, outer_n(x)); };

    const SteadySolution sol = solve_steady_robin(prob);
    MmsLevel level;
    level.h = (geom.outer_radius - geom.body_radius) / nr;
    level.l2_error = l2_error_velocity(mesh, sol.velocity, mms_velocity);
    level.slip_residual = slip_condition_residual(
        mesh, sol.velocity, alpha, prob.tang_inner, prob.tang_outer);
    out.levels.push_back(level);
  }
  const size_t n = out.levels.size();
  if (n >= 2) {
    const auto& a = out.levels[n - 2];
    const auto& b = out.levels[n - 1];
    out.observed_order = std::log(a.l2_error / b.l2_error) / std::log(2.0);
    out.slip_order = std::log(a.slip_residual / b.slip_residual) / std::log(2.0);
  }
  return out;
}

}  // namespace rigidflow
