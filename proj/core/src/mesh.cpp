#include "rigidflow/mesh.hpp"

namespace rigidflow {

namespace {

Vec2 blend_point(const DiskGeometry& g, double s, double phi) {
  const Vec2 e(std::cos(phi), std::sin(phi));
  return (1.0 - s) * (g.body_center + g.body_radius * e) +
         s * (g.outer_radius * e);
}

void build_edge(const ReferenceMesh& m, const std::array<int, 3>& nodes,
                double sign, BoundaryEdge& e) {
  e.nodes = nodes;
  e.length = 0.0;
  double ln[3], ld[3];
  for (int q = 0; q < 3; ++q) {
    shape::quad_line(shape::gauss_x[q], ln, ld);
    Vec2 x = Vec2::Zero(), t = Vec2::Zero();
    for (int b = 0; b < 3; ++b) {
      x += ln[b] * m.vnode[nodes[b]];
      t += ld[b] * m.vnode[nodes[b]];
    }
    EdgeQP& qp = e.qp[q];
    qp.x = x;
    qp.nds = sign * shape::gauss_w[q] * perp(t);
    qp.wds = shape::gauss_w[q] * t.norm();
    qp.n = sign * perp(t).normalized();
    qp.tau = perp(qp.n);
    for (int b = 0; b < 3; ++b) qp.shp[b] = ln[b];
    e.length += qp.wds;
  }
}

}  // namespace

Vec2 ReferenceMesh::node_normal(int id, bool on_inner) const {
  const Vec2& x = vnode[id];
  if (on_inner) return -(x - geom.body_center).normalized();
  return x.normalized();
}

ReferenceMesh build_annular_mesh(const DiskGeometry& geom, int nr, int ntheta,
                                 double delta_safe) {
  geom.validate();
  require(nr >= 4 && ntheta >= 4, "mesh resolution must be at least 4x4");
  require(geom.gap() >= 2.0 * delta_safe,
          "body must start at distance >= 2*delta_safe from the wall");

  ReferenceMesh m;
  m.geom = geom;
  m.nr = nr;
  m.nt = ntheta;
  const int ni = 2 * nr + 1, nj = 2 * ntheta;
  m.n_vnodes = ni * nj;
  m.n_pnodes = (nr + 1) * ntheta;

  m.vnode.resize(m.n_vnodes);
  for (int i = 0; i < ni; ++i) {
    const double s = static_cast<double>(i) / (2 * nr);
    for (int j = 0; j < nj; ++j) {
      const double phi = M_PI * j / ntheta;
      m.vnode[m.vnode_id(i, j)] = blend_point(geom, s, phi);
    }
  }

  m.cells.resize(m.n_cells());
  m.pcells.resize(m.n_cells());
  for (int ic = 0; ic < nr; ++ic)
    for (int jc = 0; jc < ntheta; ++jc) {
      auto& c = m.cells[ic * ntheta + jc];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          c[3 * a + b] = m.vnode_id(2 * ic + a, 2 * jc + b);
      auto& p = m.pcells[ic * ntheta + jc];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) p[2 * a + b] = m.pnode_id(ic + a, jc + b);
    }

  // quadrature caches
  m.cache.resize(m.n_cells());
  m.area = 0.0;
  double nvals[9], pvals[4];
  Vec2 nder[9], pder[4];
  for (int c = 0; c < m.n_cells(); ++c) {
    CellCache& cc = m.cache[c];
    const auto& conn = m.cells[c];
    const auto& pconn = m.pcells[c];
    (void)pconn;
    for (int qa = 0; qa < 3; ++qa)
      for (int qb = 0; qb < 3; ++qb) {
        const int q = 3 * qa + qb;
        const Vec2 xi(shape::gauss_x[qa], shape::gauss_x[qb]);
        shape::q2(xi, nvals, nder);
        shape::q1(xi, pvals, pder);
        Mat2 jac = Mat2::Zero();
        Vec2 x = Vec2::Zero();
        for (int a = 0; a < 9; ++a) {
          const Vec2& node = m.vnode[conn[a]];
          x += nvals[a] * node;
          jac += node * nder[a].transpose();
        }
        const double det = jac.determinant();
        check_numeric(det > 0.0, "mesh cell " + std::to_string(c) +
                                     " has nonpositive Jacobian");
        const Mat2 jinv = jac.inverse();
        cc.xq[q] = x;
        cc.wq[q] = shape::gauss_w[qa] * shape::gauss_w[qb] * det;
        cc.jinv[q] = jinv;
        for (int a = 0; a < 9; ++a) {
          cc.n[q][a] = nvals[a];
          cc.dn[q][a] = jinv.transpose() * nder[a];
        }
        for (int a = 0; a < 4; ++a) {
          cc.np[q][a] = pvals[a];
          cc.dnp[q][a] = jinv.transpose() * pder[a];
        }
        m.area += cc.wq[q];
      }
  }

  // boundary edges; flux weights use the isoparametric tangent so that closed
  // contour integrals and the volume divergence stay Gauss-exact
  m.inner.resize(ntheta);
  m.outer.resize(ntheta);
  for (int jc = 0; jc < ntheta; ++jc) {
    std::array<int, 3> in{m.vnode_id(0, 2 * jc), m.vnode_id(0, 2 * jc + 1),
                          m.vnode_id(0, 2 * jc + 2)};
    build_edge(m, in, +1.0, m.inner[jc]);
    m.inner[jc].cell = 0 * ntheta + jc;
    std::array<int, 3> out{m.vnode_id(2 * nr, 2 * jc),
                           m.vnode_id(2 * nr, 2 * jc + 1),
                           m.vnode_id(2 * nr, 2 * jc + 2)};
    build_edge(m, out, -1.0, m.outer[jc]);
    m.outer[jc].cell = (nr - 1) * ntheta + jc;
  }
  for (int j = 0; j < nj; ++j) {
    m.inner_nodes.push_back(m.vnode_id(0, j));
    m.outer_nodes.push_back(m.vnode_id(2 * nr, j));
  }
  return m;
}

namespace {

// Inverts the transfinite blend for an initial (cell, xi) guess.
bool blend_params(const DiskGeometry& g, const Vec2& x, double& s,
                  double& phi) {
  phi = std::atan2(x.y() - 0.5 * g.body_center.y(),
                   x.x() - 0.5 * g.body_center.x());
  s = ((x - g.body_center).norm() - g.body_radius) /
      (g.outer_radius - g.body_radius);
  for (int it = 0; it < 30; ++it) {
    const Vec2 e(std::cos(phi), std::sin(phi));
    const double rad =
        (1.0 - s) * g.body_radius + s * g.outer_radius;
    const Vec2 f = (1.0 - s) * g.body_center + rad * e - x;
    if (f.norm() < 1e-12) return true;
    Mat2 jac;
    jac.col(0) = -g.body_center + (g.outer_radius - g.body_radius) * e;
    jac.col(1) = rad * perp(e);
    const Vec2 d = jac.partialPivLu().solve(f);
    s -= d.x();
    phi -= d.y();
  }
  return false;
}

bool newton_in_cell(const ReferenceMesh& m, int cell, const Vec2& x,
                    Vec2& xi) {
  double n[9];
  Vec2 d[9];
  xi.setZero();
  for (int it = 0; it < 40; ++it) {
    shape::q2(xi, n, d);
    Vec2 f = -x;
    Mat2 jac = Mat2::Zero();
    for (int a = 0; a < 9; ++a) {
      const Vec2& node = m.vnode[m.cells[cell][a]];
      f += n[a] * node;
      jac += node * d[a].transpose();
    }
    if (f.norm() < 1e-14) return xi.cwiseAbs().maxCoeff() <= 1.0 + 1e-9;
    xi -= jac.partialPivLu().solve(f);
    if (xi.cwiseAbs().maxCoeff() > 3.0) return false;
  }
  return false;
}

}  // namespace

bool locate_point(const ReferenceMesh& m, const Vec2& point, int& cell,
                  Vec2& xi) {
  double s, phi;
  if (blend_params(m.geom, point, s, phi)) {
    if (s < -1e-9 || s > 1.0 + 1e-9) return false;
    const double tp = 2.0 * M_PI;
    phi = std::fmod(std::fmod(phi, tp) + tp, tp);
    int ic = std::clamp(static_cast<int>(s * m.nr), 0, m.nr - 1);
    int jc = std::clamp(static_cast<int>(phi / (tp / m.nt)), 0, m.nt - 1);
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        const int ci = ic + di;
        if (ci < 0 || ci >= m.nr) continue;
        const int cj = ((jc + dj) % m.nt + m.nt) % m.nt;
        cell = ci * m.nt + cj;
        if (newton_in_cell(m, cell, point, xi)) return true;
      }
  }
  for (cell = 0; cell < m.n_cells(); ++cell)
    if (newton_in_cell(m, cell, point, xi)) return true;
  return false;
}

Vec2 evaluate_velocity(const ReferenceMesh& m, const VecX& dofs,
                       const Vec2& point) {
  int cell;
  Vec2 xi;
  require(locate_point(m, point, cell, xi), "point outside the fluid mesh");
  double n[9];
  Vec2 d[9];
  shape::q2(xi, n, d);
  Vec2 v = Vec2::Zero();
  for (int a = 0; a < 9; ++a) {
    const int id = m.cells[cell][a];
    v.x() += n[a] * dofs[2 * id];
    v.y() += n[a] * dofs[2 * id + 1];
  }
  return v;
}

double evaluate_pressure(const ReferenceMesh& m, const VecX& dofs,
                         const Vec2& point) {
  int cell;
  Vec2 xi;
  require(locate_point(m, point, cell, xi), "point outside the fluid mesh");
  double n[4];
  Vec2 d[4];
  shape::q1(xi, n, d);
  double p = 0.0;
  for (int a = 0; a < 4; ++a) p += n[a] * dofs[m.pcells[cell][a]];
  return p;
}

}  // namespace rigidflow
