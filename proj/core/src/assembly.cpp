#include "rigidflow/assembly.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace rigidflow {

Assembler::Assembler(const ReferenceMesh& mesh, SystemLayout layout)
    : mesh_(mesh), layout_(layout) {
  rhs_ = VecX::Zero(layout_.total());
  rot_.assign(mesh_.n_vnodes, 0);
  trips_.reserve(static_cast<size_t>(mesh_.n_cells()) * 1200);
}

void Assembler::set_strong_bc(const std::vector<StrongNormalBc>& bcs) {
  for (const auto& bc : bcs)
    for (size_t k = 0; k < bc.nodes.size(); ++k) {
      frames_.push_back(bc.frame[k]);
      bcval_.push_back(bc.data[k]);
      rot_[bc.nodes[k]] = static_cast<int>(frames_.size());
    }
}

bool Assembler::constrained(int dof) const {
  return (dof % 2 == 0) && rot_[dof / 2] != 0;
}

void Assembler::scatter_vv(int ni, int nj, const Mat2& k) {
  Mat2 m = k;
  const int si = rot_[ni], sj = rot_[nj];
  if (si) m = frames_[si - 1].transpose() * m;
  if (sj) m = m * frames_[sj - 1];
  for (int ci = 0; ci < 2; ++ci) {
    if (si && ci == 0) continue;  // prescribed normal row
    const int row = vdof(ni, ci);
    for (int cj = 0; cj < 2; ++cj) {
      if (sj && cj == 0) {
        rhs_[row] -= m(ci, cj) * bcval_[sj - 1];
      } else {
        trips_.emplace_back(row, vdof(nj, cj), m(ci, cj));
      }
    }
  }
}

void Assembler::scatter_v_col(int ni, int col, const Vec2& k, bool sym) {
  Vec2 v = k;
  const int si = rot_[ni];
  if (si) v = frames_[si - 1].transpose() * v;
  for (int ci = 0; ci < 2; ++ci) {
    if (si && ci == 0) {
      rhs_[col] -= v(ci) * bcval_[si - 1];  // column side of the constraint
      continue;
    }
    trips_.emplace_back(vdof(ni, ci), col, v(ci));
    if (sym) trips_.emplace_back(col, vdof(ni, ci), v(ci));
  }
}

void Assembler::scatter_rhs_v(int ni, const Vec2& r) {
  Vec2 v = r;
  const int si = rot_[ni];
  if (si) v = frames_[si - 1].transpose() * v;
  for (int ci = 0; ci < 2; ++ci) {
    if (si && ci == 0) continue;
    rhs_[vdof(ni, ci)] += v(ci);
  }
}

void Assembler::add_metric_mass(double coef,
                                const std::vector<QuadCoeffs>* coeffs) {
  Eigen::Matrix<double, 18, 18> local;
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    local.setZero();
    for (int q = 0; q < 9; ++q) {
      const Mat2 g = coeffs ? (*coeffs)[9 * c + q].metric : Mat2::Identity();
      const Mat2 w = (coef * cc.wq[q]) * g;
      for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b)
          local.block<2, 2>(2 * a, 2 * b) += cc.n[q][a] * cc.n[q][b] * w;
    }
    for (int a = 0; a < 9; ++a)
      for (int b = 0; b < 9; ++b)
        scatter_vv(mesh_.cells[c][a], mesh_.cells[c][b],
                   local.block<2, 2>(2 * a, 2 * b));
  }
}

void Assembler::add_viscous(const std::vector<QuadCoeffs>* coeffs) {
  // 2 int sym(T v) : sym(T phi), T = push [grad + Gamma .] pull
  double s11[18], s22[18], s12[18];
  Eigen::Matrix<double, 18, 18> local;
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    local.setZero();
    for (int q = 0; q < 9; ++q) {
      const QuadCoeffs ident;
      const QuadCoeffs& co = coeffs ? (*coeffs)[9 * c + q] : ident;
      for (int a = 0; a < 9; ++a)
        for (int comp = 0; comp < 2; ++comp) {
          Mat2 m = Mat2::Zero();
          for (int k = 0; k < 2; ++k) {
            m(comp, k) += cc.dn[q][a](k);
            for (int i = 0; i < 2; ++i)
              m(i, k) += co.gamma[i](k, comp) * cc.n[q][a];
          }
          const Mat2 t = co.push * m * co.pull;
          const int l = 2 * a + comp;
          s11[l] = t(0, 0);
          s22[l] = t(1, 1);
          s12[l] = 0.5 * (t(0, 1) + t(1, 0));
        }
      const double w2 = 2.0 * cc.wq[q];
      for (int la = 0; la < 18; ++la)
        for (int lb = 0; lb < 18; ++lb)
          local(la, lb) += w2 * (s11[la] * s11[lb] + s22[la] * s22[lb] +
                                 2.0 * s12[la] * s12[lb]);
    }
    for (int a = 0; a < 9; ++a)
      for (int b = 0; b < 9; ++b)
        scatter_vv(mesh_.cells[c][a], mesh_.cells[c][b],
                   local.block<2, 2>(2 * a, 2 * b));
  }
}

void Assembler::add_convection(const std::vector<QuadCoeffs>& coeffs) {
  // int g_ab (w^k d_k v^a + Gamma^a_{kc} w^k v^c) phi^b
  Eigen::Matrix<double, 18, 18> local;
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    local.setZero();
    for (int q = 0; q < 9; ++q) {
      const QuadCoeffs& co = coeffs[9 * c + q];
      const Vec2& w = co.conv_w;
      Mat2 gw;  // gw(a, cj) = sum_k Gamma^a_{k,cj} w_k
      for (int a = 0; a < 2; ++a)
        for (int cj = 0; cj < 2; ++cj)
          gw(a, cj) = co.gamma[a].col(cj).dot(w);
      const Mat2 ggw = co.metric.transpose() * gw;  // (ci, cj)
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
          const double adv = w.dot(cc.dn[q][j]);
          for (int ci = 0; ci < 2; ++ci)
            for (int cj = 0; cj < 2; ++cj)
              local(2 * i + ci, 2 * j + cj) +=
                  cc.wq[q] * cc.n[q][i] *
                  (adv * co.metric(cj, ci) + cc.n[q][j] * ggw(ci, cj));
        }
    }
    // skew-symmetrized transport: exactly energy-neutral for any discrete w
    local = 0.5 * (local - local.transpose()).eval();
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j)
        scatter_vv(mesh_.cells[c][i], mesh_.cells[c][j],
                   local.block<2, 2>(2 * i, 2 * j));
  }
}

void Assembler::add_volume_system(double mass_coef,
                                  const std::vector<QuadCoeffs>& coeffs) {
  double s11[18], s22[18], s12[18];
  Eigen::Matrix<double, 18, 18> local, conv;
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    local.setZero();
    conv.setZero();
    for (int q = 0; q < 9; ++q) {
      const QuadCoeffs& co = coeffs[9 * c + q];
      // metric mass
      const Mat2 wg = (mass_coef * cc.wq[q]) * co.metric;
      for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b)
          local.block<2, 2>(2 * a, 2 * b) += cc.n[q][a] * cc.n[q][b] * wg;
      // viscous
      for (int a = 0; a < 9; ++a)
        for (int comp = 0; comp < 2; ++comp) {
          Mat2 m = Mat2::Zero();
          for (int k = 0; k < 2; ++k) {
            m(comp, k) += cc.dn[q][a](k);
            for (int i = 0; i < 2; ++i)
              m(i, k) += co.gamma[i](k, comp) * cc.n[q][a];
          }
          const Mat2 t = co.push * m * co.pull;
          const int l = 2 * a + comp;
          s11[l] = t(0, 0);
          s22[l] = t(1, 1);
          s12[l] = 0.5 * (t(0, 1) + t(1, 0));
        }
      const double w2 = 2.0 * cc.wq[q];
      for (int la = 0; la < 18; ++la)
        for (int lb = 0; lb < 18; ++lb)
          local(la, lb) += w2 * (s11[la] * s11[lb] + s22[la] * s22[lb] +
                                 2.0 * s12[la] * s12[lb]);
      // linearized covariant transport, skew-symmetrized below
      const Vec2& w = co.conv_w;
      Mat2 gw;
      for (int a = 0; a < 2; ++a)
        for (int cj = 0; cj < 2; ++cj)
          gw(a, cj) = co.gamma[a].col(cj).dot(w);
      const Mat2 ggw = co.metric.transpose() * gw;
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
          const double adv = w.dot(cc.dn[q][j]);
          for (int ci = 0; ci < 2; ++ci)
            for (int cj = 0; cj < 2; ++cj)
              conv(2 * i + ci, 2 * j + cj) +=
                  cc.wq[q] * cc.n[q][i] *
                  (adv * co.metric(cj, ci) + cc.n[q][j] * ggw(ci, cj));
        }
    }
    local += 0.5 * (conv - conv.transpose());
    for (int a = 0; a < 9; ++a)
      for (int b = 0; b < 9; ++b)
        scatter_vv(mesh_.cells[c][a], mesh_.cells[c][b],
                   local.block<2, 2>(2 * a, 2 * b));
  }
}

void Assembler::add_divergence() {
  Eigen::Matrix<double, 4, 18> local;
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    local.setZero();
    for (int q = 0; q < 9; ++q)
      for (int pa = 0; pa < 4; ++pa) {
        const double s = -cc.wq[q] * cc.np[q][pa];
        for (int j = 0; j < 9; ++j) {
          local(pa, 2 * j) += s * cc.dn[q][j].x();
          local(pa, 2 * j + 1) += s * cc.dn[q][j].y();
        }
      }
    for (int pa = 0; pa < 4; ++pa) {
      const int prow = layout_.p_off() + mesh_.pcells[c][pa];
      for (int j = 0; j < 9; ++j)
        scatter_v_col(mesh_.cells[c][j], prow,
                      Vec2(local(pa, 2 * j), local(pa, 2 * j + 1)), true);
    }
  }
}

void Assembler::add_gauge() {
  const int grow = layout_.gauge_off();
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    for (int q = 0; q < 9; ++q)
      for (int pa = 0; pa < 4; ++pa) {
        const int pdof = layout_.p_off() + mesh_.pcells[c][pa];
        const double v = cc.wq[q] * cc.np[q][pa];
        add_plain(grow, pdof, v);
        add_plain(pdof, grow, v);
      }
  }
}

void Assembler::add_slip_outer(double alpha) {
  if (alpha == 0.0) return;
  for (const auto& e : mesh_.outer)
    for (const auto& qp : e.qp) {
      const double c = 2.0 * alpha * qp.wds;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          scatter_vv(e.nodes[i], e.nodes[j],
                     c * qp.shp[i] * qp.shp[j] * Mat2::Identity());
    }
}

void Assembler::add_slip_inner_rigid(double alpha) {
  if (alpha == 0.0) return;
  const int lx = layout_.rigid_off();
  const Vec2 c0 = mesh_.geom.body_center;
  for (const auto& e : mesh_.inner)
    for (const auto& qp : e.qp) {
      const double c = 2.0 * alpha * qp.wds;
      const Vec2 pr = perp(qp.x - c0);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
          scatter_vv(e.nodes[i], e.nodes[j],
                     c * qp.shp[i] * qp.shp[j] * Mat2::Identity());
        // cross terms with the rigid trace l + r perp(y - c0)
        for (int d = 0; d < 2; ++d)
          scatter_v_col(e.nodes[i], lx + d,
                        -c * qp.shp[i] * Vec2::Unit(d), true);
        scatter_v_col(e.nodes[i], lx + 2, -c * qp.shp[i] * pr, true);
      }
      for (int d = 0; d < 2; ++d) add_plain(lx + d, lx + d, c);
      for (int d = 0; d < 2; ++d) {
        add_plain(lx + d, lx + 2, c * pr(d));
        add_plain(lx + 2, lx + d, c * pr(d));
      }
      add_plain(lx + 2, lx + 2, c * pr.squaredNorm());
    }
}

void Assembler::add_slip_inner_data(double alpha,
                                    const std::function<Vec2(const Vec2&)>& us) {
  if (alpha == 0.0) return;
  for (const auto& e : mesh_.inner)
    for (const auto& qp : e.qp) {
      const double c = 2.0 * alpha * qp.wds;
      const Vec2 u = us ? us(qp.x) : Vec2::Zero();
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
          scatter_vv(e.nodes[i], e.nodes[j],
                     c * qp.shp[i] * qp.shp[j] * Mat2::Identity());
        scatter_rhs_v(e.nodes[i], c * qp.shp[i] * u);
      }
    }
}

void Assembler::add_inner_constraint(const Vec2* lin_body, double ang) {
  require(layout_.n_lam == static_cast<int>(mesh_.inner.size()),
          "layout multiplier count must match INNER edge count");
  const int lx = layout_.rigid_off();
  const Vec2 c0 = mesh_.geom.body_center;
  for (size_t e = 0; e < mesh_.inner.size(); ++e) {
    const int lrow = layout_.lam_off() + static_cast<int>(e);
    for (const auto& qp : mesh_.inner[e].qp) {
      for (int i = 0; i < 3; ++i)
        scatter_v_col(mesh_.inner[e].nodes[i], lrow, qp.shp[i] * qp.nds, true);
      if (layout_.rigid) {
        for (int d = 0; d < 2; ++d) {
          add_plain(lrow, lx + d, -qp.nds(d));
          add_plain(lx + d, lrow, -qp.nds(d));
        }
        const double pn = perp(qp.x - c0).dot(qp.nds);
        add_plain(lrow, lx + 2, -pn);
        add_plain(lx + 2, lrow, -pn);
      } else if (lin_body) {
        rhs_[lrow] += (*lin_body + ang * perp(qp.x - c0)).dot(qp.nds);
      }
    }
  }
}

void Assembler::add_rigid_mass(double m_coef, double j_coef) {
  const int lx = layout_.rigid_off();
  add_plain(lx, lx, m_coef);
  add_plain(lx + 1, lx + 1, m_coef);
  add_plain(lx + 2, lx + 2, j_coef);
}

void Assembler::rhs_volume_force(const std::function<Vec2(const Vec2&)>& f) {
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    for (int q = 0; q < 9; ++q) {
      const Vec2 fv = cc.wq[q] * f(cc.xq[q]);
      for (int a = 0; a < 9; ++a)
        scatter_rhs_v(mesh_.cells[c][a], cc.n[q][a] * fv);
    }
  }
}

void Assembler::rhs_mass_old(double coef, const VecX& v_old,
                             const std::vector<QuadCoeffs>& coeffs) {
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    const CellCache& cc = mesh_.cache[c];
    for (int q = 0; q < 9; ++q) {
      Vec2 v = Vec2::Zero();
      for (int a = 0; a < 9; ++a) {
        const int id = mesh_.cells[c][a];
        v.x() += cc.n[q][a] * v_old[2 * id];
        v.y() += cc.n[q][a] * v_old[2 * id + 1];
      }
      const Vec2 mv = coef * cc.wq[q] * (coeffs[9 * c + q].mixed * v);
      for (int a = 0; a < 9; ++a)
        scatter_rhs_v(mesh_.cells[c][a], cc.n[q][a] * mv);
    }
  }
}

void Assembler::rhs_edge_tangential(bool on_inner,
                                    const std::function<Vec2(const Vec2&)>& h) {
  const auto& edges = on_inner ? mesh_.inner : mesh_.outer;
  for (const auto& e : edges)
    for (const auto& qp : e.qp) {
      const double ht = h(qp.x).dot(qp.tau);
      for (int i = 0; i < 3; ++i)
        scatter_rhs_v(e.nodes[i], 2.0 * qp.wds * ht * qp.shp[i] * qp.tau);
    }
}

void Assembler::rhs_rigid(const Vec2& lin, double ang) {
  const int lx = layout_.rigid_off();
  rhs_[lx] += lin.x();
  rhs_[lx + 1] += lin.y();
  rhs_[lx + 2] += ang;
}

SpMat Assembler::matrix() const {
  const int n = layout_.total();
  std::vector<Triplet> t = trips_;
  for (int node = 0; node < mesh_.n_vnodes; ++node)
    if (rot_[node]) t.emplace_back(vdof(node, 0), vdof(node, 0), 1.0);
  SpMat a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  return a;
}

const VecX& Assembler::finalized_rhs() {
  for (int node = 0; node < mesh_.n_vnodes; ++node)
    if (rot_[node]) rhs_[vdof(node, 0)] = bcval_[rot_[node] - 1];
  return rhs_;
}

LinearSolution Assembler::solve(LinearSolverCache* cache) {
  finalized_rhs();
  SpMat a = matrix();
  LinearSolverCache own;
  LinearSolverCache& c = cache ? *cache : own;
  if (!c.analyzed) {
    c.lu.analyzePattern(a);
    c.analyzed = true;
  }
  c.lu.factorize(a);
  check_numeric(c.lu.info() == Eigen::Success,
                "monolithic system factorization failed (singular system)");
  VecX x = c.lu.solve(rhs_);
  check_numeric(x.allFinite(), "linear solve produced non-finite values");
  return unpack(x);
}

LinearSolution Assembler::unpack(const VecX& x) const {
  LinearSolution s;
  s.velocity = x.head(layout_.nu());
  for (int node = 0; node < mesh_.n_vnodes; ++node)
    if (rot_[node]) {
      const Mat2& r = frames_[rot_[node] - 1];
      const Vec2 loc(s.velocity[2 * node], s.velocity[2 * node + 1]);
      const Vec2 cart = r * loc;
      s.velocity[2 * node] = cart.x();
      s.velocity[2 * node + 1] = cart.y();
    }
  s.pressure = x.segment(layout_.p_off(), layout_.np);
  s.lam = x.segment(layout_.lam_off(), layout_.n_lam);
  s.gauge = x[layout_.gauge_off()];
  if (layout_.rigid) {
    s.rigid_lin = Vec2(x[layout_.rigid_off()], x[layout_.rigid_off() + 1]);
    s.rigid_ang = x[layout_.rigid_off() + 2];
  }
  return s;
}

double divergence_residual(const ReferenceMesh& mesh, const VecX& vdofs) {
  VecX r = VecX::Zero(mesh.n_pnodes);
  std::vector<Triplet> mt;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      double div = 0.0;
      for (int j = 0; j < 9; ++j) {
        const int id = mesh.cells[c][j];
        div += cc.dn[q][j].x() * vdofs[2 * id] +
               cc.dn[q][j].y() * vdofs[2 * id + 1];
      }
      for (int pa = 0; pa < 4; ++pa) {
        r[mesh.pcells[c][pa]] += cc.wq[q] * cc.np[q][pa] * div;
        for (int pb = 0; pb < 4; ++pb)
          mt.emplace_back(mesh.pcells[c][pa], mesh.pcells[c][pb],
                          cc.wq[q] * cc.np[q][pa] * cc.np[q][pb]);
      }
    }
  }
  SpMat m(mesh.n_pnodes, mesh.n_pnodes);
  m.setFromTriplets(mt.begin(), mt.end());
  Eigen::SimplicialLLT<SpMat> llt(m);
  check_numeric(llt.info() == Eigen::Success, "pressure mass not SPD");
  return std::sqrt(r.dot(llt.solve(r)));
}

double infsup_smallest_sv(const ReferenceMesh& mesh) {
  const int nu = 2 * mesh.n_vnodes, np = mesh.n_pnodes;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(np, nu);
  VecX mu = VecX::Zero(nu), mp = VecX::Zero(np);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellCache& cc = mesh.cache[c];
    for (int q = 0; q < 9; ++q) {
      for (int j = 0; j < 9; ++j) {
        const int id = mesh.cells[c][j];
        mu[2 * id] += cc.wq[q] * cc.n[q][j];
        mu[2 * id + 1] += cc.wq[q] * cc.n[q][j];
        for (int pa = 0; pa < 4; ++pa) {
          b(mesh.pcells[c][pa], 2 * id) +=
              cc.wq[q] * cc.np[q][pa] * cc.dn[q][j].x();
          b(mesh.pcells[c][pa], 2 * id + 1) +=
              cc.wq[q] * cc.np[q][pa] * cc.dn[q][j].y();
        }
      }
      for (int pa = 0; pa < 4; ++pa)
        mp[mesh.pcells[c][pa]] += cc.wq[q] * cc.np[q][pa];
    }
  }
  for (int i = 0; i < np; ++i) b.row(i) /= std::sqrt(mp[i]);
  for (int j = 0; j < nu; ++j) b.col(j) /= std::sqrt(mu[j]);
  // deflate the constant-pressure gauge mode
  VecX c0 = mp.cwiseSqrt();
  c0.normalize();
  b -= c0 * (c0.transpose() * b);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b);
  const auto& sv = svd.singularValues();
  return sv[sv.size() - 2];  // last one is the deflated gauge mode
}

std::vector<QuadCoeffs> frame_coefficients(const ReferenceMesh& mesh,
                                           const FlowFrame& frame,
                                           const FlowFrame* frame_old) {
  std::vector<QuadCoeffs> out(static_cast<size_t>(mesh.n_cells()) * 9);
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int q = 0; q < 9; ++q) {
      const int s = mesh.n_vnodes + 9 * c + q;
      const SampleCoeffs sc = map_coefficients(frame.pts[s]);
      QuadCoeffs& co = out[9 * c + q];
      co.push = sc.push;
      co.pull = sc.pull;
      co.metric = sc.metric;
      co.gamma[0] = sc.gamma[0];
      co.gamma[1] = sc.gamma[1];
      if (frame_old)
        co.mixed = frame.pts[s].grad.transpose() * frame_old->pts[s].grad;
    }
  return out;
}

}  // namespace rigidflow
