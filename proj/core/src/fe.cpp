#include <functional>

#include "rigidflow/mesh.hpp"

namespace rigidflow {

VecX interpolate_velocity(const ReferenceMesh& m,
                          const std::function<Vec2(const Vec2&)>& f) {
  VecX dofs(2 * m.n_vnodes);
  for (int i = 0; i < m.n_vnodes; ++i) {
    const Vec2 v = f(m.vnode[i]);
    dofs[2 * i] = v.x();
    dofs[2 * i + 1] = v.y();
  }
  return dofs;
}

VecX interpolate_pressure(const ReferenceMesh& m,
                          const std::function<double(const Vec2&)>& f) {
  VecX dofs(m.n_pnodes);
  for (int i = 0; i <= m.nr; ++i)
    for (int j = 0; j < m.nt; ++j)
      dofs[m.pnode_id(i, j)] = f(m.vnode[m.vnode_id(2 * i, 2 * j)]);
  return dofs;
}

double l2_error_velocity(const ReferenceMesh& m, const VecX& dofs,
                         const std::function<Vec2(const Vec2&)>& exact) {
  double err = 0.0;
  for (int c = 0; c < m.n_cells(); ++c) {
    const CellCache& cc = m.cache[c];
    for (int q = 0; q < 9; ++q) {
      Vec2 v = Vec2::Zero();
      for (int a = 0; a < 9; ++a) {
        const int id = m.cells[c][a];
        v.x() += cc.n[q][a] * dofs[2 * id];
        v.y() += cc.n[q][a] * dofs[2 * id + 1];
      }
      err += cc.wq[q] * (v - exact(cc.xq[q])).squaredNorm();
    }
  }
  return std::sqrt(err);
}

double l2_norm_velocity(const ReferenceMesh& m, const VecX& dofs) {
  return l2_error_velocity(m, dofs,
                           [](const Vec2&) { return Vec2::Zero(); });
}

}  // namespace rigidflow
