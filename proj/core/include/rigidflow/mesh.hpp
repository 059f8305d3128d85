#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rigidflow/fe.hpp"
#include "rigidflow/geometry.hpp"

namespace rigidflow {

/// Per-cell quadrature cache: 3x3 Gauss points with isoparametric geometry.
struct CellCache {
  std::array<Vec2, 9> xq;                      // physical position
  std::array<double, 9> wq;                    // gauss weight * det J
  std::array<Mat2, 9> jinv;                    // inverse geometry Jacobian
  std::array<std::array<double, 9>, 9> n;      // [q][a] velocity shapes
  std::array<std::array<Vec2, 9>, 9> dn;       // [q][a] physical gradients
  std::array<std::array<double, 4>, 9> np;     // [q][A] pressure shapes
  std::array<std::array<Vec2, 4>, 9> dnp;      // [q][A] physical gradients
};

struct EdgeQP {
  Vec2 x;
  Vec2 n;       // unit outward normal (out of the fluid)
  Vec2 tau;     // counterclockwise tangent, tau = perp(n)
  double wds;   // arclength weight
  Vec2 nds;     // flux weight n * ds (polynomial, Gauss-exact)
  double shp[3];  // edge trace of the velocity shapes
};

struct BoundaryEdge {
  std::array<int, 3> nodes;  // velocity nodes along the edge
  std::array<EdgeQP, 3> qp;
  double length;
  int cell;  // adjacent cell index
};

/// Structured annular mesh of the initial fluid domain between the body
/// circle (INNER) and the container circle (OUTER), nr radial x ntheta
/// angular biquadratic cells with bilinear pressure on the corner lattice.
/// Off-center bodies are handled by a transfinite radial blend.
struct ReferenceMesh {
  DiskGeometry geom;
  int nr = 0, nt = 0;
  int n_vnodes = 0, n_pnodes = 0;

  std::vector<Vec2> vnode;                  // (2nr+1) * 2nt positions
  std::vector<std::array<int, 9>> cells;    // velocity connectivity
  std::vector<std::array<int, 4>> pcells;   // pressure connectivity
  std::vector<BoundaryEdge> inner, outer;
  std::vector<int> inner_nodes, outer_nodes;
  std::vector<CellCache> cache;
  double area = 0.0;

  int vnode_id(int i, int j) const {
    const int m = 2 * nt;
    return i * m + ((j % m) + m) % m;
  }
  int pnode_id(int i, int j) const { return i * nt + ((j % nt) + nt) % nt; }
  int n_cells() const { return nr * nt; }

  /// Exact circle normal at a boundary node (outward from the fluid).
  Vec2 node_normal(int vnode_id, bool on_inner) const;
};

/// errors: invalid radii, resolution < 4, body too close to the wall.
ReferenceMesh build_annular_mesh(const DiskGeometry& geom, int nr, int ntheta,
                                 double delta_safe);

/// Shape-function interpolation of a velocity (2 dofs/node) or pressure
/// field; exact for fields in the discrete space. Throws if the point is
/// outside the fluid domain.
Vec2 evaluate_velocity(const ReferenceMesh& mesh, const VecX& dofs,
                       const Vec2& point);
double evaluate_pressure(const ReferenceMesh& mesh, const VecX& dofs,
                         const Vec2& point);

/// Locates the cell and reference coordinates of a physical point.
bool locate_point(const ReferenceMesh& mesh, const Vec2& point, int& cell,
                  Vec2& xi);

// Nodal interpolation and quadrature norms of fields on the reference mesh.
VecX interpolate_velocity(const ReferenceMesh& mesh,
                          const std::function<Vec2(const Vec2&)>& f);
VecX interpolate_pressure(const ReferenceMesh& mesh,
                          const std::function<double(const Vec2&)>& f);
double l2_error_velocity(const ReferenceMesh& mesh, const VecX& dofs,
                         const std::function<Vec2(const Vec2&)>& exact);
double l2_norm_velocity(const ReferenceMesh& mesh, const VecX& dofs);

}  // namespace rigidflow
