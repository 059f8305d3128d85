#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <optional>

#include "rigidflow/flow_map.hpp"
#include "rigidflow/mesh.hpp"

namespace rigidflow {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Unknown layout of the monolithic system:
///   [ velocity (2/node) | pressure | inner-edge multipliers | gauge | l (2), r ].
/// The edge multipliers impose the weak normal match on INNER, the gauge
/// multiplier the zero pressure mean. Rigid velocities are carried in
/// body-frame components inside the linear system.
struct SystemLayout {
  int n_vnodes = 0;
  int np = 0;
  int n_lam = 0;  // 0 when the inner trace is imposed strongly
  bool rigid = false;

  int nu() const { return 2 * n_vnodes; }
  int p_off() const { return nu(); }
  int lam_off() const { return p_off() + np; }
  int gauge_off() const { return lam_off() + n_lam; }
  int rigid_off() const { return gauge_off() + 1; }
  int total() const { return rigid_off() + (rigid ? 3 : 0); }
};

/// Coefficients of the transformed operators at one cell quadrature point.
/// Identity-map defaults reduce every term to the plain Cartesian forms.
struct QuadCoeffs {
  Mat2 push = Mat2::Identity();
  Mat2 pull = Mat2::Identity();
  Mat2 metric = Mat2::Identity();
  Mat2 gamma[2] = {Mat2::Zero(), Mat2::Zero()};
  Mat2 mixed = Mat2::Identity();  // push_new^T * push_old (time term)
  Vec2 conv_w = Vec2::Zero();     // linearized transport velocity
};

/// Strong normal-trace data on one boundary ring: the dof pair at each node
/// is rotated to (normal, tangential) and the normal one is prescribed.
struct StrongNormalBc {
  std::vector<int> nodes;
  std::vector<Mat2> frame;  // columns [n, tau]
  std::vector<double> data;
};

struct LinearSolution {
  VecX velocity;  // Cartesian nodal components
  VecX pressure;  // zero mean through the gauge multiplier
  VecX lam;       // inner-edge normal-stress multipliers
  double gauge = 0.0;
  Vec2 rigid_lin = Vec2::Zero();  // body-frame components
  double rigid_ang = 0.0;
};

/// Reusable factorization handle: the symbolic analysis is done once per
/// sparsity pattern (identical across Picard sweeps and time steps).
struct LinearSolverCache {
  Eigen::SparseLU<SpMat> lu;
  bool analyzed = false;
};

/// Scatter-based assembler for the mixed velocity/pressure system with slip
/// boundary terms and rigid coupling. All loops run in a fixed order, so
/// assembled matrices are bit-reproducible.
class Assembler {
 public:
  Assembler(const ReferenceMesh& mesh, SystemLayout layout);

  void set_strong_bc(const std::vector<StrongNormalBc>& bcs);

  // volume terms (coeffs == nullptr means identity map)
  void add_metric_mass(double coef, const std::vector<QuadCoeffs>* coeffs);
  void add_viscous(const std::vector<QuadCoeffs>* coeffs);
  void add_convection(const std::vector<QuadCoeffs>& coeffs);
  /// mass + viscous + convection in one sweep (single scatter per cell).
  void add_volume_system(double mass_coef, const std::vector<QuadCoeffs>& co);
  void add_divergence();
  void add_gauge();

  /// Seeds the triplet list with a prebuilt constant part.
  void seed_triplets(const std::vector<Triplet>& t) { trips_ = t; }
  const std::vector<Triplet>& triplets() const { return trips_; }

  // boundary terms
  void add_slip_outer(double alpha);
  void add_slip_inner_rigid(double alpha);  // couples (v, l, r)
  void add_slip_inner_data(double alpha,
                           const std::function<Vec2(const Vec2&)>& us);
  /// One multiplier per INNER edge. With rigid unknowns the trace couples to
  /// them; otherwise prescribed rigid data feeds the constraint right side.
  void add_inner_constraint(const Vec2* lin_body = nullptr,
                            double ang = 0.0);
  void add_rigid_mass(double m_coef, double j_coef);

  // right-hand side
  void rhs_volume_force(const std::function<Vec2(const Vec2&)>& f);
  void rhs_mass_old(double coef, const VecX& v_old,
                    const std::vector<QuadCoeffs>& coeffs);
  void rhs_edge_tangential(bool on_inner,
                           const std::function<Vec2(const Vec2&)>& h);
  void rhs_rigid(const Vec2& lin, double ang);

  LinearSolution solve(LinearSolverCache* cache = nullptr);

  /// Assembled matrix and right-hand side (prescribed-trace rows included).
  SpMat matrix() const;
  const VecX& finalized_rhs();

  /// Splits a raw solution vector into fields, undoing the boundary dof
  /// rotation.
  LinearSolution unpack(const VecX& x) const;

  const SystemLayout& layout() const { return layout_; }

 private:
  int vdof(int node, int c) const { return 2 * node + c; }
  bool constrained(int dof) const;
  void scatter_vv(int ni, int nj, const Mat2& k);
  void scatter_v_col(int ni, int col, const Vec2& k, bool sym);
  void scatter_rhs_v(int ni, const Vec2& r);
  void add_plain(int row, int col, double v) {
    trips_.emplace_back(row, col, v);
  }

  const ReferenceMesh& mesh_;
  SystemLayout layout_;
  std::vector<Triplet> trips_;
  VecX rhs_;
  std::vector<int> rot_;       // node -> bc slot + 1, or 0
  std::vector<Mat2> frames_;   // per slot
  std::vector<double> bcval_;  // per slot
};

/// Discrete dual norm of the divergence constraint residual.
double divergence_residual(const ReferenceMesh& mesh, const VecX& vdofs);

/// Smallest nonzero singular value of the mass-scaled divergence block
/// (constant pressure deflated) — inf-sup stability proxy.
double infsup_smallest_sv(const ReferenceMesh& mesh);

/// Transformed coefficients at every cell quadrature point of a frame.
/// conv_w is left zero; mixed is identity unless old frame data is given.
std::vector<QuadCoeffs> frame_coefficients(const ReferenceMesh& mesh,
                                           const FlowFrame& frame,
                                           const FlowFrame* frame_old);

}  // namespace rigidflow
